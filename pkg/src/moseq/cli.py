"""Command line front end: ``moseq train|decode|eval|analyze|bench|synth``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command line flags. Exit codes: 0 success,
2 usage or configuration error, 3 unreadable or inconsistent data,
4 unreadable model bundle.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from .corpus import CorpusError, normalize_to_bio, read_conll, format_conll
from .decoder import DecodeError, multi_order_decode
from .evaluation import EvalError, analyze, bench_decode, csv_text, f1, key_value_text
from .tagger import BundleError, Hyperparams, load_bundle, save_bundle, train_bundle

log = logging.getLogger("moseq")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 2, 3, 4
SCHEMES = ("bio", "iob1", "iobes")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


@dataclass
class RunConfig:
    train: str | None = None
    dev: str | None = None
    test: str | None = None
    model: str | None = None
    columns: list[int] = field(default_factory=lambda: [0, -1])
    scheme: str = "bio"
    orders: list[int] = field(default_factory=lambda: [1, 2, 3])
    d_emb: int = 50
    d_hidden: int = 200
    dropout: float = 0.5
    lr: float = 1e-3
    epochs: int = 30
    min_count: int = 1
    init_scale: float = 0.08
    prune_width: int | None = 5
    seed: int = 0
    threads: int = 1
    parallel_orders: bool = False

    def validate(self) -> "RunConfig":
        o = self.orders
        if not o or o[0] < 1 or any(a >= b for a, b in zip(o, o[1:])):
            raise UsageError(f"orders must be strictly increasing and >= 1, got {o}")
        if len(self.columns) != 2:
            raise UsageError("columns takes two indices: token,tag")
        if self.scheme not in SCHEMES:
            raise UsageError(f"scheme must be one of {', '.join(SCHEMES)}")
        if not 0.0 <= self.dropout < 1.0:
            raise UsageError("dropout must be in [0, 1)")
        if self.lr <= 0 or self.init_scale <= 0:
            raise UsageError("lr and init_scale must be positive")
        for name in ("d_emb", "d_hidden", "epochs", "min_count", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.prune_width is not None and self.prune_width < 1:
            raise UsageError("prune width must be >= 1")
        return self

    @property
    def hyperparams(self) -> Hyperparams:
        return Hyperparams(self.d_emb, self.d_hidden, self.dropout, self.lr, self.epochs,
                           self.min_count, self.init_scale)

    @property
    def token_column(self) -> int:
        return self.columns[0]

    @property
    def tag_column(self) -> int:
        return self.columns[1]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key not in _FIELD_TYPES:
        raise UsageError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    if value is None or not isinstance(value, str):
        return value
    if key in ("columns", "orders"):
        return _int_list(value)
    if key == "prune_width":
        return None if value.lower() in ("off", "none", "") else _coerce_num(key, value, int)
    if kind == "bool":
        return value.lower() in ("1", "true", "yes", "on")
    if kind == "int":
        return _coerce_num(key, value, int)
    if kind == "float":
        return _coerce_num(key, value, float)
    return value


def _coerce_num(key, value, kind):
    try:
        return kind(value)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {value!r}") from None


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = _coerce(key, value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = _coerce(name, v)
    if getattr(args, "prune", None) == "off":
        values["prune_width"] = None
    return RunConfig(**values).validate()


# ---------------------------------------------------------------------------
# data helpers

def _read(path, cfg: RunConfig, tagged: bool = True, normalize: bool = True):
    if not path:
        raise UsageError("missing data file")
    try:
        sents = read_conll(path, cfg.token_column, cfg.tag_column if tagged else None)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except CorpusError as exc:
        raise DataError(f"{path}: {exc}") from None
    if tagged and normalize and cfg.scheme != "bio":
        try:
            sents = normalize_to_bio(sents, cfg.scheme)
        except CorpusError as exc:
            raise DataError(f"{path}: {exc}") from None
    return sents


def _load(path):
    if not path:
        raise UsageError("missing --model")
    try:
        return load_bundle(path)
    except OSError as exc:
        raise BundleError(f"cannot read {path}: {exc.strerror}") from None


def _aligned(gold_path, pred_path, cfg: RunConfig):
    gold = _read(gold_path, cfg)
    pred = read_conll(pred_path, cfg.token_column, -1) if pred_path else None
    if pred is None:
        raise UsageError("missing --pred")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if g.words != p.words:
            raise DataError(f"sentence {i + 1} does not match between gold and prediction files")
    if len(gold) != len(pred):
        raise DataError(f"files differ in sentence count ({len(gold)} vs {len(pred)}); "
                        f"sentence {min(len(gold), len(pred)) + 1} has no counterpart")
    return [g.gold_tags for g in gold], [p.gold_tags for p in pred]


def _write_csv(path, header, rows):
    if path:
        Path(path).write_text(csv_text(header, rows), encoding="utf-8")


def decode_all(bundle, sentences, prune, threads: int = 1) -> list[list[str]]:
    def one(s):
        return multi_order_decode(bundle.lattices(s), prune=prune)
    if threads <= 1:
        return [one(s) for s in sentences]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, sentences))


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(cfg: RunConfig, out, stdout=sys.stdout) -> None:
    if not out:
        raise UsageError("missing --out")
    train = _read(cfg.train, cfg)
    dev = _read(cfg.dev, cfg) if cfg.dev else []
    if not train:
        raise DataError(f"{cfg.train}: no sentences")
    bundle = train_bundle(train, dev, cfg.orders, cfg.hyperparams, cfg.seed, cfg.parallel_orders)
    save_bundle(bundle, out)
    for m in bundle.models:
        for epoch, score in enumerate(m.meta["dev_f1"], 1):
            stdout.write(f"order {m.order} epoch {epoch} dev_f1 {score:.2f}\n")
        stdout.write(f"order {m.order} best_epoch {m.meta['best_epoch']} labels {len(m.labels)}\n")


def cmd_decode(cfg: RunConfig, input_path, output=None, stdout=sys.stdout) -> None:
    bundle = _load(cfg.model)
    sents = _read(input_path, cfg, tagged=False)
    preds = decode_all(bundle, sents, cfg.prune_width, cfg.threads)
    text = format_conll(sents, preds)
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def cmd_eval(cfg: RunConfig, gold_path, pred_path, csv_path=None, stdout=sys.stdout) -> None:
    gold, pred = _aligned(gold_path, pred_path, cfg)
    p, r, f = f1(gold, pred)
    rows = [("sentences", len(gold)), ("precision", f"{p:.2f}"), ("recall", f"{r:.2f}"), ("f1", f"{f:.2f}")]
    stdout.write(key_value_text(rows))
    _write_csv(csv_path, [k for k, _ in rows], [[v for _, v in rows]])


def cmd_analyze(cfg: RunConfig, gold_path, pred_path, threshold=2, csv_path=None, stdout=sys.stdout) -> None:
    gold, pred = _aligned(gold_path, pred_path, cfg)
    try:
        rows = analyze(gold, pred, threshold).rows()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stdout.write(key_value_text(rows))
    _write_csv(csv_path, ["key", "value"], rows)


def cmd_bench(cfg: RunConfig, data_path, widths, repeats=1, csv_path=None, stdout=sys.stdout) -> None:
    bundle = _load(cfg.model)
    sents = _read(data_path, cfg)
    if not sents:
        raise DataError(f"{data_path}: no sentences")
    results = bench_decode(bundle, sents, [None] + [w for w in widths if w is not None], repeats)
    base = results[0].seconds
    header = ["variant", "seconds", "speedup", "f1", "sentences"]
    rows = [[r.variant, f"{r.seconds:.4f}", f"{base / r.seconds:.2f}", f"{r.f1:.2f}", r.sentences]
            for r in results]
    widths_ = [max(len(header[i]), *(len(str(row[i])) for row in rows)) for i in range(len(header))]
    for row in [header] + rows:
        stdout.write("  ".join(str(c).ljust(w) for c, w in zip(row, widths_)).rstrip() + "\n")
    _write_csv(csv_path, header, rows)


def cmd_synth(out_dir, n_train, n_dev, n_test, seed, noise, stdout=sys.stdout) -> None:
    from .synthetic import SyntheticSpec, make_splits
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = make_splits(n_train, n_dev, n_test, seed, SyntheticSpec(noise=noise))
    for name, sents in zip(("train", "dev", "test"), splits):
        (out / f"{name}.txt").write_text(format_conll(sents), encoding="utf-8")
        stdout.write(f"{name}: {len(sents)} sentences -> {out / (name + '.txt')}\n")


# ---------------------------------------------------------------------------
# argument parsing

def _shared(p: argparse.ArgumentParser, *, model=False):
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--columns", help="token,tag column indices (default 0,-1)")
    p.add_argument("--scheme", choices=SCHEMES, help="tag scheme of the input files")
    if model:
        p.add_argument("--model", help="bundle file")
        p.add_argument("--prune-width", dest="prune_width", type=int, help="top-k tags per position (default 5)")
        p.add_argument("--prune", choices=["on", "off"], help="'off' disables pruning")
        p.add_argument("--threads", type=int)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moseq", description="multi-order BiLSTM sequence tagger")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model per order and write a bundle")
    _shared(p)
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--out", help="bundle file to write")
    p.add_argument("--orders", help="comma-separated, e.g. 1,2,3")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--d-emb", dest="d_emb", type=int)
    p.add_argument("--d-hidden", dest="d_hidden", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--parallel-orders", dest="parallel_orders", action="store_true", default=None)

    p = sub.add_parser("decode", help="append predicted tags to a CoNLL file")
    _shared(p, model=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")

    for name, text in (("eval", "chunk precision/recall/F1"), ("analyze", "error taxonomy")):
        p = sub.add_parser(name, help=text)
        _shared(p)
        p.add_argument("--gold", required=True)
        p.add_argument("--pred", required=True, help="file whose last column is the prediction")
        p.add_argument("--csv")
        if name == "analyze":
            p.add_argument("--threshold", type=int, default=2, help="short/long entity boundary")

    p = sub.add_parser("bench", help="time decoding at several pruning widths")
    _shared(p, model=True)
    p.add_argument("--data", required=True)
    p.add_argument("--widths", default="5", help="comma-separated widths; unpruned always runs")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--csv")

    p = sub.add_parser("synth", help="write a synthetic second-order chunking corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-dev", type=int, default=500)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.3)
    return ap


def _setup_logging():
    level = os.environ.get("MOSEQ_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run(argv=None, stdout=sys.stdout) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "synth":
            cmd_synth(args.out_dir, args.n_train, args.n_dev, args.n_test, args.seed, args.noise, stdout)
            return EXIT_OK
        cfg = build_config(args)
        if args.command == "train":
            cmd_train(cfg, args.out, stdout)
        elif args.command == "decode":
            cmd_decode(cfg, args.input, args.output, stdout)
        elif args.command == "eval":
            cmd_eval(cfg, args.gold, args.pred, args.csv, stdout)
        elif args.command == "analyze":
            cmd_analyze(cfg, args.gold, args.pred, args.threshold, args.csv, stdout)
        elif args.command == "bench":
            cmd_bench(cfg, args.data, _int_list(args.widths), args.repeats, args.csv, stdout)
    except UsageError as exc:
        print(f"moseq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, EvalError, CorpusError) as exc:
        print(f"moseq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"moseq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BundleError, DecodeError) as exc:
        print(f"moseq: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


def main(argv=None) -> None:
    _setup_logging()
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
