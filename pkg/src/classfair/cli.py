"""Command-line entry point: ``classfair {gen,run,exp,oracle}``.

Exit codes: 0 success, 1 usage or configuration error, 2 validation error
(bad instance, bad parameters, oracle cap), 3 an experiment target failed.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import inspect
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .algorithms import derive_seed
from .experiments import DEFAULT_SEED, PRESETS, AlgorithmSpec, PresetReport
from .instance import GENERATORS, Instance, InstanceError, load_instance
from .matching import MatchingError
from .valuation import (
    CMNW_ITEM_CAP,
    PROP_CLASS_CAP,
    PROP_ITEM_CAP,
    OracleCapError,
    cmnw_bruteforce,
    metrics_report,
    prop_share_oracle,
    usw_opt,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_TARGET = 0, 1, 2, 3
TOOL = "classfair"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for validation here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Everything needed to reproduce an output file."""

    subcommand: str
    seed: int
    instance_path: str | None = None
    generator: str | None = None
    gen_params: dict = field(default_factory=dict)
    algorithm: str | None = None
    preset: str | None = None
    preset_params: dict = field(default_factory=dict)
    oracle: str | None = None
    trials: int | None = None
    threads: int = 1
    out: str | None = None
    format: str = "json"
    caps: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        # output path and thread count do not change the results
        d = {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "format": self.format,
        }
        for key in ("instance_path", "generator", "algorithm", "preset", "oracle", "trials"):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.generator is not None:
            d["gen_params"] = self.gen_params
        if self.preset is not None:
            d["preset_params"] = self.preset_params
        if self.caps:
            d["caps"] = self.caps
        return d


def parse_value(text: str):
    """``k=v`` values: JSON when it parses (ints, floats, lists), else a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_params(pairs: list[str]) -> dict:
    out = {}
    for p in pairs:
        key, sep, val = p.partition("=")
        if not sep or not key:
            raise UsageError(f"expected key=value, got {p!r}")
        out[key] = parse_value(val)
    return out


def metadata(cfg: RunConfig) -> dict:
    return {
        "tool": TOOL,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def write_atomic(path: str | None, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    from fractions import Fraction

    import numpy as np

    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.integer, np.floating, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _csv_text(meta: dict, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    for key in ("tool", "version", "seed"):
        buf.write(f"# {key}={meta[key]}\n")
    buf.write(f"# config={json.dumps(meta['config'], sort_keys=True, separators=(',', ':'))}\n")
    buf.write(f"# created={meta['created']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for idx, v in enumerate(obj):
            _flatten(f"{prefix}[{idx}]", v, out)
    else:
        out.append([prefix, json.dumps(obj, default=_json_default) if isinstance(obj, list) else obj])


def _emit(cfg: RunConfig, payload: dict) -> None:
    meta = metadata(cfg)
    if cfg.format == "json":
        write_atomic(cfg.out, _dump({"meta": meta, **payload}))
    else:
        rows: list = []
        _flatten("", payload, rows)
        write_atomic(cfg.out, _csv_text(meta, ["metric", "value"], rows))


# -- instance sources ---------------------------------------------------------


def build_instance(generator: str, params: dict) -> Instance:
    if generator not in GENERATORS:
        raise UsageError(f"unknown generator {generator!r}; valid generators: {', '.join(sorted(GENERATORS))}")
    fn = GENERATORS[generator]
    try:
        inspect.signature(fn).bind(**params)
    except TypeError as exc:
        raise InstanceError(f"invalid parameters for {generator}: {exc}") from exc
    return fn(**params)


def _instance_from(args, cfg: RunConfig) -> Instance:
    if (args.instance is None) == (args.gen is None):
        raise UsageError("give exactly one instance source: a file path or --gen NAME")
    if args.instance is not None:
        cfg.instance_path = args.instance
        try:
            return load_instance(args.instance)
        except OSError as exc:
            raise InstanceError(f"cannot read {args.instance}: {exc.strerror or exc}") from exc
    cfg.generator = args.gen
    cfg.gen_params = parse_params(args.param or [])
    return build_instance(cfg.generator, cfg.gen_params)


# -- subcommands ------------------------------------------------------------------


def cmd_gen(args) -> int:
    params = parse_params(args.params)
    cfg = RunConfig("gen", args.seed, generator=args.generator, gen_params=params, out=args.out, format="json")
    inst = build_instance(args.generator, params)
    meta = metadata(cfg)
    text = inst.to_json()
    # the instance schema ignores unknown keys, so metadata rides along
    text = "{\n" + f'  "meta": {json.dumps(meta, sort_keys=True)},\n' + text[2:]
    write_atomic(args.out, text)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = RunConfig("run", args.seed, algorithm=args.algorithm, out=args.out, format=args.format)
    try:
        algo = AlgorithmSpec.parse(args.algorithm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    inst = _instance_from(args, cfg)
    m, _ = algo.run(inst, derive_seed(args.seed, 0))
    report = metrics_report(inst, m, with_prop=args.with_prop)
    payload = {
        "instance": inst.name,
        "algorithm": str(algo),
        "report": report.to_dict(),
        "assignment": {str(o): a for o, a in sorted(m.assignment.items())},
    }
    if args.with_prop:
        cfg.caps = {"prop_items": PROP_ITEM_CAP, "prop_classes": PROP_CLASS_CAP}
    _emit(cfg, payload)
    return EXIT_OK


def _preset_kwargs(fn, params: dict, args) -> dict:
    sig = inspect.signature(fn)
    kw = dict(params)
    if args.trials is not None:
        if "trials" not in sig.parameters:
            raise UsageError(f"preset does not take --trials")
        kw["trials"] = args.trials
    if "seed" in sig.parameters:
        kw.setdefault("seed", args.seed)
    if "workers" in sig.parameters:
        kw["workers"] = args.threads
    unknown = [k for k in kw if k not in sig.parameters]
    if unknown:
        valid = [p for p in sig.parameters if p not in ("workers", "summary", "panel")]
        raise UsageError(f"unknown preset parameter(s) {unknown}; valid: {', '.join(valid)}")
    return kw


def cmd_exp(args) -> int:
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; valid presets: {', '.join(PRESETS)}")
    fn = PRESETS[args.preset]
    params = parse_params(args.params)
    kw = _preset_kwargs(fn, params, args)
    cfg = RunConfig("exp", args.seed, preset=args.preset, trials=args.trials, threads=args.threads,
                    out=args.out, format=args.format,
                    preset_params={k: v for k, v in kw.items() if k not in ("workers", "seed")})
    try:
        rep: PresetReport = fn(**kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (InstanceError, MatchingError)):
            raise
        raise InstanceError(f"invalid preset parameters: {exc}") from exc
    records = [r.record() for r in rep.rows]
    meta = metadata(cfg)
    if args.format == "json":
        doc = {
            "meta": meta,
            "rows": records,
            "extra": rep.extra,
            "summaries": [s.to_dict() for s in rep.summaries],
            "passed": rep.passed,
        }
        write_atomic(args.out, _dump(doc))
    else:
        header = ["preset", "param_json", "metric", "mean", "stderr", "target", "tolerance", "pass"]
        rows = [[rec[h] for h in header] for rec in records]
        write_atomic(args.out, _csv_text(meta, header, rows))
    for r in rep.failures():
        print(f"FAIL {r.metric} {r.params}: mean={r.mean} target={r.target} tol={r.tolerance}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_TARGET


def cmd_oracle(args) -> int:
    cfg = RunConfig("oracle", args.seed, oracle=args.kind, out=args.out, format=args.format)
    inst = _instance_from(args, cfg)
    payload: dict = {"instance": inst.name, "oracle": args.kind}
    if args.kind == "usw_opt":
        payload["usw_opt"] = usw_opt(inst)
    elif args.kind == "prop":
        cfg.caps = {"prop_items": args.item_cap or PROP_ITEM_CAP, "prop_classes": args.class_cap or PROP_CLASS_CAP}
        payload["classes"] = [
            prop_share_oracle(inst, i, cfg.caps["prop_items"], cfg.caps["prop_classes"]).to_dict()
            for i in range(inst.num_classes)
        ]
        payload["divisible_gap"] = any(c["divisible_gap"] for c in payload["classes"])
    else:
        cfg.caps = {"cmnw_items": args.item_cap or CMNW_ITEM_CAP}
        m, value = cmnw_bruteforce(inst, cfg.caps["cmnw_items"])
        payload["cnsw"] = value
        payload["class_values"] = list(m.class_counts())
        payload["assignment"] = {str(o): a for o, a in sorted(m.assignment.items())}
    _emit(cfg, payload)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, default=None, help="trial count override")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker processes, 0 = one per CPU")

    p = _Parser(prog=TOOL, description="Class-fair online matching simulator.")
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="write a generated instance as JSON")
    g.add_argument("generator", help=f"one of: {', '.join(GENERATORS)}")
    g.add_argument("params", nargs="*", help="generator parameters as key=value")
    g.set_defaults(func=cmd_gen)

    def add_source(sp):
        sp.add_argument("instance", nargs="?", help="instance JSON file")
        sp.add_argument("--gen", help="generate the instance instead of loading it")
        sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")

    r = sub.add_parser("run", parents=[common], help="one run of an algorithm with a full metrics report")
    add_source(r)
    r.add_argument("--algorithm", default="random", help="random, greedy_lexico or envy_capped[:alpha]")
    r.add_argument("--with-prop", action="store_true", help="include proportional shares (small instances)")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("exp", parents=[common], help="run a named experiment preset")
    e.add_argument("preset", help=f"one of: {', '.join(PRESETS)}")
    e.add_argument("params", nargs="*", help="preset parameters as key=value")
    e.set_defaults(func=cmd_exp)

    o = sub.add_parser("oracle", parents=[common], help="exact oracles for small instances")
    o.add_argument("kind", choices=("prop", "cmnw", "usw_opt"))
    add_source(o)
    o.add_argument("--item-cap", type=int, default=None, help="override the oracle's item cap")
    o.add_argument("--class-cap", type=int, default=None, help="override the prop oracle's class cap")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 1:
        parser.error("--trials must be >= 1")
    if getattr(args, "threads", 1) < 0:
        parser.error("--threads must be >= 0")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleCapError as exc:
        print(f"{TOOL}: oracle cap exceeded: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InstanceError, MatchingError) as exc:
        print(f"{TOOL}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"{TOOL}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
