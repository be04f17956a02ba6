"""Command-line front end: ``iceberg verify-ft | mirror | qv | compile``.

Exit codes: 0 success, 1 experiment failed (fault found, QV not passed),
2 usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .benchmarks import (
    LAYER_GRID,
    MirrorSpec,
    QVSpec,
    batch_typicality,
    crossing_layer,
    mirror_sweep,
    plot_data,
    qv_test,
    to_csv,
)
from .circuits import SchemaError, circuit_to_json
from .code import CodeLayout
from .compiler import LogicalCircuit, SyndromePolicy, compile_unencoded, encode_logical_circuit
from .ftcheck import build_circuit, verify
from .simulator import NoiseModel

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

# keys that never belong in a resolved config
_INTERNAL = {"config", "emit_config", "func"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved options of one invocation, serialisable as a single JSON document."""

    subcommand: str
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"subcommand": self.subcommand, **self.options}, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        sub = doc.pop("subcommand", "")
        return cls(sub, doc)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        opts = {k: v for k, v in vars(args).items() if k not in _INTERNAL and k != "command"}
        return cls(args.command, opts)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _even_k(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer, got {text!r}") from None
    if k < 2 or k % 2:
        raise argparse.ArgumentTypeError(f"k must be an even integer >= 2, got {k}")
    return k


def _add_common(p: argparse.ArgumentParser, formats=("json", "csv", "plotdata")):
    p.add_argument("--config", type=Path, help="JSON file with option values (flags override it)")
    p.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def _add_noise(p: argparse.ArgumentParser):
    d = NoiseModel()
    p.add_argument("--noise", choices=("default", "zero"), default="default")
    p.add_argument("--p-1q", type=float, default=d.p_1q)
    p.add_argument("--p-2q", type=float, default=d.p_2q)
    p.add_argument("--p-init", type=float, default=d.p_init_flip)
    p.add_argument("--p-meas", type=float, default=d.p_meas_flip)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker processes; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iceberg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-ft", help="exhaustive single-fault check of init/syndrome/final circuits")
    p.add_argument("--k", type=_even_k, nargs="+", default=[16])
    p.add_argument("--circuit", choices=("init", "syndrome", "final", "all"), default="all")
    p.add_argument("--mutate", action="store_true", help="check deliberately broken circuits (negative control)")
    _add_common(p, ("text", "json"))
    p.set_defaults(func=cmd_verify_ft)

    p = sub.add_parser("mirror", help="encoded vs unencoded random mirror circuits")
    p.add_argument("--k", type=_even_k, default=8)
    p.add_argument("--layers", type=_int_list, default=list(LAYER_GRID))
    p.add_argument("--instances", type=int, default=32)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--policy", default="none", help="none | midpoint | every:L | rounds:R")
    p.add_argument("--no-globals", action="store_true", help="restrict to logical generators of weight <= 2")
    p.add_argument("--batch", type=int, default=0, help="typicality study with this many instances per depth")
    _add_noise(p)
    _add_common(p)
    p.set_defaults(func=cmd_mirror)

    p = sub.add_parser("qv", help="logical quantum-volume test")
    p.add_argument("--k", type=_even_k, default=8)
    p.add_argument("--rounds", type=int, choices=(0, 1, 2, 3), default=0)
    p.add_argument("--circuits", type=int, default=100)
    p.add_argument("--shots", type=int, default=None, help="default: 75/100/150 for 0/1/>=2 rounds")
    p.add_argument("--resamples", type=int, default=10_000)
    _add_noise(p)
    _add_common(p)
    p.set_defaults(func=cmd_qv)

    p = sub.add_parser("compile", help="lower a logical-circuit JSON file to a physical circuit")
    p.add_argument("input", type=Path)
    p.add_argument("--unencoded", action="store_true")
    p.add_argument("--policy", default="none", help="none | rounds:R | every:L")
    _add_common(p, ("json",))
    p.set_defaults(func=cmd_compile)
    return parser


def _noise(args) -> NoiseModel:
    if args.noise == "zero":
        return NoiseModel.zero()
    try:
        return NoiseModel(args.p_init, args.p_meas, args.p_1q, args.p_2q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify_ft(args) -> int:
    kinds = ("init", "syndrome", "final") if args.circuit == "all" else (args.circuit,)
    results, lines, ok = [], [], True
    for k in args.k:
        layout = CodeLayout(k)
        for kind in kinds:
            report = verify(build_circuit(kind, layout, args.mutate), layout)
            ok &= report.passed
            results.append({"k": k, "circuit": kind, **report.to_dict()})
            lines.append(f"k={k} {kind}: {'PASS' if report.passed else 'FAIL'} ({len(report.records)} faults)")
            lines.append(report.table())
    if args.format == "json":
        _emit(args, json.dumps({"passed": ok, "results": results}, sort_keys=True, indent=2))
    else:
        _emit(args, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mirror(args) -> int:
    noise = _noise(args)
    if any(l < 2 or l % 2 for l in args.layers):
        raise UsageError("every --layers value must be even and >= 2")
    if args.trials < 1 or args.instances < 1:
        raise UsageError("--trials and --instances must be >= 1")
    try:
        SyndromePolicy.parse(args.policy) if args.policy != "midpoint" else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    globals_ = not args.no_globals
    if args.batch:
        studies = [
            batch_typicality(MirrorSpec(args.k, l, globals_, args.seed, args.policy), args.batch, noise, args.trials, args.jobs)
            for l in args.layers
        ]
        rows = [r for s in studies for r in s["rows"]]
        if args.format == "csv":
            _emit(args, to_csv(rows))
        elif args.format == "plotdata":
            series = {
                f"{v}_median": ([s["layers"] for s in studies], [s[v]["median"] for s in studies])
                for v in ("encoded", "unencoded")
            }
            _emit(args, plot_data(series, "layers", "survival"))
        else:
            summary = [{k: v for k, v in s.items() if k != "rows"} for s in studies]
            _emit(args, json.dumps({"k": args.k, "batch": args.batch, "studies": summary}, sort_keys=True, indent=2))
        return EXIT_OK
    res = mirror_sweep(args.k, args.layers, args.instances, args.trials, noise, args.seed, args.policy, globals_, args.jobs)
    summ = res["summary"]
    layers = [s["layers"] for s in summ]
    res["crossing"] = {
        v: _finite(crossing_layer(layers, [s[f"{v}_median"] for s in summ])) for v in ("encoded", "unencoded")
    }
    if args.format == "csv":
        _emit(args, to_csv(res["rows"]))
    elif args.format == "plotdata":
        series = {
            "encoded_median": (layers, [s["encoded_median"] for s in summ]),
            "unencoded_median": (layers, [s["unencoded_median"] for s in summ]),
            "discard_mean": (layers, [s["discard_mean"] for s in summ]),
        }
        _emit(args, plot_data(series, "layers", "survival"))
    else:
        _emit(args, json.dumps(_strict(res), sort_keys=True, indent=2))
    return EXIT_OK


def _finite(v: float):
    return v if v != float("inf") else None


def _strict(obj):
    from .benchmarks import _clean

    return _clean(obj)


def cmd_qv(args) -> int:
    noise = _noise(args)
    if args.circuits < 1:
        raise UsageError("--circuits must be >= 1")
    try:
        spec = QVSpec(args.k, args.circuits, args.shots, args.seed, args.rounds)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = qv_test(spec, noise, args.jobs, args.resamples)
    if args.format == "csv":
        _emit(args, to_csv(report.rows()))
    elif args.format == "plotdata":
        xs = list(range(1, len(report.cumulative_mean) + 1))
        series = {
            "hof": (xs, report.per_circuit_hof),
            "cumulative_mean": (xs, report.cumulative_mean),
            "threshold": (xs, [2 / 3] * len(xs)),
        }
        _emit(args, plot_data(series, "circuit", "heavy output frequency"))
    else:
        _emit(args, report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_compile(args) -> int:
    try:
        doc = json.loads(args.input.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    lc = LogicalCircuit.from_dict(doc)
    if args.unencoded:
        circ = compile_unencoded(lc)
    else:
        try:
            policy = SyndromePolicy.parse(args.policy)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        circ = encode_logical_circuit(lc, CodeLayout(lc.k), policy)
    _emit(args, circuit_to_json(circ, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = RunConfig.from_json(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if cfg.subcommand and cfg.subcommand != args.command:
        raise UsageError(f"config is for {cfg.subcommand!r}, not {args.command!r}")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, value in cfg.options.items():
        if key not in known or key in _INTERNAL:
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if isinstance(value, str) and action.type is not None:
            value = action.type(value)
        elif action.type is Path and value is not None:
            value = Path(value)
        defaults[key] = value
    # flags win over file values: file values become defaults, then reparse
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"iceberg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.emit_config:
        cfg = RunConfig.from_args(args)
        print(json.dumps(_jsonable(cfg.options) | {"subcommand": cfg.subcommand}, sort_keys=True, indent=2))
        return EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"iceberg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"iceberg: schema error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"iceberg: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _jsonable(opts: dict) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in opts.items()}


if __name__ == "__main__":
    sys.exit(main())
