"""Command-line interface: ``noongen {condense,generate,figure3,formulas,run}``.

Exit codes: 0 success, 1 runtime or physics error, 2 usage or parse error.
Every output starts with self-describing metadata.  The timestamp honours
``SOURCE_DATE_EPOCH`` so pinned runs are byte-stable.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__, analytics, generator as G
from .errors import NoonGenError
from .fock import StateVector

THREADS_ENV = "NOONGEN_THREADS"
SIM_MAX_N = 10


class UsageError(Exception):
    pass


# -- formula registry -------------------------------------------------------------


def _q_distribution(S, l, delta0):
    d = analytics.q_distribution(S, l, delta0)
    return {"probabilities": d.probabilities.tolist(), "mean": d.mean, "consistent": d.consistent}


FORMULAS = {
    "p_cond": (analytics.p_cond, (("N", int), ("r", int))),
    "log_p_cond": (analytics.log_p_cond, (("N", int), ("r", int))),
    "delta0": (analytics.delta0_of, (("l", int), ("r", int))),
    "asymptotic_fidelity": (analytics.asymptotic_fidelity, (("ratio", float),)),
    "naive_fidelity_scaling": (analytics.naive_fidelity_scaling, (("delta0", float), ("S", int))),
    "gaussian_localization": (analytics.gaussian_localization, (("x", float), ("D", int))),
    "eq3_intensities": (analytics.eq3_intensities, (("S", int), ("delta0", float))),
    "fidelity_integral": (analytics.fidelity_integral, (("N", int), ("D", int))),
    "cat_component_overlap": (analytics.cat_component_overlap, (("S", int), ("delta0", float))),
    "overlap_law": (analytics.overlap_law, (("S", int), ("delta1", float), ("delta2", float))),
    "q_distribution": (_q_distribution, (("S", int), ("l", int), ("delta0", float))),
}


# -- shared helpers ---------------------------------------------------------------


def _timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch and epoch.strip().isdigit() else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _meta(command, params, seed=None):
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "timestamp": _timestamp(),
    }


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _json_default(obj):
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dumps(obj):
    return json.dumps(obj, default=_json_default, separators=(",", ":"), allow_nan=True)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return _dumps(v)
    return str(v)


def _emit(fmt, meta, rows, kind, summary=None, columns=None):
    """Render ``rows`` (list of dicts) in ``csv``, ``jsonl`` or ``json``."""
    if fmt == "json":
        doc = {"meta": meta, "rows": rows}
        if summary is not None:
            doc["summary"] = summary
        return json.dumps(doc, default=_json_default, indent=2) + "\n"
    if fmt == "jsonl":
        lines = [_dumps({"type": "meta", **meta})]
        lines += [_dumps({"type": kind, **row}) for row in rows]
        if summary is not None:
            lines.append(_dumps({"type": "summary", **summary}))
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v if isinstance(v, str) else _dumps(v)}\n")
    flat = [_flatten(r) for r in rows]
    if columns is None:
        columns = []
        for r in flat:
            columns.extend(k for k in r if k not in columns)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in flat:
        writer.writerow([_csv_cell(r.get(c)) for c in columns])
    if summary is not None:
        buf.write(f"# summary: {_dumps(summary)}\n")
    return buf.getvalue()


def _write(args, text):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _int_range(text):
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a range like 1..8, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _fraction(text):
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or a fraction like 1/3, got {text!r}") from None
    return value


def _fraction_list(text):
    return [_fraction(t) for t in text.split(",") if t.strip()]


# -- subcommands ------------------------------------------------------------------


def cmd_condense(args):
    if (args.r is None) == (args.fraction is None):
        raise UsageError("give exactly one of --r or --fraction")
    rows = []
    for N in args.N:
        if N < 1:
            raise UsageError("N must be >= 1")
        r = args.r if args.r is not None else G.round_half_up(2 * N * args.fraction)
        row = {"N": N, "r": r, "p_cond_formula": None, "p_cond_sim": None, "error": ""}
        if not 0 <= r < N:
            row["error"] = f"r={r} outside [0, N)"
        else:
            row["p_cond_formula"] = analytics.p_cond(N, r)
            if N <= SIM_MAX_N:
                row["p_cond_sim"] = G.condensation_probability_sim(N, r)
        rows.append(row)
    params = {"N": [args.N.start, args.N.stop - 1], "r": args.r, "fraction": args.fraction}
    cols = ["N", "r", "p_cond_formula", "p_cond_sim", "error"]
    return _emit(args.format or "csv", _meta("condense", params), rows, "row", columns=cols)


def _outcome_rows(outcomes, include_state, sampled):
    if not sampled:
        return [o.to_json_dict(include_state) for o in outcomes]
    grouped = {}
    for o in outcomes:
        hit = grouped.setdefault(o.record.key(), [o, 0])
        hit[1] += 1
    rows = []
    for key in sorted(grouped):
        o, n = grouped[key]
        row = o.to_json_dict(include_state)
        row["shots"] = n
        row["frequency"] = n / len(outcomes)
        rows.append(row)
    return rows


def cmd_generate(args):
    mode = "monte_carlo" if args.monte_carlo else "exhaustive"
    if args.pmin is not None and args.pmin > 2 * args.N:
        raise UsageError(f"--pmin {args.pmin} exceeds 2N = {2 * args.N}")
    if args.pmin is not None and args.pmin < 1:
        raise UsageError("--pmin must be >= 1")
    if not 0 < args.f < 1:
        raise UsageError("--f must lie in (0, 1)")
    if args.N < 1:
        raise UsageError("--N must be >= 1")
    if mode == "exhaustive" and args.N > 15:
        raise UsageError("exhaustive runs are limited to N <= 15; use --monte-carlo")
    cfg = G.GeneratorConfig(args.N, args.f, args.pmin, mode, args.seed, args.shots)
    outcomes = G.run_generator(cfg)
    summary = G.summarize(outcomes).__dict__
    rows = _outcome_rows(outcomes, args.include_states, mode == "monte_carlo")
    params = {
        "N": cfg.N,
        "f": cfg.f,
        "min_output_photons": cfg.min_output_photons,
        "mode": mode,
        "shots": cfg.shots if mode == "monte_carlo" else None,
    }
    seed = cfg.seed if mode == "monte_carlo" else None
    return _emit(args.format or "jsonl", _meta("generate", params, seed), rows, "outcome", summary)


def _figure3_cell(job):
    N, fractions, weighted, f = job
    return G.figure3_table(N, fractions, weighted=weighted, f=f, N_min=N)


def cmd_figure3(args):
    if not 1 <= args.N_max <= 15:
        raise UsageError("--N-max must lie in [1, 15]")
    fractions = args.fractions
    if not fractions or any(not 0 < x < 1 for x in fractions):
        raise UsageError("fractions must lie in (0, 1)")
    jobs = [(N, tuple(fractions), not args.unweighted, args.f) for N in range(1, args.N_max + 1)]
    threads = _threads(args)
    if threads > 1:
        # largest N first keeps the pool busy; results are re-sorted below
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_figure3_cell, sorted(jobs, reverse=True)))
    else:
        parts = [_figure3_cell(j) for j in jobs]
    table = sorted((row for part in parts for row in part), key=lambda r: (r.N, r.D_over_2N))
    rows = [
        {"N": r.N, "D_over_2N": r.D_over_2N, "mean_P": r.mean_P, "mean_fidelity": r.mean_fidelity}
        for r in table
    ]
    params = {
        "N_max": args.N_max,
        "fractions": fractions,
        "weighted": not args.unweighted,
        "tap_reflectance": args.f if args.f is not None else "fraction",
    }
    cols = ["N", "D_over_2N", "mean_P", "mean_fidelity"]
    return _emit(args.format or "csv", _meta("figure3", params), rows, "row", columns=cols)


def _formula_usage():
    lines = ["known formulas:"]
    for name, (_, spec) in sorted(FORMULAS.items()):
        lines.append(f"  {name} " + " ".join(f"--{p} <{t.__name__}>" for p, t in spec))
    return "\n".join(lines)


def cmd_formulas(args):
    if args.name is None or args.name == "list":
        return _formula_usage() + "\n"
    if args.name not in FORMULAS:
        raise UsageError(f"unknown formula {args.name!r}\n{_formula_usage()}")
    func, spec = FORMULAS[args.name]
    p = argparse.ArgumentParser(prog=f"noongen formulas {args.name}", add_help=False)
    for name, typ in spec:
        p.add_argument(f"--{name}", type=_fraction if typ is float else int, required=True)
    # common flags may follow the formula name
    p.add_argument("--format", choices=("csv", "jsonl", "json"), default=args.format)
    p.add_argument("--out", default=args.out)
    p.add_argument("--seed", type=int, default=args.seed)
    p.add_argument("--threads", type=int, default=args.threads)
    try:
        ns, extra = p.parse_known_args(args.params)
    except SystemExit:
        raise UsageError(f"bad parameters for {args.name}\n{_formula_usage()}") from None
    if extra:
        raise UsageError(f"unexpected arguments {extra} for {args.name}")
    args.format, args.out = ns.format, ns.out
    inputs = {name: getattr(ns, name) for name, _ in spec}
    value = func(*inputs.values())
    if isinstance(value, tuple):
        value = list(value)
    record = {"formula": args.name, "inputs": inputs, "value": value}
    if args.format == "jsonl":
        return _dumps(record) + "\n"
    return json.dumps(record, default=_json_default, indent=2) + "\n"


def _resolve_program(path_text):
    from .qoc import BUNDLED, bundled_source

    path = Path(path_text)
    if path.is_file():
        return path.name, path.read_bytes(), str(path)
    if path_text in BUNDLED:
        return path_text, bundled_source(path_text).encode("utf-8"), f"<bundled {path_text}>"
    raise UsageError(f"program file {path_text!r} not found")


def _resolve_input(spec):
    if spec.startswith("dualfock:"):
        try:
            N = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad input spec {spec!r}") from None
        if N < 1:
            raise UsageError("dualfock:N needs N >= 1")
        return G.dual_fock_input(N), N
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"input {spec!r} is neither dualfock:N nor a readable file")
    try:
        return StateVector.from_json(path.read_text(encoding="utf-8")), None
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read state from {spec}: {exc}") from None


def _program_params(program, given, dual_n):
    params = {}
    for item in given:
        if "=" not in item:
            raise UsageError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = _fraction(v.strip())
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from None
    # defaults for the bundled programs' parameters
    if "N" in program.params and "N" not in params and dual_n is not None:
        params["N"] = dual_n
    if "f" in program.params and "f" not in params:
        params["f"] = 0.5
    if "pmin" in program.params and "pmin" not in params and "N" in params:
        params["pmin"] = max(1, G.round_half_up(params["N"] * (1 - params["f"])))
    missing = [p for p in program.params if p not in params]
    if missing:
        raise UsageError(f"missing program parameters: {', '.join(missing)} (use --param name=value)")
    extra = [p for p in params if p not in program.params]
    if extra:
        raise UsageError(f"program declares no parameter {', '.join(extra)}")
    return params


def _format_source_error(label, source, err):
    if err.span is None:
        return f"{label}: {type(err).__name__}: {err.message}"
    exp = f" (expected {', '.join(sorted(err.expected))})" if err.expected else ""
    out = [f"{label}:{err.span.line}:{err.span.column}: {type(err).__name__}: {err.message}{exp}"]
    text = source.decode("utf-8", errors="replace").split("\n")
    if 0 < err.span.line <= len(text):
        out.append("  " + text[err.span.line - 1].rstrip("\r"))
        out.append("  " + " " * (err.span.column - 1) + "^")
    return "\n".join(out)


def cmd_run(args):
    from .qoc import QocError, interpret, parse
    from .qoc.builtin import compare_with_builtin

    name, source, label = _resolve_program(args.program)
    try:
        program = parse(source)
    except QocError as err:
        sys.stderr.write(_format_source_error(label, source, err) + "\n")
        return 2
    state, dual_n = _resolve_input(args.input)
    if state.mode_count != program.mode_count:
        raise UsageError(f"program expects {program.mode_count} modes, input has {state.mode_count}")
    params = _program_params(program, args.param, dual_n)
    mode = args.mode
    if args.check_against_builtin and mode != "exhaustive":
        raise UsageError("--check-against-builtin needs --mode exhaustive")
    branches = interpret(program, state, mode=mode, params=params, seed=args.seed, shots=args.shots)
    rows = [b.to_json_dict(include_state=not args.no_states) for b in branches]
    meta = _meta(
        "run",
        {"program": name, "input": args.input, "mode": mode, "params": params,
         "shots": args.shots if mode == "sampled" else None},
        args.seed if mode == "sampled" else None,
    )
    summary = {
        "branches": len(branches),
        "total_probability": math.fsum(b.probability for b in branches),
        "discarded_probability": math.fsum(b.probability for b in branches if b.discarded),
    }
    status = 0
    if args.check_against_builtin:
        report = compare_with_builtin(name, branches, state, params)
        summary["check"] = report.to_json_dict()
        sys.stderr.write(f"check against builtin {name}: {'PASS' if report.passed else 'FAIL'}"
                         + (f" ({report.message})" if report.message else "") + "\n")
        status = 0 if report.passed else 1
    _write(args, _emit(args.format or "jsonl", meta, rows, "branch", summary))
    return status


# -- parser -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "jsonl", "json"), help="output format")
    common.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")

    parser = _Parser(prog="noongen", description="Exact simulation of a feed-forward N00N-state generator.")
    parser.add_argument("--version", action="version", version=f"noongen {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("condense", parents=[common], help="condensation probability table")
    p.add_argument("--N", type=_int_range, required=True, help="photons per mode, e.g. 8 or 1..8")
    p.add_argument("--r", type=int, help="fixed number of prior detections")
    p.add_argument("--fraction", type=_fraction, help="r = round(2N * fraction)")
    p.set_defaults(func=cmd_condense)

    p = sub.add_parser("generate", parents=[common], help="run the full generator")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--f", type=_fraction, required=True, help="tap reflectance in (0, 1)")
    p.add_argument("--pmin", type=int, help="minimum output photons (default round(N(1-f)))")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true", help="enumerate every branch (default)")
    g.add_argument("--monte-carlo", action="store_true", help="sample --shots runs")
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--include-states", action="store_true", help="embed output states")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("figure3", parents=[common], help="mean photons and fidelity per detected fraction")
    p.add_argument("--N-max", dest="N_max", type=int, default=15)
    p.add_argument("--fractions", type=_fraction_list, default=[1 / 3, 1 / 2, 2 / 3])
    p.add_argument("--f", type=_fraction, help="tap reflectance (default: each fraction)")
    p.add_argument("--unweighted", action="store_true", help="average (l, r) pairs uniformly")
    p.set_defaults(func=cmd_figure3)

    p = sub.add_parser("formulas", parents=[common], help="evaluate a closed-form expression")
    p.add_argument("name", nargs="?", help="formula name; omit to list")
    p.add_argument("params", nargs=argparse.REMAINDER)
    p.set_defaults(func=cmd_formulas)

    p = sub.add_parser("run", parents=[common], help="interpret a .qoc program")
    p.add_argument("program", help="path to a .qoc file or the name of a bundled program")
    p.add_argument("--input", required=True, help="dualfock:N or a state JSON file")
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--param", action="append", default=[], help="name=value, repeatable")
    p.add_argument("--check-against-builtin", action="store_true")
    p.add_argument("--no-states", action="store_true", help="omit output states")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        result = args.func(args)
        if isinstance(result, int):
            return result
        _write(args, result)
        return 0
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except (NoonGenError, ArithmeticError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
