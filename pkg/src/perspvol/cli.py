"""Command-line front end: ``perspvol <command> [options]``.

Exit codes: 0 success, 2 usage or input error, 3 numerical-consistency failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

from . import integration as integ
from . import relaxation as rel
from .envelope import concave_envelope
from .errors import (
    CombinatorialBlowupError,
    DomainError,
    GenericityError,
    SupermodularityError,
)
from .functions import ExpLinearForm, PowerLinearForm, function_from_dict
from .geometry import BoxDomain, domain_from_dict
from .verification import run_identity_suite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
MC_SIGMAS = 4.0


class SpecError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _load_json(text: str, what: str):
    """Parse inline JSON, or read it from a file when ``text`` is a path."""
    source = text
    if not text.lstrip().startswith(("{", "[")):
        path = Path(text)
        if not path.is_file():
            raise SpecError(f"{what}: {text!r} is neither inline JSON nor a readable file")
        source = path.read_text()
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _parse_u_list(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SpecError(f"--u: cannot parse {text!r} as a comma-separated list of numbers") from None


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, float)) or hasattr(x, "__float__"):
        return "%.17g" % float(x)
    return str(x)


def _json_num(x):
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, float)) or hasattr(x, "__float__"):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    return x


def _resolved_config(args, **extra) -> dict:
    cfg = {"command": args.command}
    for key in ("function", "domain", "mu", "seed", "samples", "format"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.update(extra)
    return cfg


def _emit(args, config: dict, columns: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    if args.format == "json":
        payload = {
            "config": config,
            "columns": columns,
            "rows": [{k: _json_num(v) for k, v in zip(columns, row)} for row in rows],
        }
        buf.write(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    else:
        for key, val in config.items():
            text = json.dumps(val, sort_keys=True) if not isinstance(val, str) else val
            buf.write(f"# {key}={text}\n")
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _function(args):
    if args.function is None:
        raise SpecError("--function is required")
    spec = _load_json(args.function, "--function")
    if not isinstance(spec, dict):
        raise SpecError("--function must be a JSON object")
    return function_from_dict(spec), spec


def _domain(args, allow_missing_u: bool = False):
    if args.domain is None:
        raise SpecError("--domain is required")
    spec = _load_json(args.domain, "--domain")
    if not isinstance(spec, dict):
        raise SpecError("--domain must be a JSON object")
    if allow_missing_u and spec.get("kind") == "box" and "u" not in spec:
        return None, spec
    return domain_from_dict(spec), spec


# --- commands -----------------------------------------------------------------


def cmd_integrate(args) -> int:
    f, fspec = _function(args)
    dom, dspec = _domain(args)
    rows = []
    closed = []
    main = integ.integrate(f, dom)
    closed.append((main.method.value, float(main.value), main.error_estimate))
    if isinstance(dom, BoxDomain):
        u = float(dom.u)
        try:
            if isinstance(f, PowerLinearForm):
                s = float(f.c_array @ dom.v0_array) / u
                tri = integ.integrate_power_triangulation(f.c_array, f.q, shift=s)
                closed.append((integ.Method.TRIANGULATION_BRION.value, u ** (float(f.q) + dom.dim) * tri, None))
            elif isinstance(f, ExpLinearForm):
                tri = integ.integrate_exp_triangulation(u * f.c_array)
                val = u**dom.dim * math.expm1(float(f.c_array @ dom.v0_array) + math.log(tri))
                closed.append((integ.Method.TRIANGULATION_BRION.value, val, None))
        except (GenericityError, CombinatorialBlowupError, DomainError):
            pass
    mc = integ.monte_carlo_integrate(f, dom, samples=args.samples, seed=args.seed)
    for name, val, err in closed:
        rows.append([name, val, "" if err is None else err])
    rows.append([mc.method.value, float(mc.value), mc.error_estimate])
    agree = all(
        abs(val - mc.value) <= MC_SIGMAS * mc.error_estimate + 1e-12 * max(1.0, abs(val)) for _, val, _ in closed
    )
    cfg = _resolved_config(args, function=fspec, domain=dspec)
    cfg.pop("mu", None)
    _emit(args, cfg, ["method", "value", "errorEstimate"], rows)
    if not agree:
        print(f"error: closed forms disagree with Monte Carlo beyond {MC_SIGMAS:g} standard errors", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_volume(args) -> int:
    f, fspec = _function(args)
    dom, dspec = _domain(args)
    rep = rel.relaxation_report(f, args.mu, dom).to_dict()
    cols = ["volP", "volP0", "delta", "ratio", "muKind", "formulaTrace"]
    row = [rep[k] for k in cols[:-1]] + [";".join(rep["formulaTrace"])]
    _emit(args, _resolved_config(args, function=fspec, domain=dspec), cols, [row])
    return EXIT_OK


def cmd_delta(args) -> int:
    f, fspec = _function(args)
    dom, dspec = _domain(args)
    rows = [["generic", rel.delta(f, dom)]]
    if f.homogeneity_degree is not None:
        rows.append(["homogeneous", rel.delta_homogeneous(f, dom)])
    if isinstance(f, ExpLinearForm) and isinstance(dom, BoxDomain):
        rows.append(["exp_box", rel.delta_exp_box(f, dom)])
    vals = [float(v) for _, v in rows]
    cfg = _resolved_config(args, function=fspec, domain=dspec)
    cfg.pop("mu", None)
    _emit(args, cfg, ["formula", "delta"], rows)
    if max(vals) - min(vals) > 1e-9 * max(1.0, max(abs(v) for v in vals)):
        print("error: delta formulas disagree", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    f, fspec = _function(args)
    _, dspec = _domain(args, allow_missing_u=True)
    if dspec.get("kind") != "box" or "v0" not in dspec:
        raise SpecError("sweep needs a box domain with v0")
    u_values = _parse_u_list(args.u)
    if not u_values:
        raise SpecError("--u: the sweep needs a nonempty list of box scales")
    try:
        rows = rel.ratio_sweep(f, args.mu, dspec["v0"], u_values)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    cfg = _resolved_config(args, function=fspec, domain=dspec, u=u_values)
    cfg.pop("samples", None)
    cfg.pop("seed", None)
    _emit(args, cfg, list(rel.SWEEP_COLUMNS), [list(r.as_tuple()) for r in rows])
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_identity_suite(args.seed)
    rows = [[r.name, "pass" if r.passed else "fail", r.max_error, r.cases] for r in results]
    cfg = {"command": "verify", "seed": args.seed, "format": args.format}
    _emit(args, cfg, ["identity", "status", "maxError", "cases"], rows)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_envelope_export(args) -> int:
    f, fspec = _function(args)
    dom, dspec = _domain(args)
    if not isinstance(dom, BoxDomain):
        raise SpecError("envelope-export needs a box domain")
    env = concave_envelope(f, dom)
    d = dom.dim
    cols = ["cell", "permutation"] + [f"gradient{i}" for i in range(d)] + ["offset"]
    rows = []
    for i in range(len(env)):
        perm = " ".join(str(int(p)) for p in env.perms[i])
        rows.append([i, perm, *env.gradients[i].tolist(), float(env.offsets[i])])
    cfg = _resolved_config(args, function=fspec, domain=dspec)
    cfg.pop("mu", None)
    _emit(args, cfg, cols, rows)
    return EXIT_OK


COMMANDS = {
    "integrate": cmd_integrate,
    "volume": cmd_volume,
    "delta": cmd_delta,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "envelope-export": cmd_envelope_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--function", help="function spec: inline JSON or path to a JSON file")
    common.add_argument("--domain", help="domain spec: inline JSON or path to a JSON file")
    common.add_argument("--mu", choices=["constant", "envelope"], default="envelope",
                        help="concave upper bound (default: envelope)")
    common.add_argument("--u", help="comma-separated box scales for sweep")
    common.add_argument("--seed", type=int, default=42, help="random seed (default: 42)")
    common.add_argument("--samples", type=int, default=10**6, help="Monte Carlo samples (default: 1e6)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="write output to this file instead of stdout")
    parser = argparse.ArgumentParser(prog="perspvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.samples is not None and args.samples < 1:
        parser.error("--samples must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (SpecError, DomainError, CombinatorialBlowupError, SupermodularityError, GenericityError,
            TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:  # ConsistencyError, RangeError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
