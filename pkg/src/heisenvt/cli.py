"""Command line front end: ``heisenvt <subcommand> [options]``.

Exit codes: 0 success, 1 malformed input or configuration, 2 a tolerance
violation found by ``verify`` or ``spectrum --check``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .dual import RepLabel, count_dual, iter_dual
from .fourier import (coefficients_from_json, coefficients_to_json, forward_transform,
                      inverse_transform, level_function_from_bytes, level_function_from_json,
                      level_function_to_bytes, level_function_to_json)
from .operators import OperatorSpec, operator_symbol
from .padic import DualScalar, check_prime
from .spectral import (DENSE_BUDGET, block_results, closed_form_spectrum, compare_spectra,
                       hypoellipticity_scan, match_multisets, oracle_spectrum)


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending field."""


@dataclass
class RunConfig:
    p: int = 3
    d: int = 1
    n: int = 1
    spec: object = "sublaplacian:alpha=1"
    format: str = "json"
    mode: str = "block"
    tol: float | None = None
    workers: int | None = None
    budget: int = DENSE_BUDGET

    def validate(self) -> None:
        for key in ("p", "d", "n", "budget"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            check_prime(self.p)
        except ValueError as exc:
            raise ConfigError(f"p: {exc}") from None
        if self.d < 1:
            raise ConfigError("d: must be at least 1")
        if self.n < 0:
            raise ConfigError("n: must be nonnegative")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format: expected json or csv, got {self.format!r}")
        if self.mode not in ("dense", "block"):
            raise ConfigError(f"mode: expected dense or block, got {self.mode!r}")
        if self.workers is not None and (not isinstance(self.workers, int) or self.workers < 1):
            raise ConfigError("workers: expected a positive integer")
        if self.tol is not None and not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError("tol: expected a positive number")

    def operator(self) -> OperatorSpec:
        try:
            spec = OperatorSpec.from_json(self.spec, self.d)
            spec.validate(self.p, self.d)
        except ValueError as exc:
            raise ConfigError(f"spec: {exc}") from None
        return spec


_FIELDS = set(RunConfig.__dataclass_fields__)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(obj, dict):
        raise ConfigError("config: top level must be an object")
    unknown = sorted(set(obj) - _FIELDS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration field")
    return obj


def _config(args) -> RunConfig:
    values = _load_config(getattr(args, "config", None))
    for key in _FIELDS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _emit(obj: dict, out) -> None:
    out.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_dual(cfg: RunConfig, args, out) -> int:
    labels = list(iter_dual(cfg.p, cfg.d, cfg.n))
    total = sum(lab.dim**2 for lab in labels)
    order = cfg.p ** (cfg.n * (2 * cfg.d + 1))
    if cfg.format == "csv":
        rows = [[__version__, ",".join(map(str, lab.xi)), ",".join(map(str, lab.eta)),
                 str(lab.lam), lab.dim, lab.norm] for lab in labels]
        out.write(_csv(rows, ["version", "xi", "eta", "lambda", "dim", "norm"]))
        return 0
    _emit({"version": __version__, "p": cfg.p, "d": cfg.d, "n": cfg.n,
           "count": len(labels), "expected_count": count_dual(cfg.p, cfg.d, cfg.n),
           "labels": [dict(lab.to_json(), norm=lab.norm) for lab in labels],
           "peter_weyl": {"sum_dim_squared": total, "group_order": order,
                          "check": f"{total} = {order}" if total == order else f"{total} != {order}"}},
          out)
    return 0 if total == order else 2


def cmd_spectrum(cfg: RunConfig, args, out) -> int:
    spec = cfg.operator()
    size = cfg.p ** (cfg.n * (2 * cfg.d + 1))
    if cfg.mode == "dense" and size > cfg.budget:
        raise ConfigError(f"budget: dense mode needs {size} dimensions, budget is {cfg.budget}")
    blocks = block_results(spec, cfg.p, cfg.d, cfg.n, cfg.workers)
    oracle = oracle_spectrum(spec, cfg.p, cfg.d, cfg.n, blocks=blocks)
    violations = []
    report = {"version": __version__, "p": cfg.p, "d": cfg.d, "n": cfg.n, "spec": spec.to_json(),
              "mode": cfg.mode, "oracle": oracle.to_json()}
    if oracle.sorted_values().size != size:
        violations.append(f"block dimensions sum to {oracle.sorted_values().size}, expected {size}")
    residual = max(r.block.residual for r in blocks)
    hermitian = max(r.block.hermitian_error for r in blocks)
    report["block_residual"] = residual
    report["block_hermitian_error"] = hermitian
    if residual > 1e-10 or hermitian > 1e-10:
        violations.append("block invariance or symmetry above 1e-10")
    if cfg.mode == "dense":
        dense = oracle_spectrum(spec, cfg.p, cfg.d, cfg.n, "dense", cfg.budget)
        ok, gap = match_multisets(dense.sorted_values(), oracle.sorted_values())
        if cfg.tol is not None:
            ok = gap <= cfg.tol
        report["dense_vs_block"] = {"match": ok, "max_gap": gap}
        if not ok:
            violations.append("dense and block spectra differ")
    try:
        closed = closed_form_spectrum(spec, cfg.p, cfg.d, cfg.n)
    except ValueError as exc:
        report["closed_form"] = {"available": False, "reason": str(exc)}
    else:
        cmp = compare_spectra(closed, oracle, cfg.tol)
        report["closed_form"] = closed.to_json()
        report["comparison"] = cmp.to_json()
        if not cmp.ok:
            violations.append(f"{len(cmp.generic_failures)} generic blocks disagree with the closed form")
    report["violations"] = violations
    if cfg.format == "csv":
        out.write(oracle.to_csv())
    else:
        _emit(report, out)
    return 2 if (args.check and violations) else 0


def _parse_label(args, cfg: RunConfig) -> RepLabel:
    def comps(text, name):
        parts = [s for s in (text or "").split(",") if s.strip()] or ["0"] * cfg.d
        if len(parts) != cfg.d:
            raise ConfigError(f"{name}: expected {cfg.d} components")
        try:
            return tuple(DualScalar.parse(s, cfg.p) for s in parts)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None

    try:
        lam = DualScalar.parse(args.lam or "0", cfg.p)
        return RepLabel(comps(args.xi, "xi"), comps(args.eta, "eta"), lam)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"label: {exc}") from None


def cmd_symbol(cfg: RunConfig, args, out) -> int:
    spec = cfg.operator()
    label = _parse_label(args, cfg)
    sigma = operator_symbol(spec, label)
    rows = [[[round(v.real, 12) + 0.0, round(v.imag, 12) + 0.0] for v in row] for row in sigma]
    if cfg.format == "csv":
        flat = [[__version__, str(label), i, j, rows[i][j][0], rows[i][j][1]]
                for i in range(label.dim) for j in range(label.dim)]
        out.write(_csv(flat, ["version", "label", "row", "col", "re", "im"]))
        return 0
    _emit({"version": __version__, "p": cfg.p, "d": cfg.d, "spec": spec.to_json(),
           "label": label.to_json(), "basis": [list(h) for h in label.basis()],
           "symbol": rows}, out)
    return 0


def cmd_fourier(cfg: RunConfig, args, out) -> int:
    if args.input is None:
        raise ConfigError("input: a file is required")
    try:
        raw = Path(args.input).read_bytes()
    except OSError as exc:
        raise ConfigError(f"input: cannot read {args.input}: {exc.strerror}") from None
    try:
        if args.inverse:
            coeffs = coefficients_from_json(json.loads(raw))
            f = inverse_transform(coeffs)
            if args.raw:
                data = level_function_to_bytes(f)
            else:
                data = (json.dumps(dict(level_function_to_json(f), version=__version__),
                                   sort_keys=True) + "\n").encode()
        else:
            if raw[:4] == b"HVTF":
                f = level_function_from_bytes(raw)
            else:
                f = level_function_from_json(json.loads(raw))
            coeffs = forward_transform(f)
            data = (json.dumps(dict(coefficients_to_json(coeffs), version=__version__),
                               sort_keys=True) + "\n").encode()
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"input: {exc}") from None
    if args.output:
        Path(args.output).write_bytes(data)
    elif isinstance(data, bytes) and args.raw:
        sys.stdout.buffer.write(data)
    else:
        out.write(data.decode())
    return 0


def cmd_verify(cfg: RunConfig, args, out) -> int:
    from .verify import run_suite

    primes = [int(s) for s in args.primes.split(",")] if args.primes else [3, 5]
    for p in primes:
        try:
            check_prime(p)
        except ValueError as exc:
            raise ConfigError(f"primes: {exc}") from None
    results = run_suite(primes, cfg.d, args.n_max, cfg.workers)
    failed = [r for r in results if not r["ok"]]
    _emit({"version": __version__, "d": cfg.d, "n_max": args.n_max, "primes": primes,
           "checks": results, "failed": len(failed)}, out)
    return 2 if failed else 0


def cmd_hypoell(cfg: RunConfig, args, out) -> int:
    spec = cfg.operator()
    if cfg.n < 1:
        raise ConfigError("n: the scan needs at least one shell")
    report = hypoellipticity_scan(spec, cfg.p, cfg.d, cfg.n, cfg.workers)
    if cfg.format == "csv":
        rows = [[__version__, s["j"], s["labels"], s["min_inf"], s["max_op"]] for s in report.shells]
        out.write(_csv(rows, ["version", "shell", "labels", "min_inf", "max_op"]))
        return 0
    _emit(report.to_json(), out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heisenvt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heisenvt {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", type=int, default=None, help="odd prime")
    common.add_argument("-d", type=int, default=None, help="Heisenberg dimension")
    common.add_argument("-n", type=int, default=None, help="truncation level")
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: HEISENVT_THREADS or 1)")
    with_spec = argparse.ArgumentParser(add_help=False)
    with_spec.add_argument("--spec", default=None,
                           help="operator shorthand such as sublaplacian:alpha=1, or JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("dual", parents=[common], help="enumerate the ball B(n) of the unitary dual")

    sp = sub.add_parser("spectrum", parents=[common, with_spec],
                        help="closed-form and oracle spectra with comparison")
    sp.add_argument("--mode", choices=["dense", "block"], default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--check", action="store_true", help="exit 2 on any tolerance violation")

    sy = sub.add_parser("symbol", parents=[common, with_spec], help="operator symbol for one label")
    sy.add_argument("--xi", help="comma separated classes, e.g. 1/3,0")
    sy.add_argument("--eta")
    sy.add_argument("--lambda", dest="lam")

    fo = sub.add_parser("fourier", parents=[common], help="transform a level-function file")
    direction = fo.add_mutually_exclusive_group(required=True)
    direction.add_argument("--forward", action="store_true")
    direction.add_argument("--inverse", action="store_true")
    fo.add_argument("--input", "-i")
    fo.add_argument("--output", "-o")
    fo.add_argument("--raw", action="store_true", help="write the inverse as a raw HVTF stream")

    ve = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    ve.add_argument("--primes", default=None, help="comma separated primes (default 3,5)")
    ve.add_argument("--n-max", type=int, default=2)

    sub.add_parser("hypoell-scan", parents=[common, with_spec],
                   help="symbol growth over shells 1..n")
    return parser


_COMMANDS = {"dual": cmd_dual, "spectrum": cmd_spectrum, "symbol": cmd_symbol,
             "fourier": cmd_fourier, "verify": cmd_verify, "hypoell-scan": cmd_hypoell}


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TypeError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
