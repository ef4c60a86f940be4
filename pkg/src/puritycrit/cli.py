"""Command-line interface.

    puritycrit criterion STATE.json --partition "0|1"
    puritycrit sweep werner --grid 400 --out results/werner
    puritycrit validate --samples 100 --seed 0
    puritycrit make-state bell --out bell.json

Exit codes: 0 ok, 1 usage, 2 validation failure, 3 invariant breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .criteria import INAPPLICABLE, chsh_horodecki, gme_three_qudit_check, ksep_verdict
from .errors import PurityCritError, StateValidationError
from .matcore import DEFAULT_TOL, DensityMatrix, PartitionScheme, Tolerances, validate_density
from .states import (
    bd_state,
    bell_state,
    maximally_mixed,
    noisy_ghz,
    random_fixed_purity,
    random_mixed,
    random_pure_haar,
    werner,
)
from .validation import run_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3

WORKERS_ENV = "PURITYCRIT_WORKERS"
SWEEP_FAMILIES = ("werner", "ghz", "bd-geometry", "nmeas", "negativity", "costs")


class UsageError(Exception):
    pass


class StateFileError(PurityCritError):
    """Malformed state file; carries the line/column of the problem when known."""

    def __init__(self, message, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    stream: int = 0
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    workers: int = 1

    def as_metadata(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# state files

def state_to_json(rho: DensityMatrix) -> str:
    """Serialize as ``{"dims": [...], "matrix": [[[re, im], ...], ...]}``.

    Floats go through ``repr`` (shortest round-trip form) so reading the
    file back gives a bit-identical matrix.
    """
    m = rho.matrix
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    return json.dumps({"dims": list(rho.dims), "matrix": rows}) + "\n"


def write_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(state_to_json(rho), encoding="utf-8")


def parse_state(text: str, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise StateFileError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from None
    if not isinstance(obj, dict) or "dims" not in obj or "matrix" not in obj:
        raise StateFileError("state file needs 'dims' and 'matrix' keys", 1, 1)
    dims = obj["dims"]
    if not isinstance(dims, list) or not dims or not all(isinstance(x, int) for x in dims):
        raise StateFileError("'dims' must be a nonempty list of integers")
    try:
        arr = np.asarray(obj["matrix"], dtype=float)
    except (ValueError, TypeError):
        raise StateFileError("'matrix' must be a rectangular array of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise StateFileError(f"'matrix' has shape {arr.shape}, expected (d, d, 2)")
    return validate_density(arr[..., 0] + 1j * arr[..., 1], dims, tol)


def read_state(path, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read state file {path}: {e.strerror}") from None
    return parse_state(text, tol)


# --------------------------------------------------------------------------
# config helpers

def parse_tolerances(spec: str | None) -> dict:
    """``"herm=1e-9,psd=1e-8"`` -> ``{"herm": 1e-9, "psd": 1e-8}``."""
    if not spec:
        return {}
    out = {}
    for item in spec.split(","):
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in ("herm", "trace", "psd", "eig"):
            raise UsageError(f"bad tolerance override {item!r}; use name=value with "
                             "name in herm, trace, psd, eig")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"tolerance {key} is not a number: {val!r}") from None
        if not out[key] > 0:
            raise UsageError(f"tolerance {key} must be positive")
    return out


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        w = flag
    else:
        env = os.environ.get(WORKERS_ENV, "").strip()
        try:
            w = int(env) if env else 1
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if w < 1:
        raise UsageError("worker count must be >= 1")
    return w


def _run_config(args) -> RunConfig:
    return RunConfig(seed=args.seed, stream=args.stream, out=args.out,
                     tolerances=parse_tolerances(args.tol),
                     workers=resolve_workers(args.workers))


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(ex.jsonable(obj), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands

def criterion_report(rho: DensityMatrix, partition: PartitionScheme) -> dict:
    partition.check(rho.n)
    rep = ksep_verdict(rho, partition)
    out = {
        "dims": list(rho.dims),
        "partition": str(partition),
        "block_dims": list(rep.block_dims),
        "purities": [{"subset": list(s), "purity": p}
                     for s, p in sorted(rep.purities.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))],
        "tnorm2_purities": rep.tnorm2,
        "tnorm2_direct": rep.tnorm2_direct,
        "threshold": rep.threshold,
        "delta_tilde": rep.delta_tilde,
        "entropic_form": rep.auxiliary["entropic_form"],
        "verdicts": dict(rep.verdicts),
    }
    if rep.verdicts["chsh"] != INAPPLICABLE:
        c = chsh_horodecki(rho, partition)
        out["chsh"] = {"u": list(c.u), "u_sum": c.u_sum, "verdict": c.verdict,
                       "rest": c.rest, "purity_form": c.purity_form}
    if rep.verdicts["gme3"] != INAPPLICABLE:
        g = gme_three_qudit_check(rho, partition)
        out["gme"] = {"tnorm2": g.tnorm2, "bound": g.bound, "verdict": g.verdict,
                      "purity_lhs": g.purity_lhs}
    return out


def cmd_criterion(args) -> int:
    tol = DEFAULT_TOL.replace(**parse_tolerances(args.tol))
    rho = read_state(args.state, tol)
    partition = PartitionScheme.parse(args.partition) if args.partition \
        else PartitionScheme.finest(len(rho.dims))
    _emit(criterion_report(rho, partition), args.out)
    return EXIT_OK


def _partitions_arg(text: str):
    if text == "all":
        return "all"
    return [PartitionScheme.parse(p) for p in text.split(";") if p.strip()]


def _positive(name, value):
    if value is not None and value < 1:
        raise UsageError(f"--{name} must be positive")


def run_sweep(family: str, args, cfg: RunConfig):
    """Dispatch one sweep family; returns (result, headline)."""
    if family == "werner":
        res = ex.werner_sweep(args.grid or 401)
        s = res.summary
        head = (f"criterion threshold {s['criterion_threshold']:.9f}, "
                f"CHSH threshold {s['chsh_threshold']:.9f}, "
                f"separability {s['separability_threshold']:.9f}")
    elif family == "ghz":
        res = ex.ghz_sweep(args.n or 4, args.grid or 101, _partitions_arg(args.partitions))
        head = (f"{len(res.summary['partitions'])} partitions, "
                f"GME threshold {res.summary['gme_threshold']:.9f}")
    elif family == "bd-geometry":
        g = ex.bd_geometry(args.samples or 1_000_000, cfg.seed, cfg.stream, workers=cfg.workers)
        cols = {"quantity": ["entangled_fraction", "detected_fraction", "ratio"],
                "estimate": [g.entangled_fraction, g.detected_fraction, g.ratio],
                "stderr": [g.entangled_stderr,
                           (g.detected_fraction * (1 - g.detected_fraction) / g.samples) ** 0.5,
                           g.stderr],
                "reference": [ex.BD_ENTANGLED_FRACTION, None, ex.BD_RATIO_CAP_VOLUME]}
        summary = {"samples": g.samples, "audit_samples": g.audit_samples,
                   "audit_failures": g.audit_failures, **g.references}
        res = ex.SweepResult("bd-geometry", cols, dict(g.metadata), summary)
        head = (f"ratio {g.ratio:.5f} +/- {g.stderr:.5f} "
                f"(cap-volume {ex.BD_RATIO_CAP_VOLUME:.5f}), "
                f"entangled fraction {g.entangled_fraction:.5f}")
    elif family == "nmeas":
        res = ex.nmeas_scan(args.n or 6, args.grid or 20, args.samples or 50,
                            args.shuffles, cfg.seed, cfg.stream, cfg.workers)
        s = res.summary
        head = (f"{s['tensor_entries']} tensor entries vs {s['purities_needed']} purities, "
                f"below-one states saturated: {s['below_one_always_saturated']}")
    elif family == "negativity":
        res = ex.negativity_scan(args.samples or 10_000, cfg.seed, cfg.stream,
                                 args.filter, workers=cfg.workers)
        s = res.summary
        head = (f"{s['failures']} failures in {s['samples']} states, "
                f"max failing negativity {s['max_failure_negativity']}")
    elif family == "costs":
        k = args.k or 6
        if args.qubits:
            rows = [("qubits", (2,) * k)]
        elif args.dims:
            rows = [("custom", tuple(int(x) for x in args.dims.split(",")))]
        else:
            rows = ex.table_one_dims(k, args.qudit_dim)
        res = ex.cost_table(rows)
        head = "; ".join(f"{l}: {e} vs {p}" for l, e, p in
                         zip(res.columns["label"], res.columns["tensor_entries"],
                             res.columns["purities"]))
    else:  # argparse restricts the choices
        raise UsageError(f"unknown sweep family {family!r}")
    return res, head


def cmd_sweep(args) -> int:
    for name in ("n", "grid", "samples", "k", "shuffles"):
        _positive(name, getattr(args, name))
    cfg = _run_config(args)
    res, head = run_sweep(args.family, args, cfg)
    res.metadata["run_config"] = cfg.as_metadata()
    stem = Path(args.out) if args.out else Path("puritycrit_out") / args.family
    csv_path, json_path = res.write(stem)
    print(f"{args.family}: {head}")
    print(f"wrote {csv_path} and {json_path}")
    breach = res.summary.get("max_route_difference")
    if breach is not None and breach > 1e-9:
        print(f"invariant breach: norm routes differ by {breach:.3e}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    tol = DEFAULT_TOL.replace(**parse_tolerances(args.tol))
    if args.state:
        try:
            read_state(args.state, tol)
        except StateValidationError as e:
            print(f"{type(e).__name__}: {e}", file=sys.stderr)
            return EXIT_VALIDATION
    digest = run_suite(args.samples, args.seed)
    print(digest.render())
    return EXIT_OK if digest.passed else EXIT_INVARIANT


STATE_KINDS = ("bell", "werner", "ghz", "mixed", "bd", "random")


def cmd_make_state(args) -> int:
    kind = args.kind
    if kind == "bell":
        rho = bell_state(args.which or "phi+")
    elif kind == "werner":
        rho = werner(args.param, args.which or "psi-")
    elif kind == "ghz":
        rho = noisy_ghz(args.n or 3, args.param)
    elif kind == "mixed":
        rho = maximally_mixed(tuple(int(x) for x in args.dims.split(",")))
    elif kind == "bd":
        if not args.t or len(args.t) != 3:
            raise UsageError("bd needs --t t11 t22 t33")
        rho = bd_state(*args.t)
    else:
        dims = tuple(int(x) for x in args.dims.split(","))
        rng = ex.substream(args.seed, args.stream)
        if args.ensemble == "haar":
            rho = random_pure_haar(dims, rng)
        elif args.ensemble == "fixed":
            rho = random_fixed_purity(dims, args.param, rng=rng)
        else:
            rho = random_mixed(args.ensemble, dims, rng)
    text = state_to_json(rho)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", help="output path (stem for sweeps)")
    p.add_argument("--tol", help="tolerance overrides, e.g. herm=1e-9,psd=1e-8")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="puritycrit", description="Purity-based entanglement criteria.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("criterion", help="evaluate criteria on a state file")
    p.add_argument("state", help="JSON state file")
    p.add_argument("--partition", help='blocks like "0,1|2" (default: one block per factor)')
    _common(p, seed=False)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("sweep", help="run a reproduction sweep")
    p.add_argument("family", choices=SWEEP_FAMILIES)
    p.add_argument("--n", type=int, help="number of qubits (ghz, nmeas)")
    p.add_argument("--grid", type=int, help="grid points (werner, ghz) or purity bins (nmeas)")
    p.add_argument("--samples", type=int, help="sample count or states per bin")
    p.add_argument("--partitions", default="all", help='"all" or ";"-separated partitions')
    p.add_argument("--k", type=int, help="number of parties (costs)")
    p.add_argument("--qubits", action="store_true", help="costs: qubit row only")
    p.add_argument("--qudit-dim", type=int, default=3, help="costs: uniform qudit dimension")
    p.add_argument("--dims", help="costs: explicit comma-separated block dimensions")
    p.add_argument("--shuffles", type=int, default=32, help="nmeas: shuffles per state")
    p.add_argument("--filter", type=float, help="negativity: keep states above this value")
    p.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or 1)")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--samples", type=int, default=110)
    p.add_argument("--state", help="also validate this state file")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("make-state", help="write a state file")
    p.add_argument("kind", choices=STATE_KINDS)
    p.add_argument("--which", help="Bell state name (phi+, phi-, psi+, psi-)")
    p.add_argument("--param", type=float, default=1.0, help="mixing weight or target purity")
    p.add_argument("--n", type=int, help="qubits (ghz)")
    p.add_argument("--dims", default="2,2", help="comma-separated factor dimensions")
    p.add_argument("--t", type=float, nargs=3, help="bd: t11 t22 t33")
    p.add_argument("--ensemble", choices=("hs", "bures", "haar", "fixed"), default="hs")
    _common(p)
    p.set_defaults(func=cmd_make_state)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except StateValidationError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except PurityCritError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
