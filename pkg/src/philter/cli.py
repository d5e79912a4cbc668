"""Command-line front end.

Exit codes: 0 on success, 2 when a protocol fails to return an in-window
energy, 1 on usage, file-format or capacity errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from philter import experiments
from philter.amplify import Amplifier, EnergyWindow
from philter.errors import (
    CapacityError,
    InsufficientPrecisionError,
    NoOverlapDetected,
    NotHermitianError,
    ProtocolFailure,
    SpectrumRangeError,
)
from philter.estimate import qae
from philter.protocols import SCHEMA_VERSION, RunReport, iterative_philter, philter, qphilter
from philter.qpe import QpeCircuit
from philter.spectral import (
    SpectralModel,
    decode_energy,
    h2_model,
    load_hamiltonian,
    parse_ansatz,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2
SAMPLING = ("qpe", "philter", "iphilter", "qphilter", "qae")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_model(spec: str) -> SpectralModel:
    """``h2`` for the built-in hydrogen model, otherwise a Hamiltonian JSON path."""
    if spec == "h2":
        return h2_model()
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"cannot read Hamiltonian file {spec}")
    try:
        return load_hamiltonian(path)
    except json.JSONDecodeError as exc:
        raise UsageError(f"Hamiltonian file {spec} is not valid JSON: {exc}") from exc


def _window(args) -> EnergyWindow:
    try:
        window = EnergyWindow(args.window, args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if window.f > args.m:
        raise UsageError(f"window length {window.f} exceeds --m {args.m}")
    return window


def _ansatz(args):
    try:
        return parse_ansatz(args.ansatz)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read ansatz {args.ansatz!r}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad ansatz {args.ansatz!r}: {exc}") from exc


def run_seeds(seed: int, runs: int) -> list[np.random.SeedSequence]:
    """One independent stream per run, derived from ``(seed, run index)``."""
    if runs == 1:
        return [np.random.SeedSequence(seed)]
    return np.random.SeedSequence(seed).spawn(runs)


def _emit(args, payload, rows: list[dict] | None = None) -> None:
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        fields = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _report_payload(reports: list[dict]) -> dict:
    if len(reports) == 1:
        return reports[0]
    return {"schema_version": SCHEMA_VERSION, "reports": reports}


def _protocol_runs(args, fn) -> int:
    model = load_model(args.hamiltonian)
    ansatz = _ansatz(args)
    window = _window(args)
    amp = None
    reports, failed = [], 0
    for index, ss in enumerate(run_seeds(args.seed, args.runs)):
        rng = np.random.default_rng(ss)
        try:
            if fn == "philter":
                amp = amp or Amplifier(model, ansatz, window, args.m)
                rep = philter(model, ansatz, window, args.m, args.t, rng, args.max_retries, amplifier=amp)
            elif fn == "iphilter":
                rep = iterative_philter(
                    model, ansatz, window, args.m, args.t, rng, args.passes,
                    register_size=args.register_size, k=args.k,
                    reuse_prefix=not args.rederive,
                )
            else:
                amp = amp or Amplifier(model, ansatz, window, args.m)
                rep = qphilter(model, ansatz, window, args.m, rng, args.max_iterations, amplifier=amp)
        except ProtocolFailure as exc:
            failed += 1
            rep = exc.report or RunReport(fn)
            rep.notes.append(str(exc))
        except (NoOverlapDetected, InsufficientPrecisionError) as exc:
            failed += 1
            rep = RunReport(fn)
            rep.notes.append(str(exc))
        rep.seed = args.seed
        out = rep.to_dict()
        out["run"] = index
        reports.append(out)
    _emit(args, _report_payload(reports), reports)
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_qpe(args) -> int:
    model = load_model(args.hamiltonian)
    circuit = QpeCircuit(model, _ansatz(args), args.m)
    marg = (np.abs(circuit.prepared_array()) ** 2).sum(axis=1)
    marg = marg / marg.sum()
    rng = np.random.default_rng(args.seed)
    draws = rng.choice(marg.size, size=args.shots, p=marg)
    values, counts = np.unique(draws, return_counts=True)
    order = np.argsort(-counts, kind="stable")[: args.top]
    outcomes = [
        {
            "bitstring": format(int(values[i]), f"0{args.m}b"),
            "count": int(counts[i]),
            "frequency": counts[i] / args.shots,
            "probability": float(marg[values[i]]),
            "energy": decode_energy(model, int(values[i]), args.m),
        }
        for i in order
    ]
    payload = {"schema_version": SCHEMA_VERSION, "m": args.m, "shots": args.shots, "seed": args.seed, "outcomes": outcomes}
    _emit(args, payload, outcomes)
    return EXIT_OK


def cmd_qae(args) -> int:
    model = load_model(args.hamiltonian)
    window = _window(args)
    ansatz = _ansatz(args)
    rows = []
    for index, ss in enumerate(run_seeds(args.seed, args.runs)):
        est = qae(model, ansatz, window, args.m, args.t, np.random.default_rng(ss))
        rows.append({"run": index, **est.to_dict()})
    payload = rows[0] if len(rows) == 1 else {"schema_version": SCHEMA_VERSION, "estimates": rows}
    _emit(args, payload, rows)
    return EXIT_OK


def _dataset_out(args, ds) -> int:
    if args.format == "json":
        cols = ds.columns
        payload = {"dataset": ds.tag, "meta": ds.meta, "rows": [dict(zip(cols, r)) for r in ds.rows]}
        text = json.dumps(payload, indent=2, default=lambda v: v.item() if hasattr(v, "item") else str(v)) + "\n"
    else:
        text = ds.to_csv()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tables(args) -> int:
    return _dataset_out(args, experiments.appendix_tables())


def cmd_fig4(args) -> int:
    return _dataset_out(args, experiments.fig4_sweep(args.kind, m=args.m, k_max=args.k_max, theta=args.theta))


def cmd_fig5(args) -> int:
    return _dataset_out(args, experiments.fig5_runtime_study(args.overlaps, args.runs, args.seed, m=args.m))


def cmd_plan_k(args) -> int:
    try:
        plan = experiments.plan_k_from_overlaps(args.overlaps)
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read overlap file {args.overlaps}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"overlap file {args.overlaps} is not valid JSON: {exc}") from exc
    _emit(args, {"windows": plan}, plan)
    return EXIT_OK


def dyadic_cover(lo: float, hi: float, m: int) -> list[str]:
    """Prefixes of length at most ``m`` whose intervals tile ``[lo, hi)`` exactly."""
    size = 1 << m
    a, b = lo * size, hi * size
    if abs(a - round(a)) > 1e-9 or abs(b - round(b)) > 1e-9:
        raise ValueError(f"[{lo}, {hi}) is not a union of {m}-bit dyadic intervals")
    a, b = int(round(a)), int(round(b))
    out = []
    while a < b:
        depth = m
        # widen while aligned and still inside
        while depth > 1 and a % (1 << (m - depth + 1)) == 0 and a + (1 << (m - depth + 1)) <= b:
            depth -= 1
        width = 1 << (m - depth)
        out.append(format(a >> (m - depth), f"0{depth}b"))
        a += width
    return out


def smallest_enclosing_prefix(lo: float, hi: float, m: int) -> str | None:
    for depth in range(m, 0, -1):
        start = math.floor(lo * 2**depth)
        if (start + 1) / 2**depth >= hi and start / 2**depth <= lo:
            return format(start, f"0{depth}b")
    return None


def cmd_window_for(args) -> int:
    model = load_model(args.hamiltonian)
    if args.emin >= args.emax:
        raise UsageError("--emin must be below --emax")
    to_phase = lambda e: -model.scale * (e + model.shift) / (2 * math.pi)  # noqa: E731
    lo, hi = sorted((to_phase(args.emin), to_phase(args.emax)))
    if lo < 0 or hi > 1:
        raise UsageError("energy range maps outside the phase interval [0, 1)")
    payload = {"phase_interval": [lo, hi], "enclosing": smallest_enclosing_prefix(lo, hi, args.m)}
    try:
        payload["exact_cover"] = dyadic_cover(lo, hi, args.m)
    except ValueError as exc:
        payload["exact_cover"] = None
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="philter", description="Energy-interval filtered eigenvalue sampling.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, window=True, t=False, m=None):
        p.add_argument("--hamiltonian", default="h2", help="Hamiltonian JSON file or 'h2'")
        p.add_argument("--ansatz", default="hf", help="hf, ry:THETA, basis:K or an ansatz JSON file")
        p.add_argument("--m", type=int, required=m is None, default=m, help="energy register qubits")
        if window:
            p.add_argument("--window", required=True, help="amplified prefix F, e.g. 00")
            p.add_argument("--gamma", type=float, default=1.0)
        if t:
            p.add_argument("--t", type=int, required=True, help="amplitude-estimation qubits")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--runs", type=int, default=1)
        p.add_argument("--output")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("qpe", help="sample QPE(H) O|0>")
    common(p, window=False)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--top", type=int, default=8)
    p.set_defaults(func=cmd_qpe)

    p = sub.add_parser("philter", help="estimate-then-amplify sampling")
    common(p, t=True)
    p.add_argument("--max-retries", type=int, default=16)
    p.set_defaults(func=lambda a: _protocol_runs(a, "philter"))

    p = sub.add_parser("iphilter", help="iterative PHILTER with IQPE tail")
    common(p, t=True)
    p.add_argument("--passes", type=int, default=4)
    p.add_argument("--register-size", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--rederive", action="store_true", help="re-read all bits by IQPE")
    p.set_defaults(func=lambda a: _protocol_runs(a, "iphilter"))

    p = sub.add_parser("qphilter", help="estimation-free Qsearch sampling")
    common(p)
    p.add_argument("--max-iterations", type=int)
    p.set_defaults(func=lambda a: _protocol_runs(a, "qphilter"))

    p = sub.add_parser("qae", help="amplitude estimation of the window probability")
    common(p, t=True)
    p.set_defaults(func=cmd_qae)

    p = sub.add_parser("tables", help="prefix-mass tables for H2")
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("fig4", help="H2 amplification panel data")
    p.add_argument("--kind", choices=experiments.FIG4_KINDS, type=str.upper, required=True)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--k-max", type=int, default=50)
    p.add_argument("--theta", type=float)
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("fig5", help="QPHILTER runtime samples")
    p.add_argument("--overlaps", type=float, nargs="+", default=[1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2])
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_fig5)

    p = sub.add_parser("plan-k", help="iterations per window from overlap probabilities")
    p.add_argument("--overlaps", required=True)
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_plan_k)

    p = sub.add_parser("window-for", help="dyadic prefixes for an energy range")
    p.add_argument("--hamiltonian", default="h2")
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_window_for)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("m", "t", "runs", "shots"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            parser.error(f"--{name} must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except CapacityError as exc:
        sys.stderr.write(f"error: capacity exceeded: {exc}\n")
        return EXIT_USAGE
    except (NotHermitianError, SpectrumRangeError) as exc:
        sys.stderr.write(f"error: invalid Hamiltonian: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
