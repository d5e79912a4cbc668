"""Figure and table generators for the H2 demonstration, runtime studies and the k planner."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from philter import __version__
from philter.amplify import Amplifier, EnergyWindow, optimal_iterations, success_condition
from philter.protocols import qphilter
from philter.qpe import QpeOutputModel, qpe_distribution_for_phase
from philter.spectral import (
    H2_ES_BITS,
    H2_GS_BITS,
    AnsatzSpec,
    SpectralModel,
    eigen_overlap_ansatz,
    h2_model,
    h2_truncated_model,
    hf_ansatz,
    ry_angle_for_overlap,
)

H2_WINDOW = "00"
FIG4_KINDS = ("A", "B", "C", "D", "E", "F")


@dataclass
class FigureDataset:
    tag: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} cells, expected {len(self.columns)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# dataset: {self.tag}\n")
        buf.write(f"# version: {__version__}\n")
        for key in sorted(self.meta):
            buf.write(f"# {key}: {json.dumps(self.meta[key], sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv())


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse a dataset written by :meth:`FigureDataset.to_csv` into (meta, rows)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def _bitstring_probability(marginal: np.ndarray, bits: str, m: int) -> float:
    """Probability of reading the leading ``m`` bits of ``bits``."""
    return float(marginal[int(bits[:m], 2)])


def _amplification_sweep(tag: str, ansatz: AnsatzSpec, m: int, k_max: int, meta: dict) -> FigureDataset:
    model = h2_model()
    amp = Amplifier(model, ansatz, EnergyWindow(H2_WINDOW), m)
    ds = FigureDataset(tag, ["k", "p_gs", "p_es", "p_window"], meta={"m": m, "k_max": k_max, **meta})
    for k in range(k_max + 1):
        marg = amp.energy_marginal(k)
        ds.add(
            k,
            _bitstring_probability(marg, H2_GS_BITS, m),
            _bitstring_probability(marg, H2_ES_BITS, m),
            float(marg[amp.mask].sum()),
        )
    return ds


def overlap_ansatz_angle(probability: float) -> float:
    """``Ry`` angle giving the H2 excited state the requested overlap probability."""
    return ry_angle_for_overlap(h2_model(), 1, probability)


def fig4_sweep(
    kind: str,
    m: int = 20,
    k_max: int = 50,
    theta: float | None = None,
    m_range: Sequence[int] = range(2, 11),
    register_sizes: Sequence[int] = range(2, 13),
    k: int = 7,
) -> FigureDataset:
    """Data behind the H2 amplification panels.

    ``A`` HF ansatz, ``B`` and ``C`` rotated ansatz with excited-state overlap
    1/4 and 1/2 (exact angles unless ``theta`` is given), ``D`` per-outcome
    QPE probabilities, ``E`` prefix mass per eigenstate, ``F`` iterative
    PHILTER success against amplification-register size.
    """
    kind = kind.upper()
    if kind not in FIG4_KINDS:
        raise ValueError(f"unknown panel {kind!r}; choose from {', '.join(FIG4_KINDS)}")
    if kind == "A":
        return _amplification_sweep("fig4A", hf_ansatz(), m, k_max, {"ansatz": "hf"})
    if kind in ("B", "C"):
        target = 0.25 if kind == "B" else 0.5
        angle = overlap_ansatz_angle(target) if theta is None else float(theta)
        return _amplification_sweep(
            f"fig4{kind}", AnsatzSpec.rotation(angle), m, k_max, {"ansatz": f"ry:{angle:.10f}"}
        )
    if kind == "D":
        return _fig4_distributions(m_range)
    if kind == "E":
        return _fig4_prefix_mass(m_range)
    return fig4_iterative(register_sizes, m_total=m, k=k)


def _fig4_distributions(m_range) -> FigureDataset:
    model = h2_model()
    ds = FigureDataset("fig4D", ["m", "state", "x", "eps2"], meta={"ansatz": "hf"})
    for m in m_range:
        for label, phi in zip(("gs", "es"), model.phases):
            for x, p in enumerate(qpe_distribution_for_phase(float(phi), m)):
                ds.add(m, label, x, float(p))
    return ds


def _fig4_prefix_mass(m_range) -> FigureDataset:
    model = h2_model()
    window = EnergyWindow(H2_WINDOW)
    ds = FigureDataset(
        "fig4E", ["m", "gs_mass", "es_mass", "condition"], meta={"ansatz": "hf", "window": H2_WINDOW}
    )
    for m in m_range:
        ok, diag = success_condition(model, hf_ansatz(), window, m)
        ds.add(m, diag.unwanted, diag.wanted, ok)
    return ds


def simulated_prefix_mass(model: SpectralModel, ansatz: AnsatzSpec, window: EnergyWindow, m: int) -> tuple[float, float]:
    """Prefix mass per eigenstate class from a full simulation of ``A|0>``.

    Returns ``(unwanted, wanted)``, split by whether the eigenphase lies in ``F``.
    """
    amp = Amplifier(model, ansatz, window, m, cache=False)
    arr = amp.circuit.prepared_array() @ model.eigen.eigenvectors.conj()
    mass = (np.abs(arr[amp.mask]) ** 2).sum(axis=0)
    inside = np.array([window.contains_phase(float(p)) for p in model.phases])
    return float(mass[~inside].sum()), float(mass[inside].sum())


def iterative_outcome_distribution(
    model: SpectralModel,
    ansatz: AnsatzSpec,
    window: EnergyWindow,
    a: int,
    m_total: int,
    k: int,
    reuse_prefix: bool = True,
) -> np.ndarray:
    """Distribution of the ``m_total``-bit value returned by one iterative PHILTER pass.

    The amplified ``a``-bit register is simulated; the IQPE part is taken in
    closed form, since for each eigencomponent IQPE follows the QPE
    distribution. With ``reuse_prefix`` the tail covers ``frac(2^a phi)`` on
    ``m_total - a`` bits; otherwise all ``m_total`` bits are re-read.
    """
    amp = Amplifier(model, ansatz, window, a, cache=False)
    weights = np.abs(amp.state_array(k) @ model.eigen.eigenvectors.conj()) ** 2
    if not reuse_prefix:
        out = np.zeros(1 << m_total)
        for j, phi in enumerate(model.phases):
            out += weights[:, j].sum() * qpe_distribution_for_phase(float(phi), m_total)
        return out
    rest = m_total - a
    out = np.zeros((1 << a, 1 << rest))
    for j, phi in enumerate(model.phases):
        tail = qpe_distribution_for_phase(float(np.mod(phi * 2**a, 1.0)), rest) if rest else np.ones(1)
        out += np.outer(weights[:, j], tail)
    return out.reshape(-1)


def iterative_success_probability(
    model: SpectralModel, ansatz: AnsatzSpec, window: EnergyWindow, a: int, m_total: int, k: int
) -> float:
    """Probability that one iterative PHILTER pass lands inside ``F'``."""
    dist = iterative_outcome_distribution(model, ansatz, window, a, m_total, k)
    lo, hi = window.acceptance_interval
    phase = np.arange(dist.size) / dist.size
    return float(dist[(phase >= lo) & (phase < hi)].sum())


def fig4_iterative(register_sizes=range(2, 13), m_total: int = 20, k: int = 7) -> FigureDataset:
    bad = [a for a in register_sizes if not len(H2_WINDOW) <= a <= m_total]
    if bad:
        raise ValueError(f"register sizes {bad} outside [{len(H2_WINDOW)}, {m_total}]")
    model = h2_model()
    window = EnergyWindow(H2_WINDOW)
    ds = FigureDataset(
        "fig4F",
        ["register_size", "p_gs", "p_es", "p_gs_rederived", "p_es_rederived", "p_acceptance", "condition"],
        meta={"ansatz": "hf", "m_total": m_total, "k": k, "window": H2_WINDOW, "gamma": window.gamma},
    )
    lo, hi = window.acceptance_interval
    phase = np.arange(1 << m_total) / 2**m_total
    inside = (phase >= lo) & (phase < hi)
    for a in register_sizes:
        ok, _ = success_condition(model, hf_ansatz(), window, a)
        dist = iterative_outcome_distribution(model, hf_ansatz(), window, a, m_total, k)
        full = iterative_outcome_distribution(model, hf_ansatz(), window, a, m_total, k, False)
        ds.add(
            a,
            _bitstring_probability(dist, H2_GS_BITS, m_total),
            _bitstring_probability(dist, H2_ES_BITS, m_total),
            _bitstring_probability(full, H2_GS_BITS, m_total),
            _bitstring_probability(full, H2_ES_BITS, m_total),
            float(dist[inside].sum()),
            ok,
        )
    return ds


def appendix_tables(m_range: Sequence[int] = range(2, 13)) -> FigureDataset:
    """Per-eigenstate ``delta``, ``sum eps^2`` and ``sum |a eps|^2`` over prefix ``00``."""
    model = h2_model()
    window = EnergyWindow(H2_WINDOW)
    ds = FigureDataset(
        "appendix_tables",
        ["state", "m", "delta", "eps2_sum", "weighted_mass", "condition"],
        meta={"ansatz": "hf", "window": H2_WINDOW},
    )
    for j, label in ((0, "gs"), (1, "es")):
        for m in m_range:
            out = QpeOutputModel.build(model, hf_ansatz(), m)
            eps = float(out.eigenstate_distribution(j)[window.mask(m)].sum())
            ok, _ = success_condition(model, hf_ansatz(), window, m)
            ds.add(label, m, float(out.deltas[j]), eps, float(out.overlap_probabilities[j] * eps), ok)
    return ds


def two_level_model(b: float, m: int = 10) -> tuple[SpectralModel, AnsatzSpec]:
    """H2 eigenvectors with phases cut to ``m`` bits and an ansatz of excited overlap ``b``."""
    model = h2_truncated_model(m)
    return model, eigen_overlap_ansatz(model, [1.0 - b, b])


def fig5_runtime_study(overlaps: Sequence[float], runs: int, seed: int, m: int = 10) -> FigureDataset:
    """QPHILTER runtime samples in ``QPE(H) O`` units for each overlap ``b``."""
    if runs < 100:
        raise ValueError("runtime study needs at least 100 runs per overlap")
    ds = FigureDataset(
        "fig5",
        ["b", "run", "qpe_applications", "grover_iterations", "repeat_qpe", "four_over_sqrt_b"],
        meta={"seed": seed, "m": m, "runs": runs, "window": H2_WINDOW},
    )
    root = np.random.SeedSequence(seed)
    for b, child in zip(overlaps, root.spawn(len(overlaps))):
        model, ansatz = two_level_model(float(b), m)
        amp = Amplifier(model, ansatz, EnergyWindow(H2_WINDOW), m)
        for run, ss in enumerate(child.spawn(runs)):
            rep = qphilter(model, ansatz, EnergyWindow(H2_WINDOW), m, np.random.default_rng(ss), amplifier=amp)
            ds.add(float(b), run, rep.qpe_applications, rep.grover_iterations, 1.0 / b, 4.0 / math.sqrt(b))
    return ds


def summarize_runtime(ds: FigureDataset) -> dict[float, dict]:
    out: dict[float, dict] = {}
    bs = np.array(ds.column("b"))
    cost = np.array(ds.column("qpe_applications"), dtype=float)
    iters = np.array(ds.column("grover_iterations"), dtype=float)
    for b in sorted(set(bs.tolist())):
        sel = bs == b
        out[b] = {
            "mean_qpe_applications": float(cost[sel].mean()),
            "median_qpe_applications": float(np.median(cost[sel])),
            "mean_grover_iterations": float(iters[sel].mean()),
            "repeat_qpe": 1.0 / b,
        }
    return out


def _load_overlaps(source) -> dict:
    if isinstance(source, dict):
        return source
    return json.loads(Path(source).read_text())


def plan_k_from_overlaps(source) -> list[dict]:
    """Per-window ``b`` and ``k`` from user-supplied eigenstate overlap probabilities."""
    data = _load_overlaps(source)
    try:
        probs = {str(o["label"]): float(o["prob"]) for o in data["overlaps"]}
        windows = [(str(w["F"]), [str(x) for x in w["labels"]]) for w in data["windows"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed overlap file: {exc}") from exc
    if any(p < 0 for p in probs.values()) or sum(probs.values()) > 1 + 1e-6:
        raise ValueError("overlap probabilities must be non-negative and sum to at most 1")
    plan = []
    for prefix, labels in windows:
        EnergyWindow(prefix)
        missing = [x for x in labels if x not in probs]
        if missing:
            raise ValueError(f"window {prefix} references unknown labels {missing}")
        b = sum(probs[x] for x in labels)
        k = optimal_iterations(min(b, 1.0)) if b > 0 else None
        plan.append({"F": prefix, "labels": labels, "b": b, "k": k})
    return plan


__all__ = [
    "FIG4_KINDS",
    "FigureDataset",
    "appendix_tables",
    "fig4_iterative",
    "fig4_sweep",
    "fig5_runtime_study",
    "iterative_outcome_distribution",
    "iterative_success_probability",
    "overlap_ansatz_angle",
    "plan_k_from_overlaps",
    "read_csv",
    "simulated_prefix_mass",
    "summarize_runtime",
    "two_level_model",
]
