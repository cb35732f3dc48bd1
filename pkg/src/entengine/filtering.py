"""Heralded filtering of machine steady states."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qcore
from .builder import MachineSpec, TargetState, _check_assignment, qubit_levels

P_SUC_FLOOR = 1e-12


class HeraldNeverFiresError(RuntimeError):
    """The filter has (numerically) zero success probability."""


@dataclass(frozen=True)
class FilterOutcome:
    heralded: np.ndarray
    p_suc: float
    raw_projected_trace: float

    def to_dict(self, target: TargetState | None = None) -> dict:
        doc = {"p_suc": self.p_suc}
        if target is not None:
            doc["fidelity"] = fidelity(self.heralded, target)
        doc["heralded_matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.heralded]
        return doc


def qubit_indices(r: Sequence[int]) -> np.ndarray:
    """Qutrit basis index of every qubit basis state, in qubit-basis order."""
    maps = [qubit_levels(rk) for rk in r]
    dims = [3] * len(r)
    return np.array([qcore.basis_index([maps[k][b] for k, b in enumerate(bits)], dims)
                     for bits in itertools.product((0, 1), repeat=len(r))])


def filter_projector(r: Sequence[int]) -> np.ndarray:
    r = tuple(int(x) for x in r)
    if any(x not in (0, 1, 2) for x in r):
        raise ValueError(f"filtered level must be 0, 1 or 2, got {r}")
    locals_ = []
    for rk in r:
        p = np.eye(3)
        p[rk, rk] = 0.0
        locals_.append(p)
    return qcore.kron(*locals_)


def apply_filter(rho_inf: np.ndarray, r: Sequence[int]) -> FilterOutcome:
    """Project every qutrit onto its qubit subspace and renormalize.

    The heralded state is returned directly in the N-qubit computational
    basis, using the same level map as :func:`builder.embed_state`.
    """
    r = _check_assignment(r, len(r))
    rho_inf = np.asarray(rho_inf)
    if rho_inf.shape != (3 ** len(r),) * 2:
        raise ValueError(f"state of shape {rho_inf.shape} does not match {len(r)} qutrits")
    idx = qubit_indices(r)
    block = rho_inf[np.ix_(idx, idx)]
    raw = float(np.trace(block).real)
    if raw <= P_SUC_FLOOR:
        raise HeraldNeverFiresError(f"filter success probability {raw:.3e} is below {P_SUC_FLOOR:.0e}")
    heralded = block / raw
    heralded = (heralded + heralded.conj().T) / 2
    return FilterOutcome(heralded, min(max(raw, 0.0), 1.0), raw)


def fidelity(rho: np.ndarray, target: TargetState) -> float:
    psi = target.vector()
    rho = np.asarray(rho)
    if rho.shape != (psi.size, psi.size):
        raise ValueError(f"state of shape {rho.shape} does not match a {target.n_qubits}-qubit target")
    return float(min(max((psi.conj() @ rho @ psi).real, 0.0), 1.0))


def genuinely_entangled(fid: float) -> bool:
    """Fidelity witness for two-term GHZ-like targets: F > 1/2 certifies GME."""
    return fid > 0.5


def harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def max_psuc_ghz(n: int) -> float:
    """Largest heralding probability of the N-qubit GHZ machine (hot-dominated limit)."""
    if n < 2:
        raise ValueError("need N >= 2")
    return 4.0 / (3.0 * (1.0 + 2.0 * (n - 1) * harmonic(n - 1)))


@dataclass
class LimitCheckReport:
    ratios: list[float]
    support_deviation: list[float]
    diagonal_deviation: list[float]
    offdiagonal_deviation: list[float]
    leakage_population: list[float]
    fidelities: list[float]
    p_suc: list[float]

    @property
    def monotone(self) -> bool:
        dev = self.support_deviation
        return all(a > b for a, b in zip(dev, dev[1:]))

    def passes(self, final_bound: float = 1e-2) -> bool:
        return self.monotone and self.support_deviation[-1] <= final_bound


def ideal_limit_check(spec: MachineSpec, ratios: Sequence[float], model: str = "reset") -> LimitCheckReport:
    """Track how the heralded state approaches the target as gamma_h/gamma_c shrinks.

    Ratios are evaluated in decreasing order.  Deviations are measured only on
    the support rows/columns of the heralded state; the population outside the
    support is reported separately.
    """
    from .dynamics import solve_machine

    hot = spec.hot_sites
    cold = [k for k in range(spec.n) if k not in hot]
    temps = spec.baths.temperatures
    if len(hot) != 1 or temps[hot[0]] != math.inf or any(temps[k] != 0 for k in cold):
        raise ValueError("limit check needs one infinitely hot qutrit and zero-temperature cold baths")
    gamma_c = spec.couplings()["gamma_c"]
    ratios = sorted((float(x) for x in ratios), reverse=True)
    support = [int(bits, 2) for bits in spec.target.support]
    psi = spec.target.vector()
    ideal = np.outer(psi, psi.conj())[np.ix_(support, support)]
    report = LimitCheckReport(ratios, [], [], [], [], [], [])
    for ratio in ratios:
        s = spec.with_couplings(gamma_h=ratio * gamma_c)
        out = apply_filter(solve_machine(s, model), s.r)
        sub = out.heralded[np.ix_(support, support)]
        diff = np.abs(sub - ideal)
        off = diff - np.diag(np.diag(diff))
        report.support_deviation.append(float(diff.max()))
        report.diagonal_deviation.append(float(np.diag(diff).max()))
        report.offdiagonal_deviation.append(float(off.max()) if len(support) > 1 else 0.0)
        report.leakage_population.append(float(1 - np.trace(sub).real))
        report.fidelities.append(fidelity(out.heralded, spec.target))
        report.p_suc.append(out.p_suc)
    return report


def hot_reset_partner(bits: str, hot: int) -> str:
    """Qubit basis state reached from ``bits`` when the hot qutrit resets within its qubit subspace."""
    flipped = "1" if bits[hot] == "0" else "0"
    return bits[:hot] + flipped + bits[hot + 1:]


def population_ratios(spec: MachineSpec, rho_inf: np.ndarray) -> list[tuple[str, str, float, float]]:
    """Measured vs predicted P_o / P_n for every support state n.

    ``o`` is the hot-reset partner of ``n``; the prediction
    ``gamma_h / (3 (N-1) gamma_c + gamma_h)`` holds at zero cold and infinite
    hot temperature.
    """
    if len(spec.hot_sites) != 1:
        raise ValueError("ratio law needs exactly one hot qutrit")
    hot = spec.hot_sites[0]
    cpl = spec.couplings()
    predicted = cpl["gamma_h"] / (3 * (spec.n - 1) * cpl["gamma_c"] + cpl["gamma_h"])
    out = apply_filter(rho_inf, spec.r)
    diag = np.diag(out.heralded).real
    rows = []
    for bits in spec.target.support:
        partner = hot_reset_partner(bits, hot)
        rows.append((bits, partner, float(diag[int(partner, 2)] / diag[int(bits, 2)]), predicted))
    return rows
