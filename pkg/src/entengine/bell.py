"""Bell expressions evaluated on heralded qubit states.

Two families are supported: a modified Mermin expression (local-hidden-variable
bound 1) for GHZ-type states and a four-party operator for the linear cluster
state (bound 2).  Observables are explicit 2x2 matrices.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .builder import TargetState

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

MERMIN_LHV = 1.0
CLUSTER_LHV = 2.0

CSV_COLUMNS = ("machine", "p_suc", "F", "bell_name", "value", "lhv_bound")


@dataclass(frozen=True)
class MeasurementSettings:
    """Two +-1-valued observables per party."""

    observables: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        obs = tuple((np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) for a, b in self.observables)
        object.__setattr__(self, "observables", obs)
        for party, pair in enumerate(obs):
            for a in pair:
                if a.shape != (2, 2):
                    raise ValueError(f"party {party}: observables must be 2x2")
                if np.max(np.abs(a - a.conj().T)) > 1e-12 or np.max(np.abs(a @ a - I2)) > 1e-12:
                    raise ValueError(f"party {party}: observable is not Hermitian with eigenvalues +-1")

    @property
    def n_parties(self) -> int:
        return len(self.observables)


def default_mermin_settings(n: int) -> MeasurementSettings:
    r = 1 / np.sqrt(2)
    if n == 2:
        return MeasurementSettings(((SZ, SX), (r * (SZ + SX), r * (SZ - SX))))
    if n == 3:
        return MeasurementSettings(((SX, SY),) * 3)
    if n == 4:
        return MeasurementSettings(((SX, SY),) + ((r * (SX + SY), r * (SX - SY)),) * 3)
    raise ValueError(f"default Mermin settings exist for N = 2, 3, 4 only, got {n}")


def _check_dim(rho: np.ndarray, n: int) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (2 ** n, 2 ** n):
        raise ValueError(f"state of shape {rho.shape} does not match {n} qubits")
    return rho


def correlator(rho: np.ndarray, ops: Sequence[np.ndarray]) -> float:
    """``Tr(rho A_1 (x) ... (x) A_N)`` (real part)."""
    rho = _check_dim(rho, len(ops))
    return float(np.trace(rho @ reduce(np.kron, ops)).real)


def pauli_correlator(rho: np.ndarray, word: str) -> float:
    return correlator(rho, [PAULI[c] for c in word])


def mermin_value(rho: np.ndarray, settings: MeasurementSettings) -> float:
    """Average over sign patterns x of |<prod_k (A0_k + (-1)^x_k A1_k)>| / 2^N."""
    n = settings.n_parties
    rho = _check_dim(rho, n)
    total = 0.0
    for signs in itertools.product((1, -1), repeat=n):
        ops = [a0 + s * a1 for (a0, a1), s in zip(settings.observables, signs)]
        total += abs(correlator(rho, ops))
    return total / 2 ** n


CLUSTER_TERMS = (("XYYX", 1), ("XYXY", 1), ("IZXX", 1), ("IZYY", -1))


def cluster_bell_value(rho: np.ndarray) -> float:
    """B = <XYYX> + <XYXY> + <IZXX> - <IZYY> on the rotated-frame cluster state."""
    rho = _check_dim(rho, 4)
    return sum(sign * pauli_correlator(rho, word) for word, sign in CLUSTER_TERMS)


def rotated_cluster_state() -> TargetState:
    return TargetState.from_terms([("0000", 1), ("0011", 1), ("1100", 1), ("1111", -1)])


# Found by :func:`search_cluster_frame` and frozen; a regression test re-runs the search.
CLUSTER_FRAME = ("I", "X", "X", "I")


def cluster_frame_unitary() -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in CLUSTER_FRAME])


def cluster_frame_rotation(rho: np.ndarray) -> np.ndarray:
    """Map a state in the machine's frame into the frame of :func:`cluster_bell_value`."""
    rho = _check_dim(rho, 4)
    u = cluster_frame_unitary()
    return u @ rho @ u.conj().T


def single_qubit_cliffords() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords (modulo global phase), generated from H and S."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])

    def canon(u):
        k = np.flatnonzero(np.abs(u.ravel()) > 1e-9)[0]
        ph = u.ravel()[k] / abs(u.ravel()[k])
        return u / ph

    def key(u):
        return tuple(np.round(canon(u).ravel(), 8))

    group = {key(I2): I2}
    frontier = [I2]
    while frontier:
        nxt = []
        for u in frontier:
            for gen in (h, s):
                v = canon(gen @ u)
                if key(v) not in group:
                    group[key(v)] = v
                    nxt.append(v)
        frontier = nxt
    return list(group.values())


def search_cluster_frame(source: TargetState, target: TargetState | None = None,
                         tol: float = 1e-10) -> tuple[np.ndarray, ...] | None:
    """First product of single-qubit Cliffords U with |<target|U|source>| = 1 within ``tol``."""
    target = target or rotated_cluster_state()
    cliff = single_qubit_cliffords()
    psi = source.vector().reshape(2, 2, 2, 2)
    phi = target.vector().conj().reshape(2, 2, 2, 2)
    last = np.stack(cliff)  # (24, 2, 2)
    for u0, u1, u2 in itertools.product(cliff, repeat=3):
        part = np.einsum("ai,bj,ck,ijkl->abcl", u0, u1, u2, psi)
        amps = np.einsum("mdl,abcl->mabcd", last, part)
        overlaps = np.abs(np.einsum("abcd,mabcd->m", phi, amps))
        hit = np.flatnonzero(np.abs(overlaps - 1) <= tol)
        if hit.size:
            return u0, u1, u2, cliff[hit[0]]
    return None


def bell_rows(machine: str, p_suc: float, fidelity: float, bell_name: str, value: float) -> dict:
    bound = CLUSTER_LHV if bell_name == "cluster" else MERMIN_LHV
    return {"machine": machine, "p_suc": p_suc, "F": fidelity, "bell_name": bell_name,
            "value": value, "lhv_bound": bound}


def write_bell_csv(rows: Iterable[dict], path_or_file) -> None:
    """Write Bell rows to a path or an open text file."""
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            write_bell_csv(rows, fh)
        return
    w = csv.writer(path_or_file, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def _fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, float) else str(x)
