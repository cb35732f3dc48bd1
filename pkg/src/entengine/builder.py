"""Machine construction: target states, level assignments, energies, Hamiltonians.

A target is an N-qubit pure state given by its support (bitstrings) and
amplitudes.  The machine is made of N qutrits; on qutrit ``k`` the level
``r[k]`` (0 or 2) is the one excluded by the heralding filter, and the qubit
lives on the two remaining levels.  Energies are in units with hbar = k_B = 1.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import qcore

log = logging.getLogger(__name__)

COMMUTATOR_TOL = 1e-10
WEAK_COUPLING_FACTOR = 1e-2
FEASIBILITY_MARGIN = 0.1
MAX_QUTRITS = 5


class CapacityError(ValueError):
    """Requested system size exceeds the supported desk-scale range."""


class InfeasibleTargetError(ValueError):
    """No energy-conserving interaction exists for the requested construction."""


# --------------------------------------------------------------------------- targets


@dataclass(frozen=True)
class TargetState:
    n_qubits: int
    support: tuple[str, ...]
    amplitudes: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "amplitudes", tuple(complex(c) for c in self.amplitudes))
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if not self.support:
            raise ValueError("target support is empty")
        if len(self.support) != len(self.amplitudes):
            raise ValueError("support and amplitudes differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support bitstrings are not distinct")
        for bits in self.support:
            if len(bits) != self.n_qubits or set(bits) - {"0", "1"}:
                raise ValueError(f"bad bitstring {bits!r} for {self.n_qubits} qubits")
        if any(c == 0 for c in self.amplitudes):
            raise ValueError("support amplitudes must be non-zero")
        norm = sum(abs(c) ** 2 for c in self.amplitudes)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"amplitudes are not normalized (sum |c|^2 = {norm!r})")

    @classmethod
    def from_terms(cls, terms: dict[str, complex] | Sequence[tuple[str, complex]],
                   normalize: bool = True) -> "TargetState":
        items = list(terms.items()) if isinstance(terms, dict) else list(terms)
        if not items:
            raise ValueError("target support is empty")
        n = len(items[0][0])
        amps = np.array([complex(c) for _, c in items])
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, tuple(b for b, _ in items), tuple(amps))

    @property
    def bits(self) -> np.ndarray:
        """Support as an integer array of shape (|S|, N)."""
        return np.array([[int(ch) for ch in b] for b in self.support], dtype=int)

    def vector(self) -> np.ndarray:
        v = np.zeros(2 ** self.n_qubits, dtype=complex)
        for b, c in zip(self.support, self.amplitudes):
            v[int(b, 2)] = c
        return v

    def with_amplitudes(self, amplitudes: Sequence[complex]) -> "TargetState":
        amps = np.asarray(amplitudes, dtype=complex)
        return replace(self, amplitudes=tuple(amps / np.linalg.norm(amps)))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"bits": b, "re": c.real, "im": c.imag}
                      for b, c in zip(self.support, self.amplitudes)],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TargetState":
        try:
            n = int(doc["n_qubits"])
            terms = doc["terms"]
            support = tuple(str(t["bits"]) for t in terms)
            amps = tuple(complex(float(t.get("re", 0.0)), float(t.get("im", 0.0))) for t in terms)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed target document: {exc}") from exc
        return cls(n, support, amps)


def load_target(path: str | Path) -> TargetState:
    with open(path, encoding="utf-8") as fh:
        return TargetState.from_dict(json.load(fh))


def save_target(target: TargetState, path: str | Path) -> None:
    Path(path).write_text(json.dumps(target.to_dict(), indent=2) + "\n", encoding="utf-8")


def ghz_state(n: int, flipped: bool = True) -> TargetState:
    """GHZ target; ``flipped`` gives (|10..0> + |01..1>)/sqrt2, the form the machine accepts."""
    if n < 2:
        raise ValueError("GHZ needs at least two qubits")
    if flipped:
        a, b = "1" + "0" * (n - 1), "0" + "1" * (n - 1)
    else:
        a, b = "0" * n, "1" * n
    return TargetState.from_terms([(a, 1), (b, 1)])


def dicke_state(n: int, l: int) -> TargetState:
    if n < 2 or not 1 <= l <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= l <= n-1, got n={n}, l={l}")
    terms = []
    for ones in itertools.combinations(range(n), l):
        terms.append(("".join("1" if i in ones else "0" for i in range(n)), 1))
    terms.sort(key=lambda t: t[0], reverse=True)
    return TargetState.from_terms(terms)


def cluster_state() -> TargetState:
    """Linear four-qubit cluster state in the machine's frame."""
    return TargetState.from_terms([("0110", 1), ("0101", 1), ("1010", 1), ("1001", -1)])


def bell_state() -> TargetState:
    return TargetState.from_terms([("01", 1), ("10", 1)])


# --------------------------------------------------------------------------- energies & baths


def _check_assignment(r: Sequence[int], n: int) -> tuple[int, ...]:
    r = tuple(int(x) for x in r)
    if len(r) != n:
        raise ValueError(f"level assignment has length {len(r)}, expected {n}")
    if any(x not in (0, 2) for x in r):
        raise ValueError(f"level assignment entries must be 0 or 2, got {r}")
    return r


def qubit_levels(rk: int) -> tuple[int, int]:
    """Qutrit levels carrying qubit values 0 and 1 when level ``rk`` is filtered out."""
    return (0, 1) if rk == 2 else (1, 2)


@dataclass(frozen=True)
class EnergySpec:
    delta1: tuple[float, ...]
    delta2: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "delta1", tuple(float(x) for x in self.delta1))
        object.__setattr__(self, "delta2", tuple(float(x) for x in self.delta2))
        if len(self.delta1) != len(self.delta2) or not self.delta1:
            raise ValueError("delta1 and delta2 must be non-empty and equally long")
        for k, (a, b) in enumerate(zip(self.delta1, self.delta2)):
            if not (0 < a < b) or not math.isfinite(b):
                raise ValueError(f"qutrit {k}: need 0 < delta1 < delta2, got ({a}, {b})")

    @property
    def n(self) -> int:
        return len(self.delta1)

    def levels(self, k: int) -> tuple[float, float, float]:
        return (0.0, self.delta1[k], self.delta2[k])

    @property
    def delta_min(self) -> float:
        """Smallest single-qutrit energy gap."""
        return min(min(a, b - a) for a, b in zip(self.delta1, self.delta2))

    def scaled(self, factor: float) -> "EnergySpec":
        return EnergySpec(tuple(factor * x for x in self.delta1), tuple(factor * x for x in self.delta2))


@dataclass(frozen=True)
class BathSpec:
    """Per-qutrit bath temperature (0 = zero, ``inf`` = infinite) and reset rate."""

    temperatures: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "temperatures", tuple(float(t) for t in self.temperatures))
        object.__setattr__(self, "rates", tuple(float(g) for g in self.rates))
        if len(self.temperatures) != len(self.rates):
            raise ValueError("temperatures and rates differ in length")
        if any(t < 0 or math.isnan(t) for t in self.temperatures):
            raise ValueError("temperatures must be >= 0 (0 = zero, inf = infinite)")
        if any(not (g > 0 and math.isfinite(g)) for g in self.rates):
            raise ValueError("bath rates must be positive and finite")

    @classmethod
    def hot_cold(cls, n: int, hot: Sequence[int], t_hot: float, t_cold: float,
                 gamma_hot: float, gamma_cold: float) -> "BathSpec":
        hot = set(hot)
        return cls(tuple(t_hot if k in hot else t_cold for k in range(n)),
                   tuple(gamma_hot if k in hot else gamma_cold for k in range(n)))


def thermal_state(delta1: float, delta2: float, temperature: float) -> np.ndarray:
    """Gibbs state of one qutrit with levels (0, delta1, delta2)."""
    if temperature < 0 or math.isnan(temperature):
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return np.diag([1.0, 0.0, 0.0]).astype(complex)
    if math.isinf(temperature):
        return np.eye(3, dtype=complex) / 3
    w = np.exp(-np.array([0.0, delta1, delta2]) / temperature)
    return np.diag(w / w.sum()).astype(complex)


# --------------------------------------------------------------------------- Hamiltonians


def embed_state(target: TargetState, r: Sequence[int]) -> np.ndarray:
    """Embed the N-qubit target into the filtered qutrit subspaces."""
    r = _check_assignment(r, target.n_qubits)
    dims = [3] * target.n_qubits
    v = np.zeros(3 ** target.n_qubits, dtype=complex)
    maps = [qubit_levels(rk) for rk in r]
    for bits, c in zip(target.support, target.amplitudes):
        digits = [maps[k][int(b)] for k, b in enumerate(bits)]
        v[qcore.basis_index(digits, dims)] = c
    return v / np.linalg.norm(v)


def free_energies(energies: EnergySpec) -> np.ndarray:
    """Diagonal of H_free over the 3^N product basis."""
    out = np.zeros(1)
    for k in range(energies.n):
        out = np.add.outer(out, np.array(energies.levels(k))).ravel()
    return out


def build_h_free(energies: EnergySpec) -> np.ndarray:
    return np.diag(free_energies(energies)).astype(complex)


def build_h_int(target: TargetState, r: Sequence[int], g: float) -> np.ndarray:
    r = _check_assignment(r, target.n_qubits)
    psi_bar = embed_state(target, r)
    r_ket = qcore.ket(r, [3] * target.n_qubits)
    return g * (np.outer(psi_bar, r_ket.conj()) + np.outer(r_ket, psi_bar.conj()))


def check_energy_conservation(h_free: np.ndarray, h_int: np.ndarray) -> float:
    """Largest entry of |[H_int, H_free]|."""
    if h_free.shape != h_int.shape:
        raise ValueError("Hamiltonians differ in dimension")
    comm = h_int @ h_free - h_free @ h_int
    return float(np.max(np.abs(comm))) if comm.size else 0.0


def energy_mismatch(target: TargetState, r: Sequence[int], energies: EnergySpec) -> np.ndarray:
    """E(embedded n) - E(R) for every support state; all zero iff energy is conserved."""
    r = _check_assignment(r, target.n_qubits)
    e_r = sum(energies.levels(k)[rk] for k, rk in enumerate(r))
    out = []
    for bits in target.support:
        e_n = sum(energies.levels(k)[qubit_levels(r[k])[int(b)]] for k, b in enumerate(bits))
        out.append(e_n - e_r)
    return np.array(out)


# --------------------------------------------------------------------------- feasibility


@dataclass(frozen=True)
class FeasibilityWitness:
    hot: int
    energies: EnergySpec
    r: tuple[int, ...]


def _normalize_min_gap(energies: EnergySpec) -> EnergySpec:
    return energies.scaled(1.0 / energies.delta_min)


def _single_hot_rows(bits: np.ndarray, hot: int, n: int) -> np.ndarray:
    # variables: [d1_0..d1_{n-1}, d2_0..d2_{n-1}]
    rows = np.zeros((len(bits), 2 * n))
    for i, nb in enumerate(bits):
        rows[i, hot] += nb[hot]
        rows[i, n + hot] -= 1.0
        for k in range(n):
            if k != hot:
                rows[i, k] += 1 - nb[k]
                rows[i, n + k] += nb[k]
    return rows


def _ordering_rows(n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    # -d1_k <= -eps and d1_k - d2_k <= -eps
    a = np.zeros((2 * n, 2 * n))
    for k in range(n):
        a[k, k] = -1.0
        a[n + k, k] = 1.0
        a[n + k, n + k] = -1.0
    return a, np.full(2 * n, -eps)


def _solve_feasibility(a_eq: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray) -> np.ndarray | None:
    nvar = a_eq.shape[1]
    res = linprog(np.zeros(nvar), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.zeros(len(a_eq)),
                  bounds=[(0, None)] * nvar, method="highs")
    return res.x if res.status == 0 else None


def _single_hot_lp(bits: np.ndarray, hot: int, n: int, identical_cold: bool,
                   eps: float) -> EnergySpec | None:
    a_eq = _single_hot_rows(bits, hot, n)
    a_ub, b_ub = _ordering_rows(n, eps)
    if identical_cold:
        # tie every cold qutrit's energies to the first cold qutrit
        cold = [k for k in range(n) if k != hot]
        ties = []
        for k in cold[1:]:
            for off in (0, n):
                row = np.zeros(2 * n)
                row[off + cold[0]], row[off + k] = 1.0, -1.0
                ties.append(row)
        if ties:
            a_eq = np.vstack([a_eq, ties])
    x = _solve_feasibility(a_eq, a_ub, b_ub)
    if x is None:
        return None
    d1, d2 = x[:n], x[n:]
    # HiGHS may land on the margin boundary to within its own tolerance
    d1 = np.maximum(d1, eps)
    return EnergySpec(tuple(d1), tuple(np.maximum(d2, d1 + eps)))


def feasibility_single_hot(target: TargetState,
                           margin: float = FEASIBILITY_MARGIN) -> FeasibilityWitness | None:
    """Search for a hot index and energies making H_int energy conserving.

    Hot candidates are scanned in ascending order; for each, a witness with
    identical cold qutrits is tried before the unrestricted problem.  The
    returned energies are rescaled so the smallest gap equals 1.
    """
    n = target.n_qubits
    bits = target.bits
    for hot in range(n):
        r = tuple(2 if k == hot else 0 for k in range(n))
        for identical in (True, False):
            energies = _single_hot_lp(bits, hot, n, identical, margin)
            if energies is None:
                continue
            energies = _normalize_min_gap(energies)
            if np.max(np.abs(energy_mismatch(target, r, energies))) <= COMMUTATOR_TOL:
                return FeasibilityWitness(hot, energies, r)
    return None


def satisfies_conservation(target: TargetState, r: Sequence[int], energies: EnergySpec,
                           tol: float = COMMUTATOR_TOL) -> bool:
    return bool(np.max(np.abs(energy_mismatch(target, r, energies))) <= tol)


def reduce_to_single_hot(target: TargetState, energies: EnergySpec,
                         r: Sequence[int]) -> tuple[EnergySpec, tuple[int, ...]]:
    """Trade a q-hot energy-conserving solution for one with a single hot qutrit.

    The first hot qutrit stays hot.  Every other hot qutrit ``k`` becomes cold
    with levels ``(t_k - d2, t_k - d2 + d1)`` where ``t_k = 2 * d2``, and the
    surviving hot qutrit's top level absorbs the sum of the ``t_k``.
    """
    r = _check_assignment(r, target.n_qubits)
    if not satisfies_conservation(target, r, energies):
        raise InfeasibleTargetError("input energies do not conserve energy for this target")
    hot = [k for k, rk in enumerate(r) if rk == 2]
    if len(hot) <= 1:
        return energies, r
    keep, demoted = hot[0], hot[1:]
    d1, d2 = list(energies.delta1), list(energies.delta2)
    shift = 0.0
    for k in demoted:
        t = 2.0 * energies.delta2[k]
        d1[k] = t - energies.delta2[k]
        d2[k] = t - energies.delta2[k] + energies.delta1[k]
        shift += t
    d2[keep] = energies.delta2[keep] + shift
    new_r = tuple(2 if k == keep else 0 for k in range(target.n_qubits))
    return EnergySpec(tuple(d1), tuple(d2)), new_r


def _ratio_condition(bits: np.ndarray, rvec: np.ndarray) -> Fraction | None | bool:
    """Common negative ratio for this r, None if unconstrained, False if violated."""
    ratio = None
    for i, j in itertools.combinations(range(len(bits)), 2):
        d = bits[i] - bits[j]
        a = int(d @ rvec)
        b = int(d @ (1 - rvec))
        if a == 0 and b == 0:
            continue
        if b == 0:
            return False
        c = Fraction(a, b)
        if c >= 0 or (ratio is not None and c != ratio):
            return False
        ratio = c
    return ratio


def identical_energy_feasibility(target: TargetState,
                                 with_ratio: bool = False):
    """Binary hot/cold pattern admitting identical hot and identical cold qutrits.

    Patterns are scanned by number of hot sites, then hot positions in
    ascending order.  Returns ``None`` when no pattern works.  With
    ``with_ratio`` a ``(r, c)`` pair is returned, ``c`` being the common
    ratio (``None`` when every support pair is balanced).
    """
    n = target.n_qubits
    if n > 12:
        raise ValueError("exhaustive pattern search is limited to N <= 12")
    bits = target.bits
    for weight in range(1, n):
        for hot in itertools.combinations(range(n), weight):
            rvec = np.zeros(n, dtype=int)
            rvec[list(hot)] = 1
            cond = _ratio_condition(bits, rvec)
            if cond is False:
                continue
            r = tuple(int(x) for x in rvec)
            return (r, cond) if with_ratio else r
    return None


# --------------------------------------------------------------------------- machine


@dataclass(frozen=True)
class MachineSpec:
    target: TargetState
    r: tuple[int, ...]
    energies: EnergySpec
    baths: BathSpec
    g: float
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = self.target.n_qubits
        object.__setattr__(self, "r", _check_assignment(self.r, n))
        if n > MAX_QUTRITS:
            raise CapacityError(f"{n} qutrits exceeds the supported maximum of {MAX_QUTRITS}")
        if self.energies.n != n or len(self.baths.rates) != n:
            raise ValueError("energies and baths must cover every qutrit")
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ValueError("interaction strength g must be finite and >= 0")
        comm = check_energy_conservation(self.h_free(), self.h_int())
        if comm > COMMUTATOR_TOL:
            raise InfeasibleTargetError(
                f"interaction does not conserve energy (max |[H_int, H_free]| = {comm:.3e})")
        if not self.weak_coupling:
            log.warning("coupling outside the weak regime: g=%g, rates=%s, 1e-2*delta_min=%g",
                        self.g, self.baths.rates, WEAK_COUPLING_FACTOR * self.energies.delta_min)

    @property
    def n(self) -> int:
        return self.target.n_qubits

    @property
    def dims(self) -> list[int]:
        return [3] * self.n

    @property
    def hot_sites(self) -> tuple[int, ...]:
        return tuple(k for k, rk in enumerate(self.r) if rk == 2)

    @property
    def weak_coupling(self) -> bool:
        bound = WEAK_COUPLING_FACTOR * self.energies.delta_min
        return self.g <= bound * (1 + 1e-12) and all(x <= bound * (1 + 1e-12) for x in self.baths.rates)

    def h_free(self) -> np.ndarray:
        return build_h_free(self.energies)

    def h_int(self) -> np.ndarray:
        return build_h_int(self.target, self.r, self.g)

    def hamiltonian(self) -> np.ndarray:
        return self.h_free() + self.h_int()

    def thermal_states(self) -> list[np.ndarray]:
        return [thermal_state(self.energies.delta1[k], self.energies.delta2[k], t)
                for k, t in enumerate(self.baths.temperatures)]

    def with_couplings(self, gamma_h: float | None = None, gamma_c: float | None = None,
                       g: float | None = None) -> "MachineSpec":
        hot = set(self.hot_sites)
        rates = []
        for k, rate in enumerate(self.baths.rates):
            new = gamma_h if k in hot else gamma_c
            rates.append(rate if new is None else new)
        return replace(self, baths=BathSpec(self.baths.temperatures, tuple(rates)),
                       g=self.g if g is None else g)

    def with_temperatures(self, t_hot: float, t_cold: float) -> "MachineSpec":
        hot = set(self.hot_sites)
        temps = tuple(t_hot if k in hot else t_cold for k in range(self.n))
        return replace(self, baths=BathSpec(temps, self.baths.rates))

    def couplings(self) -> dict[str, float]:
        hot = self.hot_sites
        cold = [k for k in range(self.n) if k not in hot]
        return {
            "gamma_h": self.baths.rates[hot[0]] if hot else float("nan"),
            "gamma_c": self.baths.rates[cold[0]] if cold else float("nan"),
            "g": self.g,
        }


# --------------------------------------------------------------------------- presets

DEFAULT_G = 1.6e-3
DEFAULT_GAMMA_H = 1e-4
DEFAULT_GAMMA_C = 5e-3


def _preset(target: TargetState, energies: EnergySpec, name: str, *, t_hot: float, t_cold: float,
            gamma_h: float, gamma_c: float, g: float, meta: dict | None = None) -> MachineSpec:
    n = target.n_qubits
    r = tuple([2] + [0] * (n - 1))
    baths = BathSpec.hot_cold(n, [0], t_hot, t_cold, gamma_h, gamma_c)
    return MachineSpec(target, r, energies, baths, g, name=name, meta=meta or {})


def _check_capacity(n: int) -> None:
    if n > MAX_QUTRITS:
        raise CapacityError(f"{n} qutrits exceeds the supported maximum of {MAX_QUTRITS}")


def ghz_machine(n: int, delta_h: tuple[float, float] = (1.0, 2.5), *, t_hot: float = math.inf,
                t_cold: float = 0.0, gamma_h: float = DEFAULT_GAMMA_H,
                gamma_c: float = DEFAULT_GAMMA_C, g: float = DEFAULT_G) -> MachineSpec:
    """One hot qutrit and N-1 identical cold qutrits resonant with it."""
    if n < 2:
        raise ValueError("GHZ machine needs N >= 2")
    _check_capacity(n)
    h1, h2 = delta_h
    c1, c2 = (h2 - h1) / (n - 1), h2 / (n - 1)
    energies = EnergySpec((h1,) + (c1,) * (n - 1), (h2,) + (c2,) * (n - 1))
    return _preset(ghz_state(n), energies, f"ghz{n}", t_hot=t_hot, t_cold=t_cold,
                   gamma_h=gamma_h, gamma_c=gamma_c, g=g, meta={"N": n})


def _first_conserving(target: TargetState, candidates: list[tuple[str, EnergySpec]]):
    r = tuple([2] + [0] * (target.n_qubits - 1))
    for label, energies in candidates:
        if satisfies_conservation(target, r, energies):
            return label, energies
    witness = feasibility_single_hot(target)
    if witness is None or witness.hot != 0:
        raise InfeasibleTargetError("no single-hot witness with the first qutrit hot")
    return "linear-program", witness.energies


def dicke_machine(n: int, l: int, delta_c: tuple[float, float] = (1.0, 2.5), *,
                  t_hot: float = math.inf, t_cold: float = 0.0, gamma_h: float = DEFAULT_GAMMA_H,
                  gamma_c: float = DEFAULT_GAMMA_C, g: float = DEFAULT_G) -> MachineSpec:
    """Dicke-state machine, first qutrit hot.

    The closed-form hot energies ``((N-1) + (l-1)D, (N-1) + lD)`` with
    ``D = dc2 - dc1`` are tried first; they conserve energy only in special
    cases, so the builder falls back to ``(D, (N-1) dc1 + lD)``, which does,
    and finally to the linear-program witness.
    """
    _check_capacity(n)
    target = dicke_state(n, l)
    c1, c2 = delta_c
    gap = c2 - c1
    cold1, cold2 = (c1,) * (n - 1), (c2,) * (n - 1)
    candidates = []
    for label, h1, h2 in (("closed-form", (n - 1) + (l - 1) * gap, (n - 1) + l * gap),
                          ("closed-form-corrected", gap, (n - 1) * c1 + l * gap)):
        if 0 < h1 < h2:
            candidates.append((label, EnergySpec((h1,) + cold1, (h2,) + cold2)))
    label, energies = _first_conserving(target, candidates)
    return _preset(target, energies, f"dicke{n}_{l}", t_hot=t_hot, t_cold=t_cold,
                   gamma_h=gamma_h, gamma_c=gamma_c, g=g,
                   meta={"N": n, "l": l, "energy_source": label})


def cluster_machine(delta_c: tuple[float, float] = (1.0, 2.5), *, t_hot: float = math.inf,
                    t_cold: float = 0.0, gamma_h: float = DEFAULT_GAMMA_H,
                    gamma_c: float = DEFAULT_GAMMA_C, g: float = DEFAULT_G) -> MachineSpec:
    """Four-qubit linear cluster machine, first qutrit hot.

    Hot levels ``(3 + D, 3 + 2D)`` are tried first, then ``(D, 3 dc1 + 2D)``.
    """
    target = cluster_state()
    c1, c2 = delta_c
    gap = c2 - c1
    cold1, cold2 = (c1,) * 3, (c2,) * 3
    candidates = [
        ("closed-form", EnergySpec((3 + gap,) + cold1, (3 + 2 * gap,) + cold2)),
        ("closed-form-corrected", EnergySpec((gap,) + cold1, (3 * c1 + 2 * gap,) + cold2)),
    ]
    label, energies = _first_conserving(target, candidates)
    return _preset(target, energies, "cluster", t_hot=t_hot, t_cold=t_cold,
                   gamma_h=gamma_h, gamma_c=gamma_c, g=g, meta={"N": 4, "energy_source": label})


def bell_machine(*, t_hot: float = math.inf, t_cold: float = 0.0, gamma_h: float = 1e-4,
                 gamma_c: float = 5e-3, g: float = 1e-3) -> MachineSpec:
    """Two-qutrit machine for (|01> + |10>)/sqrt2 with R = (2, 0)."""
    target = bell_state()
    # same top level on both qutrits, cold lower gap equals the hot upper gap
    energies = EnergySpec((1.0, 1.5), (2.5, 2.5))
    return _preset(target, energies, "bell", t_hot=t_hot, t_cold=t_cold,
                   gamma_h=gamma_h, gamma_c=gamma_c, g=g, meta={"N": 2})
