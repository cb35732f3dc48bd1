"""Liouvillians of the machine and their steady states.

Two dissipator families are provided: local thermal resets and a Lindblad
form with Bose-Einstein weighted jumps.  Superoperators act on
column-stacked density matrices (see :mod:`entengine.qcore`).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from . import qcore
from .builder import MAX_QUTRITS, CapacityError, MachineSpec, build_h_int

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-12

VALID_TRANSITIONS = ((0, 1), (1, 2), (0, 2))


class DegenerateSteadyStateError(RuntimeError):
    """The Liouvillian has more than one stationary state (or none that is normalizable)."""


class IntegrationError(RuntimeError):
    pass


def _check_capacity(n: int) -> None:
    if n > MAX_QUTRITS:
        raise CapacityError(f"{n} qutrits exceeds the supported maximum of {MAX_QUTRITS}")


def hamiltonian_superop(h: np.ndarray) -> sp.csr_matrix:
    """``rho -> -i [H, rho]``."""
    h = sp.csr_matrix(h)
    return (-1j * (qcore.spre(h) - qcore.spost(h))).tocsr()


def reset_superop(tau: np.ndarray, site: int, dims: Sequence[int]) -> sp.csr_matrix:
    """``rho -> tau (x)_site Tr_site(rho)``, assembled from site-local matrix units."""
    d = dims[site]
    out = None
    for i in range(d):
        for j in range(d):
            if tau[i, j] == 0:
                continue
            for m in range(d):
                left = np.zeros((d, d))
                left[i, m] = 1.0
                right = np.zeros((d, d))
                right[m, j] = 1.0
                term = tau[i, j] * qcore.sprepost(qcore.embed_operator(left, site, dims, sparse=True),
                                                  qcore.embed_operator(right, site, dims, sparse=True))
                out = term if out is None else out + term
    return out.tocsr()


def dissipator(a) -> sp.csr_matrix:
    """``D[A] rho = A rho A^dag - {A^dag A, rho}/2``."""
    a = sp.csr_matrix(a)
    ad = a.conj().T.tocsr()
    ada = (ad @ a).tocsr()
    return (qcore.sprepost(a, ad) - 0.5 * qcore.spre(ada) - 0.5 * qcore.spost(ada)).tocsr()


def reset_liouvillian(spec: MachineSpec) -> sp.csr_matrix:
    _check_capacity(spec.n)
    dims = spec.dims
    dim = 3 ** spec.n
    liou = hamiltonian_superop(spec.hamiltonian())
    ident = sp.identity(dim * dim, format="csr")
    for k, (tau, gamma) in enumerate(zip(spec.thermal_states(), spec.baths.rates)):
        liou = liou + gamma * (reset_superop(tau, k, dims) - ident)
    return liou.tocsr()


@dataclass(frozen=True)
class JumpConfig:
    """Transitions coupled to each qutrit's bath.

    ``transitions[k]`` lists level pairs ``(a, b)`` with ``a < b``; ``rates``
    are per-qutrit Gamma_k and default to the machine's bath rates.
    """

    transitions: tuple[tuple[tuple[int, int], ...], ...]
    rates: tuple[float, ...] | None = None

    def __post_init__(self):
        trans = tuple(tuple(tuple(int(x) for x in pair) for pair in site) for site in self.transitions)
        object.__setattr__(self, "transitions", trans)
        for site in trans:
            for pair in site:
                if pair not in VALID_TRANSITIONS:
                    raise ValueError(f"invalid jump pair {pair}; allowed {VALID_TRANSITIONS}")
        if self.rates is not None:
            rates = tuple(float(x) for x in self.rates)
            object.__setattr__(self, "rates", rates)
            if len(rates) != len(trans):
                raise ValueError("one rate per qutrit is required")
            if any(not (x > 0 and math.isfinite(x)) for x in rates):
                raise ValueError("jump rates must be positive and finite")

    @classmethod
    def default(cls, n: int, rates: Sequence[float] | None = None) -> "JumpConfig":
        """Couple (0,1) and (0,2) on every qutrit; (1,2) is suppressed."""
        return cls(tuple(((0, 1), (0, 2)) for _ in range(n)),
                   None if rates is None else tuple(rates))

    def to_dict(self) -> dict:
        return {"transitions": [[list(p) for p in site] for site in self.transitions],
                "rates": None if self.rates is None else list(self.rates)}


def bose_einstein(energy: float, temperature: float) -> float:
    if temperature == 0:
        return 0.0
    if math.isinf(temperature):
        return math.inf
    return 1.0 / math.expm1(energy / temperature)


def jump_rates(gamma: float, energy: float, temperature: float) -> tuple[float, float]:
    """(upward, downward) rates; infinite temperature uses equal rates ``gamma``."""
    if math.isinf(temperature):
        return gamma, gamma
    nb = bose_einstein(energy, temperature)
    return gamma * nb, gamma * (1 + nb)


def lindblad_liouvillian(spec: MachineSpec, jumps: JumpConfig | None = None) -> sp.csr_matrix:
    _check_capacity(spec.n)
    jumps = jumps or JumpConfig.default(spec.n)
    if len(jumps.transitions) != spec.n:
        raise ValueError("jump configuration must list transitions for every qutrit")
    rates = jumps.rates if jumps.rates is not None else spec.baths.rates
    liou = hamiltonian_superop(spec.hamiltonian())
    for k in range(spec.n):
        liou = liou + rates[k] * _lindblad_site(spec, jumps, k)
    return liou.tocsr()


def build_liouvillian(spec: MachineSpec, model: str = "reset",
                      jumps: JumpConfig | None = None) -> sp.csr_matrix:
    if model == "reset":
        return reset_liouvillian(spec)
    if model == "lindblad":
        return lindblad_liouvillian(spec, jumps)
    raise ValueError(f"unknown model {model!r} (expected 'reset' or 'lindblad')")


class LiouvillianParts:
    """Coupling-independent pieces of a machine's Liouvillian.

    ``L = L_free + g * L_int + sum_k gamma_k * D_k``; building the pieces once
    lets sweeps over ``(g, gamma_k)`` skip the superoperator assembly.  The
    temperatures and the model are frozen at construction.
    """

    def __init__(self, spec: MachineSpec, model: str = "reset", jumps: JumpConfig | None = None):
        _check_capacity(spec.n)
        if model not in ("reset", "lindblad"):
            raise ValueError(f"unknown model {model!r} (expected 'reset' or 'lindblad')")
        if model == "lindblad" and jumps is not None and jumps.rates is not None:
            raise ValueError("explicit jump rates cannot be rescaled; leave JumpConfig.rates unset")
        self.spec = spec
        self.model = model
        self.free = hamiltonian_superop(spec.h_free())
        self.interaction = hamiltonian_superop(build_h_int(spec.target, spec.r, 1.0))
        dims = spec.dims
        ident = sp.identity(9 ** spec.n, format="csr")
        cfg = jumps or JumpConfig.default(spec.n)
        self.sites = []
        for k, tau in enumerate(spec.thermal_states()):
            if model == "reset":
                self.sites.append((reset_superop(tau, k, dims) - ident).tocsr())
            else:
                self.sites.append(_lindblad_site(spec, cfg, k))

    def assemble(self, g: float, rates: Sequence[float]) -> sp.csr_matrix:
        if len(rates) != len(self.sites):
            raise ValueError("one rate per qutrit is required")
        liou = self.free + g * self.interaction
        for rate, part in zip(rates, self.sites):
            liou = liou + rate * part
        return liou.tocsr()

    def for_couplings(self, gamma_h: float, gamma_c: float, g: float) -> sp.csr_matrix:
        hot = set(self.spec.hot_sites)
        return self.assemble(g, [gamma_h if k in hot else gamma_c for k in range(self.spec.n)])


def _lindblad_site(spec: MachineSpec, jumps: JumpConfig, k: int) -> sp.csr_matrix:
    """Unit-rate Lindblad dissipator of qutrit ``k`` alone."""
    dims = spec.dims
    levels = spec.energies.levels(k)
    temp = spec.baths.temperatures[k]
    out = sp.csr_matrix((9 ** spec.n, 9 ** spec.n), dtype=complex)
    for a, b in jumps.transitions[k]:
        lower = np.zeros((3, 3))
        lower[a, b] = 1.0
        up, down = jump_rates(1.0, levels[b] - levels[a], temp)
        a_minus = qcore.embed_operator(lower, k, dims, sparse=True)
        if down > 0:
            out = out + down * dissipator(a_minus)
        if up > 0:
            out = out + up * dissipator(a_minus.T)
    return out.tocsr()


def interaction_picture_liouvillian(spec: MachineSpec, model: str = "reset",
                                    jumps: JumpConfig | None = None) -> sp.csr_matrix:
    """Generator with the free-Hamiltonian rotation removed.

    Energy conservation makes ``-i[H_free, .]`` commute with the rest of the
    Liouvillian, and the unique steady state is annihilated by both parts, so
    this generator has the same steady state while its fastest timescale is
    set by the couplings rather than by the level splittings.
    """
    return (build_liouvillian(spec, model, jumps) - hamiltonian_superop(spec.h_free())).tocsr()


def apply_liouvillian(liou: sp.spmatrix, rho: np.ndarray) -> np.ndarray:
    dim = rho.shape[0]
    return qcore.devectorize(liou @ qcore.vectorize(rho), dim)


# --------------------------------------------------------------------------- steady state


def _min_singular_value(lu, n: int, iters: int = 40) -> float:
    """Estimate sigma_min of a factorized matrix by inverse iteration on M^H M."""
    rng = np.random.default_rng(0)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    x /= np.linalg.norm(x)
    est = math.inf
    for _ in range(iters):
        y = lu.solve(lu.solve(x), trans="H")
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            return 0.0
        new = 1.0 / math.sqrt(ny)
        x = y / ny
        if abs(new - est) <= 1e-3 * new:
            return new
        est = new
    return est


def _components(liou: sp.csr_matrix) -> tuple[int, np.ndarray]:
    pattern = abs(liou)
    pattern = (pattern + pattern.T).tocsr()
    pattern.eliminate_zeros()
    return connected_components(pattern, directed=False)


def steady_state(liou: sp.spmatrix, degeneracy_tol: float = DEGENERACY_TOL,
                 residual_tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Unique stationary density matrix of ``liou``.

    The Liouvillian is split into decoupled blocks.  The block holding the
    populations is solved with one of its population rows replaced by the
    trace functional; every other block must be non-singular, so its part of
    the steady state vanishes.  A block whose smallest singular value falls
    below ``degeneracy_tol`` times its largest entry is reported as a
    degenerate stationary space.
    """
    liou = sp.csr_matrix(liou)
    n2 = liou.shape[0]
    dim = int(round(math.sqrt(n2)))
    if dim * dim != n2 or liou.shape[1] != n2:
        raise ValueError(f"Liouvillian shape {liou.shape} is not (d^2, d^2)")
    diag_idx = np.arange(dim) * (dim + 1)

    ncomp, labels = _components(liou)
    pop_labels = np.unique(labels[diag_idx])
    if len(pop_labels) != 1:
        raise DegenerateSteadyStateError(
            f"populations split into {len(pop_labels)} decoupled blocks; stationary state is not unique")
    main = np.flatnonzero(labels == pop_labels[0])

    block = liou[main][:, main].tolil()
    pos = {int(g): i for i, g in enumerate(main)}
    local_diag = np.array([pos[int(i)] for i in diag_idx])
    scale = float(abs(block).max()) or 1.0
    row = local_diag[0]
    block[row, :] = 0
    block[row, local_diag] = scale
    block = block.tocsc()
    try:
        lu = splu(block)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"bordered system is singular: {exc}") from exc
    smin = _min_singular_value(lu, len(main))
    if smin <= degeneracy_tol * scale:
        raise DegenerateSteadyStateError(
            f"stationary space is degenerate (sigma_min {smin:.3e} vs scale {scale:.3e})")
    rhs = np.zeros(len(main), dtype=complex)
    rhs[row] = scale
    x = lu.solve(rhs)

    _check_other_blocks(liou, labels, ncomp, pop_labels[0], degeneracy_tol)

    vec = np.zeros(n2, dtype=complex)
    vec[main] = x
    rho = qcore.devectorize(vec, dim)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    resid = float(np.max(np.abs(liou @ qcore.vectorize(rho))))
    if resid > residual_tol:
        raise DegenerateSteadyStateError(f"steady-state residual {resid:.3e} exceeds {residual_tol:.0e}")
    return rho


def _check_other_blocks(liou, labels, ncomp, skip, tol) -> None:
    """Require every block outside the population block to be non-singular.

    Blocks are gathered by size into dense stacks so the check runs as a
    handful of batched SVDs; blocks larger than 64 fall back to sparse LU.
    """
    sizes = np.bincount(labels, minlength=ncomp)
    order = np.argsort(labels, kind="stable")
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    local = np.empty(len(labels), dtype=int)
    local[order] = np.arange(len(labels)) - starts[labels[order]]
    coo = liou.tocoo()
    blk = labels[coo.row]
    for size in np.unique(sizes):
        members = np.flatnonzero((sizes == size) & (np.arange(ncomp) != skip))
        if not len(members):
            continue
        if size > 64:
            for c in members:
                idx = np.flatnonzero(labels == c)
                sub = liou[idx][:, idx]
                scale = float(abs(sub).max())
                try:
                    smin = _min_singular_value(splu(sub.tocsc()), len(idx))
                except RuntimeError:
                    smin = 0.0
                if smin <= tol * max(scale, 1e-300):
                    raise DegenerateSteadyStateError("a coherence block of the Liouvillian is singular")
            continue
        slot = np.full(ncomp, -1)
        slot[members] = np.arange(len(members))
        keep = slot[blk] >= 0
        stack = np.zeros((len(members), size, size), dtype=complex)
        np.add.at(stack, (slot[blk[keep]], local[coo.row[keep]], local[coo.col[keep]]), coo.data[keep])
        scale = np.abs(stack).reshape(len(members), -1).max(axis=1)
        smin = np.linalg.svd(stack, compute_uv=False)[:, -1]
        if np.any(smin <= tol * np.maximum(scale, 1e-300)):
            raise DegenerateSteadyStateError("a coherence block of the Liouvillian is singular")


def residual(liou: sp.spmatrix, rho: np.ndarray) -> float:
    return float(np.max(np.abs(liou @ qcore.vectorize(rho))))


def solve_machine(spec: MachineSpec, model: str = "reset", jumps: JumpConfig | None = None) -> np.ndarray:
    return steady_state(build_liouvillian(spec, model, jumps))


# --------------------------------------------------------------------------- time evolution


def _rk4_stable_dt(liou: sp.spmatrix) -> float:
    rowsum = np.asarray(abs(liou).sum(axis=1)).ravel()
    top = float(rowsum.max()) if rowsum.size else 0.0
    return math.inf if top == 0 else 0.1 / top


def evolve(liou: sp.spmatrix, rho0: np.ndarray, t_final: float, dt: float,
           trace_tol: float = 1e-8) -> np.ndarray:
    """Classical fourth-order Runge-Kutta integration of ``d rho/dt = L[rho]``."""
    if t_final < 0 or dt <= 0:
        raise ValueError("need t_final >= 0 and dt > 0")
    limit = _rk4_stable_dt(liou)
    if dt > limit:
        raise IntegrationError(f"dt={dt:g} exceeds the RK4 stability bound {limit:g}")
    dim = rho0.shape[0]
    liou = sp.csr_matrix(liou)
    y = qcore.vectorize(np.asarray(rho0, dtype=complex)).copy()
    tr0 = np.trace(rho0)
    diag_idx = np.arange(dim) * (dim + 1)
    steps = int(math.floor(t_final / dt + 1e-12))
    last = t_final - steps * dt
    for h in [dt] * steps + ([last] if last > 1e-15 * max(dt, 1.0) else []):
        k1 = liou @ y
        k2 = liou @ (y + 0.5 * h * k1)
        k3 = liou @ (y + 0.5 * h * k2)
        k4 = liou @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    drift = abs(y[diag_idx].sum() - tr0)
    if drift > trace_tol:
        raise IntegrationError(f"trace drifted by {drift:.3e}")
    return qcore.devectorize(y, dim)


# --------------------------------------------------------------------------- export


def state_to_dict(rho: np.ndarray, **meta) -> dict:
    rho = np.asarray(rho)
    return {
        "dim": int(rho.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
        **meta,
    }


def state_from_dict(doc: dict) -> np.ndarray:
    dim = int(doc["dim"])
    arr = np.array([[complex(re, im) for re, im in row] for row in doc["entries"]])
    if arr.shape != (dim, dim):
        raise ValueError("entry table does not match dim")
    return arr


def save_state(rho: np.ndarray, path: str | Path, **meta) -> None:
    Path(path).write_text(json.dumps(state_to_dict(rho, **meta)) + "\n", encoding="utf-8")
