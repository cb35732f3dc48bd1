"""Small linear-algebra layer for mixed qubit/qutrit registers.

Conventions used throughout the package:

* site 0 is the leftmost (most significant) tensor factor, so a composite
  basis index is the big-endian mixed-radix number over ``dims``;
* operators are vectorized by stacking columns, hence
  ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.

States are dense ``numpy`` arrays; superoperators are ``scipy.sparse``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    trace: float = 1e-10
    psd: float = -1e-8


DEFAULT_TOL = Tolerances()


class InvalidStateError(ValueError):
    pass


def kron(*ops):
    """Kronecker product of any number of dense or sparse operators."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    if any(sp.issparse(o) for o in ops):
        return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)
    return reduce(np.kron, [np.asarray(o) for o in ops])


def basis_index(digits: Sequence[int], dims: Sequence[int]) -> int:
    idx = 0
    for d, n in zip(digits, dims):
        if not 0 <= d < n:
            raise ValueError(f"digit {d} out of range for local dimension {n}")
        idx = idx * n + d
    return idx


def basis_digits(index: int, dims: Sequence[int]) -> tuple[int, ...]:
    out = []
    for n in reversed(dims):
        index, r = divmod(index, n)
        out.append(r)
    return tuple(reversed(out))


def embed_operator(op, site: int, dims: Sequence[int], sparse: bool = False):
    """Place a single-site operator at ``site`` with identities elsewhere."""
    left = int(np.prod(dims[:site], dtype=int))
    right = int(np.prod(dims[site + 1:], dtype=int))
    if sparse:
        return sp.kron(sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op)),
                       sp.identity(right, format="csr"), format="csr")
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def partial_trace(rho: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    """Trace out one site; returns the operator on the remaining sites."""
    dims = list(dims)
    if not 0 <= site < len(dims):
        raise IndexError(f"site {site} out of range for {len(dims)} sites")
    n = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    t = np.trace(t, axis1=site, axis2=n + site)
    rest = int(np.prod(dims, dtype=int)) // dims[site]
    return t.reshape(rest, rest)


def insert_site(op_rest: np.ndarray, local: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    """Inverse-shaped partner of :func:`partial_trace`: ``local`` tensored in at ``site``."""
    dims = list(dims)
    rest_dims = dims[:site] + dims[site + 1:]
    m = len(rest_dims)
    t = np.multiply.outer(np.asarray(op_rest).reshape(rest_dims + rest_dims), local)
    # axes now: rest_row..., rest_col..., local_row, local_col
    rows = list(range(site)) + [2 * m] + list(range(site, m))
    cols = [m + i for i in range(site)] + [2 * m + 1] + [m + i for i in range(site, m)]
    t = t.transpose(rows + cols)
    d = int(np.prod(dims, dtype=int))
    return t.reshape(d, d)


def vectorize(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return mat.reshape(-1, order="F")


def devectorize(vec: np.ndarray, dim: int) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.size != dim * dim:
        raise ValueError(f"vector of length {vec.size} cannot form a {dim}x{dim} matrix")
    return vec.reshape((dim, dim), order="F")


def spre(a):
    """Superoperator of left multiplication ``X -> A X``."""
    a = sp.csr_matrix(a)
    return sp.kron(sp.identity(a.shape[0], format="csr"), a, format="csr")


def spost(b):
    """Superoperator of right multiplication ``X -> X B``."""
    b = sp.csr_matrix(b)
    return sp.kron(b.T, sp.identity(b.shape[0], format="csr"), format="csr")


def sprepost(a, b):
    """Superoperator of ``X -> A X B``."""
    return sp.kron(sp.csr_matrix(b).T, sp.csr_matrix(a), format="csr")


def hermiticity_error(mat: np.ndarray) -> float:
    mat = np.asarray(mat)
    return float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0


def min_eigenvalue(rho: np.ndarray, tol: float = DEFAULT_TOL.hermitian) -> float:
    rho = np.asarray(rho)
    if hermiticity_error(rho) > tol:
        raise ValueError("min_eigenvalue requires a Hermitian matrix")
    return float(np.linalg.eigvalsh(rho)[0])


def density_problems(rho: np.ndarray, dims: Sequence[int] | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> list[str]:
    """List every violated density-operator condition (empty when valid)."""
    rho = np.asarray(rho)
    problems = []
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
        return [f"not a non-empty square matrix: shape {rho.shape}"]
    if not np.all(np.isfinite(rho)):
        return ["non-finite entries"]
    if dims is not None:
        if any(d not in (2, 3) for d in dims):
            problems.append(f"site dimensions must be 2 or 3, got {list(dims)}")
        if int(np.prod(dims, dtype=int)) != rho.shape[0]:
            problems.append(f"site dims {list(dims)} do not multiply to {rho.shape[0]}")
    herm = hermiticity_error(rho)
    if herm > tol.hermitian:
        problems.append(f"not Hermitian (max deviation {herm:.3e})")
        return problems
    tr = np.trace(rho)
    if abs(tr - 1) > tol.trace:
        problems.append(f"trace {tr.real:.12g} differs from 1")
    lam = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    if lam < tol.psd:
        problems.append(f"negative eigenvalue {lam:.3e}")
    return problems


def is_density_operator(rho, dims=None, tol: Tolerances = DEFAULT_TOL) -> bool:
    return not density_problems(rho, dims, tol)


def check_density_operator(rho, dims=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    problems = density_problems(rho, dims, tol)
    if problems:
        raise InvalidStateError("; ".join(problems))
    return np.asarray(rho)


def ket(digits: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    v = np.zeros(int(np.prod(dims, dtype=int)), dtype=complex)
    v[basis_index(digits, dims)] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    return np.outer(vec, vec.conj())


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full- or low-rank density matrix (Ginibre construction)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2
