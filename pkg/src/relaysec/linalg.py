"""Complex dense linear-algebra kernels used across the beamforming pipeline.

Column-major vectorisation is the single convention of this package: ``vec``
stacks columns, and every Kronecker identity here is stated for that choice.
The load-bearing identities are

    vec(A B C) = (C^T kron A) vec(B)
    Tr(X A X^H B) = vec(X)^H (A^T kron B) vec(X)

and the 0/1 permutation built by :func:`conj_kron_permutation`, which relates
``vec(conj(F) kron F)`` to ``vec(f f^H)`` with ``f = vec(F)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HERMITIAN_TOL = 1e-9

__all__ = [
    "HERMITIAN_TOL",
    "PermutationMatrix",
    "ball_lin_extreme",
    "conj_kron_permutation",
    "hermitian_eig",
    "hermitian_part",
    "kron",
    "partial_contract_inner",
    "partial_contract_outer",
    "psd_factor",
    "real_embed",
    "real_embed_vec",
    "trace_kron",
    "unvec",
    "vec",
]


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major stack of ``a`` into a 1-D vector (Frobenius norm preserving)."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    return np.asarray(v).reshape(rows, cols, order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, dims ``(ra*rb) x (ca*cb)``."""
    return np.kron(np.asarray(a), np.asarray(b))


def hermitian_part(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(a + a^H)/2`` after checking the asymmetry is below ``tol``.

    Asymmetry is measured relative to ``max(1, ||a||_F)``; anything above the
    tolerance is an error, anything below is silently repaired.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    defect = np.linalg.norm(a - a.conj().T)
    if defect > tol * max(1.0, np.linalg.norm(a)):
        raise ValueError(f"matrix is not Hermitian: defect {defect:.3e}")
    return (a + a.conj().T) / 2.0


@dataclass(frozen=True)
class PermutationMatrix:
    """A 0/1 permutation stored as an index map, never densified in hot paths.

    Semantics: ``(P @ x)[i] == x[mapping[i]]``; as a dense matrix
    ``P[i, mapping[i]] = 1``. ``mapping`` is a bijection on ``range(dimension)``.
    """

    dimension: int
    mapping: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mapping)
        if m.shape != (self.dimension,):
            raise ValueError("mapping length must equal dimension")
        if not np.array_equal(np.sort(m), np.arange(self.dimension)):
            raise ValueError("mapping is not a bijection")

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Gather ``P @ x`` for a vector (or stack of vectors along axis 0)."""
        return np.asarray(x)[self.mapping]

    def to_dense(self) -> np.ndarray:
        p = np.zeros((self.dimension, self.dimension))
        p[np.arange(self.dimension), self.mapping] = 1.0
        return p


@lru_cache(maxsize=None)
def conj_kron_permutation(p: int, q: int) -> PermutationMatrix:
    """Permutation T with ``vec(conj(F) kron F) = T @ vec(f f^H)``, ``f = vec(F)``.

    Holds exactly (pure index bookkeeping) for every ``F`` of shape ``(p, q)``.
    The entry ``conj(F[a,b]) * F[c,d]`` sits at row ``a*p+c``, column ``b*q+d``
    of ``conj(F) kron F`` and at row ``d*p+c``, column ``b*p+a`` of ``f f^H``;
    equating the two column-major positions yields the map.
    """
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    a, b, c, d = np.indices((p, q, p, q)).reshape(4, -1)
    idx_left = (b * q + d) * p * p + a * p + c
    idx_right = (b * p + a) * p * q + d * p + c
    mapping = np.empty((p * q) ** 2, dtype=np.int64)
    mapping[idx_left] = idx_right
    mapping.flags.writeable = False
    return PermutationMatrix(dimension=(p * q) ** 2, mapping=mapping)


def trace_kron(z: np.ndarray, y: np.ndarray, x: np.ndarray) -> complex:
    """``Tr(z @ (y kron x))`` computed through block partial traces.

    ``z`` must be square with side ``dim(y) * dim(x)``. Going through
    :func:`partial_contract_outer` keeps the dependence on ``x`` exposed as a
    linear map, which the subproblem builders rely on.
    """
    k = partial_contract_outer(z, y)
    return complex(np.trace(k @ np.asarray(x)))


def _z_blocks(z: np.ndarray, m: int, n: int) -> np.ndarray:
    z = np.asarray(z)
    if z.shape != (m * n, m * n):
        raise ValueError(f"z has shape {z.shape}, expected {(m * n, m * n)}")
    return z.reshape(m, n, m, n)


def partial_contract_outer(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """K with ``Tr(z (y kron x)) == Tr(K x)`` for every ``x``.

    ``K = sum_{jk} y[k, j] * z_block[j, k]`` where ``z_block[j, k]`` is the
    inner-dimension block of ``z``.
    """
    y = np.asarray(y)
    m = y.shape[0]
    if y.shape != (m, m):
        raise ValueError("y must be square")
    n = np.asarray(z).shape[0] // m
    z4 = _z_blocks(z, m, n)
    return np.einsum("jakb,kj->ab", z4, y)


def partial_contract_inner(z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """G with ``Tr(z (y kron x)) == Tr(y G)`` for every ``y``.

    ``G[j, k] = Tr(z_block[j, k] @ x)``.
    """
    x = np.asarray(x)
    n = x.shape[0]
    if x.shape != (n, n):
        raise ValueError("x must be square")
    m = np.asarray(z).shape[0] // n
    z4 = _z_blocks(z, m, n)
    return np.einsum("jakb,ba->jk", z4, x)


def ball_lin_extreme(y: np.ndarray, delta: float, sense: str = "max"):
    """Extreme of ``Re(x^H y)`` over the ball ``||x|| <= delta``.

    Closed form: the max is ``+delta*||y||`` at ``x = (delta/||y||) y`` and the
    min is ``-delta*||y||`` at the antipode; ``y = 0`` returns ``(0, 0)``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    y = np.asarray(y, dtype=complex)
    norm = np.linalg.norm(y)
    if norm == 0.0:
        return 0.0, np.zeros_like(y)
    sign = 1.0 if sense == "max" else -1.0
    return sign * delta * norm, sign * (delta / norm) * y


def hermitian_eig(a: np.ndarray, tol: float = HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.

    Returns ``(w, u)`` with ``a = u @ diag(w) @ u^H``. The input is symmetrised
    first; asymmetry beyond ``tol`` raises.
    """
    h = hermitian_part(a, tol)
    w, u = np.linalg.eigh(h)
    order = np.argsort(w)[::-1]
    return w[order], u[:, order]


def psd_factor(a: np.ndarray) -> np.ndarray:
    """S with ``S @ S^H == a`` for Hermitian PSD ``a`` (eigen-based).

    Eigenvalues in ``[-1e-8 * max(1, lam_max), 0)`` are clamped to zero; more
    negative ones signal a numerically invalid covariance and raise. The eigen
    route is preferred over a triangular factorization because relaxed SDP
    solutions are routinely rank-deficient.
    """
    w, u = hermitian_eig(a)
    lam_max = float(w[0]) if w.size else 0.0
    floor = -1e-8 * max(1.0, lam_max)
    if w.size and float(w[-1]) < floor:
        raise ValueError(
            f"matrix is not PSD within tolerance: min eigenvalue {w[-1]:.3e}"
        )
    return u * np.sqrt(np.clip(w, 0.0, None))


def real_embed(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real symmetric embedding ``[[Re a, -Im a], [Im a, Re a]]`` of Hermitian ``a``.

    PSD-ness is preserved in both directions and
    ``Tr(embed(a) @ embed(b)) == 2 Tr(a @ b)`` for Hermitian ``a``, ``b``.
    """
    h = hermitian_part(a, tol)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def real_embed_vec(u: np.ndarray) -> np.ndarray:
    """Stacked ``(Re u; Im u)`` embedding of a complex vector; norm preserving."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    return np.concatenate([u.real, u.imag])
