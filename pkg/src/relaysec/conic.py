"""Solver-agnostic conic problem description and its interior-point backend.

A :class:`ConicProblem` is a linear objective over named real blocks (scalars
and symmetric PSD matrices), affine equality/inequality rows, and second-order
cone rows ``||vector expr|| <= scalar expr``. Complex Hermitian data enters
through the standard ``2n x 2n`` real symmetric embedding; every factor-of-2
trace convention and the complex->real lowering of linear maps live here, in
one place.

Problems are lowered to the Clarabel interior-point solver. The contract is
the :class:`SolveOutcome`: when the status is ``optimal`` the assignment's own
normalized feasibility residual (recomputed here, not trusted from the
backend) is at most ``RESIDUAL_TOL``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import linalg

RESIDUAL_TOL = 1e-7

__all__ = [
    "RESIDUAL_TOL",
    "BlockSpec",
    "ConicProblem",
    "LinExpr",
    "ProblemError",
    "SolveOutcome",
    "SolverSettings",
    "VecExpr",
    "complex_map_rows",
    "embedding_structure_rows",
    "hermitian_coeff",
    "recover_hermitian",
    "solve",
]


class ProblemError(ValueError):
    """Malformed conic problem."""


@dataclass(frozen=True)
class BlockSpec:
    """One named variable block: a real scalar or a ``dim x dim`` real
    symmetric matrix."""

    name: str
    kind: str  # "scalar" | "psd"
    dim: int = 1

    def size_flat(self) -> int:
        return 1 if self.kind == "scalar" else self.dim * self.dim

    def size_svec(self) -> int:
        return 1 if self.kind == "scalar" else self.dim * (self.dim + 1) // 2


@dataclass(frozen=True)
class LinExpr:
    """Affine real scalar functional: ``sum_b <coeffs[b], x_b> + const``.

    Matrix-block coefficients are symmetric arrays paired with the Frobenius
    inner product; scalar-block coefficients are floats.
    """

    coeffs: dict
    const: float = 0.0

    def value(self, assignment: dict) -> float:
        total = self.const
        for name, c in self.coeffs.items():
            x = assignment[name]
            if np.isscalar(c) or np.asarray(c).ndim == 0:
                total += float(c) * float(x)
            else:
                total += float(np.sum(np.asarray(c) * np.asarray(x)))
        return float(total)


@dataclass(frozen=True)
class VecExpr:
    """Affine real vector expression of length ``k``.

    ``mats[b]`` acts on the row-major flattening of block ``b`` (shape
    ``(k, dim*dim)`` for matrix blocks, ``(k, 1)`` for scalars);
    ``const`` has shape ``(k,)``.
    """

    mats: dict
    const: np.ndarray

    def value(self, assignment: dict) -> np.ndarray:
        out = np.array(self.const, dtype=float, copy=True)
        for name, m in self.mats.items():
            x = np.asarray(assignment[name], dtype=float).reshape(-1)
            out += np.asarray(m) @ x
        return out


@dataclass
class ConicProblem:
    """Minimize ``objective`` subject to ``eq_rows == 0``, ``ineq_rows >= 0``,
    ``||vec|| <= scalar`` for each SOC row, and PSD cones on ``psd_blocks``."""

    blocks: list
    objective: LinExpr
    eq_rows: list = field(default_factory=list)
    ineq_rows: list = field(default_factory=list)
    soc_rows: list = field(default_factory=list)  # (VecExpr, LinExpr)
    psd_blocks: list = field(default_factory=list)

    def block(self, name: str) -> BlockSpec:
        for b in self.blocks:
            if b.name == name:
                return b
        raise ProblemError(f"unknown block {name!r}")

    def validate(self) -> None:
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ProblemError("duplicate block names")
        by_name = {b.name: b for b in self.blocks}

        def _check_lin(e: LinExpr, where: str):
            if not np.isfinite(e.const):
                raise ProblemError(f"non-finite constant in {where}")
            for n, c in e.coeffs.items():
                if n not in by_name:
                    raise ProblemError(f"{where} references undeclared block {n!r}")
                arr = np.asarray(c, dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise ProblemError(f"non-finite coefficient in {where}")
                b = by_name[n]
                if b.kind == "psd" and arr.shape != (b.dim, b.dim):
                    raise ProblemError(f"coefficient shape mismatch in {where}")

        _check_lin(self.objective, "objective")
        for i, e in enumerate(self.eq_rows):
            _check_lin(e, f"eq[{i}]")
        for i, e in enumerate(self.ineq_rows):
            _check_lin(e, f"ineq[{i}]")
        for i, (v, s) in enumerate(self.soc_rows):
            _check_lin(s, f"soc[{i}].scalar")
            if not np.all(np.isfinite(v.const)):
                raise ProblemError(f"non-finite constant in soc[{i}]")
            for n, m in v.mats.items():
                if n not in by_name:
                    raise ProblemError(f"soc[{i}] references undeclared block {n!r}")
                arr = np.asarray(m, dtype=float)
                if not np.all(np.isfinite(arr)):
                    raise ProblemError(f"non-finite matrix in soc[{i}]")
                if arr.shape != (len(v.const), by_name[n].size_flat()):
                    raise ProblemError(f"soc[{i}] matrix shape mismatch for {n!r}")
        for n in self.psd_blocks:
            if n not in by_name or by_name[n].kind != "psd":
                raise ProblemError(f"psd constraint on non-matrix block {n!r}")

    def residual(self, assignment: dict) -> float:
        """Max normalized feasibility violation of ``assignment``."""
        worst = 0.0
        for e in self.eq_rows:
            worst = max(worst, abs(e.value(assignment)) / max(1.0, abs(e.const)))
        for e in self.ineq_rows:
            worst = max(worst, -min(0.0, e.value(assignment)) / max(1.0, abs(e.const)))
        for v, s in self.soc_rows:
            gap = np.linalg.norm(v.value(assignment)) - s.value(assignment)
            worst = max(worst, max(0.0, gap) / max(1.0, abs(s.value(assignment))))
        for name in self.psd_blocks:
            x = np.asarray(assignment[name], dtype=float)
            w = np.linalg.eigvalsh((x + x.T) / 2.0)
            worst = max(worst, max(0.0, -float(w[0])) / max(1.0, float(w[-1])))
        return worst


@dataclass(frozen=True)
class SolverSettings:
    max_iter: int = 200
    tol: float = 1e-9
    verbose: bool = False


@dataclass(frozen=True)
class SolveOutcome:
    """Status-tagged solve result.

    ``status`` is one of ``optimal``, ``infeasible``, ``iteration-limit``,
    ``numerical-failure``. ``objective`` includes the problem's constant term;
    ``assignment`` maps block names to dense values.
    """

    status: str
    objective: float
    assignment: dict
    stats: dict

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# complex -> real lowering helpers (the one place factor-of-2 rules live)
# ---------------------------------------------------------------------------


def hermitian_coeff(a: np.ndarray) -> np.ndarray:
    """Real coefficient for ``Tr(A Z)`` over the embedded block of ``Z``.

    ``<embed(A)/2, embed(Z)> == Tr(A Z)`` for Hermitian ``A``, ``Z`` (the
    embedding doubles traces).
    """
    return linalg.real_embed(a) / 2.0


def complex_map_rows(lc: np.ndarray, n: int) -> np.ndarray:
    """Lower a complex-linear map on Hermitian matrices to the embedded block.

    ``lc`` has shape ``(k, n*n)`` and acts on the column-major ``vec(Z)`` of a
    Hermitian ``n x n`` matrix. Returns ``(2k, (2n)^2)`` real: applied to the
    row-major flattening of the embedded block it yields
    ``(Re(lc vec Z); Im(lc vec Z))``. Composed with the embedding extraction,
    so it is exact on structurally-pinned blocks and averaging on others.
    """
    lc = np.asarray(lc, dtype=complex)
    k = lc.shape[0]
    if lc.shape != (k, n * n):
        raise ValueError(f"map has shape {lc.shape}, expected ({k}, {n * n})")
    d = 2 * n
    out = np.zeros((2 * k, d * d))
    re, im = lc.real, lc.imag
    flat = lambda r, c: r * d + c
    for a in range(n):
        for b in range(n):
            col = b * n + a  # vec(Z) is column-major
            # Z[a,b] = (S[a,b] + S[n+a,n+b])/2 + i (S[n+a,b] - S[a,n+b])/2
            out[:k, flat(a, b)] += re[:, col] / 2.0
            out[:k, flat(n + a, n + b)] += re[:, col] / 2.0
            out[:k, flat(n + a, b)] += -im[:, col] / 2.0
            out[:k, flat(a, n + b)] += im[:, col] / 2.0
            out[k:, flat(a, b)] += im[:, col] / 2.0
            out[k:, flat(n + a, n + b)] += im[:, col] / 2.0
            out[k:, flat(n + a, b)] += re[:, col] / 2.0
            out[k:, flat(a, n + b)] += -re[:, col] / 2.0
    return out


def _pick(d: int, i: int, j: int) -> np.ndarray:
    """Symmetric C with ``<C, S> == S[i, j]`` for symmetric ``S``."""
    c = np.zeros((d, d))
    if i == j:
        c[i, i] = 1.0
    else:
        c[i, j] = 0.5
        c[j, i] = 0.5
    return c


@lru_cache(maxsize=None)
def _structure_coeffs(n: int):
    """Coefficient matrices pinning a ``2n x 2n`` symmetric block to the
    Hermitian embedding image: equal diagonal blocks, antisymmetric
    off-diagonal block."""
    d = 2 * n
    rows = []
    for i in range(n):
        for j in range(i, n):
            rows.append(_pick(d, i, j) - _pick(d, n + i, n + j))
    for i in range(n):
        for j in range(i, n):
            rows.append(_pick(d, n + i, j) + _pick(d, n + j, i))
    stack = tuple(r for r in rows)
    for r in stack:
        r.flags.writeable = False
    return stack


def embedding_structure_rows(name: str, n: int) -> list:
    """Equality rows forcing block ``name`` (size ``2n``) to be a Hermitian
    embedding ``[[X, -Y], [Y, X]]``."""
    return [LinExpr(coeffs={name: c}, const=0.0) for c in _structure_coeffs(n)]


def recover_hermitian(outcome: SolveOutcome, block: str, n: int) -> np.ndarray:
    """Extract the ``n x n`` Hermitian matrix from an embedded ``2n x 2n`` block.

    The block-structure defect (relative, Frobenius) must be below ``1e-6``;
    it is repaired by averaging. Eigenvalues below ``-1e-7 * max(1, lam_max)``
    raise; negatives within that floor are clamped to zero so the result is
    exactly PSD.
    """
    if not outcome.ok:
        raise ValueError(f"cannot recover from a {outcome.status!r} outcome")
    s = np.asarray(outcome.assignment[block], dtype=float)
    if s.shape != (2 * n, 2 * n):
        raise ValueError(f"block {block!r} has shape {s.shape}, expected {(2*n, 2*n)}")
    s = (s + s.T) / 2.0
    s11, s12 = s[:n, :n], s[:n, n:]
    s21, s22 = s[n:, :n], s[n:, n:]
    scale = max(1.0, np.linalg.norm(s))
    defect = np.sqrt(np.linalg.norm(s11 - s22) ** 2 + np.linalg.norm(s21 + s12) ** 2)
    if defect > 1e-6 * scale:
        raise ValueError(f"embedding structure defect {defect:.3e} above tolerance")
    x = (s11 + s22) / 2.0
    y = (s21 - s12) / 2.0
    z = (x + x.T) / 2.0 + 1j * (y - y.T) / 2.0
    w, u = np.linalg.eigh(z)
    lam_max = float(w[-1]) if w.size else 0.0
    if w.size and float(w[0]) < -1e-7 * max(1.0, lam_max):
        raise ValueError(f"recovered block not PSD: min eigenvalue {w[0]:.3e}")
    return (u * np.clip(w, 0.0, None)) @ u.conj().T


# ---------------------------------------------------------------------------
# lowering to Clarabel
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _tri_indices(d: int):
    """Row/column indices of the upper triangle in Clarabel's columnwise
    order, plus the sqrt-2 off-diagonal scaling vector."""
    # lower-triangle row-major pairs, transposed: (0,0),(0,1),(1,1),(0,2),...
    cols, rows = np.tril_indices(d)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    for a in (cols, rows, scale):
        a.flags.writeable = False
    return rows, cols, scale


def _svec(c: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle (columnwise, off-diag * sqrt 2) of a symmetric
    matrix; an isometry for the Frobenius inner product and exactly Clarabel's
    PSD-triangle layout."""
    rows, cols, scale = _tri_indices(c.shape[0])
    return c[rows, cols] * scale


def _unsvec(x: np.ndarray, d: int) -> np.ndarray:
    rows, cols, scale = _tri_indices(d)
    out = np.zeros((d, d))
    vals = np.asarray(x) / scale
    out[rows, cols] = vals
    out[cols, rows] = vals
    return out


def _flat_to_svec_cols(mat: np.ndarray, d: int) -> np.ndarray:
    """Convert a map on the row-major flattening of a symmetric ``d x d``
    matrix into a map on its svec parametrization."""
    mat = np.asarray(mat, dtype=float)
    rows, cols, scale = _tri_indices(d)
    cube = mat.reshape(mat.shape[0], d, d)
    return (cube[:, rows, cols] + cube[:, cols, rows] * (rows != cols)) / scale


class _Layout:
    def __init__(self, blocks):
        self.offsets = {}
        self.blocks = {b.name: b for b in blocks}
        off = 0
        for b in blocks:
            self.offsets[b.name] = off
            off += b.size_svec()
        self.total = off

    def lin_row(self, e: LinExpr) -> np.ndarray:
        row = np.zeros(self.total)
        for name, c in e.coeffs.items():
            b = self.blocks[name]
            o = self.offsets[name]
            if b.kind == "scalar":
                row[o] = float(np.asarray(c))
            else:
                sym = np.asarray(c, dtype=float)
                row[o : o + b.size_svec()] = _svec((sym + sym.T) / 2.0)
        return row

    def vec_rows(self, v: VecExpr) -> np.ndarray:
        k = len(v.const)
        rows = np.zeros((k, self.total))
        for name, m in v.mats.items():
            b = self.blocks[name]
            o = self.offsets[name]
            if b.kind == "scalar":
                rows[:, o] = np.asarray(m, dtype=float).reshape(k)
            else:
                rows[:, o : o + b.size_svec()] = _flat_to_svec_cols(
                    np.asarray(m, dtype=float), b.dim
                )
        return rows


def solve(problem: ConicProblem, settings: SolverSettings | None = None) -> SolveOutcome:
    """Solve a :class:`ConicProblem` with Clarabel.

    Deterministic for fixed inputs and settings. A backend "solved" claim is
    audited against the problem's own normalized residual before the outcome
    is tagged ``optimal``; numerical trouble surfaces in ``status``, never as
    silent garbage.
    """
    import clarabel

    settings = settings or SolverSettings()
    problem.validate()
    layout = _Layout(problem.blocks)

    a_rows, b_vals, cones = [], [], []

    if problem.eq_rows:
        for e in problem.eq_rows:
            a_rows.append(layout.lin_row(e))
            b_vals.append(-e.const)
        cones.append(clarabel.ZeroConeT(len(problem.eq_rows)))

    if problem.ineq_rows:
        for e in problem.ineq_rows:
            a_rows.append(-layout.lin_row(e))
            b_vals.append(e.const)
        cones.append(clarabel.NonnegativeConeT(len(problem.ineq_rows)))

    for v, s_expr in problem.soc_rows:
        a_rows.append(-layout.lin_row(s_expr))
        b_vals.append(s_expr.const)
        rows = layout.vec_rows(v)
        for i in range(rows.shape[0]):
            a_rows.append(-rows[i])
            b_vals.append(float(v.const[i]))
        cones.append(clarabel.SecondOrderConeT(rows.shape[0] + 1))

    for name in problem.psd_blocks:
        b = layout.blocks[name]
        o = layout.offsets[name]
        block = np.zeros((b.size_svec(), layout.total))
        block[:, o : o + b.size_svec()] = -np.eye(b.size_svec())
        a_rows.extend(block)
        b_vals.extend([0.0] * b.size_svec())
        cones.append(clarabel.PSDTriangleConeT(b.dim))

    a = sp.csc_matrix(np.vstack(a_rows)) if a_rows else sp.csc_matrix((0, layout.total))
    b_vec = np.asarray(b_vals, dtype=float)
    q = layout.lin_row(problem.objective)
    p = sp.csc_matrix((layout.total, layout.total))

    cset = clarabel.DefaultSettings()
    cset.verbose = settings.verbose
    cset.max_iter = settings.max_iter
    cset.tol_gap_abs = settings.tol
    cset.tol_gap_rel = settings.tol
    cset.tol_feas = settings.tol
    solver = clarabel.DefaultSolver(p, q, a, b_vec, cones, cset)
    try:
        sol = solver.solve()
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as exc:  # the Rust backend can panic on degenerate data
        return SolveOutcome(
            "numerical-failure",
            float("nan"),
            {},
            {"iterations": 0, "r_prim": float("nan"), "r_dual": float("nan"),
             "solver_status": f"backend-panic: {exc}"},
        )

    status_name = str(sol.status)
    stats = {
        "iterations": int(sol.iterations),
        "r_prim": float(sol.r_prim),
        "r_dual": float(sol.r_dual),
        "solver_status": status_name,
    }

    assignment = {}
    x = np.asarray(sol.x, dtype=float)
    if x.shape == (layout.total,):
        for bspec in problem.blocks:
            o = layout.offsets[bspec.name]
            if bspec.kind == "scalar":
                assignment[bspec.name] = float(x[o])
            else:
                assignment[bspec.name] = _unsvec(
                    x[o : o + bspec.size_svec()], bspec.dim
                )

    if status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return SolveOutcome("infeasible", float("nan"), {}, stats)
    if status_name in ("MaxIterations", "MaxTime"):
        return SolveOutcome("iteration-limit", float("nan"), assignment, stats)
    if status_name in ("Solved", "AlmostSolved"):
        resid = problem.residual(assignment)
        stats["residual"] = resid
        if resid <= RESIDUAL_TOL:
            return SolveOutcome(
                "optimal", problem.objective.value(assignment), assignment, stats
            )
        return SolveOutcome("numerical-failure", float("nan"), assignment, stats)
    return SolveOutcome("numerical-failure", float("nan"), assignment, stats)
