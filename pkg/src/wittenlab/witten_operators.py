"""The deformed complex: conjugated coboundaries and their Laplacians.

The deformation replaces d by exp(-t f) d exp(t f), realized on cochains by
scaling each incidence entry with exp(t (f(m_facet) - f(m_cell))) at cell
midpoints.  Conjugation keeps d_t d_t = 0 exact, so the kernel dimension of
the Laplacian is a topological invariant at every t in exact arithmetic.

Two independent assemblies of the degree-q Laplacian are provided:

  * the factored form  S_q = T_{q-1} T_{q-1}^T + T_q^T T_q  with
    T_q = M_{q+1}^{1/2} d_t M_q^{-1/2}  (primary; PSD by construction), and
  * a second-order form  S_q(0) + t^2 |grad f|^2 + t (Hessian coupling),
    with the zeroth-order terms sampled at grid vertices (cross-check only).

They are distinct discretizations of one continuum operator and agree to
O(h^2) on smooth data, which the refinement tests quantify.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .morse_functions import MorseFunctionSpec
from .torus_complex import (
    MassMatrix,
    TorusGrid,
    coboundary,
    mass_matrix,
    midpoints,
)

# exp overflows float64 just above 709; refuse with margin
MAX_EXPONENT = 700.0


def deform_coboundary(
    grid: TorusGrid, q: int, d_q: sp.spmatrix, f: MorseFunctionSpec, t: float
) -> sp.csr_matrix:
    """Scale the coboundary entries by exp(t (f(m_col) - f(m_row))).

    The exponent is formed as a single difference before exponentiation, so
    the entries stay exact ratios of the conjugating weights and the
    composite d_t[q+1] d_t[q] cancels structurally.

    Args:
        grid: the torus grid.
        q: source degree of d_q.
        d_q: undeformed coboundary, shape (num q+1 cells, num q cells).
        f: the deforming function.
        t: deformation strength, t >= 0.

    Raises:
        ValueError: t < 0, or an exponent exceeds the float64 overflow
            bound ("resolution too coarse for this t").
    """
    if t < 0:
        raise ValueError(f"deformation parameter must be >= 0, got {t}")
    coo = d_q.tocoo()
    if coo.nnz == 0:
        return sp.csr_matrix(d_q.shape)
    f_col = f.f(midpoints(grid, q))
    f_row = f.f(midpoints(grid, q + 1))
    expo = t * (f_col[coo.col] - f_row[coo.row])
    worst = float(np.abs(expo).max())
    if worst > MAX_EXPONENT:
        raise ValueError(
            f"resolution too coarse for this t: max exponent {worst:.1f} "
            f"exceeds {MAX_EXPONENT:.0f}; refine the grid or lower t"
        )
    out = sp.coo_matrix(
        (coo.data * np.exp(expo), (coo.row, coo.col)), shape=d_q.shape
    )
    return out.tocsr()


def adjoint_operator(op: sp.spmatrix, M_q: MassMatrix, M_q1: MassMatrix) -> sp.csr_matrix:
    """Mass-weighted adjoint M_q^{-1} op^T M_{q+1} of op: C^q -> C^{q+1}.

    Satisfies (op u, v) in M_{q+1} = (u, adjoint v) in M_q exactly up to
    the order of floating-point operations.
    """
    rows, cols = op.shape
    if len(M_q1.diagonal) != rows or len(M_q.diagonal) != cols:
        raise ValueError("mass matrix sizes do not match the operator shape")
    scaled = sp.diags(1.0 / M_q.diagonal) @ op.T @ sp.diags(M_q1.diagonal)
    return scaled.tocsr()


@dataclass
class DeformedComplex:
    """Deformed coboundaries and mass matrices for all degrees at one t.

    d_t[q] maps q-cochains to (q+1)-cochains for q = 0..n-1; M[q] is the
    diagonal metric for q = 0..n.  Symmetrized operators are cached.
    """

    grid: TorusGrid
    f: MorseFunctionSpec
    t: float
    d_t: tuple[sp.csr_matrix, ...]
    M: tuple[MassMatrix, ...]
    _tilde_cache: dict = field(default_factory=dict, repr=False)
    _lap_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.grid.n

    def tilde(self, q: int) -> sp.csr_matrix:
        """Symmetrized coboundary T_q = M_{q+1}^{1/2} d_t[q] M_q^{-1/2}."""
        if not 0 <= q < self.n:
            raise ValueError(f"tilde degree must be in [0, {self.n - 1}], got {q}")
        if q not in self._tilde_cache:
            left = sp.diags(np.sqrt(self.M[q + 1].diagonal))
            right = sp.diags(1.0 / np.sqrt(self.M[q].diagonal))
            self._tilde_cache[q] = (left @ self.d_t[q] @ right).tocsr()
        return self._tilde_cache[q]

    def laplacian(self, q: int) -> sp.csr_matrix:
        return witten_laplacian(self, q)


def build_deformed_complex(grid: TorusGrid, f: MorseFunctionSpec, t: float) -> DeformedComplex:
    """Assemble d_t for every degree plus all mass matrices."""
    if grid.n != f.n:
        raise ValueError("grid and Morse function have different dimensions")
    d_t = tuple(
        deform_coboundary(grid, q, coboundary(grid, q), f, t) for q in range(grid.n)
    )
    M = tuple(mass_matrix(grid, q) for q in range(grid.n + 1))
    return DeformedComplex(grid=grid, f=f, t=float(t), d_t=d_t, M=M)


def witten_laplacian(cx: DeformedComplex, q: int) -> sp.csr_matrix:
    """Degree-q Laplacian in mass-symmetrized form, symmetric PSD.

    S_q = T_{q-1} T_{q-1}^T + T_q^T T_q with the convention that the missing
    end terms (q = 0, q = n) drop out.  The result is explicitly averaged
    with its transpose to remove roundoff asymmetry.
    """
    cx.grid._check_degree(q)
    if q in cx._lap_cache:
        return cx._lap_cache[q]
    dim = cx.grid.num_cells(q)
    S = sp.csr_matrix((dim, dim))
    if q >= 1:
        A = cx.tilde(q - 1)
        S = S + A @ A.T
    if q <= cx.n - 1:
        B = cx.tilde(q)
        S = S + B.T @ B
    S = ((S + S.T) * 0.5).tocsr()
    cx._lap_cache[q] = S
    return S


def hessian_coupling_coefficient(J, J_prime, l: int, k: int) -> int:
    """Coefficient of dx_{J'} in the commutator [dx_l wedge, dx_k hook] dx_J.

    Closed form (axes 0-based, J and J' sorted subsets of equal size q):
    the diagonal case l = k gives +1 when k is in J and -1 when it is not
    (J' must equal J); the off-diagonal case is nonzero only for k in J,
    l not in J, J' = (J minus k) union l, and equals 2 (-1)^(p+r) where p
    is k's position in J and r is l's position in J'.  The factor 2 comes
    from both commutator terms contributing with one sign, as the
    brute-force exterior-algebra oracle in the tests confirms.
    """
    J = tuple(sorted(J))
    Jp = tuple(sorted(J_prime))
    if len(J) != len(Jp):
        raise ValueError("J and J' must have the same size")
    if l == k:
        if J != Jp:
            return 0
        return 1 if k in J else -1
    if k not in J or l in J:
        return 0
    target = tuple(sorted((set(J) - {k}) | {l}))
    if target != Jp:
        return 0
    return 2 * (-1) ** (J.index(k) + target.index(l))


def bochner_laplacian(cx: DeformedComplex, q: int) -> sp.csr_matrix:
    """Second-order assembly: undeformed Laplacian + zeroth-order t-terms.

    S_q(0) + t^2 diag(|grad f|^2 at the cell's base vertex) + t B, where B
    is block diagonal over vertices with entries B[J', J](v) =
    sum_{l,k} Hess f(v)[l, k] * hessian_coupling_coefficient(J, J', l, k).
    Requires uniform spacing: then every mass matrix is a scalar per degree
    and the symmetrization leaves the vertex blocks untouched.

    This is an independent discretization of the same continuum operator as
    witten_laplacian, agreeing to O(h^2); it serves as a cross-check, not
    as the primary operator.
    """
    grid = cx.grid
    grid._check_degree(q)
    if len(set(grid.spacings)) != 1:
        raise ValueError("second-order assembly requires uniform grid spacing")
    base_cx = build_deformed_complex(grid, cx.f, 0.0)
    S = witten_laplacian(base_cx, q).copy()

    verts = midpoints(grid, 0)
    B = grid.base_count
    t = cx.t
    grads = cx.f.grad(verts)
    potential = t * t * (grads * grads).sum(axis=1)
    subsets = list(grid.axis_subsets(q))
    S = S + sp.diags(np.tile(potential, len(subsets)))

    hess = cx.f.hess(verts)
    rows, cols, data = [], [], []
    vert_ids = np.arange(B)
    for bp, Jp in enumerate(subsets):
        for b, J in enumerate(subsets):
            block = np.zeros(B)
            hit = False
            for l in range(grid.n):
                for k in range(grid.n):
                    c = hessian_coupling_coefficient(J, Jp, l, k)
                    if c:
                        block = block + c * hess[:, l, k]
                        hit = True
            if hit:
                rows.append(bp * B + vert_ids)
                cols.append(b * B + vert_ids)
                data.append(t * block)
    if data:
        dim = grid.num_cells(q)
        coupling = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        S = S + coupling.tocsr()
    return ((S + S.T) * 0.5).tocsr()
