"""Periodic cubical complex on the flat torus T^n = prod_i R/(L_i Z).

Cells, incidence, coboundary, diagonal metric volumes, and cochain sampling
for n <= 3.  A q-cell is a pair (J, k): the sorted subset J of axes the cell
extends along (|J| = q) and the base vertex multi-index k.  Cochain values
store integrated quantities,

    value(cell) = component_J(midpoint) * prod_{j in J} h_j,

which makes the coboundary a pure signed incidence matrix with +/-1 entries
and pushes all metric data into the diagonal mass matrices
M_q = diag( prod_{j not in J} h_j / prod_{j in J} h_j ).

Cell enumeration is lexicographic in (J, base) and stable across runs:
index = position(J) * prod_i N_i + C-order rank of the base multi-index.
Axes are 0-based internally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

MAX_DIMENSION = 3


class CellId(NamedTuple):
    """A q-cell: degree, sorted axis subset, and base vertex multi-index."""

    q: int
    axes: tuple[int, ...]
    base: tuple[int, ...]


@dataclass(frozen=True)
class TorusGrid:
    """Immutable description of the periodic grid; safe to share across threads."""

    n: int
    lengths: tuple[float, ...]
    resolutions: tuple[int, ...]
    spacings: tuple[float, ...]

    @property
    def base_count(self) -> int:
        """Number of base vertices, prod_i N_i."""
        return int(np.prod(self.resolutions))

    def axis_subsets(self, q: int) -> tuple[tuple[int, ...], ...]:
        """All axis subsets J with |J| = q, in lexicographic order."""
        self._check_degree(q)
        return tuple(itertools.combinations(range(self.n), q))

    def num_cells(self, q: int) -> int:
        """C(n, q) * prod_i N_i for 0 <= q <= n, zero above n."""
        if q < 0:
            raise ValueError(f"degree must be nonnegative, got {q}")
        if q > self.n:
            return 0
        return math.comb(self.n, q) * self.base_count

    def uniform_spacing(self) -> float:
        """The common spacing h, or raise if the spacings differ."""
        h = self.spacings[0]
        if any(abs(hi - h) > 1e-12 * h for hi in self.spacings):
            raise ValueError(f"grid spacings are not uniform: {self.spacings}")
        return h

    def _check_degree(self, q: int) -> None:
        if not 0 <= q <= self.n:
            raise ValueError(f"degree q={q} out of range for n={self.n}")

    def _strides(self) -> tuple[int, ...]:
        # C-order ravel strides: stride_i = prod_{j > i} N_j.
        strides = [1] * self.n
        for i in range(self.n - 2, -1, -1):
            strides[i] = strides[i + 1] * self.resolutions[i + 1]
        return tuple(strides)


@dataclass(frozen=True)
class MassMatrix:
    """Diagonal L^2 metric on q-cochains: (u, v) = u^T diag(diagonal) v."""

    q: int
    diagonal: np.ndarray

    def __post_init__(self):
        if not (self.diagonal > 0).all():
            raise ValueError("mass matrix diagonal must be strictly positive")


@dataclass
class Cochain:
    """Discrete q-form: one real value per q-cell of the grid."""

    q: int
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.num_cells(self.q)
        if self.values.shape != (expected,):
            raise ValueError(
                f"cochain of degree {self.q} needs {expected} values, "
                f"got shape {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise ValueError("cochain values must all be finite")


def build_grid(
    n: int, lengths: Sequence[float], resolutions: Sequence[int]
) -> TorusGrid:
    """Construct a periodic cubical grid on T^n.

    Args:
        n: torus dimension, 1 <= n <= 3.
        lengths: period L_i per axis, positive.
        resolutions: cell count N_i per axis, each >= 4.

    Returns:
        A TorusGrid with spacings h_i = L_i / N_i.
    """
    if not 1 <= n <= MAX_DIMENSION:
        raise ValueError(f"dimension must be in 1..{MAX_DIMENSION}, got {n}")
    if len(lengths) != n or len(resolutions) != n:
        raise ValueError(
            f"expected {n} lengths and resolutions, got {len(lengths)} and "
            f"{len(resolutions)}"
        )
    lengths = tuple(float(L) for L in lengths)
    if any(L <= 0 for L in lengths):
        raise ValueError(f"period lengths must be positive, got {lengths}")
    resolutions = tuple(int(N) for N in resolutions)
    if any(N < 4 for N in resolutions):
        raise ValueError(f"resolutions must be >= 4, got {resolutions}")
    spacings = tuple(L / N for L, N in zip(lengths, resolutions))
    return TorusGrid(n=n, lengths=lengths, resolutions=resolutions, spacings=spacings)


def enumerate_cells(grid: TorusGrid, q: int) -> list[CellId]:
    """All q-cells in enumeration order (lexicographic in (J, base))."""
    grid._check_degree(q)
    cells = []
    for axes in grid.axis_subsets(q):
        for base in itertools.product(*(range(N) for N in grid.resolutions)):
            cells.append(CellId(q=q, axes=axes, base=base))
    return cells


def cell_index(grid: TorusGrid, cell: CellId) -> int:
    """Enumeration index of a cell; inverse of cell_from_index."""
    subsets = grid.axis_subsets(cell.q)
    block = subsets.index(cell.axes)
    base_rank = int(np.ravel_multi_index(cell.base, grid.resolutions))
    return block * grid.base_count + base_rank


def cell_from_index(grid: TorusGrid, q: int, index: int) -> CellId:
    """Cell with the given enumeration index."""
    count = grid.num_cells(q)
    if not 0 <= index < count:
        raise ValueError(f"index {index} out of range for {count} {q}-cells")
    B = grid.base_count
    axes = grid.axis_subsets(q)[index // B]
    base = tuple(int(b) for b in np.unravel_index(index % B, grid.resolutions))
    return CellId(q=q, axes=axes, base=base)


def midpoint(grid: TorusGrid, cell: CellId) -> np.ndarray:
    """Cell midpoint, (k_i + 1/2 [i in J]) h_i mod L_i per axis."""
    h = np.asarray(grid.spacings)
    L = np.asarray(grid.lengths)
    k = np.asarray(cell.base, dtype=float)
    offs = np.array([0.5 if i in cell.axes else 0.0 for i in range(grid.n)])
    return ((k + offs) * h) % L


def midpoints(grid: TorusGrid, q: int) -> np.ndarray:
    """Midpoints of every q-cell in enumeration order, shape (count, n)."""
    grid._check_degree(q)
    h = np.asarray(grid.spacings)
    L = np.asarray(grid.lengths)
    mesh = np.stack(
        np.meshgrid(*(np.arange(N, dtype=float) for N in grid.resolutions),
                    indexing="ij"),
        axis=-1,
    ).reshape(grid.base_count, grid.n)
    blocks = []
    for axes in grid.axis_subsets(q):
        offs = np.array([0.5 if i in axes else 0.0 for i in range(grid.n)])
        blocks.append(((mesh + offs) * h) % L)
    return np.concatenate(blocks, axis=0)


def _shifted_base_ranks(grid: TorusGrid, axis: int) -> np.ndarray:
    """Rank of each base vertex after stepping +1 along `axis` (periodic)."""
    B = grid.base_count
    N = grid.resolutions[axis]
    stride = grid._strides()[axis]
    r = np.arange(B)
    k = (r // stride) % N
    return r + stride * np.where(k < N - 1, 1, 1 - N)


def coboundary(grid: TorusGrid, q: int) -> sp.csr_matrix:
    """Signed cubical coboundary d_q : q-cochains -> (q+1)-cochains.

    Entry convention: for a (q+1)-cell with axes J' and a member axis j at
    sorted position p, the facet pair along j contributes
    (-1)^p [u(front facet) - u(back facet)], with periodic wraparound.
    Each row has exactly 2(q+1) nonzeros, all +/-1, and d_{q+1} d_q = 0
    with exact structural cancellation.

    Args:
        grid: the torus grid.
        q: source degree, 0 <= q <= n.  q = n returns the empty operator.

    Returns:
        CSR matrix of shape (num (q+1)-cells, num q-cells).
    """
    grid._check_degree(q)
    B = grid.base_count
    if q == grid.n:
        return sp.csr_matrix((0, grid.num_cells(q)))
    sub_q = {axes: i for i, axes in enumerate(grid.axis_subsets(q))}
    rows, cols, vals = [], [], []
    base = np.arange(B)
    for block, axes_up in enumerate(grid.axis_subsets(q + 1)):
        row = block * B + base
        for p, j in enumerate(axes_up):
            facet_axes = tuple(a for a in axes_up if a != j)
            col0 = sub_q[facet_axes] * B
            sign = -1.0 if p % 2 else 1.0
            # back facet at the cell's own base, front facet one step along j
            rows.append(row)
            cols.append(col0 + base)
            vals.append(np.full(B, -sign))
            rows.append(row)
            cols.append(col0 + _shifted_base_ranks(grid, j))
            vals.append(np.full(B, sign))
    d = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.num_cells(q + 1), grid.num_cells(q)),
    )
    return d.tocsr()


def mass_matrix(grid: TorusGrid, q: int) -> MassMatrix:
    """Diagonal mass matrix M_q; uniform-h entry is h^{n-2q}."""
    grid._check_degree(q)
    h = grid.spacings
    diag = np.empty(grid.num_cells(q))
    B = grid.base_count
    for block, axes in enumerate(grid.axis_subsets(q)):
        inside = math.prod(h[j] for j in axes)
        outside = math.prod(h[j] for j in range(grid.n) if j not in axes)
        diag[block * B:(block + 1) * B] = outside / inside
    return MassMatrix(q=q, diagonal=diag)


ComponentMap = Mapping[tuple[int, ...], Callable[[np.ndarray], np.ndarray]]


def sample_form(
    grid: TorusGrid,
    q: int,
    components: ComponentMap | Sequence[Callable] | Callable,
) -> Cochain:
    """Sample a smooth q-form into a cochain by midpoint quadrature.

    value(cell) = component_J(midpoint) * prod_{j in J} h_j.

    Args:
        grid: the torus grid.
        q: form degree.
        components: the component functions omega_J, one per axis subset J.
            Accepts a mapping {J: f}, a sequence aligned with axis_subsets(q),
            or a single callable when C(n, q) == 1.  Each callable maps an
            (m, n) array of points to m values.  Missing mapping keys are
            treated as the zero component.

    Returns:
        The sampled Cochain.  Raises if any sampled value is not finite.
    """
    grid._check_degree(q)
    subsets = grid.axis_subsets(q)
    if callable(components):
        if len(subsets) != 1:
            raise ValueError(
                f"a single callable needs C(n,q) = 1 components, "
                f"but degree {q} has {len(subsets)}"
            )
        comp_list = [components]
    elif isinstance(components, Mapping):
        comp_list = [components.get(axes) for axes in subsets]
    else:
        comp_list = list(components)
        if len(comp_list) != len(subsets):
            raise ValueError(
                f"expected {len(subsets)} component functions, got {len(comp_list)}"
            )
    B = grid.base_count
    pts = midpoints(grid, q)
    values = np.zeros(grid.num_cells(q))
    h = grid.spacings
    for block, (axes, comp) in enumerate(zip(subsets, comp_list)):
        if comp is None:
            continue
        vol = math.prod(h[j] for j in axes)
        sampled = np.asarray(comp(pts[block * B:(block + 1) * B]), dtype=float)
        if not np.isfinite(sampled).all():
            raise ValueError(f"component for axes {axes} produced non-finite values")
        values[block * B:(block + 1) * B] = sampled * vol
    return Cochain(q=q, grid=grid, values=values)


def inner_product(u: Cochain, v: Cochain) -> float:
    """Discrete L^2 pairing (u, v) = u^T M_q v."""
    if u.q != v.q or u.grid is not v.grid and u.grid != v.grid:
        raise ValueError("inner product needs cochains of one degree on one grid")
    M = mass_matrix(u.grid, u.q)
    return float(u.values @ (M.diagonal * v.values))


def sup_norm(u: Cochain) -> float:
    """Discrete sup norm: max over vertices of the pointwise component norm.

    Cell values are divided by their volume factor prod_{j in J} h_j to
    recover components, components are gathered to each vertex by averaging
    the 2^q incident cells per subset J, and the flat-metric norm
    sqrt(sum_J c_J^2) is maximized over vertices.
    """
    grid = u.grid
    B = grid.base_count
    h = grid.spacings
    shape = grid.resolutions
    normsq = np.zeros(shape)
    for block, axes in enumerate(grid.axis_subsets(u.q)):
        vol = math.prod(h[j] for j in axes)
        comp = (u.values[block * B:(block + 1) * B] / vol).reshape(shape)
        for j in axes:
            comp = 0.5 * (comp + np.roll(comp, 1, axis=j))
        normsq += comp**2
    return float(np.sqrt(normsq.max()))


def export_matrix_market(op, path) -> None:
    """Write a sparse operator in MatrixMarket coordinate format (1-based)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(op), symmetry="general")


def import_matrix_market(path) -> sp.csr_matrix:
    """Read a MatrixMarket file back as CSR."""
    return sp.csr_matrix(scipy.io.mmread(str(path)))
