"""Analytic Morse functions on the torus with exact gradients and Hessians.

Presets are finite sums of plane-wave cosines

    f(x) = sum_t  a_t cos( 2 pi <m_t, x / L> + phi_t ),   m_t integer vectors,

which are smooth, periodic with the grid's periods, and hand-differentiable,
so critical data carries exact oracles.  Critical points are located by
Newton iteration on the exact gradient seeded at every grid vertex, then
deduplicated modulo the periods and classified by Hessian signature.  The
Morse side never touches the discrete operator spectrum; the two meet only
in the verification layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .torus_complex import TorusGrid, midpoints

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 60
DEGENERACY_RELTOL = 1e-8

PRESETS = ("cos_sum", "cos_sum_multi", "custom_trig")


class NotMorseError(ValueError):
    """Raised when a critical point fails the nondegeneracy check."""


@dataclass(frozen=True)
class MorseFunctionSpec:
    """A trigonometric function on T^n with exact derivative callables.

    Fields mirror the preset family: `preset` is one of cos_sum (one cosine
    per axis), cos_sum_multi (a list of (frequency, amplitude) harmonics per
    axis), or custom_trig (arbitrary integer wave vectors with phases).
    Internally every preset is compiled to plane-wave terms (a_t, m_t, phi_t).
    """

    preset: str
    lengths: tuple[float, ...]
    frequencies: tuple = ()
    amplitudes: tuple = ()
    # compiled plane-wave form: amplitudes (T,), waves (T, n), phases (T,)
    _amps: np.ndarray = field(repr=False, default=None)
    _waves: np.ndarray = field(repr=False, default=None)
    _phases: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return len(self.lengths)

    # angular factors w_{t,k} = 2 pi m_{t,k} / L_k
    def _angular(self) -> np.ndarray:
        return 2 * np.pi * self._waves / np.asarray(self.lengths)

    def f(self, points: np.ndarray) -> np.ndarray:
        """f at an (m, n) array of points, vectorized."""
        theta = self._theta(points)
        return np.cos(theta) @ self._amps

    def grad(self, points: np.ndarray) -> np.ndarray:
        """Exact gradient, shape (m, n)."""
        theta = self._theta(points)
        w = self._angular()
        return -(np.sin(theta) * self._amps) @ w

    def hess(self, points: np.ndarray) -> np.ndarray:
        """Exact Hessian, shape (m, n, n)."""
        theta = self._theta(points)
        w = self._angular()
        c = np.cos(theta) * self._amps  # (m, T)
        return -np.einsum("mt,tk,tl->mkl", c, w, w)

    def _theta(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        w = self._angular()
        return points @ w.T + self._phases

    def f_at(self, point) -> float:
        return float(self.f(np.asarray(point)[None, :])[0])


def make_morse_spec(
    preset: str,
    lengths: Sequence[float],
    frequencies: Sequence = (),
    amplitudes: Sequence = (),
    waves: Sequence[Sequence[int]] | None = None,
    phases: Sequence[float] | None = None,
) -> MorseFunctionSpec:
    """Build a MorseFunctionSpec, compiling the preset to plane-wave terms.

    Args:
        preset: "cos_sum", "cos_sum_multi", or "custom_trig".
        lengths: torus periods L_i.
        frequencies: cos_sum: one integer per axis; cos_sum_multi: one list
            of integers per axis.  Ignored for custom_trig.
        amplitudes: same shape as frequencies; custom_trig: one per term.
        waves: custom_trig only, integer wave vector per term.
        phases: custom_trig only, one phase per term (default zero).

    Raises:
        ValueError: unknown preset, zero frequency, or zero amplitude.
    """
    lengths = tuple(float(L) for L in lengths)
    n = len(lengths)
    terms_a, terms_m, terms_p = [], [], []
    if preset == "cos_sum":
        if len(frequencies) != n or len(amplitudes) != n:
            raise ValueError("cos_sum needs one frequency and amplitude per axis")
        for i, (freq, amp) in enumerate(zip(frequencies, amplitudes)):
            _check_term(freq, amp)
            m = np.zeros(n, dtype=int)
            m[i] = int(freq)
            terms_a.append(float(amp))
            terms_m.append(m)
            terms_p.append(0.0)
    elif preset == "cos_sum_multi":
        if len(frequencies) != n or len(amplitudes) != n:
            raise ValueError("cos_sum_multi needs per-axis harmonic lists")
        for i, (freqs, amps) in enumerate(zip(frequencies, amplitudes)):
            if len(freqs) != len(amps):
                raise ValueError(f"axis {i}: frequency/amplitude length mismatch")
            for freq, amp in zip(freqs, amps):
                _check_term(freq, amp)
                m = np.zeros(n, dtype=int)
                m[i] = int(freq)
                terms_a.append(float(amp))
                terms_m.append(m)
                terms_p.append(0.0)
    elif preset == "custom_trig":
        if waves is None or len(waves) == 0:
            raise ValueError("custom_trig needs at least one wave vector")
        if len(amplitudes) != len(waves):
            raise ValueError("custom_trig needs one amplitude per wave vector")
        phases = [0.0] * len(waves) if phases is None else list(phases)
        if len(phases) != len(waves):
            raise ValueError("custom_trig needs one phase per wave vector")
        for mvec, amp, phi in zip(waves, amplitudes, phases):
            mvec = np.asarray(mvec, dtype=int)
            if mvec.shape != (n,):
                raise ValueError(f"wave vector {tuple(mvec)} does not have length {n}")
            if not mvec.any():
                raise ValueError("zero wave vector term is not allowed")
            _check_term(1, amp)
            terms_a.append(float(amp))
            terms_m.append(mvec)
            terms_p.append(float(phi))
    else:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    return MorseFunctionSpec(
        preset=preset,
        lengths=lengths,
        frequencies=tuple(_freeze(x) for x in frequencies),
        amplitudes=tuple(_freeze(x) for x in amplitudes),
        _amps=np.asarray(terms_a),
        _waves=np.stack(terms_m),
        _phases=np.asarray(terms_p),
    )


def _freeze(x):
    return tuple(x) if isinstance(x, (list, tuple)) else x


def _check_term(freq, amp) -> None:
    if int(freq) == 0:
        raise ValueError("zero frequency term is not allowed")
    if float(amp) == 0.0:
        raise ValueError("zero amplitude term is not allowed")


def preset_function(spec: MorseFunctionSpec):
    """The callable triple (f, grad, hess) with analytically exact derivatives."""
    return spec.f, spec.grad, spec.hess


@dataclass(frozen=True)
class CriticalPoint:
    """A nondegenerate critical point with its Hessian signature."""

    coords: tuple[float, ...]
    hessian_eigenvalues: tuple[float, ...]  # ascending
    index: int  # count of strictly negative Hessian eigenvalues
    f_value: float


@dataclass(frozen=True)
class MorseProfile:
    """All critical points of a preset plus the per-index counts m_j."""

    m: tuple[int, ...]
    points: tuple[CriticalPoint, ...]

    @property
    def n(self) -> int:
        return len(self.m) - 1


def critical_index(hessian: np.ndarray, degeneracy_tol: float | None = None) -> int:
    """Morse index: the number of strictly negative Hessian eigenvalues.

    Args:
        hessian: symmetric n x n matrix.
        degeneracy_tol: absolute eigenvalue threshold; defaults to
            1e-8 * max |eigenvalue|.

    Raises:
        NotMorseError: if any eigenvalue lies within the degeneracy band.
    """
    eigs = np.linalg.eigvalsh(np.asarray(hessian, dtype=float))
    if degeneracy_tol is None:
        degeneracy_tol = DEGENERACY_RELTOL * float(np.abs(eigs).max() or 1.0)
    if (np.abs(eigs) < degeneracy_tol).any():
        raise NotMorseError(
            f"not a Morse function: Hessian eigenvalue within "
            f"{degeneracy_tol:.3e} of zero (eigenvalues {eigs})"
        )
    return int((eigs < 0).sum())


def _wrap(coords: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    return np.mod(coords, lengths)


def _torus_dist_inf(a: np.ndarray, b: np.ndarray, lengths: np.ndarray) -> float:
    d = np.abs(np.mod(a - b + lengths / 2, lengths) - lengths / 2)
    return float(d.max())


def find_critical_points(spec: MorseFunctionSpec, grid: TorusGrid) -> MorseProfile:
    """Locate, deduplicate, and classify all critical points of the preset.

    Newton iteration on grad f = 0 runs from every grid vertex; converged
    points are wrapped into the fundamental domain and merged within
    dedup_radius = min_i h_i / 2 (toroidal distance).  Completeness is
    validated by flagging every top cell whose corners change sign in every
    gradient component and requiring a found point nearby.

    Raises:
        NotMorseError: a located point has a near-zero Hessian eigenvalue.
        RuntimeError: a sign-change cell has no critical point near it
            (missed basin or Newton failure from all of its seeds).
    """
    lengths = np.asarray(spec.lengths)
    if grid.n != spec.n:
        raise ValueError("grid and Morse function have different dimensions")
    x = midpoints(grid, 0).copy()
    alive = np.ones(len(x), dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        g = spec.grad(x)
        gnorm = np.linalg.norm(g, axis=1)
        active = alive & (gnorm > 0.25 * NEWTON_TOL)
        if not active.any():
            break
        H = spec.hess(x[active])
        scale = np.abs(H).max(axis=(1, 2))
        dets = np.abs(np.linalg.det(H))
        ok = dets > 1e-8 * np.maximum(scale, 1e-300) ** spec.n
        # seeds with (near-)singular Hessian are dropped; their basins must
        # be claimed by other seeds or the completeness check fails below
        idx = np.flatnonzero(active)
        alive[idx[~ok]] = False
        if ok.any():
            step = np.linalg.solve(H[ok], g[active][ok][..., None])[..., 0]
            x[idx[ok]] -= step
            x[idx[ok]] = _wrap(x[idx[ok]], lengths)
    g = spec.grad(x)
    converged = alive & (np.linalg.norm(g, axis=1) <= NEWTON_TOL)
    candidates = x[converged]

    dedup_radius = min(grid.spacings) / 2
    reps: list[np.ndarray] = []
    order = np.lexsort(candidates.T[::-1]) if len(candidates) else []
    for i in order:
        p = candidates[i]
        if all(_torus_dist_inf(p, r, lengths) > dedup_radius for r in reps):
            reps.append(p)

    points = []
    hess_scale = 0.0
    eigs_list = []
    for p in reps:
        eigs = np.linalg.eigvalsh(spec.hess(p[None, :])[0])
        eigs_list.append(eigs)
        hess_scale = max(hess_scale, float(np.abs(eigs).max()))
    degeneracy_tol = DEGENERACY_RELTOL * (hess_scale or 1.0)
    for p, eigs in zip(reps, eigs_list):
        if (np.abs(eigs) < degeneracy_tol).any():
            raise NotMorseError(
                f"not a Morse function: degenerate critical point at {p} "
                f"(Hessian eigenvalues {eigs})"
            )
        points.append(
            CriticalPoint(
                coords=tuple(float(c) for c in p),
                hessian_eigenvalues=tuple(float(e) for e in eigs),
                index=int((eigs < 0).sum()),
                f_value=spec.f_at(p),
            )
        )

    _check_basin_coverage(spec, grid, reps, lengths)

    m = np.zeros(spec.n + 1, dtype=int)
    for pt in points:
        m[pt.index] += 1
    return MorseProfile(m=tuple(int(v) for v in m), points=tuple(points))


def _check_basin_coverage(spec, grid, reps, lengths) -> None:
    """Every cell where all gradient components change sign must be claimed."""
    shape = grid.resolutions
    g = spec.grad(midpoints(grid, 0)).reshape(shape + (grid.n,))
    tol = 1e-12 * max(float(np.abs(g).max()), 1.0)
    mins = np.full(shape + (grid.n,), np.inf)
    maxs = np.full(shape + (grid.n,), -np.inf)
    for corner in np.ndindex(*(2,) * grid.n):
        shifted = g
        for axis, s in enumerate(corner):
            if s:
                shifted = np.roll(shifted, -1, axis=axis)
        mins = np.minimum(mins, shifted)
        maxs = np.maximum(maxs, shifted)
    flagged = ((mins <= tol) & (maxs >= -tol)).all(axis=-1)
    h = np.asarray(grid.spacings)
    claim_radius = 1.5 * float(h.max())
    for base in np.argwhere(flagged):
        center = (base + 0.5) * h
        if not any(
            _torus_dist_inf(center, r, lengths) <= claim_radius for r in reps
        ):
            raise RuntimeError(
                f"unclaimed basin: gradient sign change in the cell at "
                f"{tuple(np.round(center, 6))} but no critical point converged "
                f"nearby (Newton failure or non-Morse function)"
            )


def morse_counts(profile: MorseProfile) -> np.ndarray:
    """Per-index counts m[j]; self-checks the Euler alternating sum (= 0 on T^n)."""
    m = np.asarray(profile.m, dtype=int)
    euler = int(((-1) ** np.arange(len(m)) * m).sum())
    if euler != 0:
        raise ValueError(
            f"Morse counts {profile.m} violate the torus Euler characteristic "
            f"(alternating sum {euler}, expected 0)"
        )
    return m
