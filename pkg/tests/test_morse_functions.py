"""Tests for analytic Morse presets and critical point location.

Derivative oracles are central finite differences of the exact callables.
Critical point oracles are hand-derived: for separable cosine sums the
critical set is the product of the per-axis zeros of sin, and the Hessian
is diagonal with entries -(2 pi k / L)^2 amp cos(...), so every position,
index, and eigenvalue below is frozen from that closed form.
"""

import numpy as np
import pytest

from wittenlab import (
    MorseProfile,
    NotMorseError,
    build_grid,
    critical_index,
    find_critical_points,
    make_morse_spec,
    morse_counts,
    preset_function,
)

FD_STEP = 1e-4


def f1_spec():
    # cos(2 pi x) + cos(2 pi y): 4 critical points on {0, 1/2}^2, m = (1, 2, 1)
    return make_morse_spec("cos_sum", lengths=(1.0, 1.0), frequencies=(1, 1), amplitudes=(1.0, 1.0))


def f2_spec():
    # cos(4 pi x) + cos(2 pi y): 8 critical points, m = (2, 4, 2)
    return make_morse_spec("cos_sum", lengths=(1.0, 1.0), frequencies=(2, 1), amplitudes=(1.0, 1.0))


def f3_spec():
    # cos(2 pi x) + cos(2 pi y) + cos(2 pi z): m = (1, 3, 3, 1)
    return make_morse_spec(
        "cos_sum", lengths=(1.0, 1.0, 1.0), frequencies=(1, 1, 1), amplitudes=(1.0, 1.0, 1.0)
    )


def assorted_specs():
    return [
        f1_spec(),
        make_morse_spec(
            "cos_sum_multi",
            lengths=(1.0, 2.0),
            frequencies=((1, 2), (1,)),
            amplitudes=((1.0, 0.5), (0.8,)),
        ),
        make_morse_spec(
            "custom_trig",
            lengths=(1.0, 2.0),
            amplitudes=(1.0, 0.7),
            waves=((1, -2), (2, 1)),
            phases=(0.3, -1.1),
        ),
    ]


def wrapped_dist(p, q, lengths):
    return max(min(abs(a - b), L - abs(a - b)) for a, b, L in zip(p, q, lengths))


def same_point_sets(a, b, lengths, tol=1e-9):
    if len(a) != len(b):
        return False
    used = [False] * len(b)
    for p in a:
        for j, q in enumerate(b):
            if not used[j] and wrapped_dist(p, q, lengths) <= tol:
                used[j] = True
                break
        else:
            return False
    return True


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    for spec in assorted_specs():
        f, grad, _ = preset_function(spec)
        pts = rng.uniform(0, min(spec.lengths), size=(100, spec.n))
        exact = grad(pts)
        fd = np.empty_like(exact)
        for k in range(spec.n):
            e = np.zeros(spec.n)
            e[k] = FD_STEP
            fd[:, k] = (f(pts + e) - f(pts - e)) / (2 * FD_STEP)
        scale = np.abs(exact).max()
        assert np.abs(fd - exact).max() <= 1e-6 * scale


def test_hessian_matches_finite_differences():
    rng = np.random.default_rng(11)
    for spec in assorted_specs():
        _, grad, hess = preset_function(spec)
        pts = rng.uniform(0, min(spec.lengths), size=(100, spec.n))
        exact = hess(pts)
        fd = np.empty_like(exact)
        for k in range(spec.n):
            e = np.zeros(spec.n)
            e[k] = FD_STEP
            fd[:, :, k] = (grad(pts + e) - grad(pts - e)) / (2 * FD_STEP)
        scale = np.abs(exact).max()
        assert np.abs(fd - exact).max() <= 1e-6 * scale
        # plane-wave Hessians are symmetric by construction, exactly
        assert np.abs(exact - exact.transpose(0, 2, 1)).max() == 0.0


def test_gradient_frozen_values():
    _, grad, _ = preset_function(f1_spec())
    g = grad(np.array([[0.25, 0.25]]))[0]
    assert np.abs(g - np.array([-2 * np.pi, -2 * np.pi])).max() <= 1e-12

    _, grad3, _ = preset_function(f3_spec())
    g3 = grad3(np.zeros((1, 3)))[0]
    assert np.abs(g3).max() == 0.0


def test_hessian_frozen_values():
    _, _, hess = preset_function(f2_spec())
    H = hess(np.zeros((1, 2)))[0]
    expected = np.diag([-16 * np.pi**2, -4 * np.pi**2])
    assert np.abs(H - expected).max() <= 1e-12


def test_bad_preset_parameters_rejected():
    with pytest.raises(ValueError, match="frequency"):
        make_morse_spec("cos_sum", lengths=(1.0,), frequencies=(0,), amplitudes=(1.0,))
    with pytest.raises(ValueError, match="amplitude"):
        make_morse_spec("cos_sum", lengths=(1.0,), frequencies=(1,), amplitudes=(0.0,))
    with pytest.raises(ValueError, match="unknown preset"):
        make_morse_spec("sine_sum", lengths=(1.0,), frequencies=(1,), amplitudes=(1.0,))
    with pytest.raises(ValueError, match="per axis"):
        make_morse_spec("cos_sum", lengths=(1.0, 1.0), frequencies=(1,), amplitudes=(1.0,))
    with pytest.raises(ValueError, match="wave vector"):
        make_morse_spec("custom_trig", lengths=(1.0, 1.0), amplitudes=(1.0,), waves=((0, 0),))


def test_f1_critical_points():
    profile = find_critical_points(f1_spec(), build_grid(2, (1.0, 1.0), (16, 16)))
    assert profile.m == (1, 2, 1)
    expected = {
        (0.5, 0.5): (0, -2.0),
        (0.0, 0.5): (1, 0.0),
        (0.5, 0.0): (1, 0.0),
        (0.0, 0.0): (2, 2.0),
    }
    assert len(profile.points) == 4
    for pt in profile.points:
        match = [k for k in expected if wrapped_dist(pt.coords, k, (1, 1)) <= 1e-9]
        assert len(match) == 1
        index, f_value = expected[match[0]]
        assert pt.index == index
        assert abs(pt.f_value - f_value) <= 1e-12
    top = [p for p in profile.points if p.index == 2][0]
    assert np.abs(np.array(top.hessian_eigenvalues) + 4 * np.pi**2).max() <= 1e-8


def test_f2_critical_points():
    spec = f2_spec()
    profile = find_critical_points(spec, build_grid(2, (1.0, 1.0), (16, 16)))
    assert profile.m == (2, 4, 2)
    xs = (0.0, 0.25, 0.5, 0.75)
    expected_points = [(x, y) for x in xs for y in (0.0, 0.5)]
    coords = [p.coords for p in profile.points]
    assert same_point_sets(coords, expected_points, (1, 1))
    # index from the diagonal Hessian: negative entry iff cos(4 pi x) > 0
    # (x in {0, 1/2}) respectively cos(2 pi y) > 0 (y = 0)
    for pt in profile.points:
        expected_index = (1 if pt.coords[0] % 0.5 < 0.125 or pt.coords[0] % 0.5 > 0.375 else 0) + (
            1 if wrapped_dist((pt.coords[1],), (0.0,), (1.0,)) <= 1e-9 else 0
        )
        assert pt.index == expected_index, (pt.coords, pt.index)
    maxima = sorted(p.coords for p in profile.points if p.index == 2)
    assert same_point_sets(maxima, [(0.0, 0.0), (0.5, 0.0)], (1, 1))
    top = [p for p in profile.points if wrapped_dist(p.coords, (0, 0), (1, 1)) <= 1e-9][0]
    expected_eigs = np.array([-16 * np.pi**2, -4 * np.pi**2])
    assert np.abs(np.array(top.hessian_eigenvalues) - expected_eigs).max() <= 1e-7


def test_f3_critical_points():
    profile = find_critical_points(f3_spec(), build_grid(3, (1.0, 1.0, 1.0), (8, 8, 8)))
    assert profile.m == (1, 3, 3, 1)
    assert len(profile.points) == 8
    for pt in profile.points:
        # index counts the coordinates at 0, where cos(2 pi x) has a maximum
        zeros = sum(1 for c in pt.coords if wrapped_dist((c,), (0.0,), (1.0,)) <= 1e-9)
        assert pt.index == zeros


def test_critical_set_negation_symmetry():
    # all presets here are even, so x -> -x permutes the critical set
    for spec, N in ((f1_spec(), 12), (f2_spec(), 16)):
        grid = build_grid(2, spec.lengths, (N, N))
        coords = [p.coords for p in find_critical_points(spec, grid).points]
        negated = [tuple(np.mod(-np.array(c), spec.lengths)) for c in coords]
        assert same_point_sets(coords, negated, spec.lengths)


def test_find_critical_points_deterministic():
    grid = build_grid(2, (1.0, 1.0), (16, 16))
    a = find_critical_points(f2_spec(), grid)
    b = find_critical_points(f2_spec(), grid)
    assert [p.coords for p in a.points] == [p.coords for p in b.points]
    assert a.m == b.m


def test_coarse_grid_finds_all_points():
    profile = find_critical_points(f1_spec(), build_grid(2, (1.0, 1.0), (6, 6)))
    assert profile.m == (1, 2, 1)


def test_gradient_norm_small_at_critical_points():
    spec = f2_spec()
    profile = find_critical_points(spec, build_grid(2, (1.0, 1.0), (16, 16)))
    pts = np.array([p.coords for p in profile.points])
    assert np.linalg.norm(spec.grad(pts), axis=1).max() <= 1e-12


def test_critical_index_examples():
    assert critical_index(np.diag([-1.0, -1.0])) == 2
    assert critical_index(np.diag([1.0, 2.0, 3.0])) == 0
    assert critical_index(np.diag([-1.0, 1e-4]), degeneracy_tol=1e-6) == 1
    with pytest.raises(NotMorseError):
        critical_index(np.diag([1.0, 1e-12]))


def test_critical_index_congruence_invariant():
    # Sylvester: the signature survives H -> A^T H A for invertible A
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = rng.uniform(0.5, 3.0, size=n) * rng.choice([-1.0, 1.0], size=n)
        H = q @ np.diag(lam) @ q.T
        while True:
            A = rng.standard_normal((n, n))
            if abs(np.linalg.det(A)) > 0.1:
                break
        assert critical_index(A.T @ H @ A) == critical_index(H)


def test_degenerate_critical_point_rejected():
    # cos(2 pi x) + cos(2 pi y) - cos(2 pi (x+y))/2 has a zero Hessian
    # eigenvalue at the origin: -(2 pi)^2 (1 + 2c) with c = -1/2
    spec = make_morse_spec(
        "custom_trig",
        lengths=(1.0, 1.0),
        amplitudes=(1.0, 1.0, -0.5),
        waves=((1, 0), (0, 1), (1, 1)),
    )
    with pytest.raises(NotMorseError, match="not a Morse function"):
        find_critical_points(spec, build_grid(2, (1.0, 1.0), (16, 16)))


def test_flat_direction_detected():
    # cos(2 pi x) alone on T^2 has no isolated critical points at all
    spec = make_morse_spec(
        "custom_trig", lengths=(1.0, 1.0), amplitudes=(1.0,), waves=((1, 0),)
    )
    with pytest.raises((NotMorseError, RuntimeError)):
        find_critical_points(spec, build_grid(2, (1.0, 1.0), (12, 12)))


def test_grid_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="dimension"):
        find_critical_points(f1_spec(), build_grid(1, (1.0,), (16,)))


def test_morse_counts_euler_check():
    profile = find_critical_points(f1_spec(), build_grid(2, (1.0, 1.0), (8, 8)))
    assert morse_counts(profile).tolist() == [1, 2, 1]
    with pytest.raises(ValueError, match="Euler"):
        morse_counts(MorseProfile(m=(1, 1, 1), points=()))
