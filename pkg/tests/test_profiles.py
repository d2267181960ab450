import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bistablewaves.profiles import (
    Grid, Profile, ProfileError,
    heaviside_profile, constant_profile, translate, rescale, compare,
    level_crossing, helly_extract,
    profile_to_bytes, profile_from_bytes, profile_to_csv, profile_from_csv,
)


def grid1():
    return Grid.regular(-10.0, 10.0, 0.1)


def test_grid_spacing_and_lattice_rules():
    g = Grid.regular(-10, 10, 0.1)
    assert g.dx == pytest.approx(0.1)
    lat = Grid.lattice(-5, 5)
    assert lat.dx == 1.0 and lat.n_points == 11
    with pytest.raises(ProfileError):
        Grid(-5.0, 5.0, 21, "lattice")      # dx = 0.5 on a lattice
    with pytest.raises(ProfileError):
        Grid(-5.3, 4.7, 11, "lattice")      # off-integer x_min


def test_heaviside_values():
    p = heaviside_profile(grid1(), 0.0, 1.0, interface=0.0, ramp_width=1.0)
    assert p.sample(-2.0)[0] == pytest.approx(0.0)
    assert p.sample(-0.5)[0] == pytest.approx(0.5)
    assert p.sample(1.0)[0] == pytest.approx(1.0)
    assert p.monotone_flag


def test_heaviside_phi_alpha_minus_shape():
    # alpha on the left of the interface band, v_alpha^- on the right
    p = heaviside_profile(grid1(), 0.25, 0.85, interface=0.0, ramp_width=1.0)
    assert np.all(p.sample(np.array([-5.0, -1.0]))[:, 0] == pytest.approx(0.25))
    assert np.all(p.sample(np.array([0.0, 5.0]))[:, 0] == pytest.approx(0.85))


def test_heaviside_degenerate_constant():
    p = heaviside_profile(grid1(), 0.4, 0.4, interface=0.0, ramp_width=1.0)
    assert np.all(p.values == 0.4)


def test_heaviside_rejects_unordered_data():
    with pytest.raises(ProfileError):
        heaviside_profile(grid1(), [0.0, 1.0], [1.0, 0.0], 0.0, 1.0)


def test_translate_identity_and_shift():
    p = heaviside_profile(grid1(), 0.0, 1.0, 0.0, 1.0)
    assert np.array_equal(translate(p, 0.0).values, p.values)
    q = translate(p, 2.0)
    assert q.sample(2.0)[0] == pytest.approx(1.0)
    assert q.sample(0.9)[0] == pytest.approx(0.0)


@given(st.integers(min_value=-40, max_value=40),
       st.integers(min_value=-40, max_value=40))
@settings(max_examples=30, deadline=None)
def test_translate_group_action_aligned(ja, jb):
    # exact composition on grid-aligned shifts
    p = heaviside_profile(grid1(), 0.0, 1.0, 0.3, 1.7)
    a, b = ja * p.grid.dx, jb * p.grid.dx
    lhs = translate(translate(p, a), b).values
    rhs = translate(p, a + b).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
@settings(max_examples=30, deadline=None)
def test_translate_group_action_affine(a, b):
    # the interpolation is exact on globally affine profiles, so arbitrary
    # shifts compose exactly there
    g = grid1()
    vals = 0.5 + 0.01 * g.x
    p = Profile(g, vals, vals[0], vals[-1])
    lhs = translate(translate(p, a), b).values
    rhs = translate(p, a + b).values
    interior = slice(80, -80)
    assert np.max(np.abs(lhs[interior] - rhs[interior])) <= 1e-12


def test_rescale_identity_and_interface_motion():
    p = heaviside_profile(grid1(), 0.0, 1.0, 2.0, 0.5)
    assert np.array_equal(rescale(p, 1.0).values, p.values)
    q = rescale(p, 2.0)
    # x -> 2x moves the mid-level crossing from 1.75 to 0.875
    assert level_crossing(p, "a", (0.0, 0.5)) == pytest.approx(1.75, abs=1e-9)
    assert level_crossing(q, "a", (0.0, 0.5)) == pytest.approx(0.875, abs=1e-9)
    assert q.sample(1.01)[0] == pytest.approx(1.0)


def test_kappa_n_value():
    n, cbar = 4, 2.0
    assert (n + cbar) / n == pytest.approx(1.5)


def test_rescale_rejects_contraction():
    p = heaviside_profile(grid1(), 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ProfileError):
        rescale(p, 0.5)


@given(st.floats(min_value=1.0, max_value=4.0), st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=25, deadline=None)
def test_rescale_preserves_monotonicity(xi, seed):
    rng = np.random.default_rng(seed)
    g = grid1()
    vals = np.cumsum(rng.random(g.n_points))
    vals /= vals[-1]
    p = Profile(g, vals, vals[0], vals[-1], monotone_flag=True)
    q = rescale(p, xi)
    assert q.monotonicity_violation() <= 1e-12


def test_compare_verdicts():
    g = grid1()
    p = heaviside_profile(g, 0.0, 1.0, 0.0, 1.0)
    assert compare(p, p).verdict == "equal"
    assert compare(p, p).max_violation == 0.0
    zero = constant_profile(g, 0.0)
    beta = constant_profile(g, 1.0)
    assert compare(zero, beta).verdict == "leq"
    assert compare(beta, zero).verdict == "geq"
    crossing_profile = Profile(g, 0.5 + 0.1 * np.sign(g.x), 0.4, 0.6)
    flat = constant_profile(g, 0.5)
    assert compare(crossing_profile, flat).verdict == "unordered"


def test_compare_requires_same_grid():
    p = constant_profile(grid1(), 0.0)
    q = constant_profile(Grid.regular(-5, 5, 0.1), 0.0)
    with pytest.raises(ProfileError):
        compare(p, q)


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=20, deadline=None)
def test_compare_transitive_on_nonnegative_chain(seed):
    rng = np.random.default_rng(seed)
    g = Grid.regular(-5, 5, 0.25)
    base = np.sort(rng.random(g.n_points))
    p = Profile(g, base, base[0], base[-1])
    q = Profile(g, base + rng.random(g.n_points) * 0.1,
                base[0], base[-1] + 0.1)
    r = Profile(g, q.values[:, 0] + rng.random(g.n_points) * 0.1,
                q.left_limit, q.right_limit + 0.1)
    assert compare(p, q).verdict in ("leq", "equal")
    assert compare(q, r).verdict in ("leq", "equal")
    assert compare(p, r).verdict in ("leq", "equal")


def test_level_crossing_ramp_inversion():
    p = heaviside_profile(grid1(), 0.0, 1.0, 0.0, 1.0)
    # ramp value x+1 on [-1, 0]; box [0, 0.1] exits at x = -0.9
    assert level_crossing(p, "a", (0.0, 0.1)) == pytest.approx(-0.9, abs=1e-9)
    # b-type box [0.85, 1] entered where value reaches 0.85
    assert level_crossing(p, "b", (0.85, 1.0)) == pytest.approx(-0.15, abs=1e-9)


def test_level_crossing_sentinels():
    g = grid1()
    zero = constant_profile(g, 0.0)
    assert level_crossing(zero, "a", (0.0, 0.1)) == np.inf
    assert level_crossing(zero, "b", (0.9, 1.0)) == np.inf
    beta = constant_profile(g, 1.0)
    assert level_crossing(beta, "b", (0.9, 1.0)) == -np.inf


def test_level_crossing_needs_monotone():
    g = grid1()
    p = Profile(g, np.sin(g.x), 0.0, 0.0)
    with pytest.raises(ProfileError):
        level_crossing(p, "a", (0.0, 0.1))


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=20, deadline=None)
def test_level_crossing_a_below_b(seed):
    rng = np.random.default_rng(seed)
    g = Grid.regular(-10, 10, 0.1)
    vals = np.cumsum(rng.random(g.n_points))
    vals = vals / vals[-1]
    p = Profile(g, vals, 0.0, 1.0, monotone_flag=True)
    a = level_crossing(p, "a", (0.0, 0.05))
    b = level_crossing(p, "b", (0.95, 1.0))
    if np.isfinite(a) and np.isfinite(b):
        assert a <= b + 1e-12


def test_helly_step_location_limit():
    g = Grid.regular(-2, 2, 0.005)
    samples = [heaviside_profile(g, 0.0, 1.0, 1.0 / n, 1e-9) for n in range(1, 41)]
    pos = np.linspace(-2, 2, 801)
    limit, mask = helly_extract(samples, pos)
    # far from the accumulating step everything converged to the step at 0
    left = pos < -0.2
    right = pos > 0.2
    assert np.all(mask[left]) and np.all(mask[right])
    assert np.max(np.abs(limit.values[right, 0] - 1.0)) <= 1e-6
    assert np.max(np.abs(limit.values[left, 0])) <= 1e-6
    # positions straddling the shrinking tail interfaces get flagged
    assert not np.all(mask)
    assert np.all(np.abs(pos[~mask]) <= 0.05)


def test_helly_constant_sequence():
    g = Grid.regular(-2, 2, 0.1)
    p = heaviside_profile(g, 0.0, 1.0, 0.0, 1.0)
    limit, mask = helly_extract([p] * 12, g.x)
    assert np.all(mask)
    assert np.max(np.abs(limit.values - p.values)) == 0.0


def _scalar_helly_oracle(samples, positions, tol=1e-6, window_frac=0.25):
    m = len(samples)
    w = max(2, int(np.ceil(window_frac * m)))
    tail = np.stack([s.sample(positions)[:, 0] for s in samples[m - w:]])
    osc = tail.max(axis=0) - tail.min(axis=0)
    return tail[-1], osc <= tol


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=25, deadline=None)
def test_helly_matches_scalar_oracle(seed):
    rng = np.random.default_rng(seed)
    g = Grid.regular(0, 1, 0.02)
    jumps = np.sort(rng.uniform(0.05, 0.95, 4))
    heights = np.sort(rng.random(5))
    heights = heights / heights[-1]

    def staircase(shift):
        vals = np.zeros(g.n_points)
        for j, h in zip(jumps, heights[1:]):
            vals[g.x >= j + shift] = h
        return Profile(g, vals, 0.0, heights[-1], monotone_flag=True)

    samples = [staircase(0.3 * 2.0 ** (-n)) for n in range(24)]
    limit, mask = helly_extract(samples, g.x)
    oracle_vals, oracle_mask = _scalar_helly_oracle(samples, g.x)
    assert np.array_equal(mask, oracle_mask)
    agree = np.abs(limit.values[:, 0] - oracle_vals) <= 1e-12
    assert np.all(agree[mask])


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=15, deadline=None)
def test_helly_limit_monotone(seed):
    rng = np.random.default_rng(seed)
    g = Grid.regular(0, 1, 0.05)
    samples = []
    for n in range(16):
        vals = np.cumsum(rng.random(g.n_points))
        vals /= vals[-1]
        samples.append(Profile(g, vals, 0.0, 1.0, monotone_flag=True))
    limit, _ = helly_extract(samples, g.x)
    assert limit.monotonicity_violation() <= 1e-9


def test_helly_rejects_empty_and_nonmonotone():
    g = grid1()
    with pytest.raises(ProfileError):
        helly_extract([], g.x)
    bad = Profile(g, np.sin(g.x), 0.0, 0.0)
    with pytest.raises(ProfileError):
        helly_extract([bad], g.x)


def test_binary_roundtrip_bit_exact():
    g = Grid.regular(-3, 3, 0.1)
    rng = np.random.default_rng(7)
    vals = rng.random((g.n_points, 2))
    p = Profile(g, vals, vals[0], vals[-1])
    q = profile_from_bytes(profile_to_bytes(p))
    assert q.grid == p.grid
    assert np.array_equal(q.values, p.values)
    assert np.array_equal(q.left_limit, p.left_limit)
    assert q.monotone_flag is None


def test_csv_roundtrip():
    g = Grid.regular(-1, 1, 0.25)
    p = heaviside_profile(g, 0.0, 1.0, 0.0, 0.5)
    q = profile_from_csv(profile_to_csv(p))
    assert np.allclose(q.values, p.values)
    assert q.grid.n_points == p.grid.n_points
    header = profile_to_csv(p).splitlines()[0]
    assert header.startswith("x,component_0")
