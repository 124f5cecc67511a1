from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from levy_greeks import (GridSpec, ModelParams, NormalMarks, PointMassMarks,
                         antithetic_pair, derive_stream, draw_raw_batch,
                         effective_drift, iter_batches, materialize,
                         poisson_cdf_table, simulate_path)
from levy_greeks.simulate import (CAT_BRIDGE, CAT_COUNT, CAT_GRID, CAT_MARKS,
                                  CAT_TIMES, RawBatch, draw_raw_path)

JUMPY = ModelParams.risk_neutral(x=100.0, r=0.05, sigma=0.2, T=1.0, lam=0.8,
                                 alpha=0.4, jump_marks=NormalMarks(-0.1, 0.3))


def test_grid_spec_validation():
    assert GridSpec(1).steps == 1
    with pytest.raises(ValueError):
        GridSpec(0)


def test_raw_path_draws_are_deterministic():
    table = poisson_cdf_table(JUMPY.lam * JUMPY.T)
    grid = GridSpec(8)
    a = draw_raw_path(JUMPY, grid, derive_stream(42, 3), table)
    b = draw_raw_path(JUMPY, grid, derive_stream(42, 3), table)
    assert a.n_jumps == b.n_jumps
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.jump_marks, b.jump_marks)
    np.testing.assert_array_equal(a.grid_normals, b.grid_normals)
    np.testing.assert_array_equal(a.bridge_normals, b.bridge_normals)


def test_streams_differ_across_paths_seeds_and_categories():
    base = derive_stream(42, 0).category_gen(CAT_GRID).random(64)
    other_path = derive_stream(42, 1).category_gen(CAT_GRID).random(64)
    other_seed = derive_stream(43, 0).category_gen(CAT_GRID).random(64)
    assert not np.array_equal(base, other_path)
    assert not np.array_equal(base, other_seed)
    cats = [CAT_COUNT, CAT_TIMES, CAT_MARKS, CAT_GRID, CAT_BRIDGE]
    draws = [derive_stream(42, 0).category_gen(c).random(64) for c in cats]
    for i in range(len(cats)):
        for j in range(i + 1, len(cats)):
            assert not np.array_equal(draws[i], draws[j])


def test_batch_matches_per_path_draws():
    grid = GridSpec(6)
    table = poisson_cdf_table(JUMPY.lam * JUMPY.T)
    batch = draw_raw_batch(JUMPY, grid, 42, 5, 25, table)
    assert batch.lo == 5 and batch.hi == 25 and batch.size == 20
    for row, idx in enumerate(range(5, 25)):
        single = draw_raw_path(JUMPY, grid, derive_stream(42, idx), table)
        n = single.n_jumps
        assert batch.counts[row] == n
        np.testing.assert_array_equal(batch.jump_times[row, :n], single.jump_times)
        np.testing.assert_array_equal(batch.jump_marks[row, :n], single.jump_marks)
        np.testing.assert_array_equal(batch.bridge_normals[row, :n],
                                      single.bridge_normals)
        np.testing.assert_array_equal(batch.grid_normals[row], single.grid_normals)
        assert np.all(np.isinf(batch.jump_times[row, n:]))


def test_poisson_table_matches_reference_cdf():
    rate = 2.0
    table = poisson_cdf_table(rate)
    ref = stats.poisson.cdf(np.arange(len(table)), rate)
    np.testing.assert_allclose(table[:-1], ref[:-1], rtol=1e-12)
    assert table[-1] == 1.0
    assert np.all(np.diff(table) >= 0.0)


def test_poisson_table_edge_cases():
    assert poisson_cdf_table(0.0) == [1.0]
    with pytest.raises(ValueError):
        poisson_cdf_table(-1.0)
    with pytest.raises(ValueError):
        poisson_cdf_table(701.0)


def test_inverse_cdf_counts_have_poisson_moments():
    rate = 2.0
    table = np.asarray(poisson_cdf_table(rate))
    u = np.random.default_rng(5).random(100_000)
    counts = np.searchsorted(table, u, side="left")
    assert abs(counts.mean() - rate) < 4.0 * np.sqrt(rate / counts.size)
    assert abs(counts.var() - rate) < 0.1


def test_count_is_monotone_in_rate_for_fixed_uniform():
    """The CRN property a bump in lam*T relies on."""
    u = np.random.default_rng(6).random(20_000)
    small = np.searchsorted(np.asarray(poisson_cdf_table(1.5)), u, side="left")
    big = np.searchsorted(np.asarray(poisson_cdf_table(1.8)), u, side="left")
    assert np.all(big >= small)


def _crafted_batch(n, jump_times, rng):
    """A RawBatch with fixed jump times and fresh Gaussian draws."""
    k = len(jump_times)
    return RawBatch(
        lo=0, hi=n,
        counts=np.full(n, k, dtype=np.int64),
        jump_times=np.tile(np.asarray(jump_times, dtype=float), (n, 1)),
        jump_marks=np.zeros((n, k)),
        grid_normals=rng.standard_normal((n, 1)),
        bridge_normals=rng.standard_normal((n, k)),
    )


def test_bridge_node_has_brownian_bridge_moments():
    """W at an inserted node, given W_T, must match the bridge law.

    With one step and a node at tau the residual W_tau - (tau/T) W_T is
    centered, has variance tau (T - tau) / T and is uncorrelated with
    the endpoint.
    """
    p = ModelParams(x=100.0, r=0.0, sigma=1.0, T=1.0, lam=0.5, alpha=0.0,
                    jump_marks=PointMassMarks(0.0))
    tau = 0.4
    raw = _crafted_batch(30_000, [tau], np.random.default_rng(7))
    paths = materialize(p, GridSpec(1), raw)
    (group,) = paths.groups
    np.testing.assert_allclose(group.t[0], [0.0, tau, 1.0], atol=1e-15)
    w_tau = group.w[:, 1]
    w_T = group.w[:, 2]
    resid = w_tau - tau * w_T
    n = resid.size
    target_var = tau * (1.0 - tau)
    assert abs(resid.mean()) < 4.0 * np.sqrt(target_var / n)
    assert abs(resid.var() - target_var) < 4.0 * target_var * np.sqrt(2.0 / n)
    assert abs(np.corrcoef(resid, w_T)[0, 1]) < 4.0 / np.sqrt(n)


def test_second_bridge_node_chains_from_the_first():
    """Two nodes in one interval: the second is bridged from the first,
    not from the interval's left endpoint."""
    p = ModelParams(x=100.0, r=0.0, sigma=1.0, T=1.0, lam=0.5, alpha=0.0,
                    jump_marks=PointMassMarks(0.0))
    t1, t2 = 0.2, 0.3
    raw = _crafted_batch(30_000, [t1, t2], np.random.default_rng(8))
    paths = materialize(p, GridSpec(1), raw)
    (group,) = paths.groups
    w1, w2, w_T = group.w[:, 1], group.w[:, 2], group.w[:, 3]
    frac = (t2 - t1) / (1.0 - t1)
    resid = w2 - (w1 + frac * (w_T - w1))
    n = resid.size
    target_var = (t2 - t1) * (1.0 - t2) / (1.0 - t1)
    assert abs(resid.mean()) < 4.0 * np.sqrt(target_var / n)
    assert abs(resid.var() - target_var) < 4.0 * target_var * np.sqrt(2.0 / n)
    assert abs(np.corrcoef(resid, w1)[0, 1]) < 4.0 / np.sqrt(n)
    assert abs(np.corrcoef(resid, w_T)[0, 1]) < 4.0 / np.sqrt(n)


def test_node_arrays_are_consistent_across_random_models():
    """Property sweep: every node satisfies the model's own exponential."""
    rng = np.random.default_rng(9)
    for trial in range(10):
        p = ModelParams(
            x=float(rng.uniform(20.0, 200.0)),
            r=float(rng.uniform(-0.02, 0.08)),
            sigma=float(rng.uniform(0.05, 0.6)),
            T=float(rng.uniform(0.25, 2.5)),
            gamma_tilde=float(rng.uniform(-0.05, 0.05)),
            lam=float(rng.uniform(0.2, 1.5)),
            alpha=float(rng.uniform(-0.8, 0.8)),
            jump_marks=NormalMarks(float(rng.uniform(-0.2, 0.2)),
                                   float(rng.uniform(0.05, 0.4))))
        grid = GridSpec(16)
        raw = draw_raw_batch(p, grid, 1000 + trial, 0, 200)
        paths = materialize(p, grid, raw)
        gamma = effective_drift(p)
        seen = 0
        for group in paths.groups:
            seen += len(group.rows)
            t, w = group.t, group.w
            sum_y_left = group.sum_y_right - group.mark_at
            expected_left = p.x * np.exp(gamma * t + p.sigma * w
                                         + p.alpha * sum_y_left)
            np.testing.assert_allclose(group.x_left, expected_left, rtol=1e-12)
            np.testing.assert_allclose(
                group.x_right, group.x_left * np.exp(p.alpha * group.mark_at),
                rtol=1e-12)
            assert np.all(np.diff(t, axis=1) > 0.0)
            assert np.all(t[:, 0] == 0.0) and np.all(w[:, 0] == 0.0)
            assert np.all(group.x_left[:, 0] == p.x)
            np.testing.assert_allclose(t[:, -1], p.T, rtol=0, atol=1e-15)
            np.testing.assert_allclose(group.x_right[:, -1],
                                       paths.x_T[group.rows], rtol=1e-13)
            np.testing.assert_allclose(w[:, -1], paths.w_T[group.rows],
                                       rtol=0, atol=1e-14)
        assert seen == 200


def test_negated_batch_flips_brownian_only():
    grid = GridSpec(4)
    raw = draw_raw_batch(JUMPY, grid, 11, 0, 100)
    plain = materialize(JUMPY, grid, raw)
    anti = materialize(JUMPY, grid, raw, negate=True)
    np.testing.assert_array_equal(anti.w_T, -plain.w_T)
    np.testing.assert_array_equal(anti.sum_y, plain.sum_y)
    for gp, ga in zip(plain.groups, anti.groups):
        np.testing.assert_array_equal(ga.w, -gp.w)
        np.testing.assert_array_equal(ga.t, gp.t)
        np.testing.assert_array_equal(ga.mark_at, gp.mark_at)


def test_antithetic_pair_shares_jumps():
    a, b = antithetic_pair(JUMPY, GridSpec(8), derive_stream(21, 4))
    assert a.w_T == -b.w_T
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.jump_marks, b.jump_marks)
    np.testing.assert_array_equal(a.w, -b.w)


def test_single_path_equals_batch_row():
    grid = GridSpec(8)
    sample = simulate_path(JUMPY, grid, derive_stream(33, 7))
    raw = draw_raw_batch(JUMPY, grid, 33, 0, 16)
    paths = materialize(JUMPY, grid, raw)
    for group in paths.groups:
        where = np.nonzero(group.rows == 7)[0]
        if where.size:
            pos = int(where[0])
            np.testing.assert_array_equal(sample.t, group.t[pos])
            np.testing.assert_array_equal(sample.w, group.w[pos])
            np.testing.assert_array_equal(sample.x_left, group.x_left[pos])
            np.testing.assert_array_equal(sample.x_right, group.x_right[pos])
            break
    else:
        pytest.fail("path 7 not found in any group")
    assert sample.x_T == pytest.approx(float(paths.x_T[7]), rel=1e-15)


def test_point_mass_marks_scale_by_constant():
    p = ModelParams(x=100.0, r=0.0, sigma=0.2, T=1.0, lam=2.0, alpha=0.5,
                    jump_marks=PointMassMarks(0.3))
    sample = simulate_path(p, GridSpec(4), derive_stream(55, 4))
    assert sample.jump_times.size > 0
    assert np.all(sample.jump_marks == 0.3)
    ratios = sample.x_right / sample.x_left
    jump_nodes = ratios > 1.0 + 1e-12
    np.testing.assert_allclose(ratios[jump_nodes], np.exp(0.5 * 0.3), rtol=1e-12)
    assert np.count_nonzero(jump_nodes) == sample.jump_times.size


def test_iter_batches_partitions_range():
    spans = list(iter_batches(10_001, 2048))
    assert spans[0] == (0, 2048)
    assert spans[-1] == (10240 - 2048, 10_001)
    flat = []
    for lo, hi in spans:
        assert hi - lo <= 2048
        flat.extend(range(lo, hi))
    assert flat == list(range(10_001))
