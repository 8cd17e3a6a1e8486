import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbcsmooth import (
    AllDegenerateError,
    BandwidthGrid,
    SampleSet,
    loo_score_ll,
    loo_score_mbc,
    loo_table_mbc,
    select_ll,
    select_mbc,
)
from mbcsmooth.bandwidth import _argmin_first, _deleted_index
from mbcsmooth.simulation import SimConfig, generate_sample, get_function, reproduction_grids

from oracles import brute_loo_ll, brute_loo_mbc, random_loo_case, scores_match

HAND = SampleSet(np.array([0.0, 0.2, 0.45, 0.7, 1.0]), np.array([1.0, 1.8, 1.3, 2.4, 2.0]))


def test_grid_validation():
    with pytest.raises(ValueError):
        BandwidthGrid([])
    with pytest.raises(ValueError):
        BandwidthGrid([0.1, 0.1])
    with pytest.raises(ValueError):
        BandwidthGrid([-0.1, 0.2])
    grid = BandwidthGrid.logspace(0.01, 1.0, 3)
    np.testing.assert_allclose(grid.values, [0.01, 0.1, 1.0])
    assert len(grid) == 3 and list(grid) == grid.values.tolist()


def test_default_grid_spans_spacing_to_half_range():
    grid = BandwidthGrid.default_for(np.linspace(-0.2, 1.2, 101))
    assert grid.values[0] == pytest.approx(0.014) and grid.values[-1] == pytest.approx(0.7)
    assert len(grid) == 30


def test_deleted_index_rows():
    assert _deleted_index(4).tolist() == [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]


def test_hand_dataset_ll_against_refits():
    assert scores_match(loo_score_ll(HAND, 0.3), brute_loo_ll(HAND, 0.3))


def test_hand_dataset_mbc_against_refits():
    assert scores_match(loo_score_mbc(HAND, 0.4, 0.25), brute_loo_mbc(HAND, 0.4, 0.25))


@pytest.mark.parametrize("case", range(120))
def test_random_datasets_against_refits(case):
    data, h, h0, h1, offset = random_loo_case(np.random.default_rng([7, case]))
    assert scores_match(loo_score_ll(data, h), brute_loo_ll(data, h))
    fast = loo_score_mbc(data, h0, h1, offset=offset)
    assert scores_match(fast, brute_loo_mbc(data, h0, h1, offset))


def test_affine_data_scores_zero():
    xs = np.linspace(0, 1, 12)
    data = SampleSet(xs, 3 - 2 * xs)
    assert loo_score_ll(data, 0.2) == pytest.approx(0.0, abs=1e-25)


def test_constant_data_scores_zero_for_mbc():
    data = SampleSet(np.linspace(0, 1, 12), np.full(12, 1.7))
    table = loo_table_mbc(data, [0.1, 0.3], [0.1, 0.3])
    np.testing.assert_allclose(table, 0.0, atol=1e-25)


def test_degenerate_deletions_score_inf():
    data = SampleSet(np.array([0.0, 1.0, 2.0, 3.0]), np.array([1.0, 2.0, 0.0, 1.0]))
    assert loo_score_ll(data, 1e-3) == np.inf
    assert loo_score_mbc(data, 1e-3, 1.0) == np.inf


def test_too_few_points():
    with pytest.raises(ValueError):
        loo_score_ll(SampleSet(np.arange(3.0), np.zeros(3)), 1.0)


def test_single_element_grids():
    data = SampleSet(np.linspace(0, 1, 20), np.sin(np.linspace(0, 3, 20)))
    assert select_ll(data, [0.2]).selected == (0.2,)
    assert select_mbc(data, [0.3], [0.1]).selected == (0.3, 0.1)


def test_tie_goes_to_smallest_ll():
    data = SampleSet(np.linspace(0, 1, 50), np.zeros(50))
    result = select_ll(data, [0.01, 0.02])
    assert result.selected == (0.01,)
    assert result.score_table.tolist() == [0.0, 0.0]


def test_tie_goes_to_smallest_pair():
    data = SampleSet(np.linspace(0, 1, 30), np.zeros(30))
    result = select_mbc(data, [0.1, 0.2], [0.05, 0.1])
    assert np.all(result.score_table == 0.0)
    assert result.selected == (0.1, 0.05)


def test_argmin_is_first_in_row_major_order():
    table = np.array([[3.0, 1.0], [1.0, np.nan]])
    (a, b), clean = _argmin_first(table)
    assert (a, b) == (0, 1) and clean[1, 1] == np.inf


def test_all_degenerate_raises():
    data = SampleSet(np.array([0.0, 1.0, 2.0, 3.0]), np.array([1.0, 2.0, 0.0, 1.0]))
    with pytest.raises(AllDegenerateError):
        select_ll(data, [1e-4, 1e-3])
    with pytest.raises(AllDegenerateError):
        select_mbc(data, [1e-4], [1e-3, 1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(8, 30))
def test_selected_attains_table_minimum(seed, n):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 1, n))
    data = SampleSet(xs, 2 + np.cos(5 * xs) + rng.normal(0, 0.2, n))
    grid = BandwidthGrid.logspace(0.03, 0.5, 6)
    for result in (select_ll(data, grid), select_mbc(data, grid, grid)):
        finite = result.score_table[np.isfinite(result.score_table)]
        assert result.score == finite.min() and result.score >= 0
        rows = list(result.rows())
        assert len(rows) == result.score_table.size
        assert min(r[-1] for r in rows) == result.score


def test_doubling_n_does_not_inflate_bandwidth():
    f, grid = get_function("m1"), reproduction_grids().h
    step = grid.values[1] / grid.values[0]

    def median_h(n):
        cfg = SimConfig(n=n, replications=20, seed=0)
        return np.median([select_ll(generate_sample(f, cfg, r), grid).selected[0] for r in range(20)])

    assert median_h(100) <= median_h(50) * step * (1 + 1e-12)
