import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from carnot.algebra import resolve_group
from carnot.dimension import (
    BoxCountingDimension,
    PointCloud,
    anisotropic_box_count,
    cell_keys,
    cube_cloud,
    dimension_fit,
    gridmap_box_count_table,
    preset_gridmap,
    run_preset,
    worker_count,
)
from carnot.algebra import tomllib
from carnot.errors import SaturationWarning
from carnot.grid import generate


def test_single_point(heisenberg):
    for eps in (0.5, 0.01):
        assert anisotropic_box_count(np.array([[0.1, 0.2, 0.3]]), heisenberg, eps) == 1


@pytest.mark.parametrize("metric", ["homogeneous", "euclidean"])
def test_horizontal_segment_counts(heisenberg, metric):
    t = np.arange(4096) / 4096
    pts = np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=1)
    for k in range(1, 7):
        assert anisotropic_box_count(pts, heisenberg, 2.0**-k, metric) == 2**k


def test_vertical_segment_counts(heisenberg):
    t = np.arange(1 << 14) / (1 << 14)
    pts = np.stack([np.zeros_like(t), np.zeros_like(t), t], axis=1)
    for k in range(1, 6):
        assert anisotropic_box_count(pts, heisenberg, 2.0**-k) == 4**k


def test_cube_mode_ordering(heisenberg):
    rep = run_preset("cube", heisenberg, scales=[2.0**-k for k in range(2, 6)])
    assert rep.homogeneous.slope > rep.euclidean.slope


def test_cube_exact_with_coordinate_cells(heisenberg):
    cloud = cube_cloud(heisenberg, 2.0**-4)
    for k in range(1, 5):
        assert anisotropic_box_count(cloud, heisenberg, 2.0**-k, cells="coordinate") == 2 ** (4 * k)
        assert anisotropic_box_count(cloud, heisenberg, 2.0**-k, "euclidean") == 2 ** (3 * k)


def test_translated_cells_agree_on_first_layer(heisenberg):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(100, 3))
    a = cell_keys(pts, heisenberg, 0.25, cells="translated")
    b = cell_keys(pts, heisenberg, 0.25, cells="coordinate")
    np.testing.assert_array_equal(a[:, :2], b[:, :2])


def test_translated_cell_contains_its_points(heisenberg):
    # x^{-1} p for the cell corner x lies in the anisotropic unit box
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, size=(500, 3))
    eps = 0.3
    keys, base = cell_keys(pts, heisenberg, eps, return_base=True)
    from carnot.group import bch_product
    w = bch_product(heisenberg, -base, pts)
    sides = eps ** np.array(heisenberg.degrees, dtype=float)
    assert np.all(w >= -1e-12) and np.all(w < sides + 1e-12)


@given(st.floats(0.5, 4.0), st.floats(1.0, 100.0))
def test_fit_recovers_power_law(D, c):
    scales = [2.0**-k for k in range(2, 8)]
    slope, resid = dimension_fit([(e, c * e**-D) for e in scales])
    assert slope == pytest.approx(D, abs=1e-9)
    assert resid < 1e-9


def test_fit_needs_three_scales():
    with pytest.raises(ValueError):
        dimension_fit([(0.5, 2), (0.25, 4)])


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.sampled_from(["heisenberg", "engel"]))
def test_nested_counts_monotone_and_ordered(seed, name):
    alg = resolve_group(name)
    pts = np.random.default_rng(seed).uniform(0, 1, size=(300, alg.q))
    scales = [2.0**-k for k in range(1, 6)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        hom = [anisotropic_box_count(pts, alg, e, cells="coordinate") for e in scales]
        euc = [anisotropic_box_count(pts, alg, e, "euclidean") for e in scales]
    assert hom == sorted(hom) and euc == sorted(euc)
    # dyadic homogeneous cells refine euclidean cells of the same eps
    assert all(h >= e for h, e in zip(hom, euc))
    assert all(n <= len(pts) for n in hom)


def test_sparse_cloud_warns(heisenberg):
    pts = np.random.default_rng(0).uniform(0, 1, size=(10, 3))
    with pytest.warns(SaturationWarning):
        anisotropic_box_count(pts, heisenberg, 2.0**-7)


def test_undersampled_grid_warns(heisenberg):
    gm = generate("vertical_plane", resolution=(5, 5))
    with pytest.warns(SaturationWarning):
        anisotropic_box_count(PointCloud.from_gridmap(gm), heisenberg, 2.0**-6)


def test_invalid_inputs(heisenberg):
    with pytest.raises(ValueError):
        anisotropic_box_count(np.zeros((2, 3)), heisenberg, 0.0)
    with pytest.raises(ValueError):
        anisotropic_box_count(np.zeros((2, 3)), heisenberg, 0.1, metric="taxicab")
    with pytest.raises(ValueError):
        anisotropic_box_count(np.full((2, 3), np.nan), heisenberg, 0.1)
    with pytest.raises(ValueError):
        anisotropic_box_count(np.zeros((2, 4)), heisenberg, 0.1)


def test_estimator_api():
    est = BoxCountingDimension(group="heisenberg", metric="euclidean", scales=[2.0**-k for k in range(1, 6)])
    assert est.get_params()["metric"] == "euclidean"
    other = clone(est).set_params(metric="homogeneous")
    assert other.metric == "homogeneous" and est.metric == "euclidean"
    t = np.arange(4096) / 4096
    X = np.stack([t, t, 0 * t], axis=1)
    est.fit(X)
    assert est.dimension_ == pytest.approx(1.0, abs=0.05)
    assert est.n_features_in_ == 3
    assert len(est.counts_) == 5
    with pytest.raises(ValueError):
        BoxCountingDimension(metric="bogus").fit(X)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("CARNOT_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("CARNOT_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()


def test_thread_count_does_not_change_counts(monkeypatch, heisenberg):
    gm = preset_gridmap("vertical-plane", heisenberg)
    scales = [2.0**-k for k in range(2, 6)]
    monkeypatch.setenv("CARNOT_THREADS", "1")
    a = gridmap_box_count_table(gm, heisenberg, scales)
    monkeypatch.setenv("CARNOT_THREADS", "4")
    b = gridmap_box_count_table(gm, heisenberg, scales)
    assert a.counts == b.counts


def test_counts_independent_of_stored_resolution(heisenberg):
    scales = [2.0**-k for k in range(2, 7)]
    a = gridmap_box_count_table(generate("legendrian_lift", resolution=(65, 5)), heisenberg, scales)
    b = gridmap_box_count_table(generate("legendrian_lift", resolution=(33, 3)), heisenberg, scales)
    assert a.counts == b.counts


def test_graph_preset_passes(heisenberg):
    rep = run_preset("graph", heisenberg, scales=[2.0**-k for k in range(2, 7)])
    assert rep.verdict == "PASS"
    assert 2.8 <= rep.homogeneous.slope <= 3.2
    assert rep.homogeneous.is_monotone()


def test_report_serialisation(heisenberg):
    rep = run_preset("legendrian-cylinder", heisenberg, seed=4)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "# seed = 4" and lines[1] == "eps,N_homogeneous,N_euclidean"
    assert len(lines) == 2 + 6
    doc = tomllib.loads(rep.to_toml())["dimension"]
    assert doc["verdict"] == "INAPPLICABLE" and doc["Q"] == 4


def test_gridmap_without_generator_uses_samples(heisenberg):
    gm = generate("vertical_plane", resolution=(129, 129))
    bare = type(gm)(gm.domain, gm.resolution, np.array(gm.values))
    res = gridmap_box_count_table(bare, heisenberg, [2.0**-k for k in range(1, 4)], "euclidean")
    # the closed grid carries its far edge into one extra row of cells
    assert res.counts == [9, 25, 81]


@pytest.mark.parametrize("preset", ["vertical-plane", "legendrian-cylinder"])
def test_refinement_stability(heisenberg, preset):
    gm = preset_gridmap(preset, heisenberg)
    scales = [2.0**-k for k in range(2, 7)]
    base = gridmap_box_count_table(gm, heisenberg, scales)
    fine = gridmap_box_count_table(gm, heisenberg, scales, refine=2.0)
    assert abs(fine.slope - base.slope) <= max(base.residual, 1e-12)


@pytest.mark.parametrize("preset", ["vertical-plane", "legendrian-cylinder"])
def test_mode_ordering_on_presets(heisenberg, preset):
    rep = run_preset(preset, heisenberg, scales=[2.0**-k for k in range(2, 7)])
    hom, euc = rep.homogeneous, rep.euclidean
    # a horizontal curve has equal dimensions in both modes; only fit noise separates them
    slack = 0.0 if preset == "vertical-plane" else hom.residual + euc.residual
    assert hom.slope >= euc.slope - slack
    assert rep.homogeneous.is_monotone() and rep.euclidean.is_monotone()


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_slope_bounds(seed):
    alg = resolve_group("heisenberg")
    rng = np.random.default_rng(seed)
    # a dense random blob so the fit has unsaturated scales
    pts = rng.uniform(0, 1, size=(20_000, 3)) ** rng.uniform(0.5, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        counts = [(e, anisotropic_box_count(pts, alg, e, cells="coordinate")) for e in (0.5, 0.25, 0.125)]
    slope, _ = dimension_fit(counts)
    assert -1e-9 <= slope <= alg.Q + 1e-9
