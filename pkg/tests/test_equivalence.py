import numpy as np
import pytest

from cvtrust.channel import ChannelSpec, transmit
from cvtrust.detectors import (
    HETERODYNE,
    HOMODYNE,
    DetectorSpec,
    noisy_measurement_density,
)
from cvtrust.gaussian import coherent_state
from cvtrust.equivalence import (
    CSV_COLUMNS,
    SweepConfig,
    analytic_sweep,
    mixture_quadrature_oracle,
    channel_moment_oracle,
    default_alpha_grid,
    default_spec_grid,
    default_sweep_config,
    gaussian_weight_nodes,
    holm_rejections,
    monte_carlo_sweep,
    reduced_mc_config,
)


def small_config(**overrides):
    base = dict(
        alphas=default_alpha_grid((1.0, 3.0), 4),
        specs=default_spec_grid((0.7,), (1e-2,)),
    )
    base.update(overrides)
    return SweepConfig(**base)


def test_default_grids_shapes():
    assert len(default_alpha_grid()) == 32
    assert len(default_spec_grid()) == 32
    assert default_sweep_config().n_cells == 1024
    assert reduced_mc_config().n_cells == 32


def test_default_spec_grid_noise_products():
    specs = default_spec_grid(eta_ds=(0.7,), nus=(1e-3,), kinds=(HOMODYNE,))
    assert len(specs) == 1
    assert np.isclose(specs[0].noise_product, 1e-3, rtol=1e-14)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(alphas=(), specs=default_spec_grid())
    with pytest.raises(ValueError):
        SweepConfig(alphas=(1 + 0j,), specs=())
    with pytest.raises(ValueError):
        small_config(sabotage="invert")
    with pytest.raises(ValueError):
        small_config(mc_samples=-1)
    with pytest.raises(ValueError):
        small_config(param_tol=0.0)
    with pytest.raises(ValueError):
        small_config(ks_alpha=1.0)


def test_sweep_config_json_roundtrip():
    config = small_config(mc_samples=10**4, seed=3, sabotage="scale-r")
    data = config.to_json_dict()
    assert data["schema"] == "cvtrust/verify-config/1"
    back = SweepConfig.from_json_dict(data)
    assert back.alphas == config.alphas
    assert back.specs == config.specs
    assert back.seed == 3
    assert back.sabotage == "scale-r"


def test_sweep_config_rejects_unknown_keys_and_schema():
    data = small_config().to_json_dict()
    data["extra"] = 1
    with pytest.raises(ValueError):
        SweepConfig.from_json_dict(data)
    data = small_config().to_json_dict()
    data["schema"] = "cvtrust/verify-config/2"
    with pytest.raises(ValueError):
        SweepConfig.from_json_dict(data)


def test_analytic_sweep_full_grid_passes():
    report = analytic_sweep(default_sweep_config())
    assert report.passed
    assert report.mode == "analytic"
    assert len(report.cells) == 1024
    assert report.worst_mean_gap <= 1e-14
    assert report.worst_var_gap <= 1e-14
    assert report.worst_tv <= 1e-14
    assert report.n_rejections == 0


def test_analytic_sweep_noiseless_cells_are_exact():
    report = analytic_sweep(default_sweep_config())
    noiseless = [c for c in report.cells if c.spec.nbar == 0.0]
    assert len(noiseless) == 256
    for cell in noiseless:
        assert cell.mean_gap == 0.0
        assert cell.var_gap == 0.0
        assert cell.tv_estimate == 0.0


def test_analytic_sweep_detects_skipped_rescale():
    report = analytic_sweep(small_config(sabotage="skip-rescale"))
    assert not report.passed
    assert report.n_rejections == report.config.n_cells
    assert report.worst_var_gap > 1e-3


def test_analytic_sweep_detects_inflated_r():
    report = analytic_sweep(small_config(sabotage="scale-r"))
    assert not report.passed
    # a 1 percent error in r shows up as roughly 2 percent in variance
    assert 0.01 < report.worst_var_gap < 0.05


def test_analytic_sweep_is_deterministic():
    a = analytic_sweep(small_config())
    b = analytic_sweep(small_config())
    assert a.to_csv_text() == b.to_csv_text()


def test_report_csv_contract():
    report = analytic_sweep(small_config())
    lines = report.to_csv_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + report.config.n_cells
    first = lines[1].split(",")
    assert len(first) == len(CSV_COLUMNS)
    assert first[2] in (HOMODYNE, HETERODYNE)
    # analytic sweeps carry no KS statistic
    assert first[7] == ""
    assert first[8] in ("true", "false")
    # float fields round-trip through repr
    assert float(first[5]) == report.cells[0].mean_gap


def test_report_json_summary():
    report = analytic_sweep(small_config())
    data = report.to_json_dict()
    assert data["schema"] == "cvtrust/verify-report/1"
    assert data["summary"]["cells"] == 16
    assert data["summary"]["rejections"] == 0
    assert data["summary"]["passed"] is True
    assert data["summary"]["max_ks_stat"] is None
    assert len(data["cells"]) == 16
    assert data["cells"][0]["pass"] is True


def test_holm_rejections_step_down():
    assert holm_rejections([0.001, 0.02, 0.04, 0.5], 0.05) == {0}
    assert holm_rejections([0.001, 0.01, 0.02, 0.5], 0.05) == {0, 1, 2}
    assert holm_rejections([0.9, 0.8], 0.05) == set()
    assert holm_rejections([1e-9, 1e-9, 1e-9], 0.05) == {0, 1, 2}
    assert holm_rejections([], 0.05) == set()


def test_holm_is_at_least_as_powerful_as_bonferroni():
    rng = np.random.default_rng(1)
    pvals = list(rng.uniform(0, 1, 20))
    pvals[3] = 1e-6
    bonferroni = {i for i, p in enumerate(pvals) if p <= 0.05 / len(pvals)}
    assert bonferroni <= holm_rejections(pvals, 0.05)


def test_monte_carlo_sweep_requires_enough_samples():
    with pytest.raises(ValueError):
        monte_carlo_sweep(small_config(mc_samples=100))


def test_monte_carlo_sweep_passes_on_faithful_models():
    report = monte_carlo_sweep(reduced_mc_config(seed=0, mc_samples=10**5))
    assert report.passed
    assert report.mode == "mc"
    assert report.n_rejections == 0
    stats = [c.ks_statistic for c in report.cells]
    assert all(s is not None for s in stats)
    assert max(stats) < 0.01


def test_monte_carlo_sweep_detects_skipped_rescale():
    report = monte_carlo_sweep(
        reduced_mc_config(seed=0, mc_samples=10**5, sabotage="skip-rescale")
    )
    assert not report.passed
    assert report.n_rejections > 0
    assert max(c.ks_statistic for c in report.cells) > 0.01


def test_monte_carlo_sweep_is_deterministic():
    config = small_config(mc_samples=10**4, seed=9)
    a = monte_carlo_sweep(config)
    b = monte_carlo_sweep(config)
    assert a.to_csv_text() == b.to_csv_text()
    assert a.to_json_dict() == b.to_json_dict()


def test_monte_carlo_false_positive_control():
    for seed in (0, 1, 2):
        report = monte_carlo_sweep(small_config(mc_samples=10**4, seed=seed))
        assert report.passed, f"seed {seed} produced spurious rejections"


def test_gaussian_weight_nodes_normalization():
    nodes, weights = gaussian_weight_nodes(0.15, 64, radius=6 * np.sqrt(0.3))
    assert abs(weights.sum() - 1.0) < 1e-8
    assert abs(np.sum(weights * nodes.real**2) - 0.15) < 1e-8
    assert abs(np.sum(weights * nodes.real * nodes.imag)) < 1e-12
    with pytest.raises(ValueError):
        gaussian_weight_nodes(0.0, 16, 1.0)


def test_mixture_quadrature_oracle_matches_homodyne_engine():
    spec = DetectorSpec(HOMODYNE, 0.85, nbar=0.3)
    density = noisy_measurement_density(coherent_state(1.5 + 0.5j), spec)
    sigma = np.sqrt(density.cov[0, 0])
    grid = np.linspace(density.mean[0] - 6 * sigma, density.mean[0] + 6 * sigma, 61)
    table = mixture_quadrature_oracle(1.5 + 0.5j, spec, grid)
    assert table.error_estimate <= 1e-9
    assert np.max(np.abs(table.density - density.pdf(grid))) < 1e-8


def test_mixture_quadrature_oracle_matches_heterodyne_engine():
    spec = DetectorSpec(HETERODYNE, 0.6, nbar=2.0)
    density = noisy_measurement_density(coherent_state(1 - 1j), spec)
    axis = np.linspace(-2.5, 2.5, 21)
    grid = (density.mean[0] + axis[:, None] + 1j * (density.mean[1] + axis[None, :])).ravel()
    table = mixture_quadrature_oracle(1 - 1j, spec, grid)
    assert table.error_estimate <= 1e-9
    assert np.max(np.abs(table.density - density.pdf(grid))) < 1e-8


def test_mixture_quadrature_oracle_total_variation_bound():
    spec = DetectorSpec(HOMODYNE, 0.7, nbar=1.0)
    density = noisy_measurement_density(coherent_state(2.0), spec)
    sigma = np.sqrt(density.cov[0, 0])
    grid = np.linspace(density.mean[0] - 8 * sigma, density.mean[0] + 8 * sigma, 2001)
    table = mixture_quadrature_oracle(2.0, spec, grid)
    tv = 0.5 * np.trapezoid(np.abs(table.density - density.pdf(grid)), grid)
    assert tv < 1e-8


def test_mixture_quadrature_oracle_degenerate_inputs():
    grid = np.linspace(-3, 3, 11)
    with pytest.raises(ValueError):
        mixture_quadrature_oracle(0.0, DetectorSpec(HOMODYNE, 0.9, nbar=0.0), grid)
    with pytest.raises(ValueError):
        mixture_quadrature_oracle(0.0, DetectorSpec(HOMODYNE, 1.0, nbar=0.5), grid)
    with pytest.raises(ValueError):
        mixture_quadrature_oracle(0.0, DetectorSpec(HOMODYNE, 0.9, nbar=0.5), np.empty(0))


def test_mixture_quadrature_oracle_reports_nonconvergence():
    grid = np.linspace(-3, 3, 11)
    spec = DetectorSpec(HOMODYNE, 0.9, nbar=0.5)
    with pytest.raises(RuntimeError, match="achieved error estimate"):
        mixture_quadrature_oracle(0.0, spec, grid, target_error=1e-18, max_nodes=96)


def test_channel_moment_oracle_matches_engine():
    out = transmit(coherent_state(1.5 - 0.5j), ChannelSpec(0.8, 1e-3))
    oracle = channel_moment_oracle(1.5 - 0.5j, 0.8, 1e-3)
    assert np.allclose(oracle["mean"], out.mean, atol=1e-8)
    assert np.allclose(oracle["variance"], np.diag(out.cov), atol=1e-8)


def test_channel_moment_oracle_degenerate_inputs():
    with pytest.raises(ValueError):
        channel_moment_oracle(1.0, 0.0, 1e-3)
    with pytest.raises(ValueError):
        channel_moment_oracle(1.0, 0.8, 0.0)
