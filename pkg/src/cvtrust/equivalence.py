"""Verification lab for the noise-to-loss detector reduction.

Two routes check that a noisy detector and its rescaled lossy counterpart
are indistinguishable on coherent inputs:

* analytic sweeps compare the closed-form Gaussian outcome densities
  parameter by parameter over a grid of amplitudes and detector specs;
* Monte Carlo sweeps draw outcomes from both models and apply two-sample
  Kolmogorov-Smirnov tests with a Holm correction across the grid.

An independent numeric oracle is included: it integrates the thermal
mixture of coherent-state outcome densities by 2-d quadrature, sharing no
covariance arithmetic with the Gaussian engine, and is used to validate
the closed-form densities.  Deliberate sabotage modes de-tune the rescale
step so the machinery's ability to catch a wrong reduction can be tested.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import ks_2samp

from .detectors import (
    HETERODYNE,
    HOMODYNE,
    KINDS,
    DetectorSpec,
    OutcomeDensity,
    noisy_measurement_density,
    rescaled_lossy_density,
    sample_outcomes,
)
from .gaussian import coherent_state
from .rescaling import rescale_plan

SABOTAGE_MODES = ("none", "skip-rescale", "scale-r")

CSV_COLUMNS = (
    "alpha_re",
    "alpha_im",
    "kind",
    "eta_d",
    "nbar",
    "mean_gap",
    "var_gap",
    "ks_stat",
    "pass",
)


@dataclass(frozen=True, eq=False)
class SweepConfig:
    """Grid and tolerances for an equivalence sweep.

    Attributes:
        alphas: Coherent amplitudes to probe.
        specs: Detector specs to probe; cells are the product of the two
            grids, spec-major.
        mc_samples: Draws per model per cell for Monte Carlo sweeps.
        seed: Base RNG seed; each cell uses its own substreams.
        param_tol: Analytic pass threshold on mean and variance gaps.
        tv_tol: Analytic pass threshold on the total-variation estimate.
        ks_alpha: Family-wise level of the Holm-corrected KS tests.
        sabotage: "none" for faithful comparison, "skip-rescale" to drop
            the outcome rescale, "scale-r" to inflate r by 1 percent.
    """

    alphas: tuple[complex, ...]
    specs: tuple[DetectorSpec, ...]
    mc_samples: int = 0
    seed: int = 0
    param_tol: float = 1e-12
    tv_tol: float = 1e-9
    ks_alpha: float = 0.01
    sabotage: str = "none"

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(complex(a) for a in self.alphas))
        object.__setattr__(self, "specs", tuple(self.specs))
        if not self.alphas:
            raise ValueError("alpha grid must not be empty")
        if not self.specs:
            raise ValueError("spec grid must not be empty")
        if self.sabotage not in SABOTAGE_MODES:
            raise ValueError(f"sabotage must be one of {SABOTAGE_MODES}")
        if int(self.mc_samples) < 0:
            raise ValueError("mc_samples must be non-negative")
        object.__setattr__(self, "mc_samples", int(self.mc_samples))
        object.__setattr__(self, "seed", int(self.seed))
        for name in ("param_tol", "tv_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.ks_alpha < 1.0:
            raise ValueError("ks_alpha must lie strictly between 0 and 1")

    @property
    def n_cells(self) -> int:
        return len(self.alphas) * len(self.specs)

    def to_json_dict(self) -> dict:
        return {
            "schema": "cvtrust/verify-config/1",
            "alphas": [[a.real, a.imag] for a in self.alphas],
            "specs": [
                {"kind": s.kind, "eta_d": s.eta_d, "nbar": s.nbar} for s in self.specs
            ],
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "param_tol": self.param_tol,
            "tv_tol": self.tv_tol,
            "ks_alpha": self.ks_alpha,
            "sabotage": self.sabotage,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        schema = data.pop("schema", "cvtrust/verify-config/1")
        if schema != "cvtrust/verify-config/1":
            raise ValueError(f"unsupported sweep config schema {schema!r}")
        try:
            alphas = tuple(complex(re, im) for re, im in data.pop("alphas"))
            specs = tuple(
                DetectorSpec(s["kind"], s["eta_d"], s["nbar"])
                for s in data.pop("specs")
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed sweep config: {exc}") from exc
        known = {"mc_samples", "seed", "param_tol", "tv_tol", "ks_alpha", "sabotage"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(alphas=alphas, specs=specs, **data)


@dataclass(frozen=True)
class CellResult:
    """Comparison outcome for one (alpha, spec) grid cell."""

    alpha: complex
    spec: DetectorSpec
    mean_gap: float
    var_gap: float
    tv_estimate: float
    ks_statistic: float | None
    ks_pvalue: float | None
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "alpha_re": self.alpha.real,
            "alpha_im": self.alpha.imag,
            "kind": self.spec.kind,
            "eta_d": self.spec.eta_d,
            "nbar": self.spec.nbar,
            "mean_gap": self.mean_gap,
            "var_gap": self.var_gap,
            "tv_estimate": self.tv_estimate,
            "ks_stat": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "pass": self.passed,
        }


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    """Result of one sweep over the full grid."""

    mode: str
    config: SweepConfig
    cells: tuple[CellResult, ...]
    passed: bool

    @property
    def worst_mean_gap(self) -> float:
        return max(c.mean_gap for c in self.cells)

    @property
    def worst_var_gap(self) -> float:
        return max(c.var_gap for c in self.cells)

    @property
    def worst_tv(self) -> float:
        return max(c.tv_estimate for c in self.cells)

    @property
    def n_rejections(self) -> int:
        return sum(not c.passed for c in self.cells)

    def to_json_dict(self) -> dict:
        stats = [c.ks_statistic for c in self.cells if c.ks_statistic is not None]
        pvals = [c.ks_pvalue for c in self.cells if c.ks_pvalue is not None]
        return {
            "schema": "cvtrust/verify-report/1",
            "mode": self.mode,
            "config": self.config.to_json_dict(),
            "summary": {
                "cells": len(self.cells),
                "passed": self.passed,
                "rejections": self.n_rejections,
                "worst_mean_gap": self.worst_mean_gap,
                "worst_var_gap": self.worst_var_gap,
                "worst_tv": self.worst_tv,
                "max_ks_stat": max(stats) if stats else None,
                "min_ks_pvalue": min(pvals) if pvals else None,
            },
            "cells": [c.to_json_dict() for c in self.cells],
        }

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in self.cells:
            writer.writerow(
                [
                    repr(c.alpha.real),
                    repr(c.alpha.imag),
                    c.spec.kind,
                    repr(c.spec.eta_d),
                    repr(c.spec.nbar),
                    repr(c.mean_gap),
                    repr(c.var_gap),
                    "" if c.ks_statistic is None else repr(c.ks_statistic),
                    str(c.passed).lower(),
                ]
            )
        return buf.getvalue()


def default_alpha_grid(
    amplitudes: tuple[float, ...] = (0.0, 1.0, 3.0, 5.0), n_phases: int = 8
) -> tuple[complex, ...]:
    """Amplitude-by-phase grid of coherent amplitudes."""
    phases = [2.0 * math.pi * k / n_phases for k in range(n_phases)]
    return tuple(
        amp * complex(math.cos(ph), math.sin(ph)) for amp in amplitudes for ph in phases
    )


def default_spec_grid(
    eta_ds: tuple[float, ...] = (0.5, 0.7, 0.9, 1.0 - 1e-6),
    nus: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2),
    kinds: tuple[str, ...] = KINDS,
) -> tuple[DetectorSpec, ...]:
    """Detector grid parameterized by efficiency and noise product."""
    return tuple(
        DetectorSpec.from_noise_product(kind, eta_d, nu=nu)
        for kind in kinds
        for eta_d in eta_ds
        for nu in nus
    )


def default_sweep_config(**overrides) -> SweepConfig:
    """The full analytic verification grid (32 amplitudes x 32 specs)."""
    base = SweepConfig(alphas=default_alpha_grid(), specs=default_spec_grid())
    return replace(base, **overrides) if overrides else base


def reduced_mc_config(
    seed: int = 0, mc_samples: int = 10**6, sabotage: str = "none", nu: float = 1e-2
) -> SweepConfig:
    """A 32-cell grid sized for Monte Carlo sweeps.

    Eight amplitudes (moduli 1 and 3, four phases each) against four
    specs (eta_d 0.7 and 0.9, both kinds) at a single noise product.
    """
    return SweepConfig(
        alphas=default_alpha_grid(amplitudes=(1.0, 3.0), n_phases=4),
        specs=default_spec_grid(eta_ds=(0.7, 0.9), nus=(nu,)),
        mc_samples=mc_samples,
        seed=seed,
        sabotage=sabotage,
    )


def _iter_cells(config: SweepConfig):
    index = 0
    for spec in config.specs:
        for alpha in config.alphas:
            yield index, alpha, spec
            index += 1


def _sabotaged_r(r: float, sabotage: str) -> float:
    if sabotage == "skip-rescale":
        return 1.0
    if sabotage == "scale-r":
        return r * 1.01
    return r


def _relative_gap(a: np.ndarray, b: np.ndarray, floor: float) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    gaps = [
        0.0 if x == y else float(abs(x - y)) / max(floor, abs(x), abs(y))
        for x, y in zip(a, b)
    ]
    return float(max(gaps))


def _tv_distance(d1: OutcomeDensity, d2: OutcomeDensity) -> float:
    """Total variation between two outcome densities by grid quadrature."""
    if np.array_equal(d1.mean, d2.mean) and np.array_equal(d1.cov, d2.cov):
        return 0.0
    if d1.ndim == 1:
        sd = math.sqrt(max(d1.cov[0, 0], d2.cov[0, 0]))
        lo = min(d1.mean[0], d2.mean[0]) - 9.0 * sd
        hi = max(d1.mean[0], d2.mean[0]) + 9.0 * sd
        x = np.linspace(lo, hi, 4001)
        return 0.5 * float(np.trapezoid(np.abs(d1.pdf(x) - d2.pdf(x)), x))
    sd = math.sqrt(max(d1.cov.max(), d2.cov.max()))
    lo = np.minimum(d1.mean, d2.mean) - 8.0 * sd
    hi = np.maximum(d1.mean, d2.mean) + 8.0 * sd
    xs = np.linspace(lo[0], hi[0], 201)
    ys = np.linspace(lo[1], hi[1], 201)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    diff = np.abs(d1.pdf(grid) - d2.pdf(grid)).reshape(len(xs), len(ys))
    inner = np.trapezoid(diff, ys, axis=1)
    return 0.5 * float(np.trapezoid(inner, xs))


def holm_rejections(pvalues: list[float], alpha: float) -> set[int]:
    """Indices rejected by the Holm step-down procedure at level alpha."""
    m = len(pvalues)
    order = np.argsort(pvalues, kind="stable")
    rejected: set[int] = set()
    for rank, idx in enumerate(order):
        if pvalues[idx] <= alpha / (m - rank):
            rejected.add(int(idx))
        else:
            break
    return rejected


def analytic_sweep(config: SweepConfig) -> EquivalenceReport:
    """Compare closed-form densities of both detector models over the grid.

    Each cell passes when the relative mean gap, the relative variance
    gap and the total-variation estimate between the noisy-detector
    density and the (possibly sabotaged) rescaled lossy density fall
    within the configured tolerances.
    """
    cells = []
    for _, alpha, spec in _iter_cells(config):
        plan = rescale_plan(spec)
        state = coherent_state(alpha)
        noisy = noisy_measurement_density(state, spec)
        r_used = _sabotaged_r(plan.r, config.sabotage)
        equivalent = rescaled_lossy_density(state, spec.kind, plan.eta_e, r_used)
        mean_gap = _relative_gap(noisy.mean, equivalent.mean, floor=1.0)
        var_gap = _relative_gap(noisy.cov, equivalent.cov, floor=0.0)
        tv = _tv_distance(noisy, equivalent)
        passed = bool(
            mean_gap <= config.param_tol
            and var_gap <= config.param_tol
            and tv <= config.tv_tol
        )
        cells.append(
            CellResult(
                alpha=alpha,
                spec=spec,
                mean_gap=mean_gap,
                var_gap=var_gap,
                tv_estimate=tv,
                ks_statistic=None,
                ks_pvalue=None,
                passed=passed,
            )
        )
    return EquivalenceReport(
        mode="analytic",
        config=config,
        cells=tuple(cells),
        passed=all(c.passed for c in cells),
    )


def monte_carlo_sweep(config: SweepConfig) -> EquivalenceReport:
    """Compare sampled outcomes of both detector models over the grid.

    Per cell, mc_samples outcomes are drawn from the noisy detector and
    divided by r (the division is dropped or de-tuned under sabotage),
    another mc_samples are drawn from the lossy ideal detector, and the
    two samples are KS-tested per outcome component.  Cell p-values are
    Bonferroni-combined across components and a Holm correction at level
    ks_alpha decides rejections across the grid.
    """
    if config.mc_samples < 10**4:
        raise ValueError("Monte Carlo sweeps require mc_samples >= 10^4")
    raw: list[tuple] = []
    pvalues: list[float] = []
    for index, alpha, spec in _iter_cells(config):
        plan = rescale_plan(spec)
        state = coherent_state(alpha)
        noisy = noisy_measurement_density(state, spec)
        lossy_ideal = rescaled_lossy_density(state, spec.kind, plan.eta_e, 1.0)
        factor = 1.0 / _sabotaged_r(plan.r, config.sabotage)
        a = factor * sample_outcomes(noisy, config.mc_samples, config.seed, 2 * index)
        b = sample_outcomes(lossy_ideal, config.mc_samples, config.seed, 2 * index + 1)
        if np.iscomplexobj(a):
            pairs = [(a.real, b.real), (a.imag, b.imag)]
        else:
            pairs = [(a, b)]
        stats, pvals = [], []
        for xs, ys in pairs:
            result = ks_2samp(xs, ys)
            stats.append(float(result.statistic))
            pvals.append(float(result.pvalue))
        pvalue = min(1.0, len(pairs) * min(pvals))
        mean_gap = _relative_gap(
            [float(np.mean(xs)) for xs, _ in pairs],
            [float(np.mean(ys)) for _, ys in pairs],
            floor=1.0,
        )
        var_gap = _relative_gap(
            [float(np.var(xs, ddof=1)) for xs, _ in pairs],
            [float(np.var(ys, ddof=1)) for _, ys in pairs],
            floor=0.0,
        )
        raw.append((alpha, spec, mean_gap, var_gap, max(stats), pvalue))
        pvalues.append(pvalue)
    rejected = holm_rejections(pvalues, config.ks_alpha)
    cells = tuple(
        CellResult(
            alpha=alpha,
            spec=spec,
            mean_gap=mean_gap,
            var_gap=var_gap,
            tv_estimate=0.0,
            ks_statistic=stat,
            ks_pvalue=pvalue,
            passed=index not in rejected,
        )
        for index, (alpha, spec, mean_gap, var_gap, stat, pvalue) in enumerate(raw)
    )
    return EquivalenceReport(
        mode="mc",
        config=config,
        cells=cells,
        passed=not rejected,
    )


@dataclass(frozen=True, eq=False)
class OracleTable:
    """Numerically integrated outcome density on a fixed outcome grid.

    Attributes:
        points: Outcome grid, real shape (m,) or complex shape (m,).
        density: Density values on the grid.
        error_estimate: Sup-norm change at the last quadrature refinement.
    """

    points: np.ndarray
    density: np.ndarray
    error_estimate: float


def gaussian_weight_nodes(
    var_component: float, n_nodes: int, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre nodes for a centered isotropic complex Gaussian.

    Returns complex nodes and weights such that sum(w_i f(z_i))
    approximates the integral of f against a Gaussian with the given
    variance per real component, truncated at the given radius.
    """
    if var_component <= 0:
        raise ValueError("variance per component must be positive")
    x, w = np.polynomial.legendre.leggauss(int(n_nodes))
    u = radius * x
    w1 = (
        radius
        * w
        * np.exp(-0.5 * u * u / var_component)
        / math.sqrt(2.0 * math.pi * var_component)
    )
    nodes = (u[:, None] + 1j * u[None, :]).ravel()
    weights = np.outer(w1, w1).ravel()
    return nodes, weights


def _mixture_density(
    points: np.ndarray,
    shifted_means: np.ndarray,
    weights: np.ndarray,
    kind: str,
    chunk: int = 8192,
) -> np.ndarray:
    out = np.zeros(points.shape[0])
    for start in range(0, shifted_means.size, chunk):
        mu = shifted_means[start : start + chunk]
        w = weights[start : start + chunk]
        if kind == HOMODYNE:
            d = np.asarray(points, dtype=float)[:, None] - mu.real[None, :]
            comp = math.sqrt(2.0 / math.pi) * np.exp(-2.0 * d * d)
        else:
            d = np.asarray(points, dtype=complex)[:, None] - mu[None, :]
            comp = np.exp(-(d.real**2 + d.imag**2)) / math.pi
        out += comp @ w
    return out


def mixture_quadrature_oracle(
    alpha: complex,
    spec: DetectorSpec,
    grid: np.ndarray,
    target_error: float = 1e-9,
    start_nodes: int = 48,
    max_nodes: int = 384,
) -> OracleTable:
    """Noisy-detector outcome density by direct 2-d quadrature.

    The detector's thermal noise is expanded as a Gaussian mixture of
    coherent states over the complex plane; the density on the outcome
    grid is the quadrature sum of the known coherent-state outcome
    densities.  Nothing here touches the covariance engine, so the
    result is an independent check of the closed-form densities.

    Node counts double from start_nodes until two consecutive tables
    differ by less than target_error in sup norm.

    Args:
        alpha: Coherent amplitude of the probe.
        spec: The noisy detector; needs nbar > 0 and eta_d < 1.
        grid: Outcome points, real for homodyne and complex for
            heterodyne.
        target_error: Sup-norm convergence target.
        start_nodes: Nodes per dimension at the first refinement level.
        max_nodes: Hard cap on nodes per dimension.

    Raises:
        RuntimeError: If the refinement cap is hit before convergence;
            the message carries the achieved error estimate.
    """
    if spec.nbar <= 0:
        raise ValueError("the oracle requires nbar > 0; the mixture is degenerate")
    if spec.eta_d >= 1.0:
        raise ValueError("the oracle requires eta_d < 1; the mixture is degenerate")
    grid = np.asarray(grid)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("outcome grid must be a nonempty 1-d array")
    alpha = complex(alpha)
    radius = 6.0 * math.sqrt(spec.nbar)
    carrier = math.sqrt(spec.eta_d) * alpha
    leak = math.sqrt(1.0 - spec.eta_d)
    previous = None
    estimate = math.inf
    n = int(start_nodes)
    while n <= max_nodes:
        betas, weights = gaussian_weight_nodes(spec.nbar / 2.0, n, radius)
        table = _mixture_density(grid, carrier + leak * betas, weights, spec.kind)
        if previous is not None:
            estimate = float(np.abs(table - previous).max())
            if estimate <= target_error:
                return OracleTable(points=grid, density=table, error_estimate=estimate)
        previous = table
        n *= 2
    raise RuntimeError(
        f"oracle quadrature did not converge to {target_error:g}; "
        f"achieved error estimate {estimate:g} at {max_nodes} nodes per dimension"
    )


def channel_moment_oracle(
    beta: complex, eta: float, xi0: float, n_nodes: int = 160
) -> dict[str, np.ndarray]:
    """Output moments of the noisy channel by 2-d quadrature.

    The channel output for a coherent input is a Gaussian-displaced
    mixture of coherent states; its quadrature means and variances are
    integrated numerically over the displacement, independently of the
    covariance engine.

    Args:
        beta: Coherent input amplitude.
        eta: Channel transmittance, 0 < eta <= 1.
        xi0: Input-referred excess noise; eta * xi0 must be positive.
        n_nodes: Quadrature nodes per dimension.

    Returns:
        {"mean": array (x, p), "variance": array (x, p)}.
    """
    if not 0.0 < float(eta) <= 1.0:
        raise ValueError("channel transmittance must satisfy 0 < eta <= 1")
    v = float(eta) * float(xi0)
    if v <= 0:
        raise ValueError("the oracle requires eta * xi0 > 0; the mixture is degenerate")
    gammas, weights = gaussian_weight_nodes(v / 4.0, n_nodes, radius=6.0 * math.sqrt(v))
    mu = math.sqrt(eta) * complex(beta) + gammas
    mean = np.array([np.sum(weights * mu.real), np.sum(weights * mu.imag)])
    second = np.array(
        [
            np.sum(weights * (mu.real**2 + 0.25)),
            np.sum(weights * (mu.imag**2 + 0.25)),
        ]
    )
    return {"mean": mean, "variance": second - mean * mean}
