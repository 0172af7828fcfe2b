"""Key-rate scans over loss with pluggable rate evaluators.

The harness walks a grid of channel losses, folds the detector into the
channel under each accounting scenario, and hands the effective
(t_eff, xi_eff) pair to a rate function.  Rate functions are pluggable and
looked up by name; the shipped default evaluates the textbook asymptotic
key rate of a Gaussian-modulated coherent-state protocol with reverse
reconciliation against collective attacks.

Security parameters (epsilon, pulse count) ride along as metadata for the
report only; the shipped evaluator is asymptotic and does not consume
them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .channel import IDEAL, SCENARIOS, TRUSTED, UNTRUSTED
from .detectors import HETERODYNE, HOMODYNE, KINDS, DetectorSpec
from .rescaling import harmonize

PROTOCOLS = ("heterodyne", "hybrid")


@dataclass(frozen=True)
class RateParams:
    """Auxiliary knobs of a rate evaluator.

    Attributes:
        modulation_variance: Variance of the Gaussian amplitude modulation
            per quadrature, in shot-noise units where the vacuum has
            variance 1.
        reconciliation_efficiency: Fraction of the mutual information the
            error correction retains, in (0, 1].
    """

    modulation_variance: float = 4.0
    reconciliation_efficiency: float = 0.95

    def __post_init__(self) -> None:
        if not self.modulation_variance > 0:
            raise ValueError("modulation_variance must be positive")
        if not 0.0 < self.reconciliation_efficiency <= 1.0:
            raise ValueError("reconciliation_efficiency must lie in (0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "modulation_variance": self.modulation_variance,
            "reconciliation_efficiency": self.reconciliation_efficiency,
        }


class RateFunction(Protocol):
    """Signature of a pluggable rate evaluator."""

    def __call__(
        self, t_eff: float, xi_eff: float, kind: str, params: RateParams
    ) -> float: ...


def _entropy_photons(x: float) -> float:
    """Von Neumann entropy (bits) of a thermal state with x mean photons."""
    if x <= 0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def reference_rate(
    t_eff: float, xi_eff: float, kind: str, params: RateParams = RateParams()
) -> float:
    """Asymptotic reverse-reconciliation rate of Gaussian modulation.

    The sender modulates coherent states with per-quadrature variance
    V_A; the channel is Gaussian with transmittance t_eff and additive
    outcome-referred excess noise xi_eff; the receiver performs homodyne
    or heterodyne detection per kind.  The rate is
    beta * I_AB - chi_BE, clamped at zero, with the Holevo bound
    evaluated on the equivalent two-mode entangled state under
    collective attacks.

    Args:
        t_eff: Effective transmittance, 0 < t_eff <= 1.
        xi_eff: Effective excess noise at the output, xi_eff >= 0, in
            shot-noise units (vacuum variance 1).
        kind: Receiver measurement, "homodyne" or "heterodyne".
        params: Modulation variance and reconciliation efficiency.

    Returns:
        Key rate in bits per channel use, never negative.
    """
    t = float(t_eff)
    xi = float(xi_eff)
    if not 0.0 < t <= 1.0:
        raise ValueError("t_eff must satisfy 0 < t_eff <= 1")
    if not math.isfinite(xi) or xi < 0:
        raise ValueError("xi_eff must be finite and non-negative")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    v_mod = params.modulation_variance
    v = v_mod + 1.0

    if kind == HOMODYNE:
        mutual_information = 0.5 * math.log2(1.0 + t * v_mod / (1.0 + xi))
    else:
        mutual_information = math.log2(1.0 + t * v_mod / (2.0 + xi))

    # Two-mode covariance of the equivalent entangled state:
    # diag blocks a I, b I and off-diagonal c sigma_z.
    a = v
    b = t * v_mod + 1.0 + xi
    c_sq = t * (v * v - 1.0)
    delta = a * a + b * b - 2.0 * c_sq
    det = a * b - c_sq
    disc = math.sqrt(max(delta * delta - 4.0 * det * det, 0.0))
    nu1 = math.sqrt(max((delta + disc) / 2.0, 1.0))
    nu2 = math.sqrt(max((delta - disc) / 2.0, 1.0))
    if kind == HOMODYNE:
        nu3 = math.sqrt(max(a * (a - c_sq / b), 1.0))
    else:
        nu3 = max(a - c_sq / (b + 1.0), 1.0)
    holevo = (
        _entropy_photons((nu1 - 1.0) / 2.0)
        + _entropy_photons((nu2 - 1.0) / 2.0)
        - _entropy_photons((nu3 - 1.0) / 2.0)
    )
    return max(params.reconciliation_efficiency * mutual_information - holevo, 0.0)


RATE_FUNCTIONS: dict[str, Callable] = {
    "asymptotic-rr-gaussian": reference_rate,
}


def get_rate_function(name: str) -> Callable:
    """Look up a registered rate function by name."""
    try:
        return RATE_FUNCTIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown rate function {name!r}; registered: {sorted(RATE_FUNCTIONS)}"
        ) from None


@dataclass(frozen=True, eq=False)
class ScanConfig:
    """A key-rate scan over channel loss.

    Attributes:
        loss_db: Strictly increasing channel losses in dB.
        xi0: Input-referred channel excess noise.
        detectors: The receiver's detectors; one for the all-heterodyne
            protocol, typically a homodyne/heterodyne pair for hybrid.
        scenarios: Which accounting scenarios to evaluate.
        protocol: "heterodyne" or "hybrid"; fixes which measurement the
            rate evaluator models (heterodyne, or homodyne for the hybrid
            protocol's key quadrature).
        rate_name: Registry name of the rate function.
        rate_params: Auxiliary parameters passed to the rate function.
        epsilon_sec: Security parameter, carried as report metadata only.
        pulse_count: Block size, carried as report metadata only.
    """

    loss_db: tuple[float, ...]
    xi0: float
    detectors: tuple[DetectorSpec, ...]
    scenarios: tuple[str, ...] = SCENARIOS
    protocol: str = "heterodyne"
    rate_name: str = "asymptotic-rr-gaussian"
    rate_params: RateParams = field(default_factory=RateParams)
    epsilon_sec: float = 2.0**-50
    pulse_count: float = 1e12

    def __post_init__(self) -> None:
        object.__setattr__(self, "loss_db", tuple(float(x) for x in self.loss_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.loss_db:
            raise ValueError("loss grid must not be empty")
        if any(b <= a for a, b in zip(self.loss_db, self.loss_db[1:])):
            raise ValueError("loss grid must be strictly increasing")
        if self.loss_db[0] < 0:
            raise ValueError("losses must be non-negative dB values")
        if not math.isfinite(self.xi0) or self.xi0 < 0:
            raise ValueError("xi0 must be finite and non-negative")
        if not self.detectors:
            raise ValueError("at least one detector is required")
        if not self.scenarios:
            raise ValueError("at least one scenario is required")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"unknown scenario {s!r}; valid: {SCENARIOS}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}")
        get_rate_function(self.rate_name)
        if UNTRUSTED in self.scenarios:
            first = self.detectors[0]
            for d in self.detectors[1:]:
                if d.eta_d != first.eta_d or d.nbar != first.nbar:
                    raise ValueError(
                        "the untrusted scenario needs all detectors to share "
                        "(eta_d, nbar); got mixed parameters"
                    )

    @property
    def rate_kind(self) -> str:
        """Measurement the rate evaluator models for this protocol."""
        return HETERODYNE if self.protocol == "heterodyne" else HOMODYNE

    def to_json_dict(self) -> dict:
        return {
            "schema": "cvtrust/scan-config/1",
            "loss_db": list(self.loss_db),
            "xi0": self.xi0,
            "detectors": [
                {"kind": d.kind, "eta_d": d.eta_d, "nbar": d.nbar}
                for d in self.detectors
            ],
            "scenarios": list(self.scenarios),
            "protocol": self.protocol,
            "rate_name": self.rate_name,
            "rate_params": self.rate_params.to_json_dict(),
            "epsilon_sec": self.epsilon_sec,
            "pulse_count": self.pulse_count,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ScanConfig":
        data = dict(data)
        schema = data.pop("schema", "cvtrust/scan-config/1")
        if schema != "cvtrust/scan-config/1":
            raise ValueError(f"unsupported scan config schema {schema!r}")
        try:
            detectors = tuple(
                DetectorSpec(d["kind"], d["eta_d"], d["nbar"])
                for d in data.pop("detectors")
            )
            loss_db = tuple(data.pop("loss_db"))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed scan config: {exc}") from exc
        if "rate_params" in data:
            data["rate_params"] = RateParams(**data["rate_params"])
        if "scenarios" in data:
            data["scenarios"] = tuple(data["scenarios"])
        known = {
            "xi0",
            "scenarios",
            "protocol",
            "rate_name",
            "rate_params",
            "epsilon_sec",
            "pulse_count",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scan config keys: {sorted(unknown)}")
        return cls(loss_db=loss_db, detectors=detectors, **data)


@dataclass(frozen=True)
class ScanRow:
    """One evaluated point of a scan."""

    loss_db: float
    scenario: str
    t_eff: float
    xi_eff: float
    rate: float
    status: str

    def to_json_dict(self) -> dict:
        return {
            "loss_db": self.loss_db,
            "scenario": self.scenario,
            "t_eff": self.t_eff,
            "xi_eff": self.xi_eff,
            "rate": self.rate,
            "status": self.status,
        }


@dataclass(frozen=True, eq=False)
class ScanTable:
    """All rows of a scan plus the harmonized detector summary."""

    rows: tuple[ScanRow, ...]
    config: ScanConfig
    eta_e_min: float

    def rates(self, scenario: str) -> list[float]:
        return [r.rate for r in self.rows if r.scenario == scenario]

    def to_json_dict(self) -> dict:
        return {
            "schema": "cvtrust/scan-report/1",
            "config": self.config.to_json_dict(),
            "metadata": {
                "eta_e_min": self.eta_e_min,
                "epsilon_sec": self.config.epsilon_sec,
                "pulse_count": self.config.pulse_count,
                "rate_kind": self.config.rate_kind,
            },
            "rows": [r.to_json_dict() for r in self.rows],
        }

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["loss_dB", "scenario", "t_eff", "xi_eff", "rate", "status"])
        for r in self.rows:
            writer.writerow(
                [
                    repr(r.loss_db),
                    r.scenario,
                    repr(r.t_eff),
                    repr(r.xi_eff),
                    repr(r.rate),
                    r.status,
                ]
            )
        return buf.getvalue()


def loss_db_to_transmittance(loss_db: float) -> float:
    """Convert a loss in dB to a power transmittance."""
    loss_db = float(loss_db)
    if loss_db < 0:
        raise ValueError("loss in dB must be non-negative")
    return 10.0 ** (-loss_db / 10.0)


def run_scan(config: ScanConfig) -> ScanTable:
    """Evaluate the configured scenarios over the loss grid.

    Detectors are harmonized once so the trusted scenario uses the shared
    minimal reduced efficiency.  A rate-function failure at one point is
    recorded in that row's status and the scan continues.  Rows are
    sorted by (scenario, loss_db).
    """
    rate_fn = get_rate_function(config.rate_name)
    harmonized = harmonize(config.detectors)
    eta_e_min = harmonized.eta_e_min
    first = config.detectors[0]
    rows = []
    for scenario in sorted(set(config.scenarios)):
        for loss_db in config.loss_db:
            eta = loss_db_to_transmittance(loss_db)
            if scenario == IDEAL:
                t_eff = eta
                xi_eff = t_eff * config.xi0
            elif scenario == TRUSTED:
                t_eff = eta * eta_e_min
                xi_eff = t_eff * config.xi0
            else:
                t_eff = eta * first.eta_d
                xi_eff = t_eff * config.xi0 + 2.0 * first.noise_product
            try:
                rate = float(
                    rate_fn(t_eff, xi_eff, config.rate_kind, config.rate_params)
                )
                status = "ok"
                if not math.isfinite(rate):
                    rate, status = math.nan, "error: non-finite rate"
            except Exception as exc:  # keep scanning past bad points
                rate, status = math.nan, f"error: {exc}"
            rows.append(
                ScanRow(
                    loss_db=loss_db,
                    scenario=scenario,
                    t_eff=t_eff,
                    xi_eff=xi_eff,
                    rate=rate,
                    status=status,
                )
            )
    rows.sort(key=lambda r: (r.scenario, r.loss_db))
    return ScanTable(rows=tuple(rows), config=config, eta_e_min=eta_e_min)
