"""Phase-invariant Gaussian channel and per-scenario effective parameters.

The transmission line is a pure loss of transmittance eta followed by an
isotropic Gaussian random displacement adding eta * xi0 / 4 to each
quadrature variance, so a coherent input beta leaves with mean
sqrt(eta) beta and per-quadrature variance (1 + eta xi0) / 4.

Effective channel parameters (t_eff, xi_eff) summarize what a key-rate
evaluator sees under three accounting scenarios for the detector.  xi_eff
uses additive outcome-variance units: a homodyne measurement of a coherent
carrier sees variance (1 + xi_eff) / 4 at transmittance t_eff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detectors import DetectorSpec
from .gaussian import GaussianState, loss_channel, random_displacement
from .rescaling import rescale_plan

IDEAL = "ideal"
TRUSTED = "trusted"
UNTRUSTED = "untrusted"
SCENARIOS = (IDEAL, TRUSTED, UNTRUSTED)


@dataclass(frozen=True)
class ChannelSpec:
    """A lossy fiber with excess noise.

    Attributes:
        eta: Transmittance, 0 < eta <= 1.
        xi0: Input-referred excess noise, xi0 >= 0; the displacement stage
            contributes eta * xi0 at the channel output.
    """

    eta: float
    xi0: float = 0.0

    def __post_init__(self) -> None:
        eta = float(self.eta)
        xi0 = float(self.xi0)
        if not 0.0 < eta <= 1.0:
            raise ValueError("channel transmittance must satisfy 0 < eta <= 1")
        if not math.isfinite(xi0) or xi0 < 0:
            raise ValueError("xi0 must be a finite non-negative number")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "xi0", xi0)


@dataclass(frozen=True)
class ScenarioParams:
    """Effective channel parameters under one detector-accounting scenario.

    Attributes:
        scenario: "ideal", "trusted" or "untrusted".
        t_eff: Effective transmittance fed to the rate evaluator.
        xi_eff: Effective excess noise in additive outcome-variance units.
    """

    scenario: str
    t_eff: float
    xi_eff: float

    def to_json_dict(self) -> dict:
        return {"scenario": self.scenario, "t_eff": self.t_eff, "xi_eff": self.xi_eff}


def transmit(state: GaussianState, channel: ChannelSpec, mode: int = 0) -> GaussianState:
    """Send one mode of a state through the channel.

    Pure loss of transmittance eta acts first, then the random
    displacement with output-referred variance parameter eta * xi0.
    """
    lossy = loss_channel(state, channel.eta, mode=mode)
    return random_displacement(lossy, channel.eta * channel.xi0, mode=mode)


def scenario_params(
    channel: ChannelSpec,
    spec: DetectorSpec | None = None,
    scenario: str = IDEAL,
) -> ScenarioParams:
    """Fold channel and detector into effective rate-evaluator parameters.

    ideal: the detector is perfect, (t, xi) = (eta, eta xi0).

    trusted: detector noise is calibrated away by the loss-then-rescale
    reduction; the reduced efficiency joins the transmittance,
    (t, xi) = (eta eta_e, eta eta_e xi0).

    untrusted: detector loss and noise are attributed to the channel,
    (t, xi) = (eta eta_d, eta eta_d xi0 + 2 nbar (1 - eta_d)).

    Args:
        channel: The transmission line.
        spec: The detector; required for the trusted and untrusted
            scenarios.
        scenario: One of "ideal", "trusted", "untrusted".
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    if scenario == IDEAL:
        t_eff = channel.eta
        xi_eff = t_eff * channel.xi0
    elif spec is None:
        raise ValueError(f"the {scenario} scenario requires a detector spec")
    elif scenario == TRUSTED:
        t_eff = channel.eta * rescale_plan(spec).eta_e
        xi_eff = t_eff * channel.xi0
    else:
        t_eff = channel.eta * spec.eta_d
        xi_eff = t_eff * channel.xi0 + 2.0 * spec.noise_product
    return ScenarioParams(scenario=scenario, t_eff=t_eff, xi_eff=xi_eff)
