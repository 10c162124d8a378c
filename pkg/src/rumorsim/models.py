"""Compartment states, rate constants, and mean-field dynamics.

The population splits into ignorants (have not heard the rumor), spreaders
(know it and pass it on) and stiflers (know it and keep quiet; absorbing).
The blockchain variant further splits ignorants into an enrolled class,
whose information exchanges run through credit contracts, and an unenrolled
class that trades freely.  States are stored as densities summing to one;
individual counts live in :mod:`rumorsim.abm`.

All rates are per day.  Contact probabilities apply per pairwise meeting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

# Tolerance on the sum of compartment densities.
DENSITY_TOL = 1e-9


def _check_prob(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if value < 0.0:
        raise ValueError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class RateParams:
    """Rate constants for the plain (single ignorant class) model.

    spread_prob    probability a contacted ignorant starts spreading
    dismiss_prob   probability a contacted ignorant loses interest and stifles
    stifle_prob    probability a spreader stifles on meeting a spreader/stifler
    forget_rate    spontaneous spreader-to-stifler rate (per day)
    mean_degree    average number of contacts per individual
    """

    spread_prob: float
    dismiss_prob: float
    stifle_prob: float
    forget_rate: float
    mean_degree: float

    def __post_init__(self) -> None:
        for name in ("spread_prob", "dismiss_prob", "stifle_prob",
                     "forget_rate", "mean_degree"):
            _check_prob(name, getattr(self, name))
        if self.spread_prob + self.dismiss_prob > 1.0:
            raise ValueError(
                "spread_prob + dismiss_prob must not exceed 1 "
                f"(got {self.spread_prob} + {self.dismiss_prob}); they are "
                "exclusive outcomes of a single contact")
        if self.mean_degree <= 0.0:
            raise ValueError(f"mean_degree must be positive, got {self.mean_degree}")


@dataclass(frozen=True)
class BlockRateParams:
    """Rate constants for the model with blockchain-enrolled ignorants.

    Enrolled ignorants react to a contact with ``*_enrolled`` probabilities,
    unenrolled ones with ``*_unenrolled``.  Set ``enforce_caution`` to require
    the enrolled class to be strictly more cautious (lower spread probability,
    higher dismiss probability); leave it off to represent counterfactuals.
    """

    spread_prob_enrolled: float
    dismiss_prob_enrolled: float
    spread_prob_unenrolled: float
    dismiss_prob_unenrolled: float
    stifle_prob: float
    forget_rate: float
    mean_degree: float
    enforce_caution: bool = False

    def __post_init__(self) -> None:
        for name in ("spread_prob_enrolled", "dismiss_prob_enrolled",
                     "spread_prob_unenrolled", "dismiss_prob_unenrolled",
                     "stifle_prob", "forget_rate", "mean_degree"):
            _check_prob(name, getattr(self, name))
        if self.spread_prob_enrolled + self.dismiss_prob_enrolled > 1.0:
            raise ValueError("spread_prob_enrolled + dismiss_prob_enrolled must not exceed 1")
        if self.spread_prob_unenrolled + self.dismiss_prob_unenrolled > 1.0:
            raise ValueError("spread_prob_unenrolled + dismiss_prob_unenrolled must not exceed 1")
        if self.mean_degree <= 0.0:
            raise ValueError(f"mean_degree must be positive, got {self.mean_degree}")
        if self.enforce_caution:
            if not (self.spread_prob_enrolled < self.spread_prob_unenrolled):
                raise ValueError("enforce_caution requires spread_prob_enrolled < spread_prob_unenrolled")
            if not (self.dismiss_prob_enrolled > self.dismiss_prob_unenrolled):
                raise ValueError("enforce_caution requires dismiss_prob_enrolled > dismiss_prob_unenrolled")

    def unenrolled_rates(self) -> RateParams:
        """Collapse to the plain model driven by the unenrolled class."""
        return RateParams(
            spread_prob=self.spread_prob_unenrolled,
            dismiss_prob=self.dismiss_prob_unenrolled,
            stifle_prob=self.stifle_prob,
            forget_rate=self.forget_rate,
            mean_degree=self.mean_degree,
        )


def _check_density(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SirState:
    """Densities of the three compartments; they must sum to one."""

    ignorant: float
    spreader: float
    stifler: float

    def __post_init__(self) -> None:
        for name in ("ignorant", "spreader", "stifler"):
            _check_density(name, getattr(self, name))
        total = self.ignorant + self.spreader + self.stifler
        if abs(total - 1.0) > DENSITY_TOL:
            raise ValueError(f"densities must sum to 1 within {DENSITY_TOL}, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.ignorant, self.spreader, self.stifler)


@dataclass(frozen=True)
class BsirState:
    """Densities of the four compartments of the enrolled-split model."""

    ignorant_enrolled: float
    ignorant_unenrolled: float
    spreader: float
    stifler: float

    def __post_init__(self) -> None:
        for name in ("ignorant_enrolled", "ignorant_unenrolled", "spreader", "stifler"):
            _check_density(name, getattr(self, name))
        total = (self.ignorant_enrolled + self.ignorant_unenrolled
                 + self.spreader + self.stifler)
        if abs(total - 1.0) > DENSITY_TOL:
            raise ValueError(f"densities must sum to 1 within {DENSITY_TOL}, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.ignorant_enrolled, self.ignorant_unenrolled,
                self.spreader, self.stifler)


@dataclass(frozen=True)
class PopulationConfig:
    """Finite-population setup shared by the mean-field and agent models.

    size               total number of individuals
    initial_spreaders  number of seed spreaders
    enrollment_ratio   enrolled/unenrolled ratio among initial ignorants;
                       ``math.inf`` enrolls everyone but the seed spreaders
    """

    size: int
    initial_spreaders: int = 1
    enrollment_ratio: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.size, int) or isinstance(self.size, bool):
            raise ValueError(f"size must be an integer, got {self.size!r}")
        if self.size < 2:
            raise ValueError(f"size must be at least 2, got {self.size}")
        if not isinstance(self.initial_spreaders, int) or isinstance(self.initial_spreaders, bool):
            raise ValueError(f"initial_spreaders must be an integer, got {self.initial_spreaders!r}")
        if not (1 <= self.initial_spreaders < self.size):
            raise ValueError(
                "initial_spreaders must satisfy 1 <= a < size, "
                f"got a={self.initial_spreaders}, size={self.size}")
        ratio = self.enrollment_ratio
        if not isinstance(ratio, (int, float)) or math.isnan(ratio) or ratio < 0.0:
            raise ValueError(f"enrollment_ratio must be >= 0 (inf allowed), got {ratio!r}")


def poisson_pmf(k: int, mean_degree: float) -> float:
    """Probability of observing degree ``k`` under a Poisson degree law.

    Evaluated in log space so large ``k`` cannot overflow the factorial.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k!r}")
    if not (isinstance(mean_degree, (int, float)) and math.isfinite(mean_degree)
            and mean_degree > 0.0):
        raise ValueError(f"mean_degree must be positive and finite, got {mean_degree!r}")
    return math.exp(k * math.log(mean_degree) - mean_degree - math.lgamma(k + 1))


def sir_rhs(y: tuple[float, float, float], params: RateParams) -> tuple[float, float, float]:
    """Rates of change (per day) of raw (ignorant, spreader, stifler) densities.

    Shared products are computed once so the three components cancel exactly
    when summed.
    """
    i, s, r = y
    contact = params.mean_degree * i * s
    spread = params.spread_prob * contact
    dismiss = params.dismiss_prob * contact
    stifle = params.stifle_prob * params.mean_degree * s * (s + r)
    forget = params.forget_rate * s
    return (
        -(spread + dismiss),
        spread - stifle - forget,
        dismiss + stifle + forget,
    )


def sir_derivative(state: SirState, params: RateParams) -> tuple[float, float, float]:
    """Time derivative of a plain-model state, ordered as the state fields."""
    return sir_rhs(state.as_tuple(), params)


def bsir_rhs(y: tuple[float, float, float, float],
             params: BlockRateParams) -> tuple[float, float, float, float]:
    """Rates of change of raw (enrolled, unenrolled, spreader, stifler) densities."""
    ib, iu, s, r = y
    contact_b = params.mean_degree * ib * s
    contact_u = params.mean_degree * iu * s
    spread_b = params.spread_prob_enrolled * contact_b
    dismiss_b = params.dismiss_prob_enrolled * contact_b
    spread_u = params.spread_prob_unenrolled * contact_u
    dismiss_u = params.dismiss_prob_unenrolled * contact_u
    stifle = params.stifle_prob * params.mean_degree * s * (s + r)
    forget = params.forget_rate * s
    return (
        -(spread_b + dismiss_b),
        -(spread_u + dismiss_u),
        spread_b + spread_u - stifle - forget,
        dismiss_b + dismiss_u + stifle + forget,
    )


def bsir_derivative(state: BsirState,
                    params: BlockRateParams) -> tuple[float, float, float, float]:
    """Time derivative of an enrolled-split state, ordered as the state fields."""
    return bsir_rhs(state.as_tuple(), params)


def initial_sir_state(pop: PopulationConfig) -> SirState:
    """All-ignorant start except for the seed spreaders."""
    n = pop.size
    a = pop.initial_spreaders
    return SirState(ignorant=(n - a) / n, spreader=a / n, stifler=0.0)


def initial_bsir_state(pop: PopulationConfig) -> BsirState:
    """Split the initial ignorants between enrolled and unenrolled classes.

    The ignorant density (size - a)/size is divided so that
    enrolled/unenrolled equals ``enrollment_ratio``; an infinite ratio puts
    everyone except the seed spreaders in the enrolled class.
    """
    n = pop.size
    a = pop.initial_spreaders
    ignorant = (n - a) / n
    eps = pop.enrollment_ratio
    if math.isinf(eps):
        enrolled, unenrolled = ignorant, 0.0
    else:
        enrolled = ignorant * eps / (1.0 + eps)
        unenrolled = ignorant / (1.0 + eps)
    return BsirState(
        ignorant_enrolled=enrolled,
        ignorant_unenrolled=unenrolled,
        spreader=a / n,
        stifler=0.0,
    )
