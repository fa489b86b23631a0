"""Two-player TrueSkill mathematics: priors, win updates, match quality, win odds.

The arena is strictly 1-v-1 with binary outcomes: no draws, no skill drift.
Everything here is a pure function over immutable values and is safe for
unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "Rating",
    "TrueSkillParams",
    "new_rating",
    "update_win",
    "match_quality",
    "win_probability",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Below this t the pdf/cdf ratio is taken over to the continued fraction;
# both the direct ratio and the fraction are accurate to ~1e-14 there.
_V_DIRECT_FLOOR = -8.0
_MILLS_CF_DEPTH = 100


@dataclass(frozen=True)
class TrueSkillParams:
    """Environment constants for the rating system.

    ``beta`` is the performance noise: the spread of a single match
    performance around true skill. ``tau`` (per-match skill drift) and
    ``draw_probability`` are pinned to zero and cannot be overridden; the
    voting protocol has no ties and tools do not change between votes.
    """

    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    tau: float = 0.0
    draw_probability: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu0):
            raise DomainError(f"mu0 must be finite, got {self.mu0}")
        if not math.isfinite(self.sigma0) or self.sigma0 <= 0.0:
            raise DomainError(f"sigma0 must be positive, got {self.sigma0}")
        if not math.isfinite(self.beta) or self.beta <= 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.tau != 0.0:
            raise DomainError("tau is fixed at 0.0 (no skill drift in this environment)")
        if self.draw_probability != 0.0:
            raise DomainError("draw_probability is fixed at 0.0 (no tie option exists)")


@dataclass(frozen=True)
class Rating:
    """Gaussian skill belief: mean ``mu`` and standard deviation ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0.0:
            raise DomainError(f"invalid rating (mu={self.mu}, sigma={self.sigma})")


def new_rating(params: TrueSkillParams) -> Rating:
    """Fresh prior belief for a competitor that has never played."""
    return Rating(params.mu0, params.sigma0)


def _pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) * _INV_SQRT_2PI


def _cdf(x: float) -> float:
    # erfc form avoids cancellation in the lower tail.
    return 0.5 * math.erfc(-x / _SQRT2)


def _mills_recip(x: float) -> float:
    """1 / R(x) for the normal Mills ratio R(x) = cdf(-x)/pdf(x), x > 0.

    Laplace continued fraction R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))),
    evaluated bottom-up. Converges to machine precision for x >= 8 well
    before the fixed depth; immune to the pdf/cdf underflow at x ~ 37.
    """
    r = 0.0
    for k in range(_MILLS_CF_DEPTH, 0, -1):
        r = k / (x + r)
    return x + r


def _v_win(t: float) -> float:
    """Additive mean correction v(t) = pdf(t)/cdf(t) for a win at gap t."""
    if t > _V_DIRECT_FLOOR:
        return _pdf(t) / _cdf(t)
    return _mills_recip(-t)


def update_win(winner: Rating, loser: Rating, params: TrueSkillParams) -> tuple[Rating, Rating]:
    """Posterior beliefs after ``winner`` beats ``loser``.

    With c^2 = 2*beta^2 + sigma_w^2 + sigma_l^2 and t = (mu_w - mu_l)/c:

        mu_w'     = mu_w + (sigma_w^2 / c) * v(t)
        mu_l'     = mu_l - (sigma_l^2 / c) * v(t)
        sigma'^2  = sigma^2 * (1 - (sigma^2 / c^2) * w(t)),  w(t) = v(t)*(v(t)+t)

    These are the exact moment-matched marginals of the win-truncated
    Gaussian posterior; inputs are untouched.
    """
    c2 = 2.0 * params.beta * params.beta + winner.sigma**2 + loser.sigma**2
    c = math.sqrt(c2)
    t = (winner.mu - loser.mu) / c
    v = _v_win(t)
    w = v * (v + t)

    sw2 = winner.sigma * winner.sigma
    sl2 = loser.sigma * loser.sigma
    new_winner = Rating(winner.mu + (sw2 / c) * v, math.sqrt(sw2 * (1.0 - (sw2 / c2) * w)))
    new_loser = Rating(loser.mu - (sl2 / c) * v, math.sqrt(sl2 * (1.0 - (sl2 / c2) * w)))
    return new_winner, new_loser


def match_quality(a: Rating, b: Rating, params: TrueSkillParams) -> float:
    """Closed-form evenness proxy in (0, 1]; maximal when mu_a == mu_b."""
    two_beta2 = 2.0 * params.beta * params.beta
    c2 = two_beta2 + a.sigma * a.sigma + b.sigma * b.sigma
    gap = a.mu - b.mu
    return math.sqrt(two_beta2 / c2) * math.exp(-(gap * gap) / (2.0 * c2))


def win_probability(a: Rating, b: Rating, params: TrueSkillParams) -> float:
    """P(a beats b) under both beliefs plus performance noise."""
    c = math.sqrt(2.0 * params.beta * params.beta + a.sigma * a.sigma + b.sigma * b.sigma)
    return _cdf((a.mu - b.mu) / c)
