"""Per-prompt rating tables and the aggregated leaderboard.

A tool is rated independently on every prompt; its headline score is the
arithmetic mean of those per-prompt means, taken over *all* registered
prompts (unvoted prompts contribute their prior). Aggregated uncertainty
defaults to the RMS of per-prompt sigmas; "mean" and "sem" policies are
also available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple

from .errors import DomainError, NotFoundError
from .rating import Rating, TrueSkillParams, new_rating, update_win

__all__ = [
    "RatingTable",
    "LeaderboardRow",
    "WinRate",
    "SIGMA_POLICIES",
    "render_csv",
    "render_text",
]

SIGMA_POLICIES = ("rms", "mean", "sem")

EXPORT_COLUMNS = ("rank", "tool", "mu", "sigma", "ci_low", "ci_high", "win_rate", "matches")


class WinRate(NamedTuple):
    value: float
    no_data: bool


@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    tool_id: str
    rating_mu: float
    rating_sigma_agg: float
    ci_low: float
    ci_high: float
    win_rate: float
    matches: int


class RatingTable:
    """Mutable rating state for all registered (tool, prompt) pairs.

    Single-writer by contract: the event-application loop is the only
    mutator. ``copy()`` produces an independent snapshot for readers.
    """

    def __init__(self, tools: list[str] | tuple[str, ...], prompts: list[str] | tuple[str, ...], params: TrueSkillParams):
        if len(set(tools)) != len(tools) or len(set(prompts)) != len(prompts):
            raise DomainError("tool and prompt ids must be unique")
        if not tools or not prompts:
            raise DomainError("need at least one tool and one prompt")
        self.tools = tuple(tools)
        self.prompts = tuple(prompts)
        self.params = params
        prior = new_rating(params)
        self.ratings: dict[tuple[str, str], Rating] = {(t, p): prior for t in self.tools for p in self.prompts}
        self.match_counts: dict[tuple[str, str], int] = {key: 0 for key in self.ratings}
        self.win_counts: dict[str, int] = {t: 0 for t in self.tools}
        self.loss_counts: dict[str, int] = {t: 0 for t in self.tools}

    # -- access -----------------------------------------------------------

    def _check_tool(self, tool_id: str) -> None:
        if tool_id not in self.win_counts:
            raise NotFoundError(f"unknown tool {tool_id!r}")

    def rating(self, tool_id: str, prompt_id: str) -> Rating:
        try:
            return self.ratings[(tool_id, prompt_id)]
        except KeyError:
            raise NotFoundError(f"no rating for tool {tool_id!r} on prompt {prompt_id!r}") from None

    def matches(self, tool_id: str) -> int:
        self._check_tool(tool_id)
        return self.win_counts[tool_id] + self.loss_counts[tool_id]

    # -- updates ----------------------------------------------------------

    def apply_outcome(self, prompt_id: str, winner_tool: str, loser_tool: str) -> None:
        """Fold one vote into the table; touches exactly two entries."""
        if winner_tool == loser_tool:
            raise DomainError(f"a tool cannot beat itself ({winner_tool!r})")
        w_key = (winner_tool, prompt_id)
        l_key = (loser_tool, prompt_id)
        if w_key not in self.ratings or l_key not in self.ratings:
            missing = w_key if w_key not in self.ratings else l_key
            raise NotFoundError(f"unregistered (tool, prompt) pair {missing!r}")
        new_w, new_l = update_win(self.ratings[w_key], self.ratings[l_key], self.params)
        self.ratings[w_key] = new_w
        self.ratings[l_key] = new_l
        self.match_counts[w_key] += 1
        self.match_counts[l_key] += 1
        self.win_counts[winner_tool] += 1
        self.loss_counts[loser_tool] += 1

    # -- aggregates -------------------------------------------------------

    def global_score(self, tool_id: str) -> float:
        """Mean per-prompt mu over every registered prompt, voted or not."""
        self._check_tool(tool_id)
        return sum(self.ratings[(tool_id, p)].mu for p in self.prompts) / len(self.prompts)

    def aggregate_sigma(self, tool_id: str, policy: str = "rms") -> float:
        self._check_tool(tool_id)
        sigmas = [self.ratings[(tool_id, p)].sigma for p in self.prompts]
        n = len(sigmas)
        if policy == "rms":
            return math.sqrt(sum(s * s for s in sigmas) / n)
        if policy == "mean":
            return sum(sigmas) / n
        if policy == "sem":
            return math.sqrt(sum(s * s for s in sigmas)) / n
        raise DomainError(f"unknown sigma policy {policy!r}; expected one of {SIGMA_POLICIES}")

    def confidence_interval(self, tool_id: str, level: float = 0.95, policy: str = "rms") -> tuple[float, float]:
        if not 0.0 < level < 1.0:
            raise DomainError(f"confidence level must be in (0, 1), got {level}")
        center = self.global_score(tool_id)
        spread = self.aggregate_sigma(tool_id, policy)
        z = NormalDist().inv_cdf((1.0 + level) / 2.0)
        return center - z * spread, center + z * spread

    def win_rate(self, tool_id: str) -> WinRate:
        self._check_tool(tool_id)
        wins = self.win_counts[tool_id]
        losses = self.loss_counts[tool_id]
        if wins + losses == 0:
            return WinRate(0.5, no_data=True)
        return WinRate(wins / (wins + losses), no_data=False)

    def leaderboard(self, level: float = 0.95, policy: str = "rms") -> list[LeaderboardRow]:
        """All tools ranked by global score; ties by lower sigma, then id."""
        entries = []
        for tool in self.tools:
            mu = self.global_score(tool)
            sigma = self.aggregate_sigma(tool, policy)
            lo, hi = self.confidence_interval(tool, level, policy)
            wr = self.win_rate(tool)
            entries.append((mu, sigma, tool, lo, hi, wr.value, self.matches(tool)))
        entries.sort(key=lambda e: (-e[0], e[1], e[2]))
        return [
            LeaderboardRow(
                rank=i + 1,
                tool_id=tool,
                rating_mu=mu,
                rating_sigma_agg=sigma,
                ci_low=lo,
                ci_high=hi,
                win_rate=wr,
                matches=matches,
            )
            for i, (mu, sigma, tool, lo, hi, wr, matches) in enumerate(entries)
        ]

    # -- snapshots --------------------------------------------------------

    def copy(self) -> "RatingTable":
        clone = RatingTable.__new__(RatingTable)
        clone.tools = self.tools
        clone.prompts = self.prompts
        clone.params = self.params
        clone.ratings = dict(self.ratings)
        clone.match_counts = dict(self.match_counts)
        clone.win_counts = dict(self.win_counts)
        clone.loss_counts = dict(self.loss_counts)
        return clone

    def canonical(self) -> dict:
        """Deterministic plain-dict form used for equality and replay checks."""
        return {
            "ratings": {f"{t}|{p}": [r.mu, r.sigma] for (t, p), r in sorted(self.ratings.items())},
            "match_counts": {f"{t}|{p}": n for (t, p), n in sorted(self.match_counts.items())},
            "win_counts": dict(sorted(self.win_counts.items())),
            "loss_counts": dict(sorted(self.loss_counts.items())),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RatingTable):
            return NotImplemented
        return self.canonical() == other.canonical()


def _format_row(row: LeaderboardRow) -> list[str]:
    return [
        str(row.rank),
        row.tool_id,
        f"{row.rating_mu:.4f}",
        f"{row.rating_sigma_agg:.4f}",
        f"{row.ci_low:.4f}",
        f"{row.ci_high:.4f}",
        f"{row.win_rate:.4f}",
        str(row.matches),
    ]


def render_csv(rows: list[LeaderboardRow]) -> str:
    lines = [",".join(EXPORT_COLUMNS)]
    lines.extend(",".join(_format_row(r)) for r in rows)
    return "\n".join(lines) + "\n"


def render_text(rows: list[LeaderboardRow]) -> str:
    """Aligned-text table with the same columns as the CSV export."""
    cells = [list(EXPORT_COLUMNS)] + [_format_row(r) for r in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(EXPORT_COLUMNS))]
    out = []
    for line in cells:
        out.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
    return "\n".join(out) + "\n"
