"""Two-phase prompt selection and weighted pair selection.

Phase one walks each expert through every prompt exactly once, in a
seeded per-expert order. Phase two scores prompts by staleness,
uncertainty and score gap, then draws uniformly from the top few. Pair
choice inside a prompt blends exposure balance, opponent novelty,
uncertainty and match quality, minus flat penalties; ties resolve by
lifetime pair count, max exposure, then pair id.

All selection state updates happen when a vote is applied, never when a
match is served, so the whole thing is a pure fold over the event log.
"""

from __future__ import annotations

import hashlib
import random
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .errors import (
    DomainError,
    EmptyCatalogError,
    InsufficientToolsError,
    NoEligiblePairError,
)
from .leaderboard import RatingTable

__all__ = [
    "SESSION_TARGET",
    "MAX_SESSIONS",
    "PromptWeights",
    "PairWeights",
    "PairPenalties",
    "MatchmakerConfig",
    "RngStreams",
    "ExpertState",
    "ArenaState",
    "Slot",
    "MatchCard",
    "SideAssignment",
    "new_expert",
    "next_prompt",
    "score_pair",
    "select_pair",
]

SESSION_TARGET = 30
MAX_SESSIONS = 3

# Unordered tool pair, stored sorted so (a, b) == (b, a).
Pair = tuple[str, str]


def make_pair(tool_a: str, tool_b: str) -> Pair:
    if tool_a == tool_b:
        raise DomainError(f"pair needs two distinct tools, got {tool_a!r} twice")
    return (tool_a, tool_b) if tool_a < tool_b else (tool_b, tool_a)


@dataclass(frozen=True)
class PromptWeights:
    recency: float = 1.0
    uncertainty: float = 1.0
    score_gap: float = 1.0


@dataclass(frozen=True)
class PairWeights:
    exposure_balance: float = 1.0
    opponent_novelty: float = 1.0
    uncertainty: float = 1.0
    match_quality: float = 1.0


@dataclass(frozen=True)
class PairPenalties:
    pair_seen_by_expert: float = 0.5
    recent_cooldown: float = 0.25
    # Capped pairs are dropped from the candidate set outright; the inf
    # keeps score_pair consistent with that exclusion.
    repeat_cap_exceeded: float = float("inf")
    hot_tool_overexposure: float = 0.25


@dataclass(frozen=True)
class MatchmakerConfig:
    weights: PairWeights = field(default_factory=PairWeights)
    penalties: PairPenalties = field(default_factory=PairPenalties)
    cooldown_window: int = 10
    repeat_cap: int = 3
    hot_tool_window: int = 50
    hot_tool_share: float = 0.4
    prompt_weights: PromptWeights = field(default_factory=PromptWeights)
    top_k: int = 5

    def __post_init__(self):
        w = self.weights
        pw = self.prompt_weights
        for name, value in (
            ("exposure_balance", w.exposure_balance),
            ("opponent_novelty", w.opponent_novelty),
            ("uncertainty", w.uncertainty),
            ("match_quality", w.match_quality),
            ("recency", pw.recency),
            ("prompt uncertainty", pw.uncertainty),
            ("score_gap", pw.score_gap),
        ):
            if value < 0:
                raise DomainError(f"weight {name} must be >= 0, got {value}")
        if self.top_k < 1:
            raise DomainError(f"top_k must be >= 1, got {self.top_k}")
        if self.repeat_cap < 1:
            raise DomainError(f"repeat_cap must be >= 1, got {self.repeat_cap}")
        if self.cooldown_window < 0 or self.hot_tool_window < 0:
            raise DomainError("window lengths must be >= 0")
        if not 0.0 <= self.hot_tool_share <= 1.0:
            raise DomainError(f"hot_tool_share must be in [0, 1], got {self.hot_tool_share}")


class RngStreams:
    """Named random streams derived statelessly from the arena seed.

    Each (purpose, scope...) pair gets its own generator, re-derivable at
    any time, so adding a consumer never shifts another stream and a
    restarted process draws the same values.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def stream(self, purpose: str, *scope) -> random.Random:
        # str seeding goes through SHA-512 internally: platform-stable.
        return random.Random("/".join([str(self.seed), purpose, *map(str, scope)]))


@dataclass
class ExpertState:
    expert_id: str
    base_order: tuple[str, ...]
    round: int = 0
    prompts_seen: Counter = field(default_factory=Counter)
    pair_counts: Counter = field(default_factory=Counter)  # (prompt_id, Pair) -> times served

    @property
    def pairs_seen(self) -> set[tuple[str, Pair]]:
        return {key for key, n in self.pair_counts.items() if n > 0}

    @property
    def session_index(self) -> int:
        return min(self.round // SESSION_TARGET + 1, MAX_SESSIONS)

    @property
    def votes_in_session(self) -> int:
        return self.round % SESSION_TARGET

    def record(self, prompt_id: str, pair: Pair) -> None:
        self.round += 1
        self.prompts_seen[prompt_id] += 1
        self.pair_counts[(prompt_id, pair)] += 1


def new_expert(expert_id: str, prompt_ids, streams: RngStreams) -> ExpertState:
    order = sorted(prompt_ids)
    streams.stream("base-order", expert_id).shuffle(order)
    return ExpertState(expert_id=expert_id, base_order=tuple(order))


class ArenaState:
    """Global selection counters plus the live rating table.

    Mutated only through ``record_match`` inside the single-writer event
    loop; every counter is reconstructible from the vote log.
    """

    def __init__(
        self,
        table: RatingTable,
        eligible: dict[str, tuple[str, ...]],
        mm: MatchmakerConfig,
        seed: int,
        clock: Callable[[], float] = time.time,
    ):
        self.table = table
        self.eligible = {p: tuple(sorted(tools)) for p, tools in eligible.items()}
        self.mm = mm
        self.seed = seed
        self.clock = clock
        self.matches_total = 0
        self.last_played: dict[str, int] = {p: 0 for p in table.prompts}
        self.prompt_pair_meetings: Counter = Counter()  # (prompt_id, Pair)
        self.pair_lifetime: Counter = Counter()  # Pair, across prompts
        self.tool_exposure: Counter = Counter()  # tool_id, across prompts
        self.recent_pairs: deque[Pair] = deque(maxlen=mm.cooldown_window or None)
        self._hot_window: deque[Pair] = deque()
        self.hot_counts: Counter = Counter()

    def record_match(self, expert: ExpertState, prompt_id: str, tool_a: str, tool_b: str) -> None:
        pair = make_pair(tool_a, tool_b)
        self.matches_total += 1
        self.last_played[prompt_id] = self.matches_total
        self.prompt_pair_meetings[(prompt_id, pair)] += 1
        self.pair_lifetime[pair] += 1
        self.tool_exposure[pair[0]] += 1
        self.tool_exposure[pair[1]] += 1
        if self.mm.cooldown_window > 0:
            self.recent_pairs.append(pair)
        if self.mm.hot_tool_window > 0:
            self._hot_window.append(pair)
            self.hot_counts[pair[0]] += 1
            self.hot_counts[pair[1]] += 1
            if len(self._hot_window) > self.mm.hot_tool_window:
                old = self._hot_window.popleft()
                self.hot_counts[old[0]] -= 1
                self.hot_counts[old[1]] -= 1
        expert.record(prompt_id, pair)

    def hot_share(self, tool_id: str) -> float:
        if not self._hot_window:
            return 0.0
        return self.hot_counts[tool_id] / len(self._hot_window)


def rank_prompts(state: ArenaState) -> list[tuple[float, str]]:
    """Adaptive-phase prompt scores, best first. Deterministic order."""
    prompts = state.table.prompts
    pw = state.mm.prompt_weights
    sigma0 = state.table.params.sigma0
    staleness = {p: state.matches_total - state.last_played[p] for p in prompts}
    max_stale = max(staleness.values(), default=0)
    spreads = {}
    for p in prompts:
        mus = [state.table.rating(t, p).mu for t in state.eligible.get(p, ())]
        spreads[p] = (max(mus) - min(mus)) if mus else 0.0
    max_spread = max(spreads.values(), default=0.0)
    scored = []
    for p in prompts:
        recency = staleness[p] / max_stale if max_stale > 0 else 0.0
        tools = state.eligible.get(p, ())
        unc = (
            sum(state.table.rating(t, p).sigma for t in tools) / len(tools) / sigma0
            if tools
            else 0.0
        )
        gap = 1.0 - (spreads[p] / max_spread if max_spread > 0 else 0.0)
        s = pw.recency * recency + pw.uncertainty * unc + pw.score_gap * gap
        scored.append((s, p))
    scored.sort(key=lambda e: (-e[0], e[1]))
    return scored


def next_prompt(expert: ExpertState, state: ArenaState, rng: random.Random) -> str:
    if not state.table.prompts:
        raise EmptyCatalogError("no prompts registered")
    if expert.round < len(expert.base_order):
        return expert.base_order[expert.round]
    ranked = rank_prompts(state)
    top = [p for _, p in ranked[: state.mm.top_k]]
    return top[rng.randrange(len(top))]


def score_pair(
    pair: Pair,
    prompt_id: str,
    expert: ExpertState,
    state: ArenaState,
    config: MatchmakerConfig,
) -> float:
    from .rating import match_quality

    a, b = make_pair(*pair)
    w = config.weights
    pen = config.penalties
    na = state.tool_exposure[a]
    nb = state.tool_exposure[b]
    balance = 1.0 - abs(na - nb) / (na + nb + 1)
    novelty = 1.0 / (1 + state.prompt_pair_meetings[(prompt_id, (a, b))])
    ra = state.table.rating(a, prompt_id)
    rb = state.table.rating(b, prompt_id)
    sigma0 = state.table.params.sigma0
    unc = (ra.sigma + rb.sigma) / (2.0 * sigma0)
    quality = match_quality(ra, rb, state.table.params)
    score = (
        w.exposure_balance * balance
        + w.opponent_novelty * novelty
        + w.uncertainty * unc
        + w.match_quality * quality
    )
    if expert.pair_counts[(prompt_id, (a, b))] >= 1:
        score -= pen.pair_seen_by_expert
    if (a, b) in state.recent_pairs:
        score -= pen.recent_cooldown
    if expert.pair_counts[(prompt_id, (a, b))] >= config.repeat_cap:
        score -= pen.repeat_cap_exceeded
    if state.hot_share(a) > config.hot_tool_share or state.hot_share(b) > config.hot_tool_share:
        score -= pen.hot_tool_overexposure
    return score


class Slot(NamedTuple):
    artifact_ref: str
    slot_token: str


class MatchCard(NamedTuple):
    match_id: str
    prompt_id: str
    left_slot: Slot
    right_slot: Slot
    created_at: str
    expert_id: str


class SideAssignment(NamedTuple):
    """Server-side left/right resolution; never leaves the service."""

    tool_left: str
    tool_right: str


def _digest(*parts) -> str:
    return hashlib.sha256("/".join(map(str, parts)).encode()).hexdigest()


def match_id_for(seed: int, expert_id: str, round_: int) -> str:
    return _digest(seed, "match", expert_id, round_)[:16]


def slot_token_for(seed: int, match_id: str, side: str) -> str:
    return _digest(seed, "slot", match_id, side)[:32]


def select_pair(
    prompt_id: str,
    expert: ExpertState,
    state: ArenaState,
    config: MatchmakerConfig,
    rng: random.Random,
) -> tuple[MatchCard, SideAssignment]:
    tools = state.eligible.get(prompt_id, ())
    if len(tools) < 2:
        raise InsufficientToolsError(f"prompt {prompt_id!r} has {len(tools)} eligible tools, need 2")
    candidates = [
        (tools[i], tools[j])
        for i in range(len(tools))
        for j in range(i + 1, len(tools))
        if expert.pair_counts[(prompt_id, (tools[i], tools[j]))] < config.repeat_cap
    ]
    if not candidates:
        raise NoEligiblePairError(f"repeat cap exhausted every pair on prompt {prompt_id!r}")
    best = min(
        candidates,
        key=lambda pr: (
            -score_pair(pr, prompt_id, expert, state, config),
            state.pair_lifetime[pr],
            max(state.tool_exposure[pr[0]], state.tool_exposure[pr[1]]),
            pr,
        ),
    )
    if rng.random() < 0.5:
        left, right = best
    else:
        right, left = best
    match_id = match_id_for(state.seed, expert.expert_id, expert.round)
    token_l = slot_token_for(state.seed, match_id, "left")
    token_r = slot_token_for(state.seed, match_id, "right")
    card = MatchCard(
        match_id=match_id,
        prompt_id=prompt_id,
        left_slot=Slot(artifact_ref=f"/artifact/{token_l}", slot_token=token_l),
        right_slot=Slot(artifact_ref=f"/artifact/{token_r}", slot_token=token_r),
        created_at=_iso(state.clock()),
        expert_id=expert.expert_id,
    )
    return card, SideAssignment(tool_left=left, tool_right=right)


def _iso(epoch: float) -> str:
    from datetime import datetime, timezone

    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat().replace("+00:00", "Z")
