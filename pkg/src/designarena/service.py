"""Event-sourced arena core: onboarding, sessions, matches, votes, replay.

The NDJSON vote log is the single source of truth. Every piece of
selection and rating state is a fold over that log, so a restarted
process replays the file and lands on the exact pre-crash state; the
live path and the replay path share one `_apply_event`.

Expert identity, session tokens, match ids and slot tokens are all
derived deterministically from the arena seed, which keeps re-served
matches stable across process restarts without persisting them.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .config import ArenaConfig
from .errors import (
    AuthError,
    ConfigLockedError,
    CorruptLogError,
    NoEligiblePairError,
    NotFoundError,
    QuotaError,
    SessionClosedError,
    StaleMatchError,
    UnviewedVoteError,
    ValidationError,
)
from .leaderboard import RatingTable
from .matchmaker import (
    MAX_SESSIONS,
    SESSION_TARGET,
    ArenaState,
    ExpertState,
    MatchCard,
    RngStreams,
    SideAssignment,
    new_expert,
    next_prompt,
    rank_prompts,
    select_pair,
)

__all__ = [
    "INSTRUCTION_TEXT",
    "ROLES",
    "EVENT_FIELDS",
    "ExpertProfile",
    "ArenaCore",
]

INSTRUCTION_TEXT = "Which project would you be more likely to deliver to a client?"
BREAK_GUIDANCE = "A break of about one day before your next session is recommended."

ROLES = ("Designer", "WebDeveloper", "Researcher", "Other")

LIFETIME_QUOTA = SESSION_TARGET * MAX_SESSIONS  # 90

# Canonical on-disk field order; replay comparisons rely on the writer
# never deviating from it.
EVENT_FIELDS = (
    "event_id",
    "match_id",
    "expert_id",
    "prompt_id",
    "tool_left",
    "tool_right",
    "choice",
    "full_view_acknowledged",
    "latency_ms",
    "recorded_at",
)

PROFILE_FIELDS = (
    "expert_id",
    "access_code_hash",
    "first_name",
    "last_name",
    "roles",
    "used_ai_tools_before",
    "created_at",
)


@dataclass(frozen=True)
class ExpertProfile:
    expert_id: str
    access_code_hash: str
    first_name: str
    last_name: str
    roles: tuple[str, ...]
    used_ai_tools_before: bool
    created_at: str


def _digest(*parts) -> str:
    return hashlib.sha256("/".join(map(str, parts)).encode()).hexdigest()


def _iso(epoch: float) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat().replace("+00:00", "Z")


class ArenaCore:
    """Single-writer arena engine behind the HTTP layer and the simulator.

    ``log_path=None`` keeps the event log in memory (simulation runs);
    a path gets replayed on startup and appended to afterwards.
    """

    def __init__(self, config: ArenaConfig, log_path: str | None = None, clock: Callable[[], float] = time.time):
        self.config = config
        self.clock = clock
        self.lock = threading.RLock()
        self.audit: Counter = Counter()
        self._log_path = log_path
        self._log_fh = None
        self._profiles_path = f"{log_path}.profiles" if log_path else None
        self._reset_state()
        if log_path:
            if self._profiles_path and os.path.exists(self._profiles_path):
                with open(self._profiles_path, encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if line:
                            self._register_profile(ExpertProfile(**{
                                k: tuple(v) if k == "roles" else v
                                for k, v in json.loads(line).items()
                            }))
            if os.path.exists(log_path):
                with open(log_path, encoding="utf-8") as fh:
                    self._fold_log(fh.read())
            self._log_fh = open(log_path, "a", encoding="utf-8")

    # -- construction helpers ----------------------------------------------

    def _reset_state(self) -> None:
        cfg = self.config
        self.streams = RngStreams(cfg.seed)
        table = RatingTable(cfg.tool_ids(), cfg.prompt_ids(), cfg.trueskill)
        self.state = ArenaState(table, cfg.eligible(), cfg.matchmaker, cfg.seed, clock=self.clock)
        self.experts: dict[str, ExpertState] = {}
        self.profiles: dict[str, ExpertProfile] = {}
        self.tokens: dict[str, str] = {}
        self.outstanding: dict[str, tuple[MatchCard, SideAssignment]] = {}
        self.last_receipt: dict[str, dict] = {}
        self.session_open: dict[str, bool] = {}
        self.artifact_tokens: dict[str, tuple[str, str]] = {}
        self.events: list[dict] = []
        self.event_count = 0
        self._display_names = {t.tool_id: t.display_name for t in cfg.tools}

    @property
    def log_path(self) -> str | None:
        return self._log_path

    def close(self) -> None:
        if self._log_fh:
            self._log_fh.close()
            self._log_fh = None

    # -- identity derivation -------------------------------------------------

    def _expert_id_for_code(self, code: str) -> str:
        return "x" + _digest(self.config.seed, "expert", code)[:12]

    def _token_for(self, expert_id: str) -> str:
        return _digest(self.config.seed, "token", expert_id)[:32]

    def _register_profile(self, profile: ExpertProfile) -> None:
        eid = profile.expert_id
        self.profiles[eid] = profile
        self.tokens[self._token_for(eid)] = eid
        if eid not in self.experts:
            self.experts[eid] = new_expert(eid, self.config.prompt_ids(), self.streams)
        self.session_open.setdefault(eid, False)

    def _expert_state(self, expert_id: str) -> ExpertState:
        # Lazy creation keeps replay independent of the profiles sidecar.
        if expert_id not in self.experts:
            self.experts[expert_id] = new_expert(expert_id, self.config.prompt_ids(), self.streams)
            self.session_open.setdefault(expert_id, False)
        return self.experts[expert_id]

    def _resolve(self, token: str) -> ExpertState:
        eid = self.tokens.get(token)
        if eid is None:
            raise AuthError("invalid or expired session token")
        return self._expert_state(eid)

    # -- onboarding -----------------------------------------------------------

    def onboard(self, access_code, first_name, last_name, roles, used_ai_tools_before) -> dict:
        with self.lock:
            self.audit["onboard"] += 1
            if not isinstance(access_code, str) or access_code not in self.config.access_codes:
                raise AuthError("unknown access code")
            bad = []
            if not isinstance(first_name, str) or not first_name.strip():
                bad.append("first_name")
            if not isinstance(last_name, str) or not last_name.strip():
                bad.append("last_name")
            if (
                not isinstance(roles, (list, tuple))
                or not roles
                or not all(isinstance(r, str) and r in ROLES for r in roles)
                or len(set(roles)) != len(roles)
            ):
                bad.append("roles")
            if not isinstance(used_ai_tools_before, bool):
                bad.append("used_ai_tools_before")
            if bad:
                raise ValidationError("profile incomplete or invalid", fields=bad)

            eid = self._expert_id_for_code(access_code)
            if eid not in self.profiles:
                profile = ExpertProfile(
                    expert_id=eid,
                    access_code_hash=hashlib.sha256(access_code.encode()).hexdigest(),
                    first_name=first_name.strip(),
                    last_name=last_name.strip(),
                    roles=tuple(roles),
                    used_ai_tools_before=used_ai_tools_before,
                    created_at=_iso(self.clock()),
                )
                self._register_profile(profile)
                if self._profiles_path:
                    with open(self._profiles_path, "a", encoding="utf-8") as fh:
                        doc = {f: getattr(profile, f) for f in PROFILE_FIELDS}
                        doc["roles"] = list(doc["roles"])
                        fh.write(json.dumps(doc, separators=(",", ":")) + "\n")
                        fh.flush()
            expert = self._expert_state(eid)
            return {
                "token": self._token_for(eid),
                "expert_id": eid,
                "vote_count": expert.round,
                "lifetime_quota": LIFETIME_QUOTA,
            }

    # -- sessions ---------------------------------------------------------------

    def _session_info(self, expert: ExpertState) -> dict:
        return {
            "session_index": expert.session_index,
            "votes_in_session": expert.votes_in_session,
            "target": SESSION_TARGET,
            "state": "open" if self.session_open.get(expert.expert_id) else "complete",
            "break_guidance": BREAK_GUIDANCE,
        }

    def start_session(self, token: str) -> dict:
        with self.lock:
            expert = self._resolve(token)
            if expert.round >= LIFETIME_QUOTA:
                raise QuotaError(f"lifetime quota of {LIFETIME_QUOTA} votes reached")
            self.session_open[expert.expert_id] = True
            return self._session_info(expert)

    # -- match serving ------------------------------------------------------------

    def get_match(self, token: str) -> dict:
        with self.lock:
            expert = self._resolve(token)
            self.audit["get_match"] += 1
            eid = expert.expert_id
            held = self.outstanding.get(eid)
            if held is not None:
                return self._card_view(held[0], expert)
            if expert.round >= LIFETIME_QUOTA:
                raise QuotaError(f"lifetime quota of {LIFETIME_QUOTA} votes reached")
            if not self.session_open.get(eid):
                raise SessionClosedError("no open session; start one first")
            card, sides = self._pick(expert)
            self.outstanding[eid] = (card, sides)
            self.artifact_tokens[card.left_slot.slot_token] = (sides.tool_left, card.prompt_id)
            self.artifact_tokens[card.right_slot.slot_token] = (sides.tool_right, card.prompt_id)
            return self._card_view(card, expert)

    def _pick(self, expert: ExpertState) -> tuple[MatchCard, SideAssignment]:
        prompt_rng = self.streams.stream("prompt", expert.expert_id, expert.round)
        side_rng = self.streams.stream("side", expert.expert_id, expert.round)
        pid = next_prompt(expert, self.state, prompt_rng)
        try:
            return select_pair(pid, expert, self.state, self.config.matchmaker, side_rng)
        except NoEligiblePairError:
            # Repeat caps can drain one prompt; walk the rest by score.
            for _, fallback in rank_prompts(self.state):
                if fallback == pid:
                    continue
                try:
                    return select_pair(fallback, expert, self.state, self.config.matchmaker, side_rng)
                except NoEligiblePairError:
                    continue
            raise NoEligiblePairError("every prompt is repeat-capped for this expert")

    def _prompt_view(self, prompt_id: str) -> dict:
        spec = next(p for p in self.config.prompts if p.prompt_id == prompt_id)
        return {
            "prompt_id": spec.prompt_id,
            "title": spec.title,
            "type": spec.type,
            "sector": spec.sector,
            "goal": spec.goal,
            "scenario": spec.scenario,
            "vibe": spec.vibe,
            "constraints": spec.constraints,
        }

    def _card_view(self, card: MatchCard, expert: ExpertState) -> dict:
        return {
            "match_id": card.match_id,
            "prompt": self._prompt_view(card.prompt_id),
            "instruction": INSTRUCTION_TEXT,
            "left": {"slot_token": card.left_slot.slot_token, "artifact_ref": card.left_slot.artifact_ref},
            "right": {"slot_token": card.right_slot.slot_token, "artifact_ref": card.right_slot.artifact_ref},
            "created_at": card.created_at,
            "session": self._session_info(expert),
        }

    def resolve_outstanding(self, expert_id: str) -> SideAssignment | None:
        """Operator/test accessor; the HTTP surface never exposes this."""
        held = self.outstanding.get(expert_id)
        return held[1] if held else None

    # -- voting ----------------------------------------------------------------------

    def submit_vote(self, token, match_id, choice, full_view_acknowledged, latency_ms=0) -> dict:
        with self.lock:
            expert = self._resolve(token)
            self.audit["submit_vote"] += 1
            eid = expert.expert_id
            if choice not in ("left", "right"):
                raise ValidationError(f"choice must be left or right, got {choice!r}", fields=["choice"])
            if not isinstance(latency_ms, int) or isinstance(latency_ms, bool) or latency_ms < 0:
                raise ValidationError("latency_ms must be a non-negative integer", fields=["latency_ms"])
            held = self.outstanding.get(eid)
            if held is None:
                prior = self.last_receipt.get(eid)
                if prior is not None and prior["match_id"] == match_id:
                    return dict(prior, duplicate=True)
                raise StaleMatchError(f"no outstanding match {match_id!r} for this expert")
            card, sides = held
            if card.match_id != match_id:
                raise StaleMatchError(f"match {match_id!r} is not the outstanding match")
            if full_view_acknowledged is not True:
                raise UnviewedVoteError("both artifacts must be fully viewed before voting")

            event = {
                "event_id": self.event_count + 1,
                "match_id": card.match_id,
                "expert_id": eid,
                "prompt_id": card.prompt_id,
                "tool_left": sides.tool_left,
                "tool_right": sides.tool_right,
                "choice": choice,
                "full_view_acknowledged": True,
                "latency_ms": latency_ms,
                "recorded_at": _iso(self.clock()),
            }
            if self._log_fh:
                self._log_fh.write(json.dumps(event, separators=(",", ":"), ensure_ascii=False) + "\n")
                self._log_fh.flush()
            self._apply_event(event)
            del self.outstanding[eid]
            session_of_vote = (expert.round - 1) // SESSION_TARGET + 1
            completed = expert.round % SESSION_TARGET == 0
            if completed:
                self.session_open[eid] = False
            receipt = {
                "match_id": card.match_id,
                "recorded": True,
                "vote_count": expert.round,
                "session_index": session_of_vote,
                "votes_in_session": expert.round - (session_of_vote - 1) * SESSION_TARGET,
                "target": SESSION_TARGET,
                "session_complete": completed,
                "quota_exhausted": expert.round >= LIFETIME_QUOTA,
            }
            if completed:
                receipt["break_guidance"] = BREAK_GUIDANCE
            self.last_receipt[eid] = receipt
            return receipt

    def _apply_event(self, event: dict) -> None:
        expert = self._expert_state(event["expert_id"])
        winner = event["tool_left"] if event["choice"] == "left" else event["tool_right"]
        loser = event["tool_right"] if event["choice"] == "left" else event["tool_left"]
        self.state.table.apply_outcome(event["prompt_id"], winner, loser)
        self.state.record_match(expert, event["prompt_id"], event["tool_left"], event["tool_right"])
        self.events.append(event)
        self.event_count = event["event_id"]

    # -- replay ------------------------------------------------------------------------

    def _fold_log(self, data: str) -> None:
        if not data:
            return
        complete = data.endswith("\n")
        lines = data[:-1].split("\n") if complete else data.split("\n")
        last = len(lines)
        for offset, line in enumerate(lines, start=1):
            if offset == last and not complete:
                raise CorruptLogError("truncated event (missing newline)", offset=offset)
            self._fold_line(line, offset)

    def _fold_line(self, line: str, offset: int) -> None:
        try:
            event = json.loads(line)
        except json.JSONDecodeError:
            raise CorruptLogError("event is not valid JSON", offset=offset) from None
        if not isinstance(event, dict) or set(event) != set(EVENT_FIELDS):
            raise CorruptLogError("event fields do not match the schema", offset=offset)
        if event["event_id"] != self.event_count + 1:
            raise CorruptLogError(
                f"event_id {event['event_id']!r} breaks the dense sequence at {self.event_count + 1}",
                offset=offset,
            )
        if event["choice"] not in ("left", "right"):
            raise CorruptLogError(f"choice must be left or right, got {event['choice']!r}", offset=offset)
        if event["full_view_acknowledged"] is not True:
            raise CorruptLogError("stored events must acknowledge full view", offset=offset)
        known_tools = set(self.state.table.tools)
        if event["tool_left"] not in known_tools or event["tool_right"] not in known_tools:
            raise CorruptLogError("event names a tool missing from the config", offset=offset)
        if event["prompt_id"] not in set(self.state.table.prompts):
            raise CorruptLogError("event names a prompt missing from the config", offset=offset)
        self._apply_event(event)

    @classmethod
    def replay(cls, config: ArenaConfig, log_text: str, clock: Callable[[], float] = time.time) -> "ArenaCore":
        core = cls(config, log_path=None, clock=clock)
        core._fold_log(log_text)
        return core

    def export_log(self) -> str:
        return "".join(json.dumps(e, separators=(",", ":"), ensure_ascii=False) + "\n" for e in self.events)

    # -- leaderboards --------------------------------------------------------------------

    def leaderboard_rows(self, admin: bool = False) -> list[dict]:
        with self.lock:
            table = self.state.table
            rows = table.leaderboard(self.config.confidence_level, self.config.aggregate_sigma_policy)
            out = []
            for row in rows:
                wr = table.win_rate(row.tool_id)
                doc = {
                    "rank": row.rank,
                    "tool": f"entry-{row.rank}" if not admin else row.tool_id,
                    "mu": row.rating_mu,
                    "sigma": row.rating_sigma_agg,
                    "ci_low": row.ci_low,
                    "ci_high": row.ci_high,
                    "win_rate": row.win_rate,
                    "win_rate_no_data": wr.no_data,
                    "matches": row.matches,
                }
                if admin:
                    doc["display_name"] = self._display_names[row.tool_id]
                    doc["per_prompt"] = {
                        p: {
                            "mu": table.rating(row.tool_id, p).mu,
                            "sigma": table.rating(row.tool_id, p).sigma,
                            "matches": table.match_counts[(row.tool_id, p)],
                        }
                        for p in table.prompts
                    }
                out.append(doc)
            return out

    def leaderboard_table(self, policy: str | None = None, level: float | None = None):
        with self.lock:
            return self.state.table.leaderboard(
                level if level is not None else self.config.confidence_level,
                policy if policy is not None else self.config.aggregate_sigma_policy,
            )

    # -- artifacts ------------------------------------------------------------------------

    def artifact_for_token(self, slot_token: str) -> str:
        with self.lock:
            hit = self.artifact_tokens.get(slot_token)
            if hit is None:
                raise NotFoundError("unknown slot token")
            tool_id, prompt_id = hit
            url = self.config.artifacts.get((tool_id, prompt_id))
            if url is None:
                raise NotFoundError("artifact missing for this slot")
            return url

    # -- admin -----------------------------------------------------------------------------

    def replace_config(self, new_config: ArenaConfig) -> None:
        """Swap the arena configuration; allowed only before any vote."""
        with self.lock:
            if self.event_count > 0:
                raise ConfigLockedError("config is locked once votes exist")
            self.config = new_config
            self._reset_state()
            if self._profiles_path and os.path.exists(self._profiles_path):
                os.truncate(self._profiles_path, 0)

    # -- canonical snapshots ----------------------------------------------------------------

    def canonical_state(self) -> str:
        """Deterministic JSON of all log-derived state, for byte comparisons."""
        with self.lock:
            st = self.state
            doc = {
                "event_count": self.event_count,
                "table": st.table.canonical(),
                "matches_total": st.matches_total,
                "tool_exposure": {t: st.tool_exposure[t] for t in sorted(st.tool_exposure)},
                "pair_lifetime": {f"{a}|{b}": n for (a, b), n in sorted(st.pair_lifetime.items())},
                "prompt_pair_meetings": {
                    f"{p}|{a}|{b}": n for (p, (a, b)), n in sorted(st.prompt_pair_meetings.items())
                },
                "last_played": dict(sorted(st.last_played.items())),
                "recent_pairs": [f"{a}|{b}" for a, b in st.recent_pairs],
                "hot_counts": {t: n for t, n in sorted(st.hot_counts.items()) if n != 0},
                "experts": {
                    eid: {
                        "round": e.round,
                        "prompts_seen": dict(sorted(e.prompts_seen.items())),
                        "pair_counts": {
                            f"{p}|{a}|{b}": n for (p, (a, b)), n in sorted(e.pair_counts.items()) if n != 0
                        },
                    }
                    for eid, e in sorted(self.experts.items())
                    if e.round > 0
                },
            }
            return json.dumps(doc, sort_keys=True, separators=(",", ":"))
