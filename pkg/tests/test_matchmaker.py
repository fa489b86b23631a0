"""Prompt selection phases, pair scoring, penalties, tie-breakers."""

import math
from collections import Counter

import pytest

from designarena.errors import DomainError, EmptyCatalogError, InsufficientToolsError, NoEligiblePairError
from designarena.leaderboard import RatingTable
from designarena.matchmaker import (
    ArenaState,
    MatchmakerConfig,
    PairPenalties,
    PairWeights,
    PromptWeights,
    RngStreams,
    make_pair,
    new_expert,
    next_prompt,
    rank_prompts,
    score_pair,
    select_pair,
)
from designarena.rating import Rating, TrueSkillParams

PARAMS = TrueSkillParams()


def mk_state(tools=("a", "b", "c"), prompts=("p1", "p2", "p3"), mm=None, seed=1):
    mm = mm or MatchmakerConfig()
    table = RatingTable(list(tools), list(prompts), PARAMS)
    eligible = {p: tuple(tools) for p in prompts}
    state = ArenaState(table, eligible, mm, seed=seed, clock=lambda: 1_700_000_000.0)
    return state, RngStreams(seed)


ZERO_MM = MatchmakerConfig(
    weights=PairWeights(0.0, 0.0, 0.0, 0.0),
    penalties=PairPenalties(0.0, 0.0, 0.0, 0.0),
    repeat_cap=10_000,
)


class TestConfig:
    def test_defaults(self):
        mm = MatchmakerConfig()
        assert mm.weights == PairWeights(1.0, 1.0, 1.0, 1.0)
        assert mm.penalties.pair_seen_by_expert == 0.5
        assert mm.penalties.recent_cooldown == 0.25
        assert math.isinf(mm.penalties.repeat_cap_exceeded)
        assert mm.penalties.hot_tool_overexposure == 0.25
        assert (mm.cooldown_window, mm.repeat_cap, mm.hot_tool_window) == (10, 3, 50)
        assert mm.hot_tool_share == 0.4
        assert mm.top_k == 5

    @pytest.mark.parametrize(
        "bad",
        [
            {"weights": PairWeights(exposure_balance=-0.1)},
            {"prompt_weights": PromptWeights(recency=-1.0)},
            {"top_k": 0},
            {"repeat_cap": 0},
            {"hot_tool_share": 1.5},
            {"cooldown_window": -1},
        ],
    )
    def test_invalid_config_rejected(self, bad):
        with pytest.raises(DomainError):
            MatchmakerConfig(**bad)

    def test_pair_normalization(self):
        assert make_pair("b", "a") == ("a", "b")
        with pytest.raises(DomainError):
            make_pair("a", "a")


class TestRngStreams:
    def test_same_scope_reproduces(self):
        s = RngStreams(42)
        a = [s.stream("side", "e1", 3).random() for _ in range(3)]
        b = [s.stream("side", "e1", 3).random() for _ in range(3)]
        assert a == b

    def test_streams_are_independent(self):
        s = RngStreams(42)
        assert s.stream("side", "e1", 0).random() != s.stream("prompt", "e1", 0).random()
        assert s.stream("side", "e1", 0).random() != s.stream("side", "e2", 0).random()


class TestExpertState:
    def test_base_order_is_seeded_permutation(self):
        streams = RngStreams(7)
        e1 = new_expert("e1", ["p3", "p1", "p2"], streams)
        again = new_expert("e1", ["p1", "p2", "p3"], streams)
        assert sorted(e1.base_order) == ["p1", "p2", "p3"]
        assert e1.base_order == again.base_order
        other = new_expert("e2", ["p1", "p2", "p3"], streams)
        assert sorted(other.base_order) == ["p1", "p2", "p3"]

    def test_session_counters_derive_from_round(self):
        state, streams = mk_state()
        e = new_expert("e", state.table.prompts, streams)
        assert (e.session_index, e.votes_in_session) == (1, 0)
        e.round = 29
        assert (e.session_index, e.votes_in_session) == (1, 29)
        e.round = 30
        assert (e.session_index, e.votes_in_session) == (2, 0)
        e.round = 89
        assert (e.session_index, e.votes_in_session) == (3, 29)


class TestNextPrompt:
    def test_base_phase_covers_catalog_exactly_once(self):
        prompts = tuple(f"p{i}" for i in range(8))
        state, streams = mk_state(prompts=prompts)
        for expert_id in ("e1", "e2", "e3", "e4", "e5"):
            expert = new_expert(expert_id, prompts, streams)
            served = []
            for r in range(len(prompts)):
                pid = next_prompt(expert, state, streams.stream("prompt", expert_id, r))
                served.append(pid)
                state.record_match(expert, pid, "a", "b")
            assert sorted(served) == sorted(prompts)

    def test_single_prompt_always_selected(self):
        state, streams = mk_state(prompts=("only",))
        expert = new_expert("e", ("only",), streams)
        for r in range(5):
            assert next_prompt(expert, state, streams.stream("prompt", "e", r)) == "only"
            state.record_match(expert, "only", "a", "b")

    def test_adaptive_targets_uncertainty(self):
        mm = MatchmakerConfig(prompt_weights=PromptWeights(recency=0.0, uncertainty=1.0, score_gap=0.0), top_k=1)
        state, streams = mk_state(prompts=("p1", "p2", "p3", "p4"), mm=mm)
        expert = new_expert("e", state.table.prompts, streams)
        expert.round = 4  # past the base phase
        for p in ("p1", "p3", "p4"):
            for t in ("a", "b", "c"):
                state.table.ratings[(t, p)] = Rating(25.0, 0.5)
        assert next_prompt(expert, state, streams.stream("prompt", "e", 4)) == "p2"

    def test_adaptive_gap_prefers_close_races(self):
        mm = MatchmakerConfig(prompt_weights=PromptWeights(recency=0.0, uncertainty=0.0, score_gap=1.0), top_k=1)
        state, streams = mk_state(prompts=("p1", "p2"), mm=mm)
        expert = new_expert("e", state.table.prompts, streams)
        expert.round = 2
        state.table.ratings[("a", "p1")] = Rating(35.0, 2.0)
        state.table.ratings[("b", "p1")] = Rating(15.0, 2.0)
        # p2 stays at equal priors: zero spread ranks first
        ranked = rank_prompts(state)
        assert ranked[0][1] == "p2"
        assert next_prompt(expert, state, streams.stream("prompt", "e", 2)) == "p2"

    def test_adaptive_recency_prefers_stale_prompts(self):
        mm = MatchmakerConfig(prompt_weights=PromptWeights(recency=1.0, uncertainty=0.0, score_gap=0.0), top_k=1)
        state, streams = mk_state(prompts=("p1", "p2"), mm=mm)
        expert = new_expert("e", state.table.prompts, streams)
        state.record_match(expert, "p1", "a", "b")
        state.record_match(expert, "p1", "a", "c")
        assert next_prompt(expert, state, streams.stream("prompt", "e", expert.round)) == "p2"

    def test_empty_catalog_error(self):
        state, streams = mk_state(prompts=("p1",))
        state.table.prompts = ()
        expert = new_expert("e", (), streams)
        with pytest.raises(EmptyCatalogError):
            next_prompt(expert, state, streams.stream("prompt", "e", 0))


class TestScorePair:
    def test_fresh_state_closed_form(self):
        state, streams = mk_state()
        expert = new_expert("e", state.table.prompts, streams)
        expected = 1.0 + 1.0 + 1.0 + math.sqrt(0.2)
        scores = {
            pair: score_pair(pair, "p1", expert, state, state.mm)
            for pair in [("a", "b"), ("a", "c"), ("b", "c")]
        }
        for value in scores.values():
            assert value == pytest.approx(expected, abs=1e-12)

    def test_seen_pair_penalized_by_exact_delta(self):
        state, streams = mk_state()
        expert = new_expert("e", state.table.prompts, streams)
        baseline = score_pair(("a", "c"), "p1", expert, state, state.mm)
        expert.pair_counts[("p1", ("a", "b"))] = 1
        seen = score_pair(("a", "b"), "p1", expert, state, state.mm)
        assert baseline - seen == pytest.approx(state.mm.penalties.pair_seen_by_expert, abs=1e-9)

    def test_uncertainty_dominant_picks_widest_sigmas(self):
        mm = MatchmakerConfig(weights=PairWeights(0.0, 0.0, 1.0, 0.0), penalties=PairPenalties(0.0, 0.0, 0.0, 0.0))
        state, streams = mk_state(tools=("a", "b", "c", "d"), prompts=("p1",), mm=mm)
        sigmas = {"a": 8.0, "b": 6.0, "c": 3.0, "d": 1.0}
        for t, s in sigmas.items():
            state.table.ratings[(t, "p1")] = Rating(25.0, s)
        expert = new_expert("e", ("p1",), streams)
        pairs = [(x, y) for i, x in enumerate("abcd") for y in "abcd"[i + 1:]]
        best = max(pairs, key=lambda pr: score_pair(pr, "p1", expert, state, mm))
        assert best == ("a", "b")

    def test_cooldown_penalty(self):
        state, streams = mk_state()
        expert = new_expert("e", state.table.prompts, streams)
        other = new_expert("other", state.table.prompts, streams)
        before = score_pair(("a", "b"), "p1", expert, state, state.mm)
        state.record_match(other, "p2", "a", "b")
        after = score_pair(("a", "b"), "p1", expert, state, state.mm)
        # novelty on p1 unchanged (the meeting was on p2), but the pair is
        # now inside the cooldown window and both tools carry exposure
        assert after < before
        no_cooldown = MatchmakerConfig(penalties=PairPenalties(0.5, 0.0, float("inf"), 0.25))
        assert score_pair(("a", "b"), "p1", expert, state, no_cooldown) == pytest.approx(
            after + state.mm.penalties.recent_cooldown
        )

    def test_hot_tool_penalty(self):
        mm = MatchmakerConfig(hot_tool_window=4, hot_tool_share=0.4, cooldown_window=0)
        state, streams = mk_state(tools=("a", "b", "c", "d"), mm=mm)
        expert = new_expert("e", state.table.prompts, streams)
        filler = new_expert("f", state.table.prompts, streams)
        for _ in range(3):
            state.record_match(filler, "p1", "a", "b")
        state.record_match(filler, "p1", "c", "d")
        assert state.hot_share("a") == pytest.approx(0.75)
        hot = score_pair(("a", "c"), "p2", expert, state, mm)
        cold = score_pair(("c", "d"), "p2", expert, state, mm)
        mm_no_hot = MatchmakerConfig(
            hot_tool_window=4, hot_tool_share=0.4, cooldown_window=0,
            penalties=PairPenalties(0.5, 0.25, float("inf"), 0.0),
        )
        assert score_pair(("a", "c"), "p2", expert, state, mm_no_hot) - hot == pytest.approx(
            mm.penalties.hot_tool_overexposure
        )
        assert cold > hot

    def test_opponent_novelty_decay(self):
        state, streams = mk_state()
        expert = new_expert("e", state.table.prompts, streams)
        other = new_expert("o", state.table.prompts, streams)
        mm = MatchmakerConfig(weights=PairWeights(0.0, 1.0, 0.0, 0.0), penalties=PairPenalties(0.0, 0.0, 0.0, 0.0))
        assert score_pair(("a", "b"), "p1", expert, state, mm) == pytest.approx(1.0)
        state.record_match(other, "p1", "a", "b")
        assert score_pair(("a", "b"), "p1", expert, state, mm) == pytest.approx(0.5)
        state.record_match(other, "p1", "a", "b")
        assert score_pair(("a", "b"), "p1", expert, state, mm) == pytest.approx(1.0 / 3.0)


class TestSelectPair:
    def test_two_tools_returns_the_only_pair(self):
        state, streams = mk_state(tools=("a", "b"), prompts=("p1",))
        expert = new_expert("e", ("p1",), streams)
        card, sides = select_pair("p1", expert, state, state.mm, streams.stream("side", "e", 0))
        assert {sides.tool_left, sides.tool_right} == {"a", "b"}
        assert card.prompt_id == "p1"

    def test_side_assignment_is_fair(self):
        state, streams = mk_state(tools=("a", "b"), prompts=("p1",))
        expert = new_expert("e", ("p1",), streams)
        lefts = 0
        n = 1000
        for i in range(n):
            _, sides = select_pair("p1", expert, state, state.mm, streams.stream("side", "e", i))
            lefts += sides.tool_left == "a"
        chi2 = (lefts - n / 2) ** 2 / (n / 2) + ((n - lefts) - n / 2) ** 2 / (n / 2)
        assert chi2 < 6.635  # chi-square(1) critical value at p = 0.01

    def test_tiebreak_prefers_lower_pair_count(self):
        state, streams = mk_state(mm=ZERO_MM)
        expert = new_expert("e", state.table.prompts, streams)
        filler = new_expert("f", state.table.prompts, streams)
        state.record_match(filler, "p2", "a", "b")
        _, sides = select_pair("p1", expert, state, ZERO_MM, streams.stream("side", "e", 0))
        assert {sides.tool_left, sides.tool_right} == {"a", "c"}

    def test_tiebreak_then_lower_max_exposure(self):
        state, streams = mk_state(tools=("a", "b", "c", "d"), mm=ZERO_MM)
        expert = new_expert("e", state.table.prompts, streams)
        filler = new_expert("f", state.table.prompts, streams)
        state.record_match(filler, "p2", "a", "b")
        # pair counts tie at 0 for ac, ad, bc, bd, cd; exposures a=1 b=1
        # c=0 d=0 leave (c,d) with the lowest max exposure
        _, sides = select_pair("p1", expert, state, ZERO_MM, streams.stream("side", "e", 0))
        assert {sides.tool_left, sides.tool_right} == {"c", "d"}

    def test_lexicographic_final_guard(self):
        state, streams = mk_state(mm=ZERO_MM)
        expert = new_expert("e", state.table.prompts, streams)
        _, sides = select_pair("p1", expert, state, ZERO_MM, streams.stream("side", "e", 0))
        assert {sides.tool_left, sides.tool_right} == {"a", "b"}

    def test_determinism(self):
        state1, streams1 = mk_state(seed=9)
        state2, streams2 = mk_state(seed=9)
        e1 = new_expert("e", state1.table.prompts, streams1)
        e2 = new_expert("e", state2.table.prompts, streams2)
        c1, s1 = select_pair("p1", e1, state1, state1.mm, streams1.stream("side", "e", 0))
        c2, s2 = select_pair("p1", e2, state2, state2.mm, streams2.stream("side", "e", 0))
        assert c1 == c2
        assert s1 == s2

    def test_insufficient_tools(self):
        state, streams = mk_state(tools=("a", "b"), prompts=("p1", "p2"))
        state.eligible["p1"] = ("a",)
        expert = new_expert("e", ("p1", "p2"), streams)
        with pytest.raises(InsufficientToolsError):
            select_pair("p1", expert, state, state.mm, streams.stream("side", "e", 0))

    def test_repeat_cap_removes_candidates(self):
        mm = MatchmakerConfig(repeat_cap=2)
        state, streams = mk_state(tools=("a", "b"), prompts=("p1",), mm=mm)
        expert = new_expert("e", ("p1",), streams)
        expert.pair_counts[("p1", ("a", "b"))] = 2
        with pytest.raises(NoEligiblePairError):
            select_pair("p1", expert, state, mm, streams.stream("side", "e", 0))

    def test_capped_expert_never_sees_pair_again(self):
        mm = MatchmakerConfig(repeat_cap=3)
        state, streams = mk_state(tools=("a", "b", "c"), prompts=("p1",), mm=mm)
        expert = new_expert("e", ("p1",), streams)
        seen = []
        for r in range(12):
            try:
                _, sides = select_pair("p1", expert, state, mm, streams.stream("side", "e", r))
            except NoEligiblePairError:
                break
            pair = tuple(sorted((sides.tool_left, sides.tool_right)))
            seen.append(pair)
            state.record_match(expert, "p1", *pair)
        assert max(Counter(seen).values()) <= 3
        assert len(seen) == 9  # 3 pairs x cap 3, then exhaustion

    def test_card_is_blind(self):
        state, streams = mk_state(tools=("builder-west", "builder-east", "builder-north"))
        expert = new_expert("e", state.table.prompts, streams)
        card, _ = select_pair("p1", expert, state, state.mm, streams.stream("side", "e", 0))
        flat = repr(card)
        for tool in state.table.tools:
            assert tool not in flat
        assert card.left_slot.artifact_ref == f"/artifact/{card.left_slot.slot_token}"
        assert card.left_slot.slot_token != card.right_slot.slot_token
