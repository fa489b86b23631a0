"""Simulator tests: planted ground truth, rater models, rank-agreement
statistics, and small end-to-end experiments through the real service core."""

import json
import math
import random
import statistics

import pytest

from designarena.errors import DomainError
from designarena.simulate import (
    ExperimentConfig,
    GroundTruth,
    RaterModel,
    kendall_tau,
    make_ground_truth,
    run_experiment,
    simulate_vote,
    spearman_rho,
    synthetic_arena_config,
)


# -- ground truth ----------------------------------------------------------------


def test_tool_means_are_evenly_spaced_around_prior():
    gt = make_ground_truth(10, 30, spacing=1.0, prompt_jitter=0.5, seed=7)
    means = sorted(gt.tool_means.values())
    assert means[-1] - means[0] == pytest.approx(9.0)
    assert statistics.fmean(means) == pytest.approx(25.0)
    gaps = [b - a for a, b in zip(means, means[1:])]
    assert all(g == pytest.approx(1.0) for g in gaps)


def test_zero_spacing_means_equal_strength():
    gt = make_ground_truth(6, 10, spacing=0.0, prompt_jitter=0.5, seed=3)
    assert set(gt.tool_means.values()) == {25.0}


def test_jitter_is_demeaned_per_tool():
    gt = make_ground_truth(5, 12, spacing=1.0, prompt_jitter=2.0, seed=11)
    for tool, mean in gt.tool_means.items():
        qs = [q for (t, _p), q in gt.quality.items() if t == tool]
        assert statistics.fmean(qs) == pytest.approx(mean, abs=1e-12)
        assert len(set(qs)) > 1  # jitter actually moved per-prompt quality


def test_zero_jitter_means_flat_quality():
    gt = make_ground_truth(4, 6, spacing=1.0, prompt_jitter=0.0, seed=2)
    for (t, _p), q in gt.quality.items():
        assert q == gt.tool_means[t]


def test_ground_truth_is_deterministic():
    a = make_ground_truth(8, 9, 1.5, 0.7, seed=42)
    b = make_ground_truth(8, 9, 1.5, 0.7, seed=42)
    c = make_ground_truth(8, 9, 1.5, 0.7, seed=43)
    assert a.quality == b.quality
    assert a.quality != c.quality


def test_order_is_best_first():
    gt = make_ground_truth(5, 3, spacing=1.0, prompt_jitter=0.0, seed=1)
    order = gt.order()
    assert order == ["tool-04", "tool-03", "tool-02", "tool-01", "tool-00"]


def test_ground_truth_input_validation():
    with pytest.raises(DomainError):
        make_ground_truth(1, 5, 1.0, 0.5, seed=0)
    with pytest.raises(DomainError):
        make_ground_truth(3, 0, 1.0, 0.5, seed=0)
    with pytest.raises(DomainError):
        make_ground_truth(3, 5, -0.5, 0.5, seed=0)


# -- rater models ------------------------------------------------------------------


def test_rater_model_validation():
    with pytest.raises(DomainError):
        RaterModel(kind="elo")
    with pytest.raises(DomainError):
        RaterModel(scale=0.0)


def test_equal_quality_is_a_coin_flip():
    model = RaterModel()
    assert model.p_first_wins(25.0, 25.0) == pytest.approx(0.5)
    gt = GroundTruth(quality={("a", "p"): 25.0, ("b", "p"): 25.0},
                     tool_means={"a": 25.0, "b": 25.0})
    rng = random.Random(5)
    wins = sum(simulate_vote(model, gt, "p", "a", "b", rng) == "a" for _ in range(10_000))
    assert abs(wins / 10_000 - 0.5) < 0.015


def test_bradley_terry_probability_at_one_scale_gap():
    model = RaterModel(kind="bradley_terry", scale=2.0)
    assert model.p_first_wins(27.0, 25.0) == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)
    assert model.p_first_wins(25.0, 27.0) == pytest.approx(1.0 - 1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)


def test_thurstone_probability_matches_normal_cdf():
    model = RaterModel(kind="thurstone", scale=2.0)
    want = statistics.NormalDist().cdf(2.0 / (2.0 * math.sqrt(2.0)))
    assert model.p_first_wins(27.0, 25.0) == pytest.approx(want, rel=1e-12)


def test_tiny_scale_makes_votes_deterministic():
    model = RaterModel(scale=1e-9)
    gt = GroundTruth(quality={("good", "p"): 25.1, ("bad", "p"): 24.9},
                     tool_means={"good": 25.1, "bad": 24.9})
    rng = random.Random(0)
    assert all(simulate_vote(model, gt, "p", "good", "bad", rng) == "good" for _ in range(200))
    assert all(simulate_vote(model, gt, "p", "bad", "good", rng) == "good" for _ in range(200))


# -- rank agreement ------------------------------------------------------------------


def test_kendall_identity_and_reversal():
    order = ["a", "b", "c", "d", "e"]
    assert kendall_tau(order, order) == 1.0
    assert kendall_tau(order, order[::-1]) == -1.0


def test_kendall_single_adjacent_swap():
    assert kendall_tau(["A", "B", "C", "D"], ["A", "C", "B", "D"]) == pytest.approx(4.0 / 6.0)


def test_kendall_mismatched_sets_rejected():
    with pytest.raises(DomainError):
        kendall_tau(["a", "b"], ["a", "c"])
    with pytest.raises(DomainError):
        kendall_tau(["a", "b", "b"], ["a", "b", "b"])


def test_spearman_identity_reversal_and_swap():
    order = ["a", "b", "c", "d"]
    assert spearman_rho(order, order) == 1.0
    assert spearman_rho(order, order[::-1]) == -1.0
    # d^2 = (0,1,1,0) -> rho = 1 - 6*2/(4*15)
    assert spearman_rho(order, ["a", "c", "b", "d"]) == pytest.approx(1.0 - 12.0 / 60.0)


def test_degenerate_two_elements():
    assert kendall_tau(["x", "y"], ["y", "x"]) == -1.0
    assert spearman_rho(["x", "y"], ["x", "y"]) == 1.0


# -- synthetic configs -------------------------------------------------------------------


def test_synthetic_config_shape():
    exp = ExperimentConfig(n_tools=4, n_prompts=3, n_experts=5)
    cfg = synthetic_arena_config(exp, seed=9)
    assert cfg.tool_ids() == ("tool-00", "tool-01", "tool-02", "tool-03")
    assert cfg.prompt_ids() == ("prompt-00", "prompt-01", "prompt-02")
    assert len(cfg.access_codes) == 5
    assert len(cfg.artifacts) == 12
    eligible = cfg.eligible()
    assert all(len(ts) == 4 for ts in eligible.values())


def test_experiment_config_doc_roundtrip():
    exp = ExperimentConfig(n_tools=6, spacing=0.5)
    assert ExperimentConfig.from_doc(exp.to_doc()) == exp
    with pytest.raises(DomainError):
        ExperimentConfig.from_doc({"n_tool": 6})


def test_votes_per_expert_capped_at_quota():
    with pytest.raises(DomainError):
        run_experiment(ExperimentConfig(votes_per_expert=91), seed=1)


# -- end-to-end experiments ----------------------------------------------------------------


SMALL = ExperimentConfig(n_tools=5, n_prompts=6, n_experts=8, votes_per_expert=12,
                         spacing=1.5, scale=1.0)


def test_experiment_is_deterministic_per_seed():
    a = run_experiment(SMALL, seed=21)
    b = run_experiment(SMALL, seed=21)
    c = run_experiment(SMALL, seed=22)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()


def test_report_json_parses_and_carries_config():
    report = run_experiment(SMALL, seed=4)
    doc = json.loads(report.to_json())
    assert doc["experiment"]["n_tools"] == 5
    assert doc["votes"] == 8 * 12
    assert len(doc["per_tool"]) == 5
    assert -1.0 <= doc["kendall_tau"] <= 1.0
    assert 0.0 <= doc["ci_coverage"] <= 1.0


def test_report_text_is_aligned_table():
    report = run_experiment(SMALL, seed=4)
    lines = report.to_text().splitlines()
    assert lines[0].startswith("seed=4 votes=96")
    assert lines[1].split()[:3] == ["tool", "truth_mean", "mu"]
    assert len(lines) == 2 + 5


def test_full_session_covers_every_prompt_once():
    exp = ExperimentConfig(n_tools=4, n_prompts=30, n_experts=6, votes_per_expert=30)
    report = run_experiment(exp, seed=5)
    assert report.base_coverage_violations == 0
    assert report.votes == 180


def test_strong_spacing_recovers_ranking():
    exp = ExperimentConfig(n_tools=5, n_prompts=6, n_experts=20, votes_per_expert=30,
                           spacing=3.0, scale=1.0, prompt_jitter=0.2)
    report = run_experiment(exp, seed=13)
    assert report.kendall_tau >= 0.8
    assert report.top1_correct


def test_more_votes_do_not_hurt_on_average():
    few = ExperimentConfig(n_tools=5, n_prompts=6, n_experts=4, votes_per_expert=6,
                           spacing=1.0, scale=1.0)
    many = ExperimentConfig(n_tools=5, n_prompts=6, n_experts=24, votes_per_expert=30,
                            spacing=1.0, scale=1.0)
    seeds = range(30, 36)
    tau_few = statistics.fmean(run_experiment(few, s).kendall_tau for s in seeds)
    tau_many = statistics.fmean(run_experiment(many, s).kendall_tau for s in seeds)
    assert tau_many >= tau_few


def test_wider_spacing_recovers_better():
    base = dict(n_tools=6, n_prompts=5, n_experts=10, votes_per_expert=20, scale=2.0)
    seeds = range(50, 56)
    taus = []
    for spacing in (0.25, 1.0, 3.0):
        exp = ExperimentConfig(spacing=spacing, **base)
        taus.append(statistics.fmean(run_experiment(exp, s).kendall_tau for s in seeds))
    assert taus[0] <= taus[1] <= taus[2]


def test_exposure_ratio_is_reported():
    report = run_experiment(SMALL, seed=4)
    assert report.exposure_ratio is not None
    assert report.exposure_ratio >= 1.0
    assert f"exposure_ratio={report.exposure_ratio:.4f}" in report.to_text()


@pytest.mark.xfail(
    strict=False,
    reason="the pairwise exposure-balance score term is assortative: popular "
    "tools pair among themselves with a perfect balance score while an "
    "underexposed tool scores poorly against any popular partner, so play "
    "concentrates in cliques; with the term weighted to zero the ratio drops "
    "to ~1.2 (see the exposure notes in the decisions ledger)",
)
def test_exposure_stays_roughly_balanced():
    # soft fairness target: with ten tools and thousands of matches the
    # busiest tool should see at most ~1.5x the matches of the quietest
    exp = ExperimentConfig(n_tools=10, n_prompts=10, n_experts=56, votes_per_expert=90,
                           spacing=1.0, scale=2.0)
    report = run_experiment(exp, seed=8)
    assert report.votes == 5040
    matches = [row["matches"] for row in report.per_tool]
    assert min(matches) > 0
    print(f"exposure ratio at deployed scale: {report.exposure_ratio:.3f} (target 1.5)")
    assert report.exposure_ratio <= 1.5


def test_rater_scale_jitter_still_runs():
    exp = ExperimentConfig(n_tools=4, n_prompts=4, n_experts=6, votes_per_expert=8,
                           rater_scale_jitter=0.3)
    report = run_experiment(exp, seed=2)
    assert report.votes == 48


def test_thurstone_model_end_to_end():
    exp = ExperimentConfig(n_tools=4, n_prompts=4, n_experts=10, votes_per_expert=12,
                           model="thurstone", spacing=2.0, scale=1.0)
    report = run_experiment(exp, seed=6)
    assert report.kendall_tau > 0.0


def test_zero_spacing_round_trips_affine_degeneracy():
    exp = ExperimentConfig(n_tools=4, n_prompts=4, n_experts=6, votes_per_expert=10,
                           spacing=0.0)
    report = run_experiment(exp, seed=3)
    # every calibrated truth collapses to a constant; the report still forms
    assert all(row["calibrated_truth"] == pytest.approx(report.per_tool[0]["calibrated_truth"])
               for row in report.per_tool)
