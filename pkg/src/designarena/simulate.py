"""Synthetic-rater harness: rank recovery and CI calibration.

Builds a latent quality table, drives the real service core with noisy
preference draws (Bradley-Terry or Thurstone), and scores the recovered
leaderboard against the planted order. Everything is derived from the
experiment seed, so a (config, seed) pair maps to a byte-identical
report.
"""

from __future__ import annotations

import json
import math
import random
import statistics
from dataclasses import asdict, dataclass, field

from .config import ArenaConfig, parse_config
from .errors import DomainError, SessionClosedError
from .service import ArenaCore

__all__ = [
    "GroundTruth",
    "RaterModel",
    "ExperimentConfig",
    "ExperimentReport",
    "make_ground_truth",
    "simulate_vote",
    "run_experiment",
    "kendall_tau",
    "spearman_rho",
]

MU0_DEFAULT = 25.0


@dataclass(frozen=True)
class GroundTruth:
    quality: dict  # (tool_id, prompt_id) -> latent quality, rating-point scale
    tool_means: dict  # tool_id -> mean over prompts of quality

    def order(self) -> list[str]:
        """Planted ranking, best first; ties fall back to the id."""
        return sorted(self.tool_means, key=lambda t: (-self.tool_means[t], t))


def make_ground_truth(n_tools: int, n_prompts: int, spacing: float, prompt_jitter: float, seed: int) -> GroundTruth:
    if n_tools < 2:
        raise DomainError(f"need at least 2 tools, got {n_tools}")
    if n_prompts < 1:
        raise DomainError(f"need at least 1 prompt, got {n_prompts}")
    if spacing < 0:
        raise DomainError(f"spacing must be >= 0, got {spacing}")
    rng = random.Random(f"{seed}/ground-truth")
    tools = [f"tool-{i:02d}" for i in range(n_tools)]
    prompts = [f"prompt-{j:02d}" for j in range(n_prompts)]
    means = {t: MU0_DEFAULT + spacing * (i - (n_tools - 1) / 2) for i, t in enumerate(tools)}
    quality = {}
    for t in tools:
        jitters = [rng.gauss(0.0, prompt_jitter) if prompt_jitter > 0 else 0.0 for _ in prompts]
        center = sum(jitters) / len(jitters)
        # demeaned per tool so tool_means stays the exact per-prompt mean
        for p, j in zip(prompts, jitters):
            quality[(t, p)] = means[t] + (j - center)
    return GroundTruth(quality=quality, tool_means=means)


@dataclass(frozen=True)
class RaterModel:
    kind: str = "bradley_terry"
    scale: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bradley_terry", "thurstone"):
            raise DomainError(f"kind must be bradley_terry or thurstone, got {self.kind!r}")
        if not self.scale > 0:
            raise DomainError(f"scale must be > 0, got {self.scale}")

    def p_first_wins(self, qa: float, qb: float) -> float:
        gap = qa - qb
        if self.kind == "bradley_terry":
            x = gap / self.scale
            # stable logistic; exp overflows for large negative gaps otherwise
            if x >= 0:
                return 1.0 / (1.0 + math.exp(-x))
            e = math.exp(x)
            return e / (1.0 + e)
        return statistics.NormalDist().cdf(gap / (self.scale * math.sqrt(2.0)))


def simulate_vote(model: RaterModel, gt: GroundTruth, prompt_id: str, tool_a: str, tool_b: str, rng: random.Random) -> str:
    qa = gt.quality[(tool_a, prompt_id)]
    qb = gt.quality[(tool_b, prompt_id)]
    return tool_a if rng.random() < model.p_first_wins(qa, qb) else tool_b


@dataclass(frozen=True)
class ExperimentConfig:
    """Defaults mirror the deployed scale: 10 tools, 30 prompts,
    194 raters at ~21 votes each, about 4,074 comparisons."""

    n_tools: int = 10
    n_prompts: int = 30
    spacing: float = 1.0
    prompt_jitter: float = 0.5
    model: str = "bradley_terry"
    scale: float = 2.0
    n_experts: int = 194
    votes_per_expert: int = 21
    rater_scale_jitter: float = 0.0
    arena_overrides: dict = field(default_factory=dict)

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise DomainError(f"unknown experiment keys: {sorted(extra)}")
        return cls(**doc)

    def to_doc(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentReport:
    seed: int
    votes: int
    kendall_tau: float
    spearman_rho: float
    top1_correct: bool
    ci_coverage: float
    base_coverage_violations: int
    exposure_ratio: float | None
    recovered_order: tuple[str, ...]
    truth_order: tuple[str, ...]
    per_tool: tuple[dict, ...]
    experiment: dict

    def to_json(self) -> str:
        doc = asdict(self)
        doc["recovered_order"] = list(doc["recovered_order"])
        doc["truth_order"] = list(doc["truth_order"])
        doc["per_tool"] = list(doc["per_tool"])
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        head = (
            f"seed={self.seed} votes={self.votes} kendall_tau={self.kendall_tau:.4f} "
            f"spearman_rho={self.spearman_rho:.4f} top1_correct={self.top1_correct} "
            f"ci_coverage={self.ci_coverage:.4f} "
            f"base_coverage_violations={self.base_coverage_violations} "
            f"exposure_ratio={'n/a' if self.exposure_ratio is None else format(self.exposure_ratio, '.4f')}"
        )
        cols = ("tool", "truth_mean", "mu", "sigma", "ci_low", "ci_high", "win_rate", "matches", "covered")
        lines = [list(cols)]
        for row in self.per_tool:
            lines.append([
                row["tool"],
                f"{row['truth_mean']:.4f}",
                f"{row['mu']:.4f}",
                f"{row['sigma']:.4f}",
                f"{row['ci_low']:.4f}",
                f"{row['ci_high']:.4f}",
                f"{row['win_rate']:.4f}",
                str(row["matches"]),
                "yes" if row["covered"] else "no",
            ])
        widths = [max(len(line[i]) for line in lines) for i in range(len(cols))]
        body = "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in lines)
        return head + "\n" + body + "\n"


def kendall_tau(order_a, order_b) -> float:
    if set(order_a) != set(order_b) or len(set(order_a)) != len(order_a):
        raise DomainError("orders must rank the same distinct elements")
    n = len(order_a)
    if n < 2:
        return 1.0
    pos = {item: i for i, item in enumerate(order_b)}
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if pos[order_a[i]] < pos[order_a[j]]:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


def spearman_rho(order_a, order_b) -> float:
    if set(order_a) != set(order_b) or len(set(order_a)) != len(order_a):
        raise DomainError("orders must rank the same distinct elements")
    n = len(order_a)
    if n < 2:
        return 1.0
    pos = {item: i for i, item in enumerate(order_b)}
    d2 = sum((i - pos[item]) ** 2 for i, item in enumerate(order_a))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))


PROMPT_SECTORS = ("retail", "health", "finance", "education", "travel", "media")
PROMPT_VIBES = ("minimal", "playful", "corporate", "bold", "calm", "editorial")


def synthetic_arena_config(exp: ExperimentConfig, seed: int) -> ArenaConfig:
    """Arena document for a synthetic run; overrides merge on top."""
    tools = [{"tool_id": f"tool-{i:02d}", "display_name": f"Synthetic Builder {i:02d}"} for i in range(exp.n_tools)]
    prompts = []
    for j in range(exp.n_prompts):
        prompts.append({
            "prompt_id": f"prompt-{j:02d}",
            "title": f"Brief {j:02d}",
            "type": "website" if j % 2 == 0 else "webapp",
            "sector": PROMPT_SECTORS[j % len(PROMPT_SECTORS)],
            "goal": f"goal {j:02d}",
            "scenario": f"Scenario text for brief {j:02d}.",
            "vibe": PROMPT_VIBES[j % len(PROMPT_VIBES)],
            "constraints": "none",
        })
    artifacts = {
        t["tool_id"]: {p["prompt_id"]: f"https://artifacts.invalid/{t['tool_id']}/{p['prompt_id']}/index.html" for p in prompts}
        for t in tools
    }
    doc = {
        "seed": seed,
        "tools": tools,
        "prompts": prompts,
        "artifacts": artifacts,
        "trueskill": {},
        "matchmaker": {},
        "access_codes": [f"code-{k:04d}" for k in range(exp.n_experts)],
        "admin_token": "sim-admin",
    }
    doc.update(exp.arena_overrides)
    return parse_config(doc)


def _make_clock(start: float = 1_700_000_000.0, step: float = 1.0):
    state = {"now": start}

    def clock() -> float:
        state["now"] += step
        return state["now"]

    return clock


def _fit_affine(xs: list[float], ys: list[float]) -> tuple[float, float]:
    try:
        fit = statistics.linear_regression(xs, ys)
        return fit.slope, fit.intercept
    except statistics.StatisticsError:
        # constant ground truth: calibrate to the grand mean
        return 0.0, sum(ys) / len(ys)


def run_experiment(exp: ExperimentConfig, seed: int) -> ExperimentReport:
    if exp.votes_per_expert < 1 or exp.n_experts < 1:
        raise DomainError("n_experts and votes_per_expert must be >= 1")
    if exp.votes_per_expert > 90:
        raise DomainError("votes_per_expert cannot exceed the 90-vote quota")
    arena_cfg = synthetic_arena_config(exp, seed)
    gt = make_ground_truth(exp.n_tools, exp.n_prompts, exp.spacing, exp.prompt_jitter, seed)
    core = ArenaCore(arena_cfg, log_path=None, clock=_make_clock())

    scale_rng = random.Random(f"{seed}/rater-scales")
    raters = []
    for k in range(exp.n_experts):
        scale = exp.scale
        if exp.rater_scale_jitter > 0:
            scale = max(1e-6, exp.scale * (1.0 + exp.rater_scale_jitter * scale_rng.gauss(0.0, 1.0)))
        raters.append(RaterModel(kind=exp.model, scale=scale, seed=seed))

    tokens = []
    for k in range(exp.n_experts):
        out = core.onboard(f"code-{k:04d}", f"Rater{k:04d}", "Synthetic", ["Researcher"], True)
        tokens.append((out["token"], out["expert_id"]))

    # Vote-major interleaving approximates many concurrent sessions.
    for v in range(exp.votes_per_expert):
        for k, (token, eid) in enumerate(tokens):
            vote_rng = random.Random(f"{seed}/vote/{k}/{v}")
            try:
                card = core.get_match(token)
            except SessionClosedError:
                core.start_session(token)
                card = core.get_match(token)
            sides = core.resolve_outstanding(eid)
            winner = simulate_vote(raters[k], gt, card["prompt"]["prompt_id"], sides.tool_left, sides.tool_right, vote_rng)
            choice = "left" if winner == sides.tool_left else "right"
            core.submit_vote(token, card["match_id"], choice, True, latency_ms=0)

    expected = exp.n_experts * exp.votes_per_expert
    if core.event_count != expected or core.audit["submit_vote"] != expected:
        raise RuntimeError("simulator bypassed the service core; audit counters disagree")

    # Round-robin guarantee: every expert's first P votes hit P distinct prompts.
    violations = 0
    n_prompts = len(arena_cfg.prompts)
    for state in core.experts.values():
        seen = state.prompts_seen
        if state.round <= n_prompts:
            bad = len(seen) != state.round or any(c != 1 for c in seen.values())
        else:
            bad = len(seen) != n_prompts
        violations += bad

    rows = core.leaderboard_table()
    recovered = [r.tool_id for r in rows]
    truth = gt.order()
    xs = [gt.tool_means[r.tool_id] for r in rows]
    ys = [r.rating_mu for r in rows]
    slope, intercept = _fit_affine(xs, ys)
    per_tool = []
    covered_n = 0
    for row in rows:
        calibrated = slope * gt.tool_means[row.tool_id] + intercept
        covered = row.ci_low <= calibrated <= row.ci_high
        covered_n += covered
        per_tool.append({
            "tool": row.tool_id,
            "truth_mean": gt.tool_means[row.tool_id],
            "mu": row.rating_mu,
            "sigma": row.rating_sigma_agg,
            "ci_low": row.ci_low,
            "ci_high": row.ci_high,
            "win_rate": row.win_rate,
            "matches": row.matches,
            "calibrated_truth": calibrated,
            "covered": covered,
        })
    return ExperimentReport(
        seed=seed,
        votes=core.event_count,
        kendall_tau=kendall_tau(recovered, truth),
        spearman_rho=spearman_rho(recovered, truth),
        top1_correct=recovered[0] == truth[0],
        ci_coverage=covered_n / len(rows),
        base_coverage_violations=violations,
        exposure_ratio=(max(r.matches for r in rows) / min(r.matches for r in rows)
                        if min(r.matches for r in rows) else None),
        recovered_order=tuple(recovered),
        truth_order=tuple(truth),
        per_tool=tuple(per_tool),
        experiment=exp.to_doc(),
    )
