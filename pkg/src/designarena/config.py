"""Arena configuration document: parsing, validation, scaffolding.

One JSON file describes a deployment: the tool roster (display names are
admin-only), the prompt catalog in the released seven-field schema, the
artifact map, rating and matchmaking parameters, the seed, plus the
access codes and admin token the HTTP layer checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .matchmaker import MatchmakerConfig, PairPenalties, PairWeights, PromptWeights
from .rating import TrueSkillParams

__all__ = [
    "PROMPT_FIELDS",
    "ToolSpec",
    "PromptSpec",
    "ArenaConfig",
    "parse_config",
    "load_config",
    "skeleton_config",
    "export_prompts",
]

PROMPT_FIELDS = ("title", "type", "sector", "goal", "scenario", "vibe", "constraints")
PROMPT_TYPES = ("website", "webapp")


@dataclass(frozen=True)
class ToolSpec:
    tool_id: str
    display_name: str


@dataclass(frozen=True)
class PromptSpec:
    prompt_id: str
    title: str
    type: str
    sector: str
    goal: str
    scenario: str
    vibe: str
    constraints: str


@dataclass(frozen=True)
class ArenaConfig:
    tools: tuple[ToolSpec, ...]
    prompts: tuple[PromptSpec, ...]
    artifacts: dict[tuple[str, str], str]  # (tool_id, prompt_id) -> url or bundle path
    trueskill: TrueSkillParams
    matchmaker: MatchmakerConfig
    seed: int
    access_codes: tuple[str, ...] = ()
    admin_token: str = ""
    aggregate_sigma_policy: str = "rms"
    confidence_level: float = 0.95

    def tool_ids(self) -> tuple[str, ...]:
        return tuple(t.tool_id for t in self.tools)

    def prompt_ids(self) -> tuple[str, ...]:
        return tuple(p.prompt_id for p in self.prompts)

    def eligible(self) -> dict[str, tuple[str, ...]]:
        """prompt_id -> tools holding an artifact for it, sorted."""
        out: dict[str, list[str]] = {p.prompt_id: [] for p in self.prompts}
        for (tool, prompt), _url in self.artifacts.items():
            out[prompt].append(tool)
        return {p: tuple(sorted(ts)) for p, ts in out.items()}


def _strip_comments(obj):
    if isinstance(obj, dict):
        return {k: _strip_comments(v) for k, v in obj.items() if not k.startswith("_comment")}
    if isinstance(obj, list):
        return [_strip_comments(v) for v in obj]
    return obj


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ConfigError(f"{where}: missing required key {key!r}")
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{where}: key {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_penalty(value, where: str) -> float:
    # JSON cannot carry infinity; the exclusion level spells it "exclude".
    if value == "exclude":
        return float("inf")
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"{where}: penalty must be a number or \"exclude\", got {value!r}")


def parse_config(doc: dict) -> ArenaConfig:
    doc = _strip_comments(doc)
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")

    tools = []
    for i, entry in enumerate(_require(doc, "tools", list, "config")):
        where = f"tools[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: must be an object")
        tools.append(
            ToolSpec(
                tool_id=_require(entry, "tool_id", str, where),
                display_name=_require(entry, "display_name", str, where),
            )
        )
    if not tools:
        raise ConfigError("config: at least one tool required")
    ids = [t.tool_id for t in tools]
    if len(set(ids)) != len(ids):
        raise ConfigError("config: duplicate tool_id")

    prompts = []
    for i, entry in enumerate(_require(doc, "prompts", list, "config")):
        where = f"prompts[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: must be an object")
        pid = _require(entry, "prompt_id", str, where)
        extra = set(entry) - {"prompt_id", *PROMPT_FIELDS}
        missing = {*PROMPT_FIELDS} - set(entry)
        if extra or missing:
            detail = []
            if missing:
                detail.append(f"missing {sorted(missing)}")
            if extra:
                detail.append(f"unexpected {sorted(extra)}")
            raise ConfigError(f"{where}: prompt must carry exactly {list(PROMPT_FIELDS)}; " + ", ".join(detail))
        kind = entry["type"]
        if kind not in PROMPT_TYPES:
            raise ConfigError(f"{where}: type must be one of {PROMPT_TYPES}, got {kind!r}")
        prompts.append(PromptSpec(prompt_id=pid, **{f: _require(entry, f, str, where) for f in PROMPT_FIELDS}))
    if not prompts:
        raise ConfigError("config: at least one prompt required")
    pids = [p.prompt_id for p in prompts]
    if len(set(pids)) != len(pids):
        raise ConfigError("config: duplicate prompt_id")

    artifacts: dict[tuple[str, str], str] = {}
    raw_art = _require(doc, "artifacts", dict, "config")
    for tool_id, per_prompt in raw_art.items():
        if tool_id not in set(ids):
            raise ConfigError(f"artifacts: unknown tool_id {tool_id!r}")
        if not isinstance(per_prompt, dict):
            raise ConfigError(f"artifacts[{tool_id!r}]: must map prompt_id to url")
        for prompt_id, url in per_prompt.items():
            if prompt_id not in set(pids):
                raise ConfigError(f"artifacts[{tool_id!r}]: unknown prompt_id {prompt_id!r}")
            if not isinstance(url, str) or not url:
                raise ConfigError(f"artifacts[{tool_id!r}][{prompt_id!r}]: url must be a non-empty string")
            artifacts[(tool_id, prompt_id)] = url

    per_prompt_tools: dict[str, int] = {p: 0 for p in pids}
    for (_t, p) in artifacts:
        per_prompt_tools[p] += 1
    thin = sorted(p for p, n in per_prompt_tools.items() if n < 2)
    if thin:
        raise ConfigError(f"config: prompts need artifacts from at least 2 tools; too few on {thin}")

    ts_doc = doc.get("trueskill", {})
    if not isinstance(ts_doc, dict):
        raise ConfigError("config: trueskill must be an object")
    try:
        trueskill = TrueSkillParams(**ts_doc)
    except TypeError as exc:
        raise ConfigError(f"config: bad trueskill block: {exc}") from None

    mm_doc = doc.get("matchmaker", {})
    if not isinstance(mm_doc, dict):
        raise ConfigError("config: matchmaker must be an object")
    mm_kwargs = dict(mm_doc)
    if "weights" in mm_kwargs:
        mm_kwargs["weights"] = PairWeights(**mm_kwargs["weights"])
    if "prompt_weights" in mm_kwargs:
        mm_kwargs["prompt_weights"] = PromptWeights(**mm_kwargs["prompt_weights"])
    if "penalties" in mm_kwargs:
        pen = {k: _parse_penalty(v, f"matchmaker.penalties.{k}") for k, v in mm_kwargs["penalties"].items()}
        mm_kwargs["penalties"] = PairPenalties(**pen)
    try:
        matchmaker = MatchmakerConfig(**mm_kwargs)
    except TypeError as exc:
        raise ConfigError(f"config: bad matchmaker block: {exc}") from None

    seed = _require(doc, "seed", int, "config")
    if isinstance(seed, bool):
        raise ConfigError("config: seed must be an integer")

    codes = doc.get("access_codes", [])
    if not isinstance(codes, list) or not all(isinstance(c, str) and c for c in codes):
        raise ConfigError("config: access_codes must be a list of non-empty strings")
    admin_token = doc.get("admin_token", "")
    if not isinstance(admin_token, str):
        raise ConfigError("config: admin_token must be a string")

    policy = doc.get("aggregate_sigma_policy", "rms")
    if policy not in ("rms", "mean", "sem"):
        raise ConfigError(f"config: aggregate_sigma_policy must be rms|mean|sem, got {policy!r}")
    level = doc.get("confidence_level", 0.95)
    if not isinstance(level, (int, float)) or isinstance(level, bool) or not 0.0 < level < 1.0:
        raise ConfigError(f"config: confidence_level must be in (0, 1), got {level!r}")

    return ArenaConfig(
        tools=tuple(tools),
        prompts=tuple(prompts),
        artifacts=artifacts,
        trueskill=trueskill,
        matchmaker=matchmaker,
        seed=seed,
        access_codes=tuple(codes),
        admin_token=admin_token,
        aggregate_sigma_policy=policy,
        confidence_level=float(level),
    )


def load_config(path: str) -> ArenaConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def skeleton_config() -> dict:
    """Starter document for `init`, annotated through _comment keys."""
    return {
        "_comment": "Arena configuration. Keys starting with _comment are ignored.",
        "seed": 1,
        "tools": [
            {"tool_id": "tool-a", "display_name": "Tool A (admin-only name)"},
            {"tool_id": "tool-b", "display_name": "Tool B (admin-only name)"},
        ],
        "prompts": [
            {
                "prompt_id": "p-001",
                "title": "Neighborhood bakery site",
                "type": "website",
                "sector": "food",
                "goal": "drive walk-in orders",
                "scenario": "A family bakery wants an online presence with menu and hours.",
                "vibe": "warm, rustic",
                "constraints": "one page, mobile friendly",
            }
        ],
        "_comment_artifacts": "artifacts[tool_id][prompt_id] = url or bundle path; every prompt needs >= 2 tools",
        "artifacts": {
            "tool-a": {"p-001": "https://example.org/a/p-001"},
            "tool-b": {"p-001": "https://example.org/b/p-001"},
        },
        "_comment_trueskill": "mu0 25.0, sigma0 25/3, beta mu0/6; tau and draw_probability must stay 0",
        "trueskill": {},
        "_comment_matchmaker": "blend weights default 1.0; penalties 0.5/0.25/exclude/0.25; set repeat_cap_exceeded to \"exclude\" for a hard cap",
        "matchmaker": {},
        "access_codes": ["change-me"],
        "admin_token": "change-me-too",
        "aggregate_sigma_policy": "rms",
        "confidence_level": 0.95,
    }


def export_prompts(config: ArenaConfig) -> list[dict]:
    """Prompt catalog in the released field schema, id first."""
    return [
        {"prompt_id": p.prompt_id, **{f: getattr(p, f) for f in PROMPT_FIELDS}}
        for p in config.prompts
    ]
