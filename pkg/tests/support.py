"""Shared helpers for building small arenas and driving votes in tests."""

from __future__ import annotations

import dataclasses
import random

from designarena.config import ArenaConfig
from designarena.errors import SessionClosedError
from designarena.service import ArenaCore
from designarena.simulate import ExperimentConfig, synthetic_arena_config


def make_config(n_tools=3, n_prompts=4, n_codes=6, seed=11, **replacements) -> ArenaConfig:
    cfg = synthetic_arena_config(
        ExperimentConfig(n_tools=n_tools, n_prompts=n_prompts, n_experts=n_codes), seed
    )
    return dataclasses.replace(cfg, **replacements) if replacements else cfg


def onboard(core: ArenaCore, k: int = 0) -> dict:
    return core.onboard(f"code-{k:04d}", f"First{k}", f"Last{k}", ["Designer"], False)


def drive_votes(core: ArenaCore, token: str, n: int, rng: random.Random | None = None, choice: str | None = None) -> list[dict]:
    """Cast n votes through the public core surface, opening sessions as needed."""
    rng = rng or random.Random(0)
    receipts = []
    for _ in range(n):
        try:
            card = core.get_match(token)
        except SessionClosedError:
            core.start_session(token)
            card = core.get_match(token)
        pick = choice or rng.choice(["left", "right"])
        receipts.append(core.submit_vote(token, card["match_id"], pick, True))
    return receipts
