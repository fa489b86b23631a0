"""Blinded pairwise-comparison arena for ranking AI-built websites.

Per-prompt TrueSkill ratings, adaptive matchmaking, an event-sourced
voting service with deterministic replay, and a synthetic-rater harness
for rank-recovery measurement.
"""

from .config import ArenaConfig, load_config, parse_config
from .errors import ArenaError
from .leaderboard import RatingTable
from .matchmaker import MatchmakerConfig
from .rating import Rating, TrueSkillParams, match_quality, new_rating, update_win, win_probability
from .service import ArenaCore
from .simulate import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ArenaConfig",
    "ArenaCore",
    "ArenaError",
    "ExperimentConfig",
    "MatchmakerConfig",
    "Rating",
    "RatingTable",
    "TrueSkillParams",
    "load_config",
    "match_quality",
    "new_rating",
    "parse_config",
    "run_experiment",
    "update_win",
    "win_probability",
    "__version__",
]
