"""Exception hierarchy shared across the arena.

Every error carries a stable ``code`` string; the HTTP layer surfaces it in
problem-document responses so clients can branch on codes, not messages.
"""

from __future__ import annotations


class ArenaError(Exception):
    code = "arena_error"


class DomainError(ArenaError):
    """Input is outside an operation's mathematical or structural domain."""

    code = "domain_error"


class NotFoundError(ArenaError):
    code = "not_found"


class ValidationError(ArenaError):
    """Bad request payload; ``fields`` names what is missing or malformed."""

    code = "validation_failed"

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class ConfigError(ArenaError):
    code = "invalid_config"


class AuthError(ArenaError):
    code = "auth_failed"


class AdminAuthError(ArenaError):
    code = "admin_auth_failed"


class QuotaError(ArenaError):
    """Expert has hit the lifetime vote ceiling."""

    code = "vote_quota_exhausted"


class SessionClosedError(ArenaError):
    code = "session_closed"


class StaleMatchError(ArenaError):
    """Vote references a match that is not the expert's outstanding one."""

    code = "stale_match"


class UnviewedVoteError(ArenaError):
    """Vote arrived without the full-view acknowledgement; never stored."""

    code = "full_view_required"


class EmptyCatalogError(ArenaError):
    code = "empty_catalog"


class InsufficientToolsError(ArenaError):
    code = "insufficient_tools"


class NoEligiblePairError(ArenaError):
    """Every candidate pair at a prompt is excluded by the repeat cap."""

    code = "no_eligible_pair"


class ConfigLockedError(ArenaError):
    code = "config_locked"


class CorruptLogError(ArenaError):
    """Event log failed framing or sequence validation at line ``offset``."""

    code = "corrupt_log"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (line {offset})")
        self.offset = offset
