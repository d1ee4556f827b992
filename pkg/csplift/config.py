"""
Runtime settings for csplift.

Values come from the environment with defaults, and the CLI overrides them
from its flags.
"""

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Settings:
    max_nodes: int = 5_000_000
    max_domain: int = 10 ** 6
    max_tuples: int = 2_500_000
    seed: int = 0
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from CSPLIFT_* environment variables."""
        settings = cls(
            max_nodes=int(os.getenv('CSPLIFT_MAX_NODES', '5000000')),
            max_domain=int(os.getenv('CSPLIFT_MAX_DOMAIN', str(10 ** 6))),
            max_tuples=int(os.getenv('CSPLIFT_MAX_TUPLES', '2500000')),
            seed=int(os.getenv('CSPLIFT_SEED', '0')),
            log_level=os.getenv('CSPLIFT_LOG_LEVEL', 'WARNING').upper(),
        )
        settings.validate()
        return settings

    def validate(self) -> None:
        for key in ('max_nodes', 'max_domain', 'max_tuples'):
            if getattr(self, key) <= 0:
                raise ValueError(f"{key} must be positive, got {getattr(self, key)}")

    def override(self, **changes) -> "Settings":
        """Return a copy with the non-None changes applied."""
        updated = replace(self, **{k: v for k, v in changes.items() if v is not None})
        updated.validate()
        return updated


_current = None


def get_settings() -> Settings:
    global _current
    if _current is None:
        _current = Settings.from_env()
    return _current


def set_settings(settings: Settings) -> None:
    global _current
    settings.validate()
    _current = settings
