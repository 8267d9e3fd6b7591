"""Python access to the tiervm two-tier virtual machine."""

from ._tiervm import (
    NEVER_TIER_UP,
    Engine,
    difftest,
    dump_bytecode,
    dump_templates,
    run,
    stats_keys,
)

__all__ = [
    "NEVER_TIER_UP",
    "Engine",
    "difftest",
    "dump_bytecode",
    "dump_templates",
    "run",
    "stats_keys",
]
