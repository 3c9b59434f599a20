"""
Module: commands/base.py
Description: Shared pieces of the sweep commands: the Command base class every
             command module subclasses, the Table it returns, and the Γ grid.
Author: pwnedByJT
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from BELL import App, SweepConfig


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    meta: dict[str, Any] = field(default_factory=dict)


def gamma_grid(config: "SweepConfig") -> list[float]:
    """gamma_min, gamma_min + step, ... up to gamma_max inclusive (1e-9 slack)."""
    count = int((config.gamma_max - config.gamma_min) / config.gamma_step + 1e-9) + 1
    return [round(config.gamma_min + i * config.gamma_step, 12) for i in range(count)]


class Command:
    """One CLI subcommand. `defaults` override the global SweepConfig defaults."""

    name: str = ""
    description: str = ""
    defaults: dict[str, Any] = {}

    def __init__(self, app: "App") -> None:
        self.app = app

    async def run(self, config: "SweepConfig") -> Table:
        raise NotImplementedError
