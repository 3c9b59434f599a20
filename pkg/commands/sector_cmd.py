"""
Module: commands/sector_cmd.py
Description: per-sector and block-average: CHSH/CH values of the individual
             n-pair BSV sectors, and their gain-weighted averages over blocks
             of eight consecutive sectors.
Author: pwnedByJT
"""

import math
from functools import partial

from commands.base import Command, Table
from engine.bell import SettingsQuad, block_average, per_sector_ch, per_sector_chsh
from engine.observables import ObservableKind


BLOCK_GAMMAS = (1.0, 2.0, 3.0, math.inf)


def _sector_point(n: int, quad: SettingsQuad) -> list:
    return [
        n,
        per_sector_chsh(n, quad, ObservableKind.SIGN),
        per_sector_chsh(n, quad, ObservableKind.NORMALIZED),
        per_sector_ch(n, quad, ObservableKind.PROJECTOR),
        "odd" if n % 2 else "even",
    ]


def _block_point(N: int, quad: SettingsQuad) -> list:
    return [N] + [block_average(N, gamma, quad) for gamma in BLOCK_GAMMAS]


class PerSectorCommand(Command):
    name = "per-sector"
    description = "CHSH (sign, normalized) and CH (projector) for each BSV sector n = 1..n-max."
    defaults = {"n_max": 100}

    async def run(self, config) -> Table:
        sectors = list(range(1, config.n_max + 1))
        rows = await self.app.sweep(config, partial(_sector_point, quad=config.quad), sectors,
                                    warm_cutoff=config.n_max)
        return Table(["n", "chsh_sign", "chsh_normalized", "ch_sign", "parity"], rows)


class BlockAverageCommand(Command):
    name = "block-average"
    description = "Sign CHSH averaged over blocks of 8 sectors at gain 1, 2, 3 and the infinite-gain limit."
    defaults = {"blocks": 12}

    async def run(self, config) -> Table:
        blocks = list(range(1, config.blocks + 1))
        rows = await self.app.sweep(config, partial(_block_point, quad=config.quad), blocks,
                                    warm_cutoff=8 * config.blocks)
        return Table(["N", "gamma_1", "gamma_2", "gamma_3", "gamma_inf"], rows)


async def setup(app) -> None:
    await app.add_command(PerSectorCommand(app))
    await app.add_command(BlockAverageCommand(app))
