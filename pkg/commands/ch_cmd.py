"""
Module: commands/ch_cmd.py
Description: ch-curve: Clauser-Horne LHS of BSV versus gain for projector and
             rate observables. The classical window is [-1, 0].
Author: pwnedByJT
"""

from functools import partial

from commands.base import Command, Table, gamma_grid
from engine.bell import DEFAULT_CH_CUTOFF, SettingsQuad, ch_lhs, gamma_threshold
from engine.observables import ObservableKind
from engine.states import bsv_ensemble


def _ch_point(gamma: float, cutoff: int, eta: float, quad: SettingsQuad) -> dict:
    ensemble = bsv_ensemble(gamma, cutoff)
    projector = ch_lhs(ensemble, quad, ObservableKind.PROJECTOR, eta, gamma)
    rate = ch_lhs(ensemble, quad, ObservableKind.RATE, eta, gamma)
    return {"row": [gamma, projector.lhs, rate.lhs], "tail": ensemble.tail}


class ChCurveCommand(Command):
    name = "ch-curve"
    description = "CH LHS of BSV versus gain, projector and rate observables."
    defaults = {"cutoff": DEFAULT_CH_CUTOFF, "gamma_max": 2.0}

    async def run(self, config) -> Table:
        fn = partial(_ch_point, cutoff=config.cutoff, eta=config.eta, quad=config.quad)
        results = await self.app.sweep(config, fn, gamma_grid(config), warm_cutoff=config.cutoff)

        meta = {"tail_max": max(r["tail"] for r in results)}
        if config.eta == 1.0:
            for kind in (ObservableKind.PROJECTOR, ObservableKind.RATE):
                meta[f"gamma_tr_{kind.value}"] = gamma_threshold(kind, "ch", config.cutoff, quad=config.quad).gamma
        return Table(["gamma", "ch_projector", "ch_rate"], [r["row"] for r in results], meta)


async def setup(app) -> None:
    await app.add_command(ChCurveCommand(app))
