"""
Module: commands/mermin_cmd.py
Description: mermin-curve: vacuum-subtracted Mermin LHS of the three-beam
             BGHZ state versus gain, sign against normalized observables.
             Aborts when the truncated BGHZ evolution leaks past the cutoff.
Author: pwnedByJT
"""

from functools import partial

from commands.base import Command, Table, gamma_grid
from engine.bell import DEFAULT_MERMIN_CUTOFF, mermin_lhs
from engine.observables import ObservableKind
from engine.states import bghz_coefficients


def _mermin_point(gamma: float, cutoff: int, eta: float) -> list:
    coeffs = bghz_coefficients(gamma, cutoff)
    sign = mermin_lhs(coeffs, ObservableKind.SIGN_MINUS, eta)
    normalized = mermin_lhs(coeffs, ObservableKind.NORMALIZED_MINUS, eta)
    return [gamma, sign.lhs, normalized.lhs, coeffs.leakage]


class MerminCurveCommand(Command):
    name = "mermin-curve"
    description = "Mermin LHS of BGHZ versus gain, sign and normalized Stokes observables."
    defaults = {"cutoff": DEFAULT_MERMIN_CUTOFF, "gamma_min": 0.01, "gamma_max": 0.15, "gamma_step": 0.01}

    async def run(self, config) -> Table:
        fn = partial(_mermin_point, cutoff=config.cutoff, eta=config.eta)
        rows = await self.app.sweep(config, fn, gamma_grid(config))
        return Table(["gamma", "lhs_sign", "lhs_normalized", "leakage"], rows,
                     {"leakage_max": max(r[3] for r in rows)})


async def setup(app) -> None:
    await app.add_command(MerminCurveCommand(app))
