"""
Module: commands/chsh_cmd.py
Description: chsh-curve and nonvacuum-curve: the BSV CHSH left-hand side
             against the gain Γ, and its non-vacuum part at two cutoffs next
             to the analytic lower bound.
Author: pwnedByJT
"""

from functools import partial

from commands.base import Command, Table, gamma_grid
from engine.bell import (
    DEFAULT_CHSH_CUTOFF,
    SettingsQuad,
    asymptotic_bound,
    chsh_lhs,
    gamma_threshold,
    noisy_chsh_lhs,
)
from engine.observables import ObservableKind
from engine.states import bsv_ensemble


# ---------------------------------------------------------------------------
# POINT FUNCTIONS (module level so they pickle into worker processes)
# ---------------------------------------------------------------------------

def _chsh_point(gamma: float, cutoff: int, eta: float, q: float, quad: SettingsQuad,
                noise_gamma: float | None) -> dict:
    ensemble = bsv_ensemble(gamma, cutoff)
    sign = chsh_lhs(ensemble, quad, ObservableKind.SIGN_MINUS, eta, gamma)
    normalized = chsh_lhs(ensemble, quad, ObservableKind.NORMALIZED_MINUS, eta, gamma)
    lhs_sign, lhs_normalized = sign.lhs, normalized.lhs
    if q < 1.0:
        lhs_sign = noisy_chsh_lhs(gamma, q, cutoff, quad, ObservableKind.SIGN_MINUS, eta, noise_gamma)
        lhs_normalized = noisy_chsh_lhs(gamma, q, cutoff, quad, ObservableKind.NORMALIZED_MINUS, eta, noise_gamma)
    return {"row": [gamma, lhs_sign, lhs_normalized, sign.vacuum_term], "tail": ensemble.tail}


def _nonvacuum_point(gamma: float, cutoff_a: int, cutoff_b: int, quad: SettingsQuad) -> dict:
    report_a = chsh_lhs(bsv_ensemble(gamma, cutoff_a), quad, ObservableKind.SIGN_MINUS, 1.0, gamma)
    report_b = chsh_lhs(bsv_ensemble(gamma, cutoff_b), quad, ObservableKind.SIGN_MINUS, 1.0, gamma)
    return {
        "row": [gamma, report_a.nonvacuum(), report_b.nonvacuum(), asymptotic_bound(gamma)],
        "tail": max(report_a.tail, report_b.tail),
    }


# ---------------------------------------------------------------------------
# COMMANDS
# ---------------------------------------------------------------------------

class ChshCurveCommand(Command):
    name = "chsh-curve"
    description = "CHSH LHS of BSV versus gain, sign and normalized Stokes observables."
    defaults = {"cutoff": DEFAULT_CHSH_CUTOFF}

    async def run(self, config) -> Table:
        gammas = gamma_grid(config)
        fn = partial(_chsh_point, cutoff=config.cutoff, eta=config.eta, q=config.q,
                     quad=config.quad, noise_gamma=config.noise_gamma)
        results = await self.app.sweep(config, fn, gammas, warm_cutoff=config.cutoff)

        meta = {"tail_max": max(r["tail"] for r in results)}
        if config.eta == 1.0 and config.q == 1.0:
            for kind in (ObservableKind.SIGN, ObservableKind.NORMALIZED):
                threshold = gamma_threshold(kind, "chsh", config.cutoff, quad=config.quad)
                meta[f"gamma_tr_{kind.value}"] = threshold.gamma
        return Table(["gamma", "lhs_sign", "lhs_normalized", "vacuum_term"], [r["row"] for r in results], meta)


class NonvacuumCurveCommand(Command):
    name = "nonvacuum-curve"
    description = "Non-vacuum part of the sign CHSH LHS at two cutoffs, with its asymptotic lower bound."
    defaults = {"cutoff": DEFAULT_CHSH_CUTOFF}

    async def run(self, config) -> Table:
        gammas = gamma_grid(config)
        fn = partial(_nonvacuum_point, cutoff_a=config.cutoff, cutoff_b=config.cutoff_b, quad=config.quad)
        results = await self.app.sweep(config, fn, gammas, warm_cutoff=max(config.cutoff, config.cutoff_b))
        columns = ["gamma", f"lhs_nv_cutoff_{config.cutoff}", f"lhs_nv_cutoff_{config.cutoff_b}", "asymptotic_bound"]
        return Table(columns, [r["row"] for r in results], {"tail_max": max(r["tail"] for r in results)})


async def setup(app) -> None:
    await app.add_command(ChshCurveCommand(app))
    await app.add_command(NonvacuumCurveCommand(app))
