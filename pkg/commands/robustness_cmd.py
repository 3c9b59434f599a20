"""
Module: commands/robustness_cmd.py
Description: critical-efficiency and critical-noise: the detector efficiency
             η_c and white-noise fraction q_c at which violation is lost,
             for sign and normalized Stokes observables.
Author: pwnedByJT
"""

from functools import partial

from commands.base import Command, Table, gamma_grid
from engine.bell import DEFAULT_CHSH_CUTOFF, SettingsQuad, critical_efficiency, critical_noise
from engine.observables import ObservableKind


_KINDS = (ObservableKind.SIGN, ObservableKind.NORMALIZED)


def _efficiency_point(gamma: float, inequality: str, cutoff: int | None, quad: SettingsQuad) -> list:
    return [gamma] + [critical_efficiency(gamma, inequality, kind, cutoff=cutoff, quad=quad) for kind in _KINDS]


def _noise_point(gamma: float, cutoff: int, quad: SettingsQuad, noise_gamma: float | None) -> list:
    return [gamma] + [critical_noise(gamma, quad, kind, cutoff, noise_gamma=noise_gamma) for kind in _KINDS]


class CriticalEfficiencyCommand(Command):
    name = "critical-efficiency"
    description = "Critical detector efficiency versus gain (CHSH on BSV or Mermin on BGHZ)."
    defaults = {"gamma_min": 0.1, "gamma_max": 2.0, "gamma_step": 0.1}

    async def run(self, config) -> Table:
        if config.inequality == "mermin" and config.gamma_max > 0.2:
            self.app.log("WARN", "mermin sweeps beyond gamma=0.2 usually exceed the BGHZ truncation threshold")
        fn = partial(_efficiency_point, inequality=config.inequality, cutoff=config.cutoff, quad=config.quad)
        warm = (config.cutoff or DEFAULT_CHSH_CUTOFF) if config.inequality == "chsh" else None
        rows = await self.app.sweep(config, fn, gamma_grid(config), warm_cutoff=warm)
        return Table(["gamma", "eta_c_sign", "eta_c_normalized"], rows)


class CriticalNoiseCommand(Command):
    name = "critical-noise"
    description = "Critical signal fraction q_c of the BSV / Bell-family white-noise mixture versus gain."
    defaults = {"cutoff": DEFAULT_CHSH_CUTOFF, "gamma_min": 0.1, "gamma_max": 2.0, "gamma_step": 0.1}

    async def run(self, config) -> Table:
        fn = partial(_noise_point, cutoff=config.cutoff, quad=config.quad, noise_gamma=config.noise_gamma)
        rows = await self.app.sweep(config, fn, gamma_grid(config), warm_cutoff=config.cutoff)
        return Table(["gamma", "q_c_sign", "q_c_normalized"], rows)


async def setup(app) -> None:
    await app.add_command(CriticalEfficiencyCommand(app))
    await app.add_command(CriticalNoiseCommand(app))
