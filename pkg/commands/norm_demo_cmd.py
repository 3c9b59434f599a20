"""
Module: commands/norm_demo_cmd.py
Description: norm-demo: Stokes vector of |3_H, 0_V> and rotated copies of it.
             For sign observables the norm changes under rotation, unlike the
             normalized Stokes vector.
Author: pwnedByJT
"""

import math

from commands.base import Command, Table
from engine.observables import ObservableKind, rotate_state, stokes_vector, stokes_vector_norm
from engine.states import fock_product_state


DEMO_ANGLES = (0.0, math.pi / 8, math.pi / 4)


def _build_norm_rows(kind: ObservableKind, j: int = 3, k: int = 0) -> list[list]:
    state = fock_product_state(j, k)
    rows = []
    for angle in DEMO_ANGLES:
        rotated = rotate_state(state, angle)
        rows.append([angle, *stokes_vector(rotated, kind), stokes_vector_norm(rotated, kind)])
    return rows


class NormDemoCommand(Command):
    name = "norm-demo"
    description = "Stokes vector and norm of |3_H,0_V> at rotation angles 0, pi/8, pi/4."

    async def run(self, config) -> Table:
        rows = _build_norm_rows(ObservableKind(config.kind))
        return Table(["angle", "component_1", "component_2", "component_3", "norm"], rows,
                     {"state": "|3_H,0_V>"})


async def setup(app) -> None:
    await app.add_command(NormDemoCommand(app))
