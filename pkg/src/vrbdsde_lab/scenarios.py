"""Named preset scenarios shared by the tests, scripts and example configs."""
from __future__ import annotations

from dataclasses import dataclass

from .coefficients import (
    BoundarySpec,
    DiffusionSpec,
    DriftSpec,
    affine_diffusion,
    constant_boundary,
    convex_boundary,
    lattice_functional,
    linear_drift,
    ramp_boundary,
    zero_diffusion,
)
from .scene import LatticeModel, TimeGrid, build_lattice


@dataclass(frozen=True)
class Scenario:
    name: str
    horizon: float
    steps: int
    f: DriftSpec
    g: DiffusionSpec
    X: BoundarySpec

    def model(self, steps: int | None = None) -> LatticeModel:
        return build_lattice(TimeGrid(self.horizon, self.steps if steps is None else steps))

    @property
    def y_dependent_noise(self) -> bool:
        return self.g.lipschitz_y > 0


def _catalogue() -> dict:
    s = [
        # f = -l, g = 0: the index is the forward slope of X
        Scenario("ramp", 1.0, 8, linear_drift(), zero_diffusion(), ramp_boundary(2.0, 1.0)),
        Scenario("convex", 1.0, 8, linear_drift(), zero_diffusion(), convex_boundary()),
        Scenario("linear", 1.0, 8, linear_drift(), zero_diffusion(), ramp_boundary(1.0, 1.0)),
        Scenario("constant", 1.0, 6, linear_drift(), zero_diffusion(), constant_boundary(0.5)),
        # y-dependent drift, additive backward noise
        Scenario("additive_noise", 0.25, 6, linear_drift(0.0, 1.0, 0.1), affine_diffusion(0.1, 0.0), ramp_boundary()),
        Scenario(
            "brownian_square", 0.25, 6, linear_drift(0.2, 1.0, 0.1), affine_diffusion(0.1, 0.0),
            lattice_functional("w2"),
        ),
        Scenario(
            "cosine", 0.5, 6, linear_drift(0.0, 1.5, 0.05, k=1.5, K=1.5), affine_diffusion(0.05, 0.0),
            lattice_functional("cos_w"),
        ),
        # y-dependent backward noise
        Scenario("contraction", 0.25, 6, linear_drift(0.0, 1.0, 0.1), affine_diffusion(0.0, 0.1), ramp_boundary()),
        Scenario(
            "multiplicative_noise", 0.25, 6, linear_drift(0.0, 1.0, 0.1), affine_diffusion(0.1, 0.1),
            lattice_functional("w2"),
        ),
    ]
    return {x.name: x for x in s}


PRESET_SCENARIOS = _catalogue()


def get(name: str) -> Scenario:
    try:
        return PRESET_SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(PRESET_SCENARIOS)}") from None
