from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances, iteration caps and seeding shared by every iterative routine.

    Restart ``k`` of any multi-start search draws from ``rng(k)``, a generator
    seeded with ``seed ^ k``; results are therefore reproducible for a fixed
    seed regardless of evaluation order.
    """

    inner_tol: float = 1e-9
    outer_tol: float = 1e-7
    max_iter: int = 10000
    multistarts: int = 8
    seed: int = 0
    alpha_ladder_cap: float = 2.0**10
    # minimizer used for the inner problem: "lbfgs" (analytic gradients) or
    # "simplex" (derivative-free reference path)
    inner_method: str = "lbfgs"
    distance_starts: int = 16

    def __post_init__(self):
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.multistarts < 1 or self.distance_starts < 1:
            raise ValueError("multistarts must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.alpha_ladder_cap < 2:
            raise ValueError("alpha_ladder_cap must be at least 2")
        if self.inner_method not in ("lbfgs", "simplex"):
            raise ValueError(f"unknown inner_method {self.inner_method!r}")

    def rng(self, k: int = 0) -> np.random.Generator:
        return np.random.default_rng(int(self.seed) ^ int(k))

    def replace(self, **changes) -> "SolverSettings":
        return dataclasses.replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))


DEFAULT_SETTINGS = SolverSettings()
