"""Generators of valid convex closed initial profiles.

All generators go through support functions: a trigonometric polynomial
u(theta) gives the radius of curvature rho = u'' + u in closed form, so the
produced profiles close exactly (no first harmonic in rho by construction)
and convexity is checked at generation time, before any flow sees the curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConvexityError, CurvatureProfile
from .oracles import ellipse_curvature
from .spectral import AngularGrid

DEFAULT_GRID_N = 256


@dataclass(frozen=True)
class Circle:
    r: float
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self) -> None:
        if not self.r > 0.0:
            raise ValueError(f"circle radius must be positive, got {self.r}")


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self) -> None:
        if not (self.a >= self.b > 0.0):
            raise ValueError(
                f"ellipse semi-axes must satisfy a >= b > 0, got a={self.a}, b={self.b}"
            )


def _check_modes(modes) -> tuple[tuple[int, float, float], ...]:
    out = []
    for entry in modes:
        m, amp, phase = entry
        m = int(m)
        if m == 1:
            raise ValueError(
                "mode 1 is a pure translation of the support function "
                "and is not allowed"
            )
        if m < 2:
            raise ValueError(f"perturbation modes must be >= 2, got {m}")
        out.append((m, float(amp), float(phase)))
    return tuple(out)


@dataclass(frozen=True)
class PerturbedCircle:
    """u = r0 + sum of amp*cos(m*theta - phase) over the given modes."""

    r0: float
    modes: tuple[tuple[int, float, float], ...] = field(default_factory=tuple)
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self) -> None:
        if not self.r0 > 0.0:
            raise ValueError(f"base radius must be positive, got {self.r0}")
        object.__setattr__(self, "modes", _check_modes(self.modes))


@dataclass(frozen=True)
class ExplicitSupport:
    """u = mean + sum of (a_m cos(m*theta) + b_m sin(m*theta)), modes >= 2."""

    mean: float
    harmonics: tuple[tuple[int, float, float], ...] = field(default_factory=tuple)
    grid_n: int = DEFAULT_GRID_N

    def __post_init__(self) -> None:
        if not self.mean > 0.0:
            raise ValueError(f"mean support must be positive, got {self.mean}")
        out = []
        for entry in self.harmonics:
            m, ac, bs = entry
            m = int(m)
            if m == 1:
                raise ValueError(
                    "mode 1 is a pure translation of the support function "
                    "and is not allowed"
                )
            if m < 2:
                raise ValueError(f"support modes must be >= 2, got {m}")
            out.append((m, float(ac), float(bs)))
        object.__setattr__(self, "harmonics", tuple(out))


CurveSpec = Circle | Ellipse | PerturbedCircle | ExplicitSupport


def _rho_terms(spec) -> list[tuple[int, float, float]]:
    """(mode, cos coefficient, sin coefficient) of rho - mean = u'' + u - mean."""
    if isinstance(spec, PerturbedCircle):
        return [
            (m, (1 - m * m) * amp * math.cos(phase), (1 - m * m) * amp * math.sin(phase))
            for m, amp, phase in spec.modes
        ]
    return [
        (m, (1 - m * m) * ac, (1 - m * m) * bs) for m, ac, bs in spec.harmonics
    ]


def _rho_values(spec, theta: np.ndarray) -> np.ndarray:
    mean = spec.r0 if isinstance(spec, PerturbedCircle) else spec.mean
    rho = np.full_like(theta, mean)
    for m, c, s in _rho_terms(spec):
        rho += c * np.cos(m * theta) + s * np.sin(m * theta)
    return rho


def generate(spec: CurveSpec) -> CurvatureProfile:
    """Materialize a CurveSpec as a curvature profile on its grid."""
    grid = AngularGrid(spec.grid_n)
    if isinstance(spec, Circle):
        return CurvatureProfile(grid, np.full(grid.n, 1.0 / spec.r))
    if isinstance(spec, Ellipse):
        return CurvatureProfile(grid, ellipse_curvature(spec.a, spec.b, grid.theta))

    # convexity check on a refined grid so dips between samples are caught
    fine = np.arange(8 * grid.n) * (2.0 * math.pi / (8 * grid.n))
    rho_fine = _rho_values(spec, fine)
    j = int(rho_fine.argmin())
    if rho_fine[j] <= 0.0:
        raise ConvexityError(
            f"support spec is not convex: radius of curvature "
            f"{rho_fine[j]:.6g} at theta={fine[j]:.6f}"
        )
    return CurvatureProfile(grid, 1.0 / _rho_values(spec, grid.theta))


def random_convex(
    seed: int,
    r0: float = 1.0,
    max_mode: int = 6,
    budget: float = 0.8,
    grid_n: int = DEFAULT_GRID_N,
) -> CurvatureProfile:
    """Deterministic-in-seed random convex profile.

    Amplitudes over modes 2..max_mode are scaled so that
    sum (m^2-1)|a_m| = budget*r0 < r0, which keeps rho = u'' + u positive
    regardless of phases; the construction never needs rejection.
    """
    if not 0.0 <= budget < 1.0:
        raise ValueError(f"budget must lie in [0, 1), got {budget}")
    if max_mode < 2:
        raise ValueError(f"max_mode must be >= 2, got {max_mode}")
    rng = np.random.default_rng(seed)
    modes = []
    if budget > 0.0:
        ms = np.arange(2, max_mode + 1)
        shares = rng.uniform(0.2, 1.0, ms.size)
        shares /= shares.sum()
        phases = rng.uniform(0.0, 2.0 * math.pi, ms.size)
        modes = [
            (int(m), budget * r0 * sh / (m * m - 1.0), ph)
            for m, sh, ph in zip(ms, shares, phases)
        ]
    return generate(PerturbedCircle(r0=r0, modes=tuple(modes), grid_n=grid_n))
