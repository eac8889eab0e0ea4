"""Geometry of closed convex plane curves given by curvature in normal angle.

A convex closed curve with strictly positive curvature is stored as samples
k(theta_j) over the outward normal angle. Everything else is derived from
w = 1/k by spectral calculus: arc length element ds = w dtheta, tangent
T(theta) = (-sin theta, cos theta), position by antidifferentiation, support
function u = <X - c, N> about the area centroid c. Closure holds iff the
first Fourier moments of w vanish; the residual norm is reported as the
closure defect rather than silently projected away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .spectral import (
    TWO_PI,
    AngularGrid,
    PeriodicField,
    antiderivative_values,
    deriv_values,
    first_harmonics_values,
    integrate_values,
    refined_extremum_values,
    resample_values,
)


class ConvexityError(ValueError):
    pass


class ClosureError(ValueError):
    pass


class DomainError(ValueError):
    pass


class RadiusSearchError(RuntimeError):
    """Center search did not converge; carries the best iterate found."""

    def __init__(self, message: str, best: float):
        super().__init__(message)
        self.best = best


# relative closure tolerance for operations that require a closed curve
CLOSURE_RTOL = 1e-6


@dataclass(frozen=True)
class CurvatureProfile:
    """Positive curvature samples of a convex curve over the normal angle."""

    grid: AngularGrid
    k: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=np.float64)
        if k.shape != (self.grid.n,):
            raise ConvexityError(
                f"expected {self.grid.n} curvature samples, got {k.shape}"
            )
        if not np.all(np.isfinite(k)):
            j = int(np.flatnonzero(~np.isfinite(k))[0])
            raise ConvexityError(f"non-finite curvature at index {j}")
        if k.min() <= 0.0:
            j = int(k.argmin())
            raise ConvexityError(
                f"curvature must be positive; k={k[j]:.6g} at "
                f"theta={self.grid.theta[j]:.6f} (index {j})"
            )
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "k", k)

    @cached_property
    def w(self) -> np.ndarray:
        """Radius of curvature samples 1/k (read-only)."""
        w = 1.0 / self.k
        w.setflags(write=False)
        return w

    def field(self) -> PeriodicField:
        return PeriodicField(self.grid, self.k)


@dataclass(frozen=True)
class SupportRepresentation:
    """Support samples u(theta) = <X - center, N> about a center point."""

    center: tuple[float, float]
    u: PeriodicField


@dataclass(frozen=True)
class GeometrySnapshot:
    """Scalar geometry of one curve at one time."""

    t: float
    L: float
    A: float
    I: float
    k_min: float
    k_max: float
    lam: float
    closure_defect: float
    r_in: float
    r_out: float


def length(kp: CurvatureProfile) -> float:
    """Arc length, integral of 1/k over the normal angle."""
    return integrate_values(kp.w)


def closure_defect(kp: CurvatureProfile) -> float:
    """Norm of the first Fourier moments of 1/k; zero iff the curve closes."""
    c1, s1 = first_harmonics_values(kp.w)
    return math.hypot(c1, s1)


def _require_closed(kp: CurvatureProfile, where: str) -> None:
    defect = closure_defect(kp)
    scale = length(kp)
    if defect > CLOSURE_RTOL * scale:
        raise ClosureError(
            f"{where} requires a closed curve; closure defect "
            f"{defect:.3e} exceeds {CLOSURE_RTOL:.0e} * L = {CLOSURE_RTOL * scale:.3e}"
        )


def reconstruct_points(
    kp: CurvatureProfile, anchor: tuple[float, float] = (0.0, 0.0)
) -> np.ndarray:
    """Integrate the tangent to recover points X(theta_j), anchored at X(0).

    Returns an (n+1, 2) array including the wrap-around endpoint X(2*pi);
    the gap between last and first rows equals the closure defect.
    """
    grid = kp.grid
    w = kp.w
    gx = -grid.sin * w
    gy = grid.cos * w
    Gx, mx = antiderivative_values(gx)
    Gy, my = antiderivative_values(gy)
    n = grid.n
    pts = np.empty((n + 1, 2))
    pts[:n, 0] = anchor[0] + Gx + mx * grid.theta
    pts[:n, 1] = anchor[1] + Gy + my * grid.theta
    pts[n, 0] = anchor[0] + Gx[0] + mx * TWO_PI
    pts[n, 1] = anchor[1] + Gy[0] + my * TWO_PI
    return pts


def _support_pipeline(
    kp: CurvatureProfile,
) -> tuple[np.ndarray, tuple[float, float], float]:
    """Reconstruct, find the area centroid, return (u, center, area)."""
    grid = kp.grid
    w = kp.w
    pts = reconstruct_points(kp)[:-1]
    x, y = pts[:, 0], pts[:, 1]
    cos, sin = grid.cos, grid.sin
    # Green's theorem with dx = -sin*w dtheta, dy = cos*w dtheta
    area0 = 0.5 * integrate_values(w * (x * cos + y * sin))
    cx = integrate_values(x * x * cos * w) / (2.0 * area0)
    cy = integrate_values(y * y * sin * w) / (2.0 * area0)
    u = (x - cx) * cos + (y - cy) * sin
    return u, (cx, cy), 0.5 * integrate_values(u * w)


def area(kp: CurvatureProfile) -> float:
    """Enclosed area, (1/2) integral of u/k about the centroid."""
    _require_closed(kp, "area")
    return _support_pipeline(kp)[2]


def support_about_centroid(kp: CurvatureProfile) -> SupportRepresentation:
    """Support function samples about the area centroid."""
    _require_closed(kp, "support_about_centroid")
    u, center, _ = _support_pipeline(kp)
    # centroid of a convex region is interior, so u > 0 must hold
    assert u.min() > 0.0, "support about centroid not positive"
    return SupportRepresentation(center, PeriodicField(kp.grid, u))


_RADIUS_MAXITER = 4000


def inradius_outradius(
    kp: CurvatureProfile,
    sup: SupportRepresentation | None = None,
) -> tuple[float, float]:
    """Largest inscribed and smallest circumscribed circle radii.

    The radial extrema over the angle are evaluated on a 4x trigonometric
    resample with parabolic refinement (raw grid extrema carry O(dtheta^2)
    error); the center search is a restarted Nelder-Mead simplex. Callers
    that already hold the centroid support samples pass them as `sup`.
    """
    if sup is None:
        sup = support_about_centroid(kp)
    u = sup.u.values
    n_fine = 4 * kp.grid.n
    u_fine = resample_values(u, n_fine)
    fine = AngularGrid(n_fine)
    cos_f, sin_f = fine.cos, fine.sin

    def radial_min(c: np.ndarray) -> float:
        return refined_extremum_values(u_fine - c[0] * cos_f - c[1] * sin_f, False)

    def radial_max(c: np.ndarray) -> float:
        return refined_extremum_values(u_fine - c[0] * cos_f - c[1] * sin_f, True)

    scale = 0.3 * float(u_fine.min())
    simplex = np.array([[0.0, 0.0], [scale, 0.0], [0.0, scale]])

    def search(objective, sign: float, label: str) -> float:
        # minimize sign*radius; restart once from the first optimum
        best = None
        x0 = np.zeros(2)
        sx = simplex
        for _ in range(2):
            res = minimize(
                lambda c: sign * objective(c),
                x0,
                method="Nelder-Mead",
                options={
                    "xatol": 1e-10,
                    "fatol": 1e-12,
                    "maxiter": _RADIUS_MAXITER,
                    "initial_simplex": sx,
                },
            )
            best = res if best is None or res.fun < best.fun else best
            x0 = res.x
            sx = np.array([x0, x0 + [0.05 * scale, 0.0], x0 + [0.0, 0.05 * scale]])
        if not best.success and best.nit >= _RADIUS_MAXITER:
            raise RadiusSearchError(
                f"{label} center search hit the iteration cap",
                best=sign * best.fun,
            )
        return sign * float(best.fun)

    r_in = search(radial_min, -1.0, "inradius")
    r_out = search(radial_max, +1.0, "outradius")
    return r_in, r_out


def bonnesen_sigma(I: float) -> float:
    """sigma(I) = (sqrt(I) + sqrt(I - 1))^2, the Bonnesen radius ratio bound."""
    if I < 1.0 - 1e-10:
        raise DomainError(f"isoperimetric ratio must be >= 1, got {I}")
    I = max(I, 1.0)
    return (math.sqrt(I) + math.sqrt(I - 1.0)) ** 2


def isoperimetric_ratio(kp: CurvatureProfile) -> float:
    L = length(kp)
    return L * L / (4.0 * math.pi * area(kp))


def measure(
    kp: CurvatureProfile,
    t: float = 0.0,
    lam: float = math.nan,
    radii: bool = True,
) -> GeometrySnapshot:
    """Assemble the scalar snapshot; radii=False skips the center searches."""
    _require_closed(kp, "measure")
    _, _, A = _support_pipeline(kp)
    L = length(kp)
    if radii:
        r_in, r_out = inradius_outradius(kp)
    else:
        r_in = r_out = math.nan
    return GeometrySnapshot(
        t=t,
        L=L,
        A=A,
        I=L * L / (4.0 * math.pi * A),
        k_min=float(kp.k.min()),
        k_max=float(kp.k.max()),
        lam=lam,
        closure_defect=closure_defect(kp),
        r_in=r_in,
        r_out=r_out,
    )


def support_identity_residual(kp: CurvatureProfile) -> float:
    """Max |u'' + u - 1/k| over the grid, u taken about the centroid."""
    u = support_about_centroid(kp).u.values
    return float(np.abs(deriv_values(u, 2) + u - kp.w).max())
