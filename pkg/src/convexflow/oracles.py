"""Independent reference computations used to pin test expectations.

Every function here recomputes a quantity by a route disjoint from the
library implementation: closed forms, adaptive quadrature in the parametric
angle, dense finite-difference stencils. Tests compare two derivations
instead of comparing the code against itself. The `convexflow oracle`
subcommand prints the full table for fixture use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

TWO_PI = 2.0 * math.pi


def ellipse_perimeter(a: float, b: float) -> float:
    """Arc length by adaptive quadrature over the parametric angle."""
    val, err = quad(
        lambda p: math.hypot(a * math.sin(p), b * math.cos(p)),
        0.0,
        TWO_PI,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    if err > 1e-9:
        raise RuntimeError(f"perimeter quadrature error estimate {err:.2e}")
    return val


def ellipse_area(a: float, b: float) -> float:
    return math.pi * a * b


def ellipse_curvature(a: float, b: float, theta) -> np.ndarray:
    """Curvature at normal angle theta: (a^2 cos^2 + b^2 sin^2)^(3/2)/(a b)^2."""
    theta = np.asarray(theta, dtype=float)
    g = a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2
    return g**1.5 / (a * a * b * b)


def ellipse_curvature_integral(a: float, b: float, alpha: float) -> float:
    """Integral of k^alpha over the normal angle by adaptive quadrature.

    Not the total turning: that is the arc-length integral of k. Averaging
    k^alpha in theta weights by curvature, so even alpha = 1 needs quadrature.
    """
    val, err = quad(
        lambda th: float(ellipse_curvature(a, b, th)) ** alpha,
        0.0,
        TWO_PI,
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    if err > 1e-9:
        raise RuntimeError(f"curvature quadrature error estimate {err:.2e}")
    return val


def ellipse_support(a: float, b: float, theta) -> np.ndarray:
    """Support function about the center at normal angle theta."""
    theta = np.asarray(theta, dtype=float)
    return np.sqrt(a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2)


def ellipse_point(a: float, b: float, theta) -> np.ndarray:
    """Boundary point whose outward normal is (cos theta, sin theta)."""
    theta = np.asarray(theta, dtype=float)
    g = np.sqrt(a * a * np.cos(theta) ** 2 + b * b * np.sin(theta) ** 2)
    return np.stack([a * a * np.cos(theta) / g, b * b * np.sin(theta) / g], axis=-1)


def shrinking_circle_radius(r0: float, alpha: float, t: float) -> float:
    """Radius under pure k^alpha contraction, valid before extinction."""
    p = 1.0 + alpha
    inner = r0**p - p * t
    if inner <= 0.0:
        raise ValueError(f"t={t} is at or past extinction {extinction_time(r0, alpha)}")
    return inner ** (1.0 / p)


def extinction_time(r0: float, alpha: float) -> float:
    return r0 ** (1.0 + alpha) / (1.0 + alpha)


def integral_inv_two_plus_sin() -> float:
    """Closed form of the periodic integral of 1/(2+sin): 2*pi/sqrt(3)."""
    return TWO_PI / math.sqrt(3.0)


def fd_deriv_callable(f, theta, order: int, h: float) -> np.ndarray:
    """4th-order centered finite differences of a callable at points theta."""
    theta = np.asarray(theta, dtype=float)
    fm2, fm1, f0, fp1, fp2 = (f(theta + s * h) for s in (-2, -1, 0, 1, 2))
    if order == 1:
        return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
    if order == 2:
        return (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    raise ValueError("order must be 1 or 2")


def fd_deriv_samples(values: np.ndarray, order: int, dtheta: float) -> np.ndarray:
    """Same stencils applied periodically to grid samples."""
    fm2, fm1 = np.roll(values, 2), np.roll(values, 1)
    fp1, fp2 = np.roll(values, -1), np.roll(values, -2)
    if order == 1:
        return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * dtheta)
    if order == 2:
        return (-fp2 + 16 * fp1 - 30 * values + 16 * fm1 - fm2) / (12 * dtheta**2)
    raise ValueError("order must be 1 or 2")


def perturbed_circle_rhs_at_zero(eps: float = 0.1) -> float:
    """Hand expansion of the LP right-hand side for k = 1 + eps*cos(2 theta),
    alpha = 1, evaluated at theta = 0.

    lambda is the plain average (= 1), k_thth(0) = -4 eps, k(0) = 1 + eps, so
    rhs = (1+eps)^2 (-4 eps + (1+eps) - 1) = -3 eps (1+eps)^2.
    """
    return -3.0 * eps * (1.0 + eps) ** 2


def gradient_functional_perturbed(eps: float) -> float:
    """max over theta of (1+eps cos)^2 + eps^2 sin^2 for alpha=1 is (1+eps)^2."""
    return (1.0 + eps) ** 2


def fourier_quadratic_core(values: np.ndarray) -> float:
    """Integral of phi*(phi'' + phi) assembled from DFT coefficients.

    Parseval gives 2*pi * sum_m w_m * (1 - m^2) * |c_m|^2 with c = rfft/n and
    w = 1 for the mean and Nyquist bins, 2 otherwise. A coefficient-space
    route with no differentiation, for cross-checking the grid evaluation.
    """
    n = values.size
    c = np.fft.rfft(np.asarray(values, dtype=float)) / n
    m = np.arange(c.size, dtype=float)
    w = np.full(c.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return TWO_PI * float(np.sum(w * (1.0 - m * m) * np.abs(c) ** 2))


def bonnesen_window(L: float, A: float) -> tuple[float, float]:
    s = math.sqrt(max(L * L - 4.0 * math.pi * A, 0.0))
    return (L - s) / TWO_PI, (L + s) / TWO_PI


def tso_constants(A0: float, I0: float, alpha: float) -> dict[str, float]:
    """beta, sigma, T1, Q0 from the initial area and isoperimetric ratio."""
    sigma = (math.sqrt(I0) + math.sqrt(max(I0 - 1.0, 0.0))) ** 2
    root = math.sqrt(A0 / math.pi) / sigma
    beta = 0.5 ** ((2.0 + alpha) / (1.0 + alpha)) * root
    T1 = root ** (1.0 + alpha) / (2.0 + 2.0 * alpha)
    Q0 = (2.0 * (alpha + 1.0) / (alpha * beta ** (1.0 + 1.0 / alpha))) ** alpha
    return {"beta": beta, "sigma": sigma, "T1": T1, "Q0": Q0}


def linearized_decay_rate(alpha: float, k_inf: float) -> float:
    """Slowest linearized decay rate about the limit circle (mode 2):
    alpha*(m^2-1)*k^(alpha+1) with m = 2."""
    return 3.0 * alpha * k_inf ** (1.0 + alpha)


def reference_table() -> list[tuple[str, float]]:
    """Everything the test suite pins, labeled for the CLI `oracle` command."""
    rows = [
        ("ellipse(2,1) perimeter", ellipse_perimeter(2.0, 1.0)),
        ("ellipse(2,1) area", ellipse_area(2.0, 1.0)),
        ("ellipse(2,1) k at 0", float(ellipse_curvature(2.0, 1.0, 0.0))),
        ("ellipse(2,1) k at pi/2", float(ellipse_curvature(2.0, 1.0, math.pi / 2))),
        ("integral 1/(2+sin)", integral_inv_two_plus_sin()),
        ("ellipse(2,1) integral of k d(theta)", ellipse_curvature_integral(2.0, 1.0, 1.0)),
        ("contraction r(0.375), r0=1, alpha=1", shrinking_circle_radius(1.0, 1.0, 0.375)),
        ("extinction time r0=1 alpha=1", extinction_time(1.0, 1.0)),
        ("LP rhs at 0, k=1+0.1cos2th, alpha=1", perturbed_circle_rhs_at_zero(0.1)),
        ("Psi_max, k=1+0.05cos, alpha=1", gradient_functional_perturbed(0.05)),
    ]
    L = ellipse_perimeter(2.0, 1.0)
    A = ellipse_area(2.0, 1.0)
    I0 = L * L / (4.0 * math.pi * A)
    rows.append(("ellipse(2,1) isoperimetric ratio", I0))
    for key, val in tso_constants(A, I0, 1.0).items():
        rows.append((f"ellipse(2,1) alpha=1 Tso {key}", val))
    lo, hi = bonnesen_window(L, A)
    rows.append(("ellipse(2,1) Bonnesen lower", lo))
    rows.append(("ellipse(2,1) Bonnesen upper", hi))
    return rows
