"""Scalar root finding shared by the inverse maps and the D-U projection."""
from __future__ import annotations

import logging
from typing import Protocol

import numpy as np

from ..errors import NoConvergence, DegenerateQuadratic, NoRealRoot
from ...config import (NEWTON_TOLERANCE, NEWTON_MAX_ITERATIONS, BRACKET_SCALE, DEGENERATE_EPSILON,
                        KNOT_TOLERANCE)

logger = logging.getLogger(__name__)


class RadialProfile(Protocol):
    """Anything that evaluates f(r) and f'(r) on arrays of radii."""

    def values(self, r) -> tuple[np.ndarray, np.ndarray]:
        ...

    def derivative(self, r) -> np.ndarray:
        ...


# =============================================
# Safeguarded Newton iteration
# =============================================
def _reciprocal(profile: RadialProfile, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """1/f(s), its derivative, and a mask of radii where f is not a positive finite gain."""
    f, pole = profile.values(s)
    df = profile.derivative(s)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        h = 1.0 / f
        dh = -df / (f * f)
    bad = pole | ~(f > 0.0) | ~np.isfinite(h) | ~np.isfinite(dh)
    return h, dh, bad


def solve_radius(p1, q1, p2, q2, fx: RadialProfile, fy: RadialProfile,
                 strict: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve s^2 = X(s)^2 + Y(s)^2 where X = p1/fx(s) + q1/fy(s) and Y = p2/fx(s) + q2/fy(s).

    Starts from the radius of (p1 + q1, p2 + q2) and keeps every iterate inside the
    bracket [0, 4 s0 + 1], falling back to bisection when a Newton step leaves it.
    Returns X, Y at the root and a mask of the points that did not converge.
    """
    p1, q1, p2, q2 = np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (p1, q1, p2, q2)))
    s0 = np.sqrt((p1 + q1) ** 2 + (p2 + q2) ** 2)
    s = s0.copy()
    lo = np.zeros_like(s)
    hi = BRACKET_SCALE * s0 + 1.0
    done = np.zeros(s.shape, dtype=bool)
    residual = np.full(s.shape, np.inf)

    for _ in range(NEWTON_MAX_ITERATIONS):
        hx, dhx, bad_x = _reciprocal(fx, s)
        hy, dhy, bad_y = _reciprocal(fy, s)
        bad = bad_x | bad_y
        with np.errstate(invalid='ignore', over='ignore'):
            x = p1 * hx + q1 * hy
            y = p2 * hx + q2 * hy
            phi = s * s - x * x - y * y
            dphi = 2.0 * s - 2.0 * x * (p1 * dhx + q1 * dhy) - 2.0 * y * (p2 * dhx + q2 * dhy)
        phi = np.where(bad, np.inf, phi)
        residual = np.where(done, residual, np.abs(phi))
        done |= np.abs(phi) < NEWTON_TOLERANCE
        if done.all():
            break

        # An invalid gain only occurs beyond the admissible branch.
        lo = np.where(~done & (phi < 0.0), s, lo)
        hi = np.where(~done & (phi > 0.0), s, hi)
        with np.errstate(divide='ignore', invalid='ignore'):
            newton = s - phi / dphi
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        step = np.where(inside, newton, 0.5 * (lo + hi))
        s = np.where(done, s, step)

    hx, _, _ = _reciprocal(fx, s)
    hy, _, _ = _reciprocal(fy, s)
    x = p1 * hx + q1 * hy
    y = p2 * hx + q2 * hy
    failed = ~done
    if failed.any():
        logger.debug("Radius iteration left %d of %d point(s) unconverged", int(failed.sum()), failed.size)
    if strict and failed.any():
        raise NoConvergence(f"Radius iteration failed for {int(failed.sum())} point(s)",
                            float(np.max(residual[failed])))
    return x, y, failed


# =============================================
# Quadratic roots
# =============================================
def solve_quadratic(a, b, c) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Real roots of a t^2 + b t + c = 0, nan where absent.

    Uses the cancellation-free form q = -(b + sign(b) sqrt(disc)) / 2. A vanishing leading
    coefficient yields the linear root; the third array flags rows where b vanishes as well.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    linear = np.abs(a) < DEGENERATE_EPSILON
    degenerate = linear & (np.abs(b) < DEGENERATE_EPSILON)

    disc = b * b - 4.0 * a * c
    with np.errstate(divide='ignore', invalid='ignore'):
        sign = np.where(b < 0.0, -1.0, 1.0)
        q = -0.5 * (b + sign * np.sqrt(np.where(disc >= 0.0, disc, np.nan)))
        first = np.where(q != 0.0, q / a, 0.0)
        second = np.where(q != 0.0, c / q, 0.0)
        root = -c / b
    first = np.where(linear, root, first)
    second = np.where(linear, np.nan, second)
    first = np.where(degenerate, np.nan, first)
    return first, second, degenerate


def select_root(candidates: np.ndarray, r_d: np.ndarray) -> np.ndarray:
    """Column index, per row, of the candidate closest to r_d; ties go to the non-negative root.

    Rows without any candidate point at a nan entry.
    """
    candidates = np.atleast_2d(candidates)
    r_d = np.asarray(r_d, dtype=float).reshape(-1, 1)
    distance = np.where(np.isnan(candidates), np.inf, np.abs(candidates - r_d))
    return np.lexsort((candidates < 0.0, distance), axis=-1)[:, 0]


Segment = tuple[float, float, float, float, float, float]  # a_x, k_x, a_y, k_y, r_lo, r_hi


def invert_segments(base: str, x_d, y_d, segments: list[Segment]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form inverse of x_d = x / (a_x + k_x rho), y_d = y / (a_y + k_y rho).

    rho is r for base '5' and r^2 for base '6'. Each segment contributes the roots of its
    quadratic that fall inside [r_lo, r_hi] with positive gains; the root closest to r_d wins.
    Returns x, y and r.
    """
    x_d = np.atleast_1d(np.asarray(x_d, dtype=float))
    y_d = np.atleast_1d(np.asarray(y_d, dtype=float))
    xx, yy = x_d * x_d, y_d * y_d
    r_d = np.sqrt(xx + yy)

    rhos, radii, gains_x, gains_y = [], [], [], []
    degenerate = np.zeros(x_d.shape, dtype=bool)
    for a_x, k_x, a_y, k_y, r_lo, r_hi in segments:
        qa = xx * k_x * k_x + yy * k_y * k_y
        qb = 2.0 * (xx * a_x * k_x + yy * a_y * k_y)
        qc = xx * a_x * a_x + yy * a_y * a_y
        if base == '5':
            first, second, flat = solve_quadratic(qa - 1.0, qb, qc)
        else:
            first, second, flat = solve_quadratic(qa, qb - 1.0, qc)
        degenerate |= flat
        for rho in (first, second):
            with np.errstate(invalid='ignore'):
                r = rho if base == '5' else np.sqrt(np.where(rho >= 0.0, rho, np.nan))
            # a radius is non-negative and both reciprocal gains must stay positive
            admissible = (r >= 0.0) & (a_x + k_x * rho > 0.0) & (a_y + k_y * rho > 0.0)
            inside = admissible & (r >= r_lo - KNOT_TOLERANCE) & (r <= r_hi + KNOT_TOLERANCE)
            rhos.append(np.where(inside, rho, np.nan))
            radii.append(np.where(inside, r, np.nan))
            gains_x.append((a_x, k_x))
            gains_y.append((a_y, k_y))

    radii = np.stack(radii, axis=-1)
    rhos = np.stack(rhos, axis=-1)
    index = select_root(radii, r_d)
    rows = np.arange(radii.shape[0])
    r = radii[rows, index]
    rho = rhos[rows, index]
    if np.isnan(r).any():
        missing = np.isnan(r)
        if (missing & degenerate).any():
            raise DegenerateQuadratic("Both the quadratic and the linear coefficient vanish")
        raise NoRealRoot(f"No admissible real root for {int(missing.sum())} point(s)")

    a_x, k_x = (np.array(c)[index] for c in zip(*gains_x))
    a_y, k_y = (np.array(c)[index] for c in zip(*gains_y))
    return x_d * (a_x + k_x * rho), y_d * (a_y + k_y * rho), r
