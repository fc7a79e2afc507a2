"""Vectorised adaptive Gauss-Legendre quadrature on panels.

Many independent integrals (one per Matsubara mode, or one per outer
quadrature node) are integrated together. Each integral owns a set of
panels; every panel is evaluated with a high and a lower order rule and
the difference serves as its error estimate. Panels are bisected until the
summed estimate meets the tolerance.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

HIGH_ORDER = 16
LOW_ORDER = 12
BATCH_NODES = 1 << 21


class QuadratureFailure(RuntimeError):
    """Panel refinement stopped making progress."""


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _rule(a, b, integrand, order, owner):
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = integrand(nodes, owner)
    return half * (vals @ w)


def evaluate_panels(integrand, a, b, owner):
    """High-order values and error estimates for every panel."""
    n = len(a)
    hi = np.empty(n)
    lo = np.empty(n)
    step = max(1, BATCH_NODES // (HIGH_ORDER + LOW_ORDER))
    for s in range(0, n, step):
        sl = slice(s, s + step)
        hi[sl] = _rule(a[sl], b[sl], integrand, HIGH_ORDER, owner[sl])
        lo[sl] = _rule(a[sl], b[sl], integrand, LOW_ORDER, owner[sl])
    return hi, np.abs(hi - lo)


def refine(integrand, a, b, owner, hi, err, target, max_rounds=40):
    """Bisect panels until ``sum(err) <= target``.

    Returns the final panel arrays. Raises :class:`QuadratureFailure` when
    the round limit is hit or panels shrink to rounding level.
    """
    for _ in range(max_rounds):
        total_err = math.fsum(err)
        if total_err <= target:
            return a, b, owner, hi, err
        bad = err > target / len(err)
        width = b[bad] - a[bad]
        scale = np.maximum(np.abs(a[bad]), np.abs(b[bad]))
        if np.any(width <= 64 * np.finfo(float).eps * scale):
            raise QuadratureFailure(
                f"panel refinement stagnated (error {total_err:.3e} > target {target:.3e})"
            )
        mid = 0.5 * (a[bad] + b[bad])
        na = np.concatenate([a[bad], mid])
        nb = np.concatenate([mid, b[bad]])
        no = np.concatenate([owner[bad], owner[bad]])
        nhi, nerr = evaluate_panels(integrand, na, nb, no)
        keep = ~bad
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        owner = np.concatenate([owner[keep], no])
        hi = np.concatenate([hi[keep], nhi])
        err = np.concatenate([err[keep], nerr])
        # Keep a canonical order so per-owner sums are reproducible.
        order = np.lexsort((a, owner))
        a, b, owner, hi, err = a[order], b[order], owner[order], hi[order], err[order]
    raise QuadratureFailure(f"no convergence after {max_rounds} refinement rounds")


def per_owner(values, owner, n_owners):
    """Sum panel values per owner (sequential, deterministic order)."""
    return np.bincount(owner, weights=values, minlength=n_owners)


def graded_edges(lower, upper, first_width, max_width):
    """Panel edges from ``lower`` to ``upper``: widths double from
    ``first_width`` up to ``max_width`` and stay there."""
    edges = [lower]
    w = first_width
    x = lower
    while x < upper:
        x = min(x + w, upper)
        edges.append(x)
        w = min(2 * w, max_width)
    return edges


def integrate_to_infinity(f, rtol=1e-12, atol=0.0, grading_depth=40, max_panels=4096):
    """Integral of a vectorised ``f`` over [0, inf).

    The range is covered with panels graded geometrically towards 0 (so
    integrable endpoint singularities such as x log x are harmless) and
    doubling in width towards infinity; the far end is extended until the
    last panels stop contributing. Returns ``(value, error_estimate)``.
    """
    edges = [0.0] + [2.0**k for k in range(-grading_depth, 1)]
    a = np.array(edges[:-1])
    b = np.array(edges[1:])

    def g(x, owner):
        return f(x)

    owner = np.zeros(len(a), dtype=np.intp)
    hi, err = evaluate_panels(g, a, b, owner)
    top = 1.0
    width = 1.0
    quiet = 0
    while quiet < 3:
        na, nb = np.array([top]), np.array([top + width])
        nhi, nerr = evaluate_panels(g, na, nb, np.zeros(1, dtype=np.intp))
        a, b = np.append(a, na), np.append(b, nb)
        hi, err = np.append(hi, nhi), np.append(err, nerr)
        owner = np.zeros(len(a), dtype=np.intp)
        top += width
        width *= 2
        scale = max(math.fsum(np.abs(hi)), atol)
        if abs(nhi[0]) + nerr[0] <= 1e-3 * rtol * scale:
            quiet += 1
        else:
            quiet = 0
        if len(a) > max_panels or not math.isfinite(top):
            raise QuadratureFailure("integrand does not decay")
    target = max(rtol * math.fsum(np.abs(hi)), atol)
    if target == 0:
        return 0.0, 0.0
    a, b, owner, hi, err = refine(g, a, b, owner, hi, err, target)
    tail = abs(hi[np.argmax(b)])
    return math.fsum(hi), math.fsum(err) + tail
