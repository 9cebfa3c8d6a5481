"""Finite-range diagnostics for asymptotic statements.

Nothing computed on ``n <= N`` or ``k <= K`` settles a limit, so the
functions here extrapolate the visible tail and say so: every classifier
can answer "unstable" when the tail does not commit either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IncrementFit",
    "fit_increments",
    "outlook",
    "TailBalance",
    "tail_balance",
    "mean_increment",
]

# |fitted slope of increments against ln n| below this counts as flat
SLOPE_TOL = 0.05
# |fitted increment| below this counts as undecided ...
INCREMENT_TOL = 0.05
# ... and below this as exactly level (constant sequences)
FLAT_TOL = 1e-9
# a projected sign change further out than this is not trusted
HORIZON = 1e8

RATIO_SLOPE_TOL = 0.02
RATIO_BAND = 0.05


@dataclass(frozen=True)
class IncrementFit:
    """Least-squares model ``d_n ~ A ln n + B + C/n`` of the increments ``d_n``.

    ``log_slope`` is ``A``; ``end_increment`` the model value at the last
    index; ``crossover`` the projected index where the model increment changes
    sign (``None`` when it does not, or already has).
    """

    log_slope: float
    end_increment: float
    mean_increment: float
    crossover: float | None
    scale: float


def mean_increment(values, fraction: float = 0.25) -> float:
    """Average slope of ``values`` over the trailing ``fraction`` of indices."""
    v = np.asarray(values, dtype=float)
    w = max(1, int(round((v.size - 1) * fraction)))
    return float((v[-1] - v[-1 - w]) / w)


def fit_increments(values, n=None, fraction: float = 0.5) -> IncrementFit:
    v = np.asarray(values, dtype=float)
    if n is None:
        n = np.arange(v.size)
    n = np.asarray(n, dtype=float)
    d = np.diff(v)
    nd = n[1:]
    w = max(4, int(round(d.size * fraction)))
    d, nd = d[-w:], nd[-w:]
    nd = np.maximum(nd, 1.0)
    design = np.column_stack([np.log(nd), np.ones_like(nd), 1.0 / nd])
    coef, *_ = np.linalg.lstsq(design, d, rcond=None)
    a = float(coef[0])
    end = float(design[-1] @ coef)
    scale = max(1.0, float(np.max(np.abs(v[-w - 1:]))))
    cross = None
    if a != 0.0 and np.sign(end) != np.sign(a) and end != 0.0:
        cross = float(nd[-1] * np.exp(min(700.0, -end / a)))
    return IncrementFit(a, end, mean_increment(v, fraction), cross, scale)


def outlook(
    values, n=None, direction: str = "above", fraction: float = 0.5, horizon: float = HORIZON
) -> tuple[str, IncrementFit]:
    """Is ``values`` bounded in ``direction`` as the index grows?

    Returns ``("bounded" | "unbounded" | "unstable", fit)``. The increments are
    extrapolated with :func:`fit_increments`: once the model increment has (or
    is projected within ``horizon`` to have) the sign that keeps the
    sequence bounded, it is called bounded.
    """
    if direction not in ("above", "below"):
        raise ValueError("direction must be 'above' or 'below'")
    v = np.asarray(values, dtype=float)
    if direction == "below":
        v = -v
    fit = fit_increments(v, n, fraction)
    a, end = fit.log_slope, fit.end_increment
    if abs(end) <= FLAT_TOL * fit.scale and abs(a) <= SLOPE_TOL:
        status = "bounded"
    elif a < -SLOPE_TOL:
        if end <= 0 or (fit.crossover is not None and fit.crossover <= horizon):
            status = "bounded"
        else:
            status = "unstable"
    elif a > SLOPE_TOL:
        if end > 0 or (fit.crossover is not None and fit.crossover <= horizon):
            status = "unbounded"
        else:
            status = "unstable"
    elif end < -INCREMENT_TOL:
        status = "bounded"
    elif end > INCREMENT_TOL:
        status = "unbounded"
    else:
        status = "unstable"
    if direction == "below":
        fit = IncrementFit(-fit.log_slope, -fit.end_increment, -fit.mean_increment, fit.crossover, fit.scale)
    return status, fit


@dataclass(frozen=True)
class TailBalance:
    """Outcome of weighing a growing gain against a growing depth.

    ``status`` refers to ``gain - depth``: "stable" (bounded above),
    "diverging" (tends to +inf) or "unstable".
    """

    status: str
    ratio_end: float | None
    ratio_log_slope: float | None
    reason: str


def _ratio_limit(lk: np.ndarray, ratio: np.ndarray) -> float | None:
    """Aitken limit of the ratio at three log-equispaced points, or ``None``
    when its steps are not shrinking."""
    r = np.interp([lk[0], 0.5 * (lk[0] + lk[-1]), lk[-1]], lk, ratio)
    d1, d2 = r[1] - r[0], r[2] - r[1]
    if d1 == 0.0 or not 0.0 < d2 / d1 < 0.98:
        return None
    return float(r[2] + d2 * d2 / (d1 - d2))


def tail_balance(gain, depth, k, fraction: float = 0.5) -> TailBalance:
    """Decide whether ``gain_k - depth_k`` stays bounded above as ``k`` grows.

    The decision is made on the trailing ``fraction`` of the samples from the
    ratio ``gain/depth``: its log-log slope says whether it heads to zero or
    infinity; when the slope is flat the end value is compared with 1.
    Maxima that lie far beyond the last sample are therefore still detected
    as finite, e.g. ``-k**0.6 + 200*sqrt(k)``.
    """
    gain = np.asarray(gain, dtype=float)
    depth = np.asarray(depth, dtype=float)
    k = np.asarray(k, dtype=float)
    w = max(8, int(round(k.size * fraction)))
    if k.size < 8:
        return TailBalance("unstable", None, None, "too few samples")
    g, d, kk = gain[-w:], depth[-w:], k[-w:]
    g_rise = g[-1] - g[0]
    if not np.all(np.isfinite(g)) or not np.all(np.isfinite(d)):
        return TailBalance("unstable", None, None, "non-finite tail")
    if g_rise <= 1e-12 * max(1.0, abs(g[-1])):
        if d[-1] >= d[0] - 1e-9 * max(1.0, abs(d[0])):
            return TailBalance("stable", None, None, "gain saturated, depth bounded below")
        return TailBalance("unstable", None, None, "gain saturated, depth falling")
    if d[-1] <= 0 or d[-1] - d[0] <= 1e-12 * max(1.0, abs(d[-1])):
        return TailBalance("diverging", None, None, "gain grows while depth stays bounded")
    sel = d > 0
    if sel.sum() < 8:
        return TailBalance("unstable", None, None, "depth not yet positive on the tail")
    g, d, kk = g[sel], d[sel], kk[sel]
    if g[-1] <= 0:
        return TailBalance("stable", None, None, "gain non-positive at the end of the tail")
    pos = g > 0
    if pos.sum() < 8:
        return TailBalance("unstable", None, None, "gain not yet positive on the tail")
    ratio = g[pos] / d[pos]
    lk = np.log(kk[pos])
    slope = float(np.polyfit(lk, np.log(ratio), 1)[0])
    end = float(ratio[-1])
    # a rising ratio may be creeping up to a limit; falling ones keep the
    # power-law reading, since 1/ln k decay fools the three-point limit
    limit = _ratio_limit(lk, ratio) if slope > RATIO_SLOPE_TOL else None
    if limit is not None:
        if limit < 1.0 - RATIO_BAND:
            return TailBalance("stable", end, slope, f"gain/depth levels off near {limit:.3g}")
        if limit > 1.0 + RATIO_BAND:
            return TailBalance("diverging", end, slope, f"gain/depth levels off near {limit:.3g}")
        return TailBalance("unstable", end, slope, f"gain/depth levels off near {limit:.3g}, too close to 1")
    if slope < -RATIO_SLOPE_TOL:
        return TailBalance("stable", end, slope, "depth outgrows gain")
    if slope > RATIO_SLOPE_TOL:
        return TailBalance("diverging", end, slope, "gain outgrows depth")
    if end < 1.0 - RATIO_BAND:
        return TailBalance("stable", end, slope, "gain/depth settles below 1")
    if end > 1.0 + RATIO_BAND:
        return TailBalance("diverging", end, slope, "gain/depth settles above 1")
    return TailBalance("unstable", end, slope, "gain/depth settles near 1")
