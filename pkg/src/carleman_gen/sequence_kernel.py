"""Defining sequences and their Mandelbrojt functions, evaluated in log space.

Every quantity derived from a sequence ``m_n`` is handled through
``mu_n = ln m_n``. The associated series

    T(lam) = m_0 * sum_n lam**n / m_n

and its relatives overflow double precision almost immediately for fast
sequences (``m_n = exp(n**2)`` reaches ``exp(1e4)`` at ``n = 100``), so the
evaluator only ever returns natural logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DivergenceError, IndexExhaustedError, UnsupportedPresetError

__all__ = [
    "SequenceKind",
    "DefiningSequence",
    "MandelbrojtEvaluator",
    "ProxyEvaluator",
    "ProxyEnvelope",
    "eval_log_T",
    "eval_M",
    "invert_M",
    "eval_log_S",
    "eval_log_P",
    "proxy_M",
    "proxy_envelope",
    "make_evaluator",
]

DEFAULT_CUTOFF_LOG = 92.1
DEFAULT_INVERSION_TOL = 1e-12
MAX_TERMS = 1 << 22
# rows * columns of one term matrix; bounds peak memory of the vectorised sum
_CELL_BUDGET = 1 << 22
_ROW_BLOCK = 4096


class SequenceKind(str, Enum):
    GEVREY = "gevrey"
    EXP_SQUARE = "exp_square"
    CONSTANT = "constant"
    FACTORIAL = "factorial"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DefiningSequence:
    """A positive sequence ``m_n`` stored through ``mu_n = ln m_n``.

    Use the class-method constructors rather than building instances by hand.
    ``beta`` is only meaningful for the Gevrey family ``m_n = (n!)**beta``;
    ``log_table`` only for custom tables, which are never extrapolated.
    """

    kind: SequenceKind
    beta: float | None = None
    log_table: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.kind is SequenceKind.GEVREY:
            if self.beta is None or not (self.beta >= 0.0) or not math.isfinite(self.beta):
                raise ValueError(f"Gevrey order must be a finite real >= 0, got {self.beta!r}")
        if self.kind is SequenceKind.CUSTOM:
            if not self.log_table:
                raise ValueError("custom sequence needs a non-empty log table")
            if not all(math.isfinite(v) for v in self.log_table):
                raise ValueError("custom log table entries must be finite")

    @classmethod
    def gevrey(cls, beta: float) -> "DefiningSequence":
        return cls(SequenceKind.GEVREY, beta=float(beta))

    @classmethod
    def factorial(cls) -> "DefiningSequence":
        return cls(SequenceKind.FACTORIAL)

    @classmethod
    def exp_square(cls) -> "DefiningSequence":
        return cls(SequenceKind.EXP_SQUARE)

    @classmethod
    def constant(cls) -> "DefiningSequence":
        return cls(SequenceKind.CONSTANT)

    @classmethod
    def custom(cls, log_values: Sequence[float]) -> "DefiningSequence":
        return cls(SequenceKind.CUSTOM, log_table=tuple(float(v) for v in log_values))

    @property
    def max_index(self) -> int | None:
        """Largest available index, or ``None`` when unbounded."""
        if self.kind is SequenceKind.CUSTOM:
            return len(self.log_table) - 1
        return None

    @property
    def log_convex(self) -> bool:
        """True for the closed-form presets, whose ``mu_n`` is convex in ``n``."""
        return self.kind is not SequenceKind.CUSTOM

    @property
    def name(self) -> str:
        if self.kind is SequenceKind.GEVREY:
            return f"gevrey(beta={self.beta:g})"
        return self.kind.value

    def log_m(self, n):
        """``mu_n = ln m_n`` for an integer or an integer array."""
        arr = np.asarray(n)
        if np.any(arr < 0):
            raise ValueError("sequence index must be non-negative")
        k = self.kind
        if k is SequenceKind.GEVREY:
            out = self.beta * gammaln(arr + 1.0)
        elif k is SequenceKind.FACTORIAL:
            out = gammaln(arr + 1.0)
        elif k is SequenceKind.EXP_SQUARE:
            out = arr.astype(float) ** 2
        elif k is SequenceKind.CONSTANT:
            out = np.zeros(arr.shape)
        else:
            top = len(self.log_table) - 1
            if np.any(arr > top):
                raise IndexExhaustedError(
                    f"custom log table has {top + 1} entries; index {int(np.max(arr))} requested"
                )
            out = np.asarray(self.log_table)[arr]
        if np.ndim(out) == 0:
            return float(out)
        return out

    def to_dict(self) -> dict:
        d: dict = {"preset": self.kind.value}
        if self.beta is not None:
            d["beta"] = self.beta
        if self.log_table is not None:
            d["log_m"] = list(self.log_table)
        return d


class MandelbrojtEvaluator:
    """Log-space evaluator for ``T``, ``M = ln T``, ``M^{-1}``, ``S`` and ``P``.

    The series is summed from ``n = 0`` while tracking the running peak term.
    Summation stops at the first index whose term lies more than
    ``series_cutoff_log`` below the peak *and* is smaller than its predecessor.
    Instances hold no mutable state and may be shared between threads.
    """

    kind = "series"

    def __init__(
        self,
        sequence: DefiningSequence,
        series_cutoff_log: float = DEFAULT_CUTOFF_LOG,
        inversion_tolerance: float = DEFAULT_INVERSION_TOL,
    ):
        if series_cutoff_log <= 0:
            raise ValueError("series_cutoff_log must be positive")
        if inversion_tolerance <= 0:
            raise ValueError("inversion_tolerance must be positive")
        self.sequence = sequence
        self.series_cutoff_log = float(series_cutoff_log)
        self.inversion_tolerance = float(inversion_tolerance)

    def __repr__(self) -> str:
        return f"MandelbrojtEvaluator({self.sequence.name}, cutoff={self.series_cutoff_log:g})"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "sequence": self.sequence.to_dict(),
            "series_cutoff_log": self.series_cutoff_log,
            "inversion_tolerance": self.inversion_tolerance,
        }

    # -- series engine -----------------------------------------------------

    def series_logs(self, lam):
        """Return ``(ln T, ln S, ln P)`` for scalar or array ``lam``."""
        arr = np.asarray(lam, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0):
            raise ValueError("Mandelbrojt functions are defined for lam >= 0 only")
        flat = arr.ravel()
        out_t = np.empty(flat.shape)
        out_s = np.empty(flat.shape)
        out_p = np.empty(flat.shape)
        if self.sequence.log_convex:
            out_t[:], out_s[:], out_p[:] = self._windowed(flat)
        else:
            for start in range(0, flat.size, _ROW_BLOCK):
                sl = slice(start, start + _ROW_BLOCK)
                out_t[sl], out_s[sl], out_p[sl] = self._block(flat[sl])
        shape = arr.shape
        if shape == ():
            return float(out_t[0]), float(out_s[0]), float(out_p[0])
        return out_t.reshape(shape), out_s.reshape(shape), out_p.reshape(shape)

    def _block(self, lam: np.ndarray):
        m = lam.size
        cutoff = self.series_cutoff_log
        seq = self.sequence
        mu0 = seq.log_m(0)
        top = seq.max_index
        with np.errstate(divide="ignore"):
            loglam = np.log(lam)

        t_max = np.full(m, -np.inf)  # running log-sum-exp state for T
        t_acc = np.zeros(m)
        p_acc = np.zeros(m)  # same for the doubled terms of P
        peak = np.full(m, -np.inf)
        prev = np.full(m, np.nan)
        active = np.arange(m)
        n0 = 0
        width = 64
        while active.size:
            if n0 >= MAX_TERMS:
                bad = lam[active[0]]
                raise DivergenceError(
                    f"{seq.name}: series terms did not decrease within {MAX_TERMS} terms "
                    f"at lam={bad:g}; the sequence grows too slowly here"
                )
            if top is not None and n0 > top:
                raise IndexExhaustedError(
                    f"custom log table ({top + 1} entries) exhausted before the series "
                    f"settled at lam={lam[active[0]]:g}"
                )
            w = min(width, MAX_TERMS - n0)
            if top is not None:
                w = min(w, top - n0 + 1)
            n = np.arange(n0, n0 + w)
            mu = seq.log_m(n)
            ll = loglam[active][:, None]
            with np.errstate(invalid="ignore"):
                nl = n[None, :] * ll
            nl = np.where(n[None, :] == 0, 0.0, nl)  # 0**0 := 1
            terms = mu0 + nl - mu[None, :]

            cpeak = np.maximum(np.maximum.accumulate(terms, axis=1), peak[active][:, None])
            before = np.concatenate([prev[active][:, None], terms[:, :-1]], axis=1)
            with np.errstate(invalid="ignore"):
                stop = (terms < cpeak - cutoff) & (terms < before)
            hit = stop.any(axis=1)
            first = np.where(hit, stop.argmax(axis=1), w)
            keep = np.arange(w)[None, :] < first[:, None]
            kept = np.where(keep, terms, -np.inf)

            cmax = kept.max(axis=1)
            old = t_max[active]
            new = np.maximum(old, cmax)
            with np.errstate(invalid="ignore"):
                scale = np.where(np.isneginf(old), 0.0, np.exp(old - new))
                scale2 = np.where(np.isneginf(old), 0.0, np.exp(2.0 * (old - new)))
            t_acc[active] = t_acc[active] * scale + np.exp(kept - new[:, None]).sum(axis=1)
            p_acc[active] = p_acc[active] * scale2 + np.exp(2.0 * (kept - new[:, None])).sum(axis=1)
            t_max[active] = new
            peak[active] = np.maximum(peak[active], cmax)
            prev[active] = terms[:, -1]

            active = active[~hit]
            n0 += w
            if active.size:
                width = min(max(64, 2 * width), max(64, _CELL_BUDGET // active.size))

        log_t = t_max + np.log(t_acc)
        log_p = t_max + 0.5 * np.log(p_acc)
        return log_t, peak, log_p

    def _windowed(self, lam: np.ndarray):
        """Array path for log-convex sequences.

        With ``mu_n`` convex the terms ``n*ln(lam) - mu_n`` are unimodal in ``n``,
        so the peak index is a search over the increments of ``mu``. Only the
        terms within ``series_cutoff_log`` of the peak are summed; everything
        dropped lies below ``peak - cutoff`` and cannot move a double.
        Agrees with :meth:`_block` to rounding.
        """
        seq = self.sequence
        cutoff = self.series_cutoff_log
        mu0 = seq.log_m(0)
        out_t = np.zeros(lam.size)
        out_s = np.zeros(lam.size)
        out_p = np.zeros(lam.size)
        pos = np.flatnonzero(lam > 0)  # lam == 0 leaves only the n = 0 term
        if pos.size == 0:
            return out_t, out_s, out_p
        ll = np.log(lam[pos])

        # peak index: largest n with mu_n - mu_{n-1} < ln(lam), by bisection
        # on the non-decreasing increments of a convex sequence
        def inc(n):
            return seq.log_m(n) - seq.log_m(n - 1)

        if np.any(inc(np.full(ll.size, MAX_TERMS)) < ll):
            bad = float(np.exp(ll.max()))
            raise DivergenceError(
                f"{seq.name}: series terms did not decrease within {MAX_TERMS} terms "
                f"at lam={bad:g}; the sequence grows too slowly here"
            )
        lo = np.zeros(ll.size, dtype=np.int64)
        hi = np.full(ll.size, MAX_TERMS, dtype=np.int64)
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            up = inc(np.maximum(mid, 1)) < ll
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        npk = lo

        def term(n, rows):
            return mu0 + n * ll[rows] - seq.log_m(n)

        rows = np.arange(pos.size)
        peak = term(npk, rows)
        floor = peak - cutoff
        right = _edge_distance(lambda d, r: term(npk[r] + d, r) < floor[r], rows, npk, MAX_TERMS, ll, seq.name)
        left = _edge_distance(
            lambda d, r: (npk[r] - d <= 0) | (term(np.maximum(npk[r] - d, 0), r) < floor[r]),
            rows, npk, None, ll,
        )
        start = np.maximum(npk - left, 0)
        span = npk + right - start + 1

        order = np.argsort(span, kind="stable")
        mu_tab = seq.log_m(np.arange(int((start + span).max()) + 1))
        log_t = np.empty(pos.size)
        log_p = np.empty(pos.size)
        i = 0
        while i < order.size:
            # spans are sorted, so the last row of a block sets its width;
            # columns past a row's own edge hold terms below the floor
            j = i
            w = int(span[order[i]])
            while j < order.size and (j - i + 1) * int(span[order[j]]) <= _CELL_BUDGET:
                w = int(span[order[j]])
                j += 1
            j = max(j, i + 1)
            w = max(w, int(span[order[j - 1]]))
            blk = order[i:j]
            n = start[blk][:, None] + np.arange(w)[None, :]
            z = n * ll[blk][:, None] - mu_tab[n] + (mu0 - peak[blk])[:, None]
            e = np.exp(z)
            log_t[blk] = peak[blk] + np.log(e.sum(axis=1))
            e *= e
            log_p[blk] = peak[blk] + 0.5 * np.log(e.sum(axis=1))
            i = j
        out_t[pos] = log_t
        out_s[pos] = peak
        out_p[pos] = log_p
        return out_t, out_s, out_p

    # -- public evaluation -------------------------------------------------

    def eval_log_T(self, lam):
        return self.series_logs(lam)[0]

    def eval_M(self, lam):
        return self.series_logs(lam)[0]

    def eval_log_S(self, lam):
        return self.series_logs(lam)[1]

    def eval_log_P(self, lam):
        return self.series_logs(lam)[2]

    def invert_M(self, y):
        """``M^{-1}(y)`` by doubling to a bracket, then bisection."""
        arr = np.asarray(y, dtype=float)
        out = self._invert_array(arr.ravel()).reshape(arr.shape)
        return float(out) if np.ndim(y) == 0 else out

    def _invert_array(self, y: np.ndarray) -> np.ndarray:
        # every point runs the same scalar bisection; the M calls are batched
        if not np.all(y >= 0.0):
            raise ValueError("M^{-1} is defined on [0, inf)")
        lo = np.zeros_like(y)
        hi = np.ones_like(y)
        grow = y > 0.0
        while grow.any():
            idx = np.flatnonzero(grow)
            below = self.eval_M(hi[idx]) <= y[idx]
            step = idx[below]
            lo[step], hi[step] = hi[step], 2.0 * hi[step]
            if np.any(hi[step] > 1e300):
                bad = float(y[step][hi[step] > 1e300][0])
                raise DivergenceError(f"M does not reach {bad:g} within double range")
            grow[idx[~below]] = False
        tol = self.inversion_tolerance
        active = np.flatnonzero(y > 0.0)
        while active.size:
            mid = 0.5 * (lo[active] + hi[active])
            wide = (hi[active] - lo[active] > tol * np.maximum(1.0, hi[active])) & (mid > lo[active]) & (mid < hi[active])
            active, mid = active[wide], mid[wide]
            if not active.size:
                break
            left = self.eval_M(mid) < y[active]
            lo[active[left]] = mid[left]
            hi[active[~left]] = mid[~left]
        return np.where(y > 0.0, 0.5 * (lo + hi), 0.0)


def _edge_distance(below, rows, npk, limit, ll, label=""):
    """Smallest ``d >= 1`` per row with ``below(d, row)`` true.

    ``below`` must be monotone in ``d`` (true from some distance on), which
    holds for unimodal terms on either side of the peak. Doubling brackets the
    distance, bisection pins it.
    """
    hi = np.ones(rows.size, dtype=np.int64)
    todo = rows
    while todo.size:
        if limit is not None and (npk[todo] + hi[todo]).max() > limit:
            bad = float(np.exp(ll[todo][np.argmax(npk[todo] + hi[todo])]))
            raise DivergenceError(
                f"{label}: series terms did not decrease within {limit} terms at lam={bad:g}; "
                "the sequence grows too slowly here"
            )
        ok = below(hi[todo], todo)
        todo = todo[~ok]
        hi[todo] *= 2
    lo = hi // 2  # below() is false at lo (or lo == 0)
    todo = rows[hi - lo > 1]
    while todo.size:
        mid = (lo[todo] + hi[todo]) // 2
        ok = below(mid, todo)
        hi[todo] = np.where(ok, mid, hi[todo])
        lo[todo] = np.where(ok, lo[todo], mid)
        todo = todo[hi[todo] - lo[todo] > 1]
    return hi


def _proxy_values(sequence: DefiningSequence, lam):
    arr = np.asarray(lam, dtype=float)
    if np.any(arr < 0):
        raise ValueError("proxy defined for lam >= 0 only")
    kind = sequence.kind
    if kind is SequenceKind.FACTORIAL or (kind is SequenceKind.GEVREY and sequence.beta == 1.0):
        out = arr.copy()
    elif kind is SequenceKind.GEVREY and sequence.beta > 1.0:
        out = arr ** (1.0 / sequence.beta)
    elif kind is SequenceKind.EXP_SQUARE:
        with np.errstate(divide="ignore"):
            out = np.where(arr < 1.0, 0.0, np.log(np.maximum(arr, 1.0)) ** 2)
    else:
        raise UnsupportedPresetError(
            f"no closed-form proxy for {sequence.name}; "
            "available for gevrey (beta >= 1), factorial and exp_square"
        )
    return float(out) if np.ndim(out) == 0 else out


def proxy_M(sequence: DefiningSequence, lam):
    """Closed-form stand-in for ``M``.

    ``lam**(1/beta)`` for Gevrey sequences with ``beta >= 1`` (``lam`` itself for
    ``n!``) and ``(ln lam)**2`` on ``lam >= 1`` (zero below) for ``exp(n**2)``.
    """
    return _proxy_values(sequence, lam)


class ProxyEvaluator:
    """Drop-in replacement for :class:`MandelbrojtEvaluator` using :func:`proxy_M`.

    Only ``eval_M`` and ``invert_M`` are offered; the series quantities
    ``S`` and ``P`` have no closed-form proxy.
    """

    kind = "proxy"

    def __init__(self, sequence: DefiningSequence):
        _proxy_values(sequence, 1.0)  # fail early on unsupported presets
        self.sequence = sequence

    def __repr__(self) -> str:
        return f"ProxyEvaluator({self.sequence.name})"

    def describe(self) -> dict:
        return {"kind": self.kind, "sequence": self.sequence.to_dict()}

    def eval_M(self, lam):
        return _proxy_values(self.sequence, lam)

    def invert_M(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0):
            raise ValueError("M^{-1} is defined on [0, inf)")
        kind = self.sequence.kind
        if kind is SequenceKind.EXP_SQUARE:
            out = np.where(arr == 0.0, 0.0, np.exp(np.sqrt(arr)))
        elif kind is SequenceKind.FACTORIAL:
            out = arr.copy()
        else:
            out = arr ** self.sequence.beta
        return float(out) if np.ndim(out) == 0 else out


def make_evaluator(sequence: DefiningSequence, kind: str = "series", **kwargs):
    if kind == "series":
        return MandelbrojtEvaluator(sequence, **kwargs)
    if kind == "proxy":
        return ProxyEvaluator(sequence)
    raise ValueError(f"unknown evaluator kind {kind!r}")


# Functional spellings of the evaluator methods.

def eval_log_T(ev: MandelbrojtEvaluator, lam):
    return ev.eval_log_T(lam)


def eval_M(ev, lam):
    return ev.eval_M(lam)


def invert_M(ev, y):
    return ev.invert_M(y)


def eval_log_S(ev: MandelbrojtEvaluator, lam):
    return ev.eval_log_S(lam)


def eval_log_P(ev: MandelbrojtEvaluator, lam):
    return ev.eval_log_P(lam)


@dataclass(frozen=True)
class ProxyEnvelope:
    """Constants with ``ln c1 + F(g1*lam) <= M(lam) <= ln c2 + F(g2*lam)`` on the grid.

    ``F`` is the closed-form proxy. A side is ``None`` when no swept scale gave
    a difference that stays bounded on the upper part of the grid.
    """

    gamma_lower: float | None
    log_c_lower: float | None
    gamma_upper: float | None
    log_c_upper: float | None
    lam_min: float
    lam_max: float

    def to_dict(self) -> dict:
        return {
            "gamma_lower": self.gamma_lower,
            "log_c_lower": self.log_c_lower,
            "gamma_upper": self.gamma_upper,
            "log_c_upper": self.log_c_upper,
            "lam_min": self.lam_min,
            "lam_max": self.lam_max,
        }


def proxy_envelope(ev, lam_grid=None, gammas=None, tail_fraction: float = 0.25) -> ProxyEnvelope:
    """Sweep proxy scales ``gamma`` and pick the tightest bounded pair.

    For each ``gamma`` the difference ``D = M(lam) - F(gamma*lam)`` is examined
    on the top ``tail_fraction`` of the grid: the lower scale is the largest
    ``gamma`` whose ``D`` does not decrease there, the upper scale the smallest
    whose ``D`` does not increase. The constants are then the extreme values
    of ``D`` over the full grid, so both inequalities hold there literally.
    """
    if lam_grid is None:
        lam_grid = np.logspace(0, 6, 241)
    if gammas is None:
        gammas = 2.0 ** np.arange(-4, 5)
    lam = np.asarray(lam_grid, dtype=float)
    gammas = np.sort(np.asarray(gammas, dtype=float))
    m_vals = np.asarray(ev.eval_M(lam))
    tail = lam.size - max(3, int(lam.size * tail_fraction))
    lower = upper = None
    for g in gammas:
        d = m_vals - np.asarray(proxy_M(ev.sequence, g * lam))
        slope = np.polyfit(np.log(lam[tail:]), d[tail:], 1)[0]
        scale = 1e-9 * max(1.0, float(np.max(np.abs(d[tail:]))))
        if slope >= -scale:
            lower = (g, float(np.min(d)))
        if slope <= scale and upper is None:
            upper = (g, float(np.max(d)))
    return ProxyEnvelope(
        gamma_lower=None if lower is None else float(lower[0]),
        log_c_lower=None if lower is None else lower[1],
        gamma_upper=None if upper is None else float(upper[0]),
        log_c_upper=None if upper is None else upper[1],
        lam_min=float(lam[0]),
        lam_max=float(lam[-1]),
    )
