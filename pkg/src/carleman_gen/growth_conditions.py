"""Growth and binomial-type conditions on a defining sequence.

Each condition quantifies over all ``n``; here it is checked on ``n <= N``
with explicit witness constants that are literally valid on that range, and
the tail of the binding margin decides between "holds", "fails" and
"inconclusive-at-range".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

import numpy as np
from scipy.special import gammaln, logsumexp

from .diagnostics import mean_increment, outlook
from .errors import MissingWitnessError
from .sequence_kernel import DefiningSequence

__all__ = [
    "Condition",
    "Verdict",
    "ConditionReport",
    "InequalityReport",
    "check_growth",
    "check_binomial",
    "binomial_log_sums",
    "verify_inequality",
    "recheck_witnesses",
    "DEFAULT_ALPHA_GRID",
]

DEFAULT_ALPHA_GRID = tuple(float(a) for a in np.logspace(-1, 2, 13))
# witnesses are shaved by this relative amount so re-checks need no slack
_SAFETY = 1e-9
# growth rate of log b_n must keep this share of its earlier value to count as exponential
_RATE_KEEP = 0.9
# a limiting growth rate of ln b_n at or below this means h = 1 is the best available
_RATE_FLOOR = 1e-3


class Condition(str, Enum):
    WGR = "WGR"
    GR = "GR"
    SGR = "SGR"
    BC = "BC"
    SBC = "SBC"


class Verdict(str, Enum):
    HOLDS = "holds-with-witness"
    FAILS = "fails-with-counterexample"
    INCONCLUSIVE = "inconclusive-at-range"


@dataclass(frozen=True)
class ConditionReport:
    condition: Condition
    verdict: Verdict
    witnesses: dict[str, Any]
    checked_range: int
    margin_trend: float
    counterexample: dict[str, Any] | None = None
    details: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "verdict": self.verdict.value,
            "witnesses": self.witnesses,
            "checked_range": self.checked_range,
            "margin_trend": self.margin_trend,
            "counterexample": self.counterexample,
            "details": self.details,
        }


def _shave(x: float) -> float:
    return x - _SAFETY * max(1.0, abs(x))


def _growth_margin(seq: DefiningSequence, cond: Condition, n: np.ndarray, alpha: float) -> np.ndarray:
    mu = np.asarray(seq.log_m(n), dtype=float)
    margin = mu - n * np.log(alpha)
    if cond in (Condition.GR, Condition.SGR):
        margin = margin - gammaln(n + 1.0)
    return margin


def check_growth(
    seq: DefiningSequence,
    cond: Condition | str,
    N: int = 200,
    alpha_grid: Iterable[float] | None = None,
) -> ConditionReport:
    """Check WGR, GR or SGR on ``n <= N``.

    For each grid ``alpha`` the margin ``mu_n - n ln(alpha) [- ln n!]`` is
    formed; ``ln c(alpha)`` is its minimum (so ``c alpha^n [n!] <= m_n`` holds on
    the range) and its tail decides whether the margin stays bounded below.
    WGR and SGR must hold for every grid ``alpha``, GR for one.
    """
    cond = Condition(cond)
    if cond not in (Condition.WGR, Condition.GR, Condition.SGR):
        raise ValueError(f"{cond.value} is a binomial condition; use check_binomial")
    if N < 16:
        raise ValueError("N must be at least 16")
    alphas = [float(a) for a in (DEFAULT_ALPHA_GRID if alpha_grid is None else alpha_grid)]
    if not alphas or any(not (a > 0) for a in alphas):
        raise ValueError("alpha grid must be non-empty and positive")
    n = np.arange(N + 1, dtype=float)

    rows = []
    for a in alphas:
        margin = _growth_margin(seq, cond, n, a)
        status, fit = outlook(margin, n, "below", fraction=0.25)
        binding = int(np.argmin(margin))
        rows.append({
            "alpha": a,
            "log_c": _shave(float(margin[binding])),
            "binding_n": binding,
            "status": status,
            "margin_trend": mean_increment(margin, 0.25),
            "projected_crossover": fit.crossover,
        })

    good = [r for r in rows if r["status"] == "bounded"]
    bad = [r for r in rows if r["status"] == "unbounded"]
    open_ = [r for r in rows if r["status"] == "unstable"]
    universal = cond in (Condition.WGR, Condition.SGR)
    counter = None
    if universal:
        if bad:
            verdict = Verdict.FAILS
            worst = min(bad, key=lambda r: r["margin_trend"])
            counter = _counterexample(worst, N)
        elif open_:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.HOLDS
        trend = min(r["margin_trend"] for r in rows)
        witnesses = {
            "alpha_grid": [r["alpha"] for r in rows],
            "log_c": [r["log_c"] for r in rows],
        }
    else:
        if good:
            verdict = Verdict.HOLDS
            pick = max(good, key=lambda r: r["alpha"])
        elif open_:
            verdict = Verdict.INCONCLUSIVE
            pick = max(open_, key=lambda r: r["margin_trend"])
        else:
            verdict = Verdict.FAILS
            pick = max(rows, key=lambda r: r["margin_trend"])
            counter = _counterexample(pick, N)
        trend = pick["margin_trend"]
        witnesses = {"alpha": pick["alpha"], "log_c": pick["log_c"], "c": float(np.exp(pick["log_c"]))}
    return ConditionReport(cond, verdict, witnesses, N, float(trend), counter, rows)


def _counterexample(row: dict, N: int) -> dict:
    # any c exceeding the range minimum is already violated at the binding index;
    # a falling tail drives that minimum to zero
    return {
        "alpha": row["alpha"],
        "n": row["binding_n"],
        "log_margin": row["log_c"],
        "note": f"margin falls at rate {row['margin_trend']:.6g} per index over n <= {N}",
    }


def binomial_log_sums(seq: DefiningSequence, N: int) -> np.ndarray:
    """``ln b_n`` with ``b_n = sum_k m_n / (m_k m_{n-k})`` for ``n <= N``."""
    mu = np.asarray(seq.log_m(np.arange(N + 1)), dtype=float)
    n = np.arange(N + 1)
    kk = np.arange(N + 1)
    valid = kk[None, :] <= n[:, None]
    comp = np.where(valid, n[:, None] - kk[None, :], 0)
    terms = np.where(valid, mu[:, None] - mu[None, :] - mu[comp], -np.inf)
    return logsumexp(terms, axis=1)


def _limiting_rate(logb: np.ndarray) -> float:
    # increments over the last half fitted as B + C/n; B is the limiting rate
    d = np.diff(logb)
    nd = np.arange(1, logb.size, dtype=float)
    w = d.size // 2
    design = np.column_stack([np.ones(w), 1.0 / nd[-w:]])
    coef, *_ = np.linalg.lstsq(design, d[-w:], rcond=None)
    return float(coef[0])


def check_binomial(seq: DefiningSequence, cond: Condition | str, N: int = 200) -> ConditionReport:
    """Check BC (lower bound) or SBC (two-sided) for ``b_n`` on ``n <= N``.

    The margin ``ln b_n - n ln h`` has tail trend ``r - ln h`` where ``r`` is the
    mean increment of ``ln b_n`` over the last quarter; bisection on the trend
    sign therefore lands on ``h = exp(r)``, which is used directly. For SBC the
    smallest admissible ``H`` is the same ``exp(r)``.
    """
    cond = Condition(cond)
    if cond not in (Condition.BC, Condition.SBC):
        raise ValueError(f"{cond.value} is a growth condition; use check_growth")
    if N < 16:
        raise ValueError("N must be at least 16")
    logb = binomial_log_sums(seq, N)
    n = np.arange(N + 1, dtype=float)
    q = max(1, N // 4)
    rate = (logb[N] - logb[N - q]) / q
    rate_prev = (logb[N - q] - logb[N - 2 * q]) / q

    log_h = rate
    lower = logb - n * log_h
    log_l = _shave(float(lower.min()))
    witnesses: dict[str, Any] = {
        "h": float(np.exp(log_h)),
        "log_h": float(log_h),
        "l": float(np.exp(log_l)),
        "log_l": log_l,
    }
    details = [{"n": int(i), "log_b": float(v)} for i, v in zip(n, logb)]
    limit_rate = _limiting_rate(logb)
    counter = None
    if log_h <= _RATE_FLOOR or (limit_rate is not None and limit_rate <= _RATE_FLOOR):
        verdict = Verdict.FAILS
        counter = {
            "n": N,
            "note": "increments of ln b_n die out; no h > 1 keeps l h^n below b_n",
        }
    elif rate < _RATE_KEEP * rate_prev:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.HOLDS

    if cond is Condition.SBC:
        log_H = rate
        log_L = float((logb - n * log_H).max())
        log_L = log_L + _SAFETY * max(1.0, abs(log_L))
        witnesses.update({"H": float(np.exp(log_H)), "log_H": float(log_H),
                          "L": float(np.exp(log_L)) if log_L < 700 else float("inf"), "log_L": log_L})
        accel, _ = outlook(np.diff(logb), n[1:], "above", 0.5)
        if verdict is Verdict.HOLDS and accel == "unbounded":
            # increments keep growing: a geometric bound fitted on the first half is breached later
            half = N // 2
            r0 = logb[half] / half
            L0 = float((logb[: half + 1] - n[: half + 1] * r0).max())
            breach = np.flatnonzero(logb[half + 1:] - n[half + 1:] * r0 > L0)
            if breach.size:
                verdict = Verdict.FAILS
                counter = {
                    "n": int(half + 1 + breach[0]),
                    "H": float(np.exp(r0)),
                    "log_L": L0,
                    "note": "b_n outgrows every geometric bound; this one is fitted on n <= N/2",
                }
            else:
                verdict = Verdict.INCONCLUSIVE
    return ConditionReport(cond, verdict, witnesses, N, float(rate - log_h), counter, details)


def recheck_witnesses(report: ConditionReport, seq: DefiningSequence, alpha_grid=None) -> bool:
    """Re-assert the witnessed inequalities literally for every ``n <= N``."""
    N = report.checked_range
    n = np.arange(N + 1, dtype=float)
    w = report.witnesses
    cond = report.condition
    if cond in (Condition.BC, Condition.SBC):
        logb = binomial_log_sums(seq, N)
        ok = bool(np.all(w["log_l"] + n * w["log_h"] <= logb))
        if cond is Condition.SBC:
            ok = ok and bool(np.all(logb <= w["log_L"] + n * w["log_H"]))
        return ok
    if "alpha_grid" in w:
        pairs = zip(w["alpha_grid"], w["log_c"])
    else:
        pairs = [(w["alpha"], w["log_c"])]
    for a, log_c in pairs:
        if not np.all(log_c <= _growth_margin(seq, cond, n, a)):
            return False
    return True


@dataclass(frozen=True)
class InequalityReport:
    which: str
    max_violation: float
    violations: int
    holds: bool
    n_values: tuple[int, ...] = ()
    threshold_y: float | None = None
    R: float | None = None
    slack: float = 1e-8

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "max_violation": self.max_violation,
            "violations": self.violations,
            "holds": self.holds,
            "n_values": list(self.n_values),
            "threshold_y": self.threshold_y,
            "R": self.R,
            "slack": self.slack,
        }


def verify_inequality(ev, which: str, params: dict | None, lam_grid, slack: float = 1e-8) -> InequalityReport:
    """Evaluate both sides of a derived inequality on ``lam_grid``.

    ``which`` is ``"BC1"``, ``"BC2"`` (``params`` needs ``h`` and ``log_l`` from
    :func:`check_binomial`, optional ``n_values``, default 1..8) or
    ``"SGR-consequence"`` (``params`` needs ``alpha``; the grid is read as
    values ``y`` of ``M``, and the smallest grid ``y`` from which
    ``2 M^{-1}(y) / alpha >= y`` holds throughout is reported with
    ``R = M^{-1}(y)``).
    """
    params = dict(params or {})
    lam = np.asarray(lam_grid, dtype=float)
    if which in ("BC1", "BC2"):
        if "h" not in params or "log_l" not in params:
            raise MissingWitnessError(f"{which} needs the BC witnesses h and log_l")
        h = float(params["h"])
        n_values = tuple(int(v) for v in params.get("n_values", range(1, 9)))
        if any(v < 1 or v > 8 for v in n_values):
            raise ValueError("n must lie in 1..8")
        shift = ev.sequence.log_m(0) + float(params["log_l"])
        m_lam = np.asarray(ev.eval_M(lam))
        worst = -np.inf
        count = 0
        for k in n_values:
            p = 2.0 ** k
            if which == "BC1":
                lhs = np.asarray(ev.eval_M(h ** k * lam)) / p + (1.0 - 1.0 / p) * shift
                excess = lhs - m_lam
            else:
                rhs = p * np.asarray(ev.eval_M(lam / h ** k)) - (p - 1.0) * shift
                excess = m_lam - rhs
            worst = max(worst, float(excess.max()))
            count += int(np.sum(excess > slack))
        return InequalityReport(which, worst, count, count == 0, n_values, slack=slack)

    if which == "SGR-consequence":
        if "alpha" not in params:
            raise MissingWitnessError("SGR-consequence needs alpha")
        alpha = float(params["alpha"])
        y = np.sort(lam)
        inv = np.asarray(ev.invert_M(y))
        excess = y - 2.0 * inv / alpha
        ok = excess <= slack * np.maximum(1.0, y)
        if not ok[-1]:
            return InequalityReport(which, float(excess.max()), int((~ok).sum()), False, slack=slack)
        bad = np.flatnonzero(~ok)
        start = 0 if bad.size == 0 else int(bad[-1]) + 1
        thr = float(y[start])
        after = excess[start:]
        return InequalityReport(
            which, float(after.max()), 0, True, threshold_y=thr, R=float(inv[start]), slack=slack
        )
    raise ValueError(f"unknown inequality {which!r}")
