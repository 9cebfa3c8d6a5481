"""Explicit spectra that break the Beurling region condition, and the orbit that shows it.

Given ``b`` for which ``Re z <= a - b M(|Im z|)`` is to fail, the points are
placed either on a vertical line (bounded real parts) or on the half-depth
curve ``Re = -(b/2) M(n)``. With the witness ``f = sum n^-2 e_n`` the sum
``sum_n T(|lam_n|) e^{t Re lam_n} / n^4`` is then shown to blow up, at
``t = 1`` or ``t = 1/(2b)`` respectively.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NoDivergenceError
from .spectral_region import SpectrumModel

__all__ = [
    "ViolationConstruction",
    "build_violation",
    "control_spectrum",
    "DivergenceDemo",
    "divergence_demo",
    "conclude_not_beurling",
    "write_trace_csv",
    "DEFAULT_THRESHOLD",
]

DEFAULT_THRESHOLD = 1e6
_MODES = ("bounded-re", "unbounded-re")


@dataclass(frozen=True)
class ViolationConstruction:
    b: float
    mode: str
    points: np.ndarray
    eps: np.ndarray
    f_coeffs: np.ndarray
    dual_coeffs: np.ndarray
    r0: float = 0.0
    t: float = 1.0
    label: str = ""

    @property
    def K(self) -> int:
        return int(self.points.size)

    def as_spectrum(self) -> SpectrumModel:
        return SpectrumModel.from_sequence(self.points, True, self.label or f"{self.mode} b={self.b:g}")

    def check_invariants(self, ev) -> dict:
        n = np.arange(1, self.K + 1, dtype=float)
        m_im = np.asarray(ev.eval_M(np.abs(self.points.imag)), dtype=float)
        outside = self.points.real > -self.b * m_im
        mod = np.abs(self.points)
        prev = np.concatenate([[0.0], mod[:-1]])
        growth = mod > np.maximum(n, prev)
        radii = (self.eps > 0) & (self.eps < 1.0 / n)
        return {
            "outside_region": bool(outside.all()),
            "modulus_growth": bool(growth.all()),
            "radii": bool(radii.all()),
            "first_failure": None if outside.all() and growth.all() else int(np.argmin(outside & growth)) + 1,
        }

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "mode": self.mode,
            "K": self.K,
            "r0": self.r0,
            "t": self.t,
            "first_points": [[float(z.real), float(z.imag)] for z in self.points[:5]],
        }


def build_violation(ev, b: float, mode: str = "unbounded-re", K: int = 10_000, r0: float = 0.0) -> ViolationConstruction:
    """Points outside the region for slope ``b``, with ``|lam_n| > max(n, |lam_{n-1}|)``.

    ``bounded-re``: ``lam_n = r0 + i(n + 1/2)``, tested at ``t = 1``.
    ``unbounded-re``: ``lam_n = -(b/2) M(n) + i n``, tested at ``t = 1/(2b)``.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if K < 10:
        raise ValueError("K must be at least 10")
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    n = np.arange(1, K + 1, dtype=float)
    if mode == "bounded-re":
        # the half offset keeps |lam_n| > n strict even for r0 = 0
        pts = r0 + 1j * (n + 0.5)
        t = 1.0
    else:
        pts = -0.5 * b * np.asarray(ev.eval_M(n), dtype=float) + 1j * n
        t = 1.0 / (2.0 * b)
    cons = ViolationConstruction(
        b=float(b),
        mode=mode,
        points=pts,
        eps=1.0 / (2.0 * n),
        f_coeffs=n ** -2.0,
        dual_coeffs=n ** -2.0,
        r0=float(r0) if mode == "bounded-re" else 0.0,
        t=t,
        label=f"{mode} b={b:g}",
    )
    checks = cons.check_invariants(ev)
    if not (checks["outside_region"] and checks["modulus_growth"] and checks["radii"]):
        raise ValueError(f"construction invariants fail at n={checks['first_failure']}: {checks}")
    return cons


def control_spectrum(K: int = 10_000, c: float = 3.0) -> ViolationConstruction:
    """``lam_n = -c n + i n``: deep inside every region, for contrast."""
    n = np.arange(1, K + 1, dtype=float)
    pts = -c * n + 1j * n
    return ViolationConstruction(0.0, "control", pts, 1.0 / (2.0 * n), n ** -2.0, n ** -2.0,
                                 label=f"control -{c:g}n+in")


@dataclass(frozen=True)
class DivergenceDemo:
    verdict: str
    t: float
    threshold: float
    crossing_index: int | None
    k: np.ndarray
    log_partial_sums: np.ndarray
    log_terms: np.ndarray
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "t": self.t,
            "threshold": self.threshold,
            "crossing_index": self.crossing_index,
            "log_partial_sum_final": float(self.log_partial_sums[-1]),
            "reason": self.reason,
        }


def divergence_demo(ev, cons: ViolationConstruction, threshold: float = DEFAULT_THRESHOLD,
                    t: float | None = None) -> DivergenceDemo:
    """Partial sums of ``exp(M(|lam_n|) + t Re lam_n - 4 ln n)``.

    Diverging once the sum passes ``threshold`` while the terms rise over the
    last quarter of indices; "bounded" when they fall there and the sum
    stays below it.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    t = cons.t if t is None else float(t)
    n = np.arange(1, cons.K + 1, dtype=float)
    log_terms = np.asarray(ev.eval_M(np.abs(cons.points)), dtype=float) + t * cons.points.real - 4.0 * np.log(n)
    partial = np.logaddexp.accumulate(log_terms)
    crossed = np.flatnonzero(partial > np.log(threshold))
    crossing = int(crossed[0]) + 1 if crossed.size else None
    steps = np.diff(log_terms[-max(2, cons.K // 4):])
    rising = bool(np.all(steps > 0))
    falling = bool(np.all(steps < 0))
    if crossing is not None and rising:
        verdict, reason = "diverging", "partial sums pass the threshold with terms still increasing"
    elif crossing is None and falling:
        verdict, reason = "bounded", "terms fall away and the sum stays below the threshold"
    else:
        verdict, reason = "inconclusive", f"threshold crossed: {crossing is not None}, terms rising: {rising}"
    return DivergenceDemo(verdict, t, float(threshold), crossing, n.astype(int), partial, log_terms, reason)


def conclude_not_beurling(cons: ViolationConstruction, demo: DivergenceDemo) -> dict:
    """Turn a diverging demonstration into the non-generation statement."""
    if demo.verdict != "diverging":
        raise NoDivergenceError("no divergence established")
    return {
        "b": cons.b,
        "mode": cons.mode,
        "t": demo.t,
        "crossing_index": demo.crossing_index,
        "threshold": demo.threshold,
        "witness": "f = sum_n n^-2 e_n",
        "conclusion": (
            f"e^(tA) f at t={demo.t:g} is outside the domain of T(|A|), so the orbit of f "
            "leaves the Beurling class and A does not generate a Beurling-class semigroup"
        ),
    }


def write_trace_csv(path, demo: DivergenceDemo) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "log_partial_sum", "log_term"])
        for k, s, x in zip(demo.k, demo.log_partial_sums, demo.log_terms):
            w.writerow([int(k), f"{s:.15g}", f"{x:.15g}"])
