"""Spectrum models and the half-plane-type generation criteria.

A diagonal operator with spectrum ``{lam_k}`` generates a semigroup of the
requested class when the spectrum sits in ``Re z <= a - b M(|Im z|)``:
for some ``b > 0`` (Roumieu) or for every ``b > 0`` (Beurling). The test
reduces to finiteness of ``a*(b) = sup_k Re lam_k + b M(|Im lam_k|)``.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import tail_balance

__all__ = [
    "SpectrumModel",
    "Mode",
    "GenerationVerdict",
    "AStar",
    "CriterionVerdict",
    "region_member",
    "a_star",
    "decide",
    "boundary_sample",
    "write_boundary_csv",
    "DEFAULT_B_GRID",
    "thread_count",
]

DEFAULT_B_GRID = tuple(float(b) for b in np.logspace(-2, 2, 17))
_MONOTONE_WINDOW = 1000


def thread_count() -> int:
    """Worker threads for independent grid points; ``CARLEMAN_GEN_THREADS`` overrides."""
    raw = os.environ.get("CARLEMAN_GEN_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class SpectrumModel:
    """Eigenvalues ``lam_k``, ``k = 1..K``, of a diagonal operator.

    ``infinite`` marks a truncated rule family (the tail is extrapolated);
    a finite list is exactly the spectrum. With ``conjugate_pairs`` each
    ``lam_k`` is accompanied by its conjugate; criteria only see ``|Im|`` so
    the stored branch suffices for them.
    """

    points: np.ndarray
    real_part_bounded_above: bool
    infinite: bool = False
    conjugate_pairs: bool = False
    label: str = "custom"
    rule: dict | None = None
    monotone_from: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size == 0:
            raise ValueError("spectrum is empty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("spectrum contains non-finite points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def K(self) -> int:
        return int(self.points.size)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.K + 1, dtype=float)

    def all_points(self) -> np.ndarray:
        if not self.conjugate_pairs:
            return self.points
        return np.concatenate([self.points, np.conj(self.points)])

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "K": self.K,
            "infinite": self.infinite,
            "conjugate_pairs": self.conjugate_pairs,
            "real_part_bounded_above": self.real_part_bounded_above,
        }
        if self.rule is not None:
            out["rule"] = dict(self.rule)
        return out

    @classmethod
    def rule_family(
        cls,
        c: float = 1.0,
        p: float = 1.0,
        q: float = 1.0,
        r0: float = 0.0,
        K: int = 100_000,
        scale: str = "power",
        conjugate_pairs: bool = False,
        real_part_bounded_above: bool | None = None,
    ) -> "SpectrumModel":
        """``Re = -c k^p + r0`` (``scale="power"``) or ``-c (ln k)^p + r0``
        (``scale="log"``) with ``Im = k^q``."""
        if K < 1:
            raise ValueError("K must be positive")
        if scale not in ("power", "log"):
            raise ValueError("scale must be 'power' or 'log'")
        k = np.arange(1, K + 1, dtype=float)
        base = k if scale == "power" else np.log(k)
        re = -c * base ** p + r0
        im = k ** q
        pts = re + 1j * im
        # Re runs off to +inf only for c < 0 with a growing base
        inferred = c >= 0 or p == 0
        bounded = inferred if real_part_bounded_above is None else bool(real_part_bounded_above)
        start = _check_monotone_modulus(pts[: _MONOTONE_WINDOW])
        lead = f"-{c:g}*k^{p:g}" if scale == "power" else f"-{c:g}*ln(k)^{p:g}"
        rule = {"c": c, "p": p, "q": q, "r0": r0, "scale": scale}
        return cls(pts, bounded, True, conjugate_pairs, f"{lead}{r0:+g} + i*k^{q:g}", rule, start)

    @classmethod
    def from_points(
        cls,
        points: Iterable[complex],
        real_part_bounded_above: bool = True,
        conjugate_pairs: bool = False,
        label: str = "points",
    ) -> "SpectrumModel":
        """A finite spectrum; its sup is exact, so every trend is stable."""
        return cls(np.asarray(list(points), dtype=complex), bool(real_part_bounded_above),
                   False, conjugate_pairs, label)

    @classmethod
    def from_sequence(
        cls,
        points: Sequence[complex] | np.ndarray,
        real_part_bounded_above: bool | None = None,
        label: str = "sequence",
    ) -> "SpectrumModel":
        """The first ``K`` terms of an infinite eigenvalue sequence."""
        pts = np.asarray(points, dtype=complex)
        if real_part_bounded_above is None:
            # heuristic: the second half does not climb above the first
            real_part_bounded_above = bool(pts.size) and bool(
                np.max(pts.real[pts.size // 2:]) <= np.max(pts.real[: max(1, pts.size // 2)])
            )
        start = _check_monotone_modulus(pts[: _MONOTONE_WINDOW])
        return cls(pts, bool(real_part_bounded_above), True, False, label, None, start)


def _check_monotone_modulus(pts: np.ndarray) -> int:
    """Index (1-based) from which ``|lam_k|`` is nondecreasing on the window."""
    mod = np.abs(pts)
    drops = np.flatnonzero(np.diff(mod) < -1e-12 * np.maximum(1.0, mod[1:]))
    start = 1 if drops.size == 0 else int(drops[-1]) + 2
    if mod.size > 1 and start >= mod.size:
        raise ValueError("|lam_k| is not eventually nondecreasing on k <= 1000")
    return start


class Mode(str, Enum):
    ROUMIEU = "Roumieu"
    BEURLING = "Beurling"


class GenerationVerdict(str, Enum):
    GENERATES = "generates"
    DOES_NOT_GENERATE = "does-not-generate"
    INCONCLUSIVE = "inconclusive-at-truncation"


@dataclass(frozen=True)
class AStar:
    """``a*(b)`` over the enumerated spectrum with its tail diagnosis."""

    b: float
    value: float
    trend: str
    attained_k: int
    reason: str = ""

    @property
    def finite(self) -> bool:
        return self.trend == "stable"

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "value": self.value,
            "trend": self.trend,
            "finite": self.finite,
            "attained_k": self.attained_k,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CriterionVerdict:
    mode: Mode
    verdict: GenerationVerdict
    a_of_b: tuple[AStar, ...]
    witness_b: float | None = None
    spectrum: dict = field(default_factory=dict)
    evaluator: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "verdict": self.verdict.value,
            "witness_b": self.witness_b,
            "a_of_b": [a.to_dict() for a in self.a_of_b],
            "spectrum": self.spectrum,
            "evaluator": self.evaluator,
        }


def region_member(lam: complex, a: float, b: float, ev) -> bool:
    """``Re lam <= a - b M(|Im lam|)``."""
    if b < 0:
        raise ValueError("b must be non-negative")
    lam = complex(lam)
    return bool(lam.real <= a - b * float(ev.eval_M(abs(lam.imag))))


def _m_of_imag(spectrum: SpectrumModel, ev) -> np.ndarray:
    return np.asarray(ev.eval_M(np.abs(spectrum.points.imag)), dtype=float)


def a_star(spectrum: SpectrumModel, b: float, ev, m_imag: np.ndarray | None = None) -> AStar:
    """Enumerated ``sup_k Re lam_k + b M(|Im lam_k|)`` and whether it is final.

    For rule families the tail decides: the per-index value is
    ``gain - depth`` with ``gain = b M(|Im|)`` and ``depth = -Re``, and
    :func:`carleman_gen.diagnostics.tail_balance` says whether it stays
    bounded. ``m_imag`` may carry precomputed ``M(|Im lam_k|)``.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    if m_imag is None:
        m_imag = _m_of_imag(spectrum, ev)
    gain = b * m_imag
    vals = spectrum.points.real + gain
    i = int(np.argmax(vals))
    value = float(vals[i])
    if not spectrum.infinite:
        return AStar(float(b), value, "stable", i + 1, "finite spectrum")
    tb = tail_balance(gain, -spectrum.points.real, spectrum.k)
    return AStar(float(b), value, tb.status, i + 1, tb.reason)


def decide(
    mode: Mode | str,
    spectrum: SpectrumModel,
    ev,
    b_grid: Iterable[float] | None = None,
) -> CriterionVerdict:
    """Generation verdict in the given mode over a log grid of ``b``.

    Beurling: generates when every ``a*(b)`` is stable, fails as soon as one
    diverges. Roumieu: generates as soon as one is stable (the largest such
    ``b`` is the witness), fails when all diverge. Anything else is
    inconclusive at this truncation.
    """
    mode = Mode(mode)
    grid = sorted(float(b) for b in (DEFAULT_B_GRID if b_grid is None else b_grid))
    if not grid or grid[0] <= 0:
        raise ValueError("b grid must be non-empty and positive")
    meta = {"spectrum": spectrum.to_dict(), "evaluator": ev.describe()}
    if not spectrum.real_part_bounded_above:
        return CriterionVerdict(mode, GenerationVerdict.DOES_NOT_GENERATE, (), None, **meta)

    m_imag = _m_of_imag(spectrum, ev)
    workers = min(thread_count(), len(grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(lambda b: a_star(spectrum, b, ev, m_imag), grid))
    else:
        rows = tuple(a_star(spectrum, b, ev, m_imag) for b in grid)

    trends = [r.trend for r in rows]
    witness = None
    if mode is Mode.BEURLING:
        if "diverging" in trends:
            verdict = GenerationVerdict.DOES_NOT_GENERATE
        elif all(t == "stable" for t in trends):
            verdict = GenerationVerdict.GENERATES
        else:
            verdict = GenerationVerdict.INCONCLUSIVE
    else:
        stable = [r.b for r in rows if r.trend == "stable"]
        if stable:
            verdict = GenerationVerdict.GENERATES
            witness = max(stable)
        elif all(t == "diverging" for t in trends):
            verdict = GenerationVerdict.DOES_NOT_GENERATE
        else:
            verdict = GenerationVerdict.INCONCLUSIVE
    return CriterionVerdict(mode, verdict, rows, witness, **meta)


def boundary_sample(a: float, b: float, ev, im_range, n_points: int = 201) -> list[tuple[float, float]]:
    """Points ``(Im, Re)`` on ``Re = a - b M(|Im|)``.

    ``im_range`` is a half-width ``R`` (grid on ``[-R, R]``) or a pair ``(lo, hi)``.
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    if np.ndim(im_range) == 0:
        lo, hi = -abs(float(im_range)), abs(float(im_range))
    else:
        lo, hi = (float(v) for v in im_range)
    im = np.linspace(lo, hi, n_points)
    re = a - b * np.asarray(ev.eval_M(np.abs(im)), dtype=float)
    return [(float(x), float(y)) for x, y in zip(im, re)]


def write_boundary_csv(path, pairs: Iterable[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["im", "re"])
        for im, re in pairs:
            w.writerow([f"{im:.15g}", f"{re:.15g}"])
