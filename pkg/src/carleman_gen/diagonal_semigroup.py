"""Diagonal operators on l^2 and the orbits of the semigroups they generate.

``A e_k = lam_k e_k``, so ``e^{tA}`` and every power ``A^n`` act coordinatewise
and the spectral measure of a set is the coordinate projection onto the
indices whose eigenvalue lies in it. Vectors whose coefficients underflow
(``e^{-k}`` for ``k`` in the thousands) are carried as log-magnitudes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import logsumexp

from .diagnostics import outlook, tail_balance
from .errors import OrbitOverflowError
from .sequence_kernel import DefiningSequence
from .spectral_region import SpectrumModel

__all__ = [
    "DiagonalOperator",
    "Vector",
    "basket",
    "BASKET_KINDS",
    "OrbitSample",
    "orbit",
    "sample_orbit",
    "derivative_log_norm",
    "SpectralProjection",
    "spectral_projection",
    "total_variation",
    "DomainResult",
    "domain_T_test",
    "domain_sweep",
    "OrbitClass",
    "classify_orbit",
    "write_derivative_csv",
    "write_orbit_csv",
    "DEFAULT_ALPHA_GRID",
    "OVERFLOW_LOG",
]

OVERFLOW_LOG = 700.0
DEFAULT_ALPHA_GRID = tuple(float(a) for a in np.logspace(2, -2, 17))
# extra decay demanded of the log-terms so that "bounded above" means summable
_SUMMABLE_SLACK = 1.5
# projected sign changes of the gap increments are trusted this far out
_GAP_HORIZON = 1e12
# a term peak this close to K means the truncation, not the operator, sets the norm
_TRUNCATION_SHARE = 0.9


class DiagonalOperator:
    """``A = diag(lam_1, ..., lam_K)``; conjugate pairs are appended after the first branch."""

    def __init__(self, spectrum: SpectrumModel):
        self.spectrum = spectrum
        self.eigenvalues = spectrum.all_points()
        self.eigenvalues.setflags(write=False)
        with np.errstate(divide="ignore"):
            self._log_mod = np.log(np.abs(self.eigenvalues))
        base = spectrum.k
        self.index = np.concatenate([base, base]) if spectrum.conjugate_pairs else base

    @property
    def K(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def sup_re(self) -> float:
        return float(self.eigenvalues.real.max())

    def apply(self, f, n: int = 1) -> np.ndarray:
        """``A^n f`` for a plain coefficient array."""
        return self.eigenvalues ** n * _values(f, self.K)


@dataclass(frozen=True)
class Vector:
    """Coefficients kept as ``ln|f_k|`` and phase so that tiny entries survive.

    ``finite_support`` marks vectors with finitely many non-zero coordinates
    (no tail to extrapolate).
    """

    log_abs: np.ndarray
    phase: np.ndarray
    finite_support: bool = False
    label: str = "vector"

    def __post_init__(self):
        la = np.asarray(self.log_abs, dtype=float)
        ph = np.broadcast_to(np.asarray(self.phase, dtype=float), la.shape).copy()
        la.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "log_abs", la)
        object.__setattr__(self, "phase", ph)

    @property
    def K(self) -> int:
        return int(self.log_abs.size)

    @classmethod
    def from_values(cls, values, finite_support: bool = True, label: str = "vector") -> "Vector":
        v = np.asarray(values, dtype=complex)
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(v))
        return cls(la, np.angle(v), finite_support, label)

    @classmethod
    def unit(cls, j: int, K: int) -> "Vector":
        """``e_j`` with ``j`` counted from 1."""
        if not 1 <= j <= K:
            raise ValueError("unit index out of range")
        la = np.full(K, -np.inf)
        la[j - 1] = 0.0
        return cls(la, np.zeros(K), True, f"e_{j}")

    def values(self) -> np.ndarray:
        return np.exp(self.log_abs) * np.exp(1j * self.phase)

    def log_norm(self) -> float:
        return 0.5 * float(logsumexp(2.0 * self.log_abs))

    def to_dict(self) -> dict:
        return {"label": self.label, "K": self.K, "finite_support": self.finite_support}


BASKET_KINDS = ("inv_square", "exp", "inv")


def basket(index: np.ndarray, kinds: Iterable[str] = BASKET_KINDS) -> list[Vector]:
    """Test vectors ``1/k^2``, ``e^{-k}`` and ``1/k`` on the given indices."""
    k = np.asarray(index, dtype=float)
    out = []
    for kind in kinds:
        if kind == "inv_square":
            out.append(Vector(-2.0 * np.log(k), 0.0, False, "1/k^2"))
        elif kind == "exp":
            out.append(Vector(-k, 0.0, False, "exp(-k)"))
        elif kind == "inv":
            out.append(Vector(-np.log(k), 0.0, False, "1/k"))
        else:
            raise ValueError(f"unknown basket vector {kind!r}")
    return out


def _as_vector(f, K: int) -> Vector:
    v = f if isinstance(f, Vector) else Vector.from_values(f)
    if v.K != K:
        raise ValueError(f"vector has length {v.K}, operator has {K}")
    return v


def _values(f, K: int) -> np.ndarray:
    if isinstance(f, Vector):
        if f.K != K:
            raise ValueError(f"vector has length {f.K}, operator has {K}")
        return f.values()
    v = np.asarray(f, dtype=complex)
    if v.shape != (K,):
        raise ValueError(f"vector has length {v.size}, operator has {K}")
    return v


def _orbit_log_abs(op: DiagonalOperator, f: Vector, t: float) -> np.ndarray:
    la = t * op.eigenvalues.real + f.log_abs
    top = float(np.max(la))
    if top > OVERFLOW_LOG:
        k = int(np.argmax(la)) + 1
        raise OrbitOverflowError(f"t*Re(lam_k) + ln|f_k| = {top:.6g} exceeds {OVERFLOW_LOG:g} at k={k}")
    return la


@dataclass(frozen=True)
class OrbitSample:
    t: float
    f: Vector
    values: np.ndarray
    log_abs: np.ndarray
    derivative_log_norms: np.ndarray

    def norm_bound_holds(self, sup_re: float) -> bool:
        lhs = 0.5 * float(logsumexp(2.0 * self.log_abs))
        rhs = self.t * sup_re + self.f.log_norm()
        return lhs <= rhs + 1e-12 * max(1.0, abs(rhs))


def orbit(op: DiagonalOperator, f, t: float) -> np.ndarray:
    """``e^{tA} f`` coordinatewise."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if isinstance(f, Vector):
        v = _as_vector(f, op.K)
        la = _orbit_log_abs(op, v, t)
        return np.exp(la) * np.exp(1j * (v.phase + t * op.eigenvalues.imag))
    vals = _values(f, op.K)
    with np.errstate(divide="ignore"):
        la = t * op.eigenvalues.real + np.log(np.abs(vals))
    if float(np.max(la)) > OVERFLOW_LOG:
        raise OrbitOverflowError(f"orbit coordinate exceeds exp({OVERFLOW_LOG:g})")
    return np.exp(t * op.eigenvalues) * vals


def derivative_log_norm(op: DiagonalOperator, f, t: float, n):
    """``ln ||A^n e^{tA} f||`` for a scalar or an array of ``n``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v = _as_vector(f, op.K)
    base = 2.0 * _orbit_log_abs(op, v, t)
    lm = op._log_mod
    n_arr = np.atleast_1d(np.asarray(n, dtype=float))
    if np.any(n_arr < 0):
        raise ValueError("n must be non-negative")
    out = np.empty(n_arr.shape)
    for i, nn in enumerate(n_arr):
        if nn == 0:
            out[i] = 0.5 * float(logsumexp(base))
        else:
            with np.errstate(invalid="ignore"):
                out[i] = 0.5 * float(logsumexp(2.0 * nn * lm + base))
    return float(out[0]) if np.ndim(n) == 0 else out


def sample_orbit(op: DiagonalOperator, f, t: float, n_max: int = 64) -> OrbitSample:
    v = _as_vector(f, op.K)
    la = _orbit_log_abs(op, v, t)
    vals = np.exp(la) * np.exp(1j * (v.phase + t * op.eigenvalues.imag))
    norms = derivative_log_norm(op, v, t, np.arange(n_max + 1))
    return OrbitSample(float(t), v, vals, la, norms)


class SpectralProjection:
    """Coordinate projection onto ``{k : lam_k in delta}``."""

    def __init__(self, mask: np.ndarray):
        self.mask = np.asarray(mask, dtype=bool)
        self.mask.setflags(write=False)

    def __call__(self, f) -> np.ndarray:
        return np.where(self.mask, _values(f, self.mask.size), 0.0)

    def __matmul__(self, other: "SpectralProjection") -> "SpectralProjection":
        return SpectralProjection(self.mask & other.mask)

    def __and__(self, other: "SpectralProjection") -> "SpectralProjection":
        return self @ other

    def __or__(self, other: "SpectralProjection") -> "SpectralProjection":
        return SpectralProjection(self.mask | other.mask)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpectralProjection) and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash(self.mask.tobytes())

    def disjoint(self, other: "SpectralProjection") -> bool:
        return not bool(np.any(self.mask & other.mask))


def spectral_projection(op: DiagonalOperator, delta) -> SpectralProjection:
    """``delta`` is a predicate on complex arrays or an iterable of 1-based indices."""
    if callable(delta):
        return SpectralProjection(np.asarray(delta(op.eigenvalues), dtype=bool))
    mask = np.zeros(op.K, dtype=bool)
    idx = np.asarray(list(delta), dtype=int)
    if idx.size and (idx.min() < 1 or idx.max() > op.K):
        raise ValueError("projection index out of range")
    mask[idx - 1] = True
    return SpectralProjection(mask)


def total_variation(op: DiagonalOperator, f, g, delta: SpectralProjection | Callable | None = None) -> float:
    """``sum_{lam_k in delta} |f_k g_k|``; at most ``||f|| ||g||`` here."""
    prod = np.abs(_values(f, op.K) * _values(g, op.K))
    if delta is None:
        return float(prod.sum())
    proj = delta if isinstance(delta, SpectralProjection) else spectral_projection(op, delta)
    return float(prod[proj.mask].sum())


def _first_branch(op: DiagonalOperator, arr: np.ndarray) -> np.ndarray:
    return arr[: op.spectrum.K]


def _summability(op: DiagonalOperator, gain: np.ndarray, depth: np.ndarray):
    """Tail verdict for ``sum_k exp(gain_k - depth_k)`` on the first branch."""
    k = op.spectrum.k
    g = _first_branch(op, gain)
    d = _first_branch(op, depth)
    keep = np.isfinite(d)
    return tail_balance(g[keep] + _SUMMABLE_SLACK * np.log(k[keep]), d[keep], k[keep])


@dataclass(frozen=True)
class DomainResult:
    verdict: str
    s: float
    t: float
    log_sum: float
    reason: str
    trace_k: np.ndarray
    trace_log_partial_sum: np.ndarray

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "s": self.s, "t": self.t, "log_sum": self.log_sum, "reason": self.reason}


def _trace(log_terms: np.ndarray, points: int = 64):
    partial = np.logaddexp.accumulate(log_terms)
    idx = np.unique(np.geomspace(1, log_terms.size, points).astype(int)) - 1
    return idx + 1, partial[idx]


def domain_T_test(op: DiagonalOperator, ev, f, s: float, t: float, m_values: np.ndarray | None = None) -> DomainResult:
    """Is ``e^{tA} f`` in the domain of ``T(s|A|)``?

    Sums ``exp(2[M(s|lam_k|) + t Re lam_k + ln|f_k|])``. For a truncated
    infinite spectrum the tail decides: the terms must fall faster than
    ``k^{-1.5}`` eventually (in-domain) or rise without bound (diverging).
    ``m_values`` may carry precomputed ``M(s|lam_k|)``.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    v = _as_vector(f, op.K)
    if m_values is None:
        m_values = np.asarray(ev.eval_M(s * np.abs(op.eigenvalues)), dtype=float)
    gain = 2.0 * m_values
    depth = -2.0 * (t * op.eigenvalues.real + v.log_abs)
    terms = gain - depth
    log_sum = float(logsumexp(terms))
    tk, tp = _trace(np.where(np.isfinite(terms), terms, -np.inf))
    if v.finite_support or not op.spectrum.infinite:
        return DomainResult("in-domain", s, t, log_sum, "finite sum", tk, tp)
    tb = _summability(op, gain, depth)
    verdict = {"stable": "in-domain", "diverging": "diverging"}.get(tb.status, "inconclusive")
    return DomainResult(verdict, s, t, log_sum, tb.reason, tk, tp)


def domain_sweep(op: DiagonalOperator, ev, vectors: Iterable, s_grid, t_grid) -> list[DomainResult]:
    """:func:`domain_T_test` over a grid, evaluating ``M(s|lam|)`` once per ``s``."""
    vecs = [_as_vector(f, op.K) for f in vectors]
    out = []
    mod = np.abs(op.eigenvalues)
    for s in s_grid:
        m_values = np.asarray(ev.eval_M(float(s) * mod), dtype=float)
        for t in t_grid:
            for v in vecs:
                out.append(domain_T_test(op, ev, v, float(s), float(t), m_values))
    return out


@dataclass(frozen=True)
class OrbitClass:
    verdict: str
    t: float
    rows: tuple[dict, ...]
    log_norms: np.ndarray
    reason: str = ""
    truncation_limited: bool = False

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "t": self.t,
            "reason": self.reason,
            "truncation_limited": self.truncation_limited,
            "alpha_rows": list(self.rows),
        }


def _log_m_table(ev, n: np.ndarray) -> np.ndarray:
    seq = ev if isinstance(ev, DefiningSequence) else ev.sequence
    return np.asarray(seq.log_m(n), dtype=float)


def classify_orbit(
    op: DiagonalOperator,
    ev,
    f,
    t: float,
    alpha_grid: Iterable[float] | None = None,
    N_max: int = 64,
) -> OrbitClass:
    """Place the orbit point ``e^{tA} f`` in the Beurling or Roumieu class.

    With ``gap_n(alpha) = ln||A^n e^{tA} f|| - n ln(alpha) - mu_n`` the point
    is a Beurling member when every grid ``alpha`` gives a gap bounded
    above, Roumieu-only when some do, and a non-member when none do. The
    gap tail is extrapolated from its increments over the upper half of
    ``n``. Before that, ``A^{N_max} e^{tA} f`` must be summable on the full
    spectrum (else ``f`` is not even in the domain) and its norm must not be
    set by the truncation index.
    """
    if not t > 0 and op.spectrum.infinite:
        raise ValueError("t must be positive for an infinite spectrum")
    if N_max < 16:
        raise ValueError("N_max must be at least 16")
    alphas = sorted((float(a) for a in (DEFAULT_ALPHA_GRID if alpha_grid is None else alpha_grid)), reverse=True)
    v = _as_vector(f, op.K)
    n = np.arange(N_max + 1, dtype=float)
    norms = derivative_log_norm(op, v, t, n)

    if op.spectrum.infinite and not v.finite_support:
        depth = -2.0 * (t * op.eigenvalues.real + v.log_abs)
        with np.errstate(invalid="ignore"):
            gain = 2.0 * N_max * op._log_mod
        tb = _summability(op, gain, depth)
        if tb.status == "diverging":
            return OrbitClass("non-member", t, (), norms, f"A^{N_max} e^(tA) f is not square-summable: {tb.reason}")
        if tb.status != "stable":
            return OrbitClass("inconclusive", t, (), norms, f"summability undecided: {tb.reason}")
        peak = int(np.argmax(_first_branch(op, gain - depth))) + 1
        if peak >= _TRUNCATION_SHARE * op.spectrum.K:
            return OrbitClass("inconclusive", t, (), norms,
                              f"largest term of A^{N_max} e^(tA) f sits at k={peak}, near K", True)

    mu = _log_m_table(ev, n)
    rows = []
    for a in alphas:
        gap = norms - n * np.log(a) - mu
        status, fit = outlook(gap, n, "above", fraction=0.5, horizon=_GAP_HORIZON)
        rows.append({
            "alpha": a,
            "gap_sup": float(gap.max()),
            "status": status,
            "end_increment": fit.end_increment,
            "log_slope": fit.log_slope,
        })
    states = [r["status"] for r in rows]
    if all(s == "bounded" for s in states):
        verdict = "Beurling-member"
    elif "bounded" in states and "unbounded" in states:
        verdict = "Roumieu-only"
    elif all(s == "unbounded" for s in states):
        verdict = "non-member"
    else:
        verdict = "inconclusive"
    return OrbitClass(verdict, t, tuple(rows), norms, "gap tails over the alpha grid")


def write_derivative_csv(path, log_norms: Iterable[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "log_norm"])
        for i, v in enumerate(log_norms):
            w.writerow([i, f"{float(v):.15g}"])


def write_orbit_csv(path, samples: Iterable[tuple[float, np.ndarray]], k_max: int | None = None) -> None:
    """Rows ``t,k,re,im`` for each ``(t, values)`` pair, ``k`` counted from 1."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "re", "im"])
        for t, vals in samples:
            vals = np.asarray(vals, dtype=complex)
            stop = vals.size if k_max is None else min(k_max, vals.size)
            for k in range(stop):
                w.writerow([f"{t:.15g}", k + 1, f"{vals[k].real:.15g}", f"{vals[k].imag:.15g}"])
