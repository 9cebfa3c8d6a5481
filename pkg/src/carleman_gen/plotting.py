"""PNG figures next to the CSV output (only with ``--figures``)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_m_samples",
    "plot_a_of_b",
    "plot_spectrum_region",
    "plot_derivative_norms",
    "plot_partial_sums",
    "plot_boundary",
]

_META = {"Software": None}


def _save(fig, path) -> Path:
    p = Path(path)
    fig.tight_layout()
    fig.savefig(p, dpi=120, metadata=_META)
    plt.close(fig)
    return p


def plot_m_samples(lam, m, proxy=None, path="m_samples.png", title="") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(lam, m, label="M(lam)")
    if proxy is not None:
        ax.plot(lam, proxy, "--", label="proxy")
    ax.set_xscale("log")
    ax.set_xlabel("lam")
    ax.set_ylabel("M")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_a_of_b(rows, path="a_of_b.png", title="") -> Path:
    """``rows`` are dicts with ``b``, ``value`` and ``trend``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    b = np.array([r["b"] for r in rows])
    v = np.array([r["value"] for r in rows])
    for trend, marker in (("stable", "o"), ("diverging", "x"), ("unstable", "s")):
        sel = np.array([r["trend"] == trend for r in rows])
        if sel.any():
            ax.plot(b[sel], v[sel], marker, label=trend)
    ax.set_xscale("log")
    ax.set_xlabel("b")
    ax.set_ylabel("enumerated a*(b)")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_spectrum_region(points, boundary, path="spectrum.png", title="", max_points=2000) -> Path:
    """Spectrum (first ``max_points``) against one boundary curve ``[(im, re), ...]``."""
    pts = np.asarray(points, dtype=complex)[:max_points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(pts.imag, pts.real, ".", ms=2, label="spectrum")
    if boundary:
        im, re = zip(*boundary)
        ax.plot(im, re, "-", label="boundary")
    ax.set_xlabel("Im")
    ax.set_ylabel("Re")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_derivative_norms(series: dict, path="derivative_norms.png", title="") -> Path:
    """``series`` maps a label to ``ln||A^n e^{tA} f||`` for ``n = 0..N``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, vals in series.items():
        ax.plot(np.arange(len(vals)), vals, label=label)
    ax.set_xlabel("n")
    ax.set_ylabel("log norm")
    ax.set_title(title)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_partial_sums(traces: dict, threshold: float, path="partial_sums.png", title="") -> Path:
    """``traces`` maps a label to ``(k, log_partial_sum)``."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (k, s) in traces.items():
        ax.plot(k, s, label=label)
    ax.axhline(np.log(threshold), color="grey", ls=":", label="threshold")
    ax.set_xscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel("log partial sum")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_boundary(pairs, path="boundary.png", title="") -> Path:
    im, re = zip(*pairs)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(im, re)
    ax.fill_between(im, re, min(re) - 1.0, alpha=0.2)
    ax.set_xlabel("Im")
    ax.set_ylabel("Re")
    ax.set_title(title)
    return _save(fig, path)
