"""Command-line entry point ``carleman-gen``.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence
(series or orbit overflow), 4 at least one inconclusive verdict.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .counterexample_lab import (
    build_violation,
    conclude_not_beurling,
    control_spectrum,
    divergence_demo,
    write_trace_csv,
)
from .diagonal_semigroup import (
    DiagonalOperator,
    basket,
    classify_orbit,
    domain_sweep,
    orbit,
    write_derivative_csv,
    write_orbit_csv,
)
from .errors import ConfigError, DivergenceError, IndexExhaustedError, OrbitOverflowError, UnsupportedPresetError
from .growth_conditions import Verdict, check_binomial, check_growth, verify_inequality
from .reporting import write_csv, write_report
from .sequence_kernel import ProxyEvaluator, proxy_envelope
from .spectral_region import GenerationVerdict, boundary_sample, decide, write_boundary_csv

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INCONCLUSIVE = 4

COMMANDS = ("analyze-seq", "decide", "classify", "counterexample", "boundary")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="carleman-gen",
        description="Carleman-class generation criteria for diagonal semigroups.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration (or a previous report)")
    ap.add_argument("--mode", choices=("roumieu", "beurling"), type=str.lower, help="criterion for 'decide'")
    ap.add_argument("--b", type=float, help="slope constant for 'counterexample' and 'boundary'")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--figures", action="store_true", help="also render PNG figures")
    return ap


def _mode_name(mode: str) -> str:
    return "Roumieu" if mode == "roumieu" else "Beurling"


def cmd_analyze_sequence(cfg: RunConfig, out: Path, figures: bool) -> int:
    seq = cfg.sequence
    ev = cfg.evaluator()
    N = cfg.N
    conditions = {}
    for name in ("WGR", "GR", "SGR"):
        conditions[name] = check_growth(seq, name, N, cfg.grids["alpha"])
    for name in ("BC", "SBC"):
        conditions[name] = check_binomial(seq, name, N)

    inequalities = {}
    bc = conditions["BC"]
    lam = np.asarray(cfg.grids["lambda"])
    if bc.verdict is Verdict.HOLDS:
        params = {"h": bc.witnesses["h"], "log_l": bc.witnesses["log_l"], "n_values": [1, 2, 3, 4]}
        # BC1 evaluates M at h^4 lam; keep that inside the configured range
        lam_bc = lam[lam * params["h"] ** 4 <= lam.max()]
        if lam_bc.size:
            for which in ("BC1", "BC2"):
                inequalities[which] = verify_inequality(ev, which, params, lam_bc).to_dict()
    if conditions["SGR"].verdict is Verdict.HOLDS:
        y = np.linspace(0.0, float(np.max(ev.eval_M(lam))), 201)
        inequalities["SGR-consequence"] = {
            f"{a:g}": verify_inequality(ev, "SGR-consequence", {"alpha": a}, y).to_dict() for a in (1.0, 4.0, 16.0)
        }

    lam, m_vals, cut = _sample_M(ev, lam)
    try:
        proxy = np.asarray(ProxyEvaluator(seq).eval_M(lam))
        envelope = proxy_envelope(ev).to_dict() if ev.kind == "series" else None
    except UnsupportedPresetError:
        proxy, envelope = None, None
    rows = []
    for i, x in enumerate(lam):
        row = [float(x), float(m_vals[i])]
        if ev.kind == "series":
            row += [float(ev.eval_log_S(x)), float(ev.eval_log_P(x))]
        rows.append(row)
    header = ["lambda", "M"] + (["log_S", "log_P"] if ev.kind == "series" else [])
    write_csv(out / "m_samples.csv", header, rows)
    if figures:
        from .plotting import plot_m_samples

        plot_m_samples(lam, m_vals, proxy, out / "m_samples.png", title=str(seq.name))

    body = {
        "evaluator": ev.describe(),
        "conditions": {k: v.to_dict() for k, v in conditions.items()},
        "inequalities": inequalities,
        "proxy_envelope": envelope,
        "m_samples": {"points": int(lam.size), "series_diverges_from": cut},
    }
    write_report(out / "analyze_seq.json", "analyze-seq", cfg.to_dict(), body)
    inconclusive = any(r.verdict is Verdict.INCONCLUSIVE for r in conditions.values())
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


def _sample_M(ev, lam: np.ndarray):
    """``M`` on the grid, cut at the first point where the series has no finite value."""
    try:
        return lam, np.asarray(ev.eval_M(lam), dtype=float), None
    except (DivergenceError, IndexExhaustedError):
        pass
    vals = []
    for x in lam:
        try:
            vals.append(float(ev.eval_M(x)))
        except (DivergenceError, IndexExhaustedError):
            return lam[: len(vals)], np.asarray(vals), float(x)
    return lam, np.asarray(vals), None


def cmd_decide(cfg: RunConfig, mode: str, out: Path, figures: bool) -> int:
    ev = cfg.evaluator()
    spectrum = cfg.spectrum()
    verdict = decide(_mode_name(mode), spectrum, ev, cfg.grids["b"])
    write_csv(
        out / f"a_of_b_{mode}.csv",
        ["b", "a_star", "trend", "attained_k"],
        [[r.b, r.value, r.trend, r.attained_k] for r in verdict.a_of_b],
    )
    if figures:
        from .plotting import plot_a_of_b, plot_spectrum_region

        rows = [r.to_dict() for r in verdict.a_of_b]
        plot_a_of_b(rows, out / f"a_of_b_{mode}.png", title=f"{verdict.mode.value}: {verdict.verdict.value}")
        pick = verdict.witness_b or cfg.grids["b"][0]
        a = next((r.value for r in verdict.a_of_b if r.b == pick), 0.0)
        im_max = float(np.max(np.abs(spectrum.points[:2000].imag)))
        plot_spectrum_region(spectrum.points, boundary_sample(a, pick, ev, im_max, 401),
                             out / f"spectrum_{mode}.png", title=spectrum.label)
    write_report(out / f"decide_{mode}.json", "decide", cfg.to_dict(), {"verdict": verdict.to_dict()})
    return EXIT_INCONCLUSIVE if verdict.verdict is GenerationVerdict.INCONCLUSIVE else EXIT_OK


def cmd_classify(cfg: RunConfig, out: Path, figures: bool) -> int:
    ev = cfg.evaluator()
    spectrum = cfg.spectrum()
    op = DiagonalOperator(spectrum)
    beurling = decide("Beurling", spectrum, ev, cfg.grids["b"])
    vectors = basket(op.index, cfg.basket)
    s_grid, t_grid = cfg.grids["s"], cfg.grids["t"]

    traces = out / "traces"
    traces.mkdir(exist_ok=True)
    classes = []
    norms_for_plot = {}
    for v in vectors:
        for t in t_grid:
            c = classify_orbit(op, ev, v, t, cfg.grids["orbit_alpha"], cfg.N_max)
            classes.append({"vector": v.label, **c.to_dict()})
            tag = f"{_slug(v.label)}_t{t:g}"
            write_derivative_csv(traces / f"derivative_norms_{tag}.csv", c.log_norms)
            norms_for_plot[f"{v.label}, t={t:g}"] = c.log_norms
    domain = domain_sweep(op, ev, vectors, s_grid, t_grid)
    domain_rows = []
    idx = 0
    for s in s_grid:
        for t in t_grid:
            for v in vectors:
                domain_rows.append({"vector": v.label, **domain[idx].to_dict()})
                idx += 1

    k_show = min(op.K, 100)
    samples = [(t, orbit(op, vectors[0], t)) for t in t_grid]
    write_orbit_csv(traces / f"orbit_{_slug(vectors[0].label)}.csv", samples, k_max=k_show)

    generates = beurling.verdict is GenerationVerdict.GENERATES
    matrix = []
    for v in vectors:
        member = all(c["verdict"] == "Beurling-member" for c in classes if c["vector"] == v.label)
        in_dom = {}
        for t in t_grid:
            in_dom[f"{t:g}"] = all(r["verdict"] == "in-domain" for r in domain_rows
                                   if r["vector"] == v.label and r["t"] == t)
        matrix.append({
            "vector": v.label,
            "beurling_member_all_t": member,
            "in_domain_all_s": in_dom,
            "orbit_verdicts": [c["verdict"] for c in classes if c["vector"] == v.label],
        })
    all_members = all(m["beurling_member_all_t"] for m in matrix)
    all_in = all(all(m["in_domain_all_s"].values()) for m in matrix)
    if generates:
        consistent = all_members and all_in
    else:
        consistent = (not all_members) and (not all_in)
    if figures:
        from .plotting import plot_derivative_norms

        plot_derivative_norms(norms_for_plot, out / "derivative_norms.png", title=spectrum.label)

    body = {
        "decide_beurling": beurling.verdict.value,
        "orbit_classes": classes,
        "domain_tests": domain_rows,
        "consistency": {"matrix": matrix, "consistent": consistent},
    }
    write_report(out / "classify.json", "classify", cfg.to_dict(), body)
    unsettled = any(c["verdict"] == "inconclusive" for c in classes)
    unsettled = unsettled or any(r["verdict"] == "inconclusive" for r in domain_rows)
    unsettled = unsettled or beurling.verdict is GenerationVerdict.INCONCLUSIVE
    return EXIT_INCONCLUSIVE if unsettled else EXIT_OK


def cmd_counterexample(cfg: RunConfig, b: float | None, out: Path, figures: bool) -> int:
    ev = cfg.evaluator()
    ce = cfg.counterexample
    b = ce["b"] if b is None else b
    if not b > 0:
        raise ConfigError("must be positive", "--b")
    cons = build_violation(ev, b, ce["mode"], ce["K"], ce["r0"])
    demo = divergence_demo(ev, cons, ce["threshold"])
    control = divergence_demo(ev, control_spectrum(ce["K"]), ce["threshold"], t=cons.t)
    write_trace_csv(out / "trace.csv", demo)
    write_trace_csv(out / "control_trace.csv", control)
    spectrum = cons.as_spectrum()
    beurling = decide("Beurling", spectrum, ev, cfg.grids["b"])
    roumieu = decide("Roumieu", spectrum, ev, cfg.grids["b"])
    conclusion = conclude_not_beurling(cons, demo) if demo.verdict == "diverging" else None
    if figures:
        from .plotting import plot_partial_sums

        plot_partial_sums(
            {"construction": (demo.k, demo.log_partial_sums), "control": (control.k, control.log_partial_sums)},
            ce["threshold"], out / "partial_sums.png", title=f"{cons.mode}, b={b:g}",
        )
    body = {
        "construction": {**cons.to_dict(), "invariants": cons.check_invariants(ev)},
        "demo": demo.to_dict(),
        "control": control.to_dict(),
        "decide": {"Beurling": beurling.verdict.value, "Roumieu": roumieu.verdict.value,
                   "roumieu_witness_b": roumieu.witness_b},
        "conclusion": conclusion,
    }
    write_report(out / "counterexample.json", "counterexample", cfg.to_dict(), body)
    return EXIT_OK if conclusion is not None else EXIT_INCONCLUSIVE


def cmd_boundary(cfg: RunConfig, b: float | None, out: Path, figures: bool) -> int:
    ev = cfg.evaluator()
    bd = cfg.boundary
    b = bd["b"] if b is None else b
    if b < 0:
        raise ConfigError("must be non-negative", "--b")
    pairs = boundary_sample(bd["a"], b, ev, bd["im_range"], bd["n_points"])
    write_boundary_csv(out / "boundary.csv", pairs)
    if figures:
        from .plotting import plot_boundary

        plot_boundary(pairs, out / "boundary.png", title=f"Re = {bd['a']:g} - {b:g} M(|Im|)")
    write_report(out / "boundary.json", "boundary", cfg.to_dict(),
                 {"a": bd["a"], "b": b, "points": len(pairs), "evaluator": ev.describe()})
    return EXIT_OK


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in label).strip("_")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "analyze-seq":
            return cmd_analyze_sequence(cfg, out, args.figures)
        if args.command == "decide":
            return cmd_decide(cfg, args.mode or cfg.mode, out, args.figures)
        if args.command == "classify":
            return cmd_classify(cfg, out, args.figures)
        if args.command == "counterexample":
            return cmd_counterexample(cfg, args.b, out, args.figures)
        return cmd_boundary(cfg, args.b, out, args.figures)
    except ConfigError as exc:
        print(f"carleman-gen: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, IndexExhaustedError, OrbitOverflowError) as exc:
        print(f"carleman-gen: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
