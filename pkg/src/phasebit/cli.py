"""Command-line entry point: ``phasebit {sweep,recover,theory,cdp,hdm2d}``."""
from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import cdp, experiments, theory
from .metrics import AnnulusParams, dist, hamming
from .sensing import corrupt, gaussian_ensemble, quantize
from .solvers import check_ratio_condition
from .spectral import norm_from_frequency, phi

EXIT_CHECK_FAILED = 2


def _tau_rule(text: str) -> str:
    if text == "sqrt_ab" or text.startswith("fixed:"):
        return text
    return f"fixed:{float(text)!r}"


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _add_problem_args(p):
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--k", type=int, default=None, help="true sparsity")
    p.add_argument("--solver-k", type=int, default=None, help="sparsity used by the solver")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--tau", type=_tau_rule, default="fixed:1.0",
                   help="a number, fixed:<v>, or sqrt_ab")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=experiments.SOLVERS, default="gd1bpr")
    p.add_argument("--iters", type=int, default=150)
    p.add_argument("--signal", choices=experiments.SIGNALS, default=None)


def _spec(args, m_list, trials) -> experiments.SweepSpec:
    return experiments.SweepSpec(
        n=args.n, m_list=m_list, trials=trials, seed=args.seed, solver=args.solver,
        iters=args.iters, k=args.k, solver_k=args.solver_k, alpha=args.alpha, beta=args.beta,
        tau_rule=args.tau, signal=args.signal, timing=getattr(args, "timing", False))


def cmd_sweep(args) -> int:
    spec = _spec(args, _int_list(args.m_list), args.trials)
    reports = experiments.run_sweep(spec)
    text = experiments.reports_to_csv(reports, args.out)
    if args.out is None:
        sys.stdout.write(text)
    points = experiments.summarize(reports)
    for p in points:
        print(f"# m={p.m} median_dist={p.median_dist:.6g} mean_dist={p.mean_dist:.6g} "
              f"init_failures={p.failures}", file=sys.stderr)
    if len(points) >= 2:
        slope, _ = experiments.fit_loglog_slope([(p.m, p.median_dist) for p in points])
        print(f"# loglog slope of median dist: {slope:.4f}", file=sys.stderr)
    return 0


def cmd_recover(args) -> int:
    spec = _spec(args, [args.m], 1)
    r = experiments.run_trial(spec, args.m, 0)
    print(f"m={r.m} seed={r.seed} dist={r.dist:.6g} dist_d={r.dist_d:.6g} "
          f"dist_n={r.dist_n:.6g} iters_run={r.iters_run} init_failed={r.init_failed}")
    return 0


def _check_separation(args) -> bool:
    u, v = np.array([2.0, 0.0]), np.array([1.0, 0.0])
    est = theory.mc_separation(u, v, 1.0, args.samples, args.seed)
    exact = theory.parallel_separation_exact(2.0, 1.0, 1.0)
    print(f"separation p_hat={est.p_hat:.6f} half_width={est.half_width:.2e} exact={exact:.6f}")
    return abs(est.p_hat - exact) <= 3 * est.half_width


def _check_double_separation(args) -> bool:
    rng = np.random.default_rng(args.seed)
    ok = True
    for i in range(args.pairs):
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        d = rng.standard_normal(5)
        v = u + 0.3 * rng.random() * d / np.linalg.norm(d)
        est = theory.mc_double_separation(u, v, 1.0, args.samples, args.seed + i)
        bound = theory.double_separation_bound(u, v, 1.0)
        ok &= est.p_hat <= bound + est.half_width
    print(f"double separation bound held for {args.pairs} pairs: {ok}")
    return ok


def _check_contraction(args) -> bool:
    ok = True
    for a, b, t in ((1.0, 2.0, math.sqrt(2.0)), (1.0, 1.5, math.sqrt(1.5)), (0.5, 1.0, 0.8)):
        ann = AnnulusParams(a, b)
        cf, gr = theory.sup_F_closed_form(ann, t), theory.sup_F_grid(ann, t)
        print(f"sup F alpha={a} beta={b} tau={t:.6g}: closed={cf:.8f} grid={gr:.8f}")
        ok &= abs(cf - gr) <= 1e-4
    return ok


def _check_ratio(args) -> bool:
    cases = ((1.05, True), (3.5, False), (10.0, False))
    ok = True
    for beta, want in cases:
        got = check_ratio_condition(AnnulusParams(1.0, beta), math.sqrt(beta))
        print(f"ratio condition beta={beta}: {got}")
        ok &= got == want
    return ok


def _check_norm(args) -> bool:
    worst = max(abs(norm_from_frequency(2 * phi(-1.0 / lam), 1.0) - lam)
                for lam in (0.5, 1.0, 1.5, 2.0))
    print(f"norm estimator max error {worst:.3e}")
    return worst <= 1e-8


def _check_tessellation(args) -> bool:
    ann = AnnulusParams(1.0, math.sqrt(2.0))
    meds = []
    for m in (250, 500, 1000, 2000, 4000):
        diams = [theory.tessellation_audit_2d(m, math.sqrt(2.0), ann, tuple(args.grid), seed=s)[0]
                 for s in range(args.seeds)]
        meds.append(float(np.median(diams)))
        print(f"tessellation m={m} median max diameter={meds[-1]:.5f}")
    return all(b < a for a, b in zip(meds, meds[1:]))


CHECKS = {
    "separation": _check_separation,
    "double-separation": _check_double_separation,
    "contraction": _check_contraction,
    "ratio": _check_ratio,
    "norm": _check_norm,
    "tessellation": _check_tessellation,
}


def cmd_theory(args) -> int:
    names = list(CHECKS) if args.check == "all" else [args.check]
    failed = [name for name in names if not CHECKS[name](args)]
    for name in names:
        print(f"{name}: {'FAIL' if name in failed else 'PASS'}")
    return EXIT_CHECK_FAILED if failed else 0


def cmd_cdp(args) -> int:
    img = (cdp.read_pnm(args.image) if args.image
           else cdp.synthetic_image(args.synthetic, args.seed))
    rec, reports = cdp.recover_image(img, args.patterns, args.seed, args.power_iters, args.gd_iters)
    if args.out:
        cdp.write_pnm(args.out, rec)
    rows = [(r.band, args.patterns, f"{r.tau:.6g}", repr(r.rel_error), f"{r.psnr:.4f}") for r in reports]
    header = ("band", "patterns", "tau", "rel_error", "psnr_db")
    if args.report:
        with open(args.report, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    for r in reports:
        print(f"band {r.band}: rel_error={r.rel_error:.5g} psnr={r.psnr:.2f} dB")
    return 0


def cmd_hdm2d(args) -> int:
    ann = AnnulusParams(args.alpha, args.beta)
    tau = experiments.parse_tau_rule(args.tau, ann)
    x = experiments.sample_signal("annulus" if ann.alpha < ann.beta else "sphere", 2, None, ann,
                                  experiments.hash64(args.seed, 1))
    A = gaussian_ensemble(args.m, 2, experiments.hash64(args.seed, 2)).rows
    y = quantize(A, x, tau)
    if args.zeta > 0:
        y = corrupt(y, args.zeta, experiments.hash64(args.seed, 3))
    x_hat = theory.hdm_oracle_2d(A, y, tau, ann, args.radial, args.angular)
    print(f"x={x.tolist()} x_hat={x_hat.tolist()} dist={dist(x_hat, x):.6g} "
          f"hamming={hamming(quantize(A, x_hat, tau), y)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasebit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a seeded (m, trial) grid and write CSV")
    _add_problem_args(p)
    p.add_argument("--m-list", required=True, help="comma-separated ascending m values")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    p.add_argument("--timing", action="store_true", help="record wall_ms (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recover", help="run one instance and print its errors")
    _add_problem_args(p)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("theory", help="run a named oracle check (exit 2 on failure)")
    p.add_argument("--check", choices=[*CHECKS, "all"], default="all")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--pairs", type=int, default=50)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--grid", type=int, nargs=2, default=[400, 2000], metavar=("RADIAL", "ANGULAR"))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("cdp", help="1-bit coded-diffraction recovery of a PGM/PPM image")
    p.add_argument("--image", default=None, help="input P5/P6 file (synthetic image if omitted)")
    p.add_argument("--synthetic", type=int, default=64, help="side of the synthetic image")
    p.add_argument("--patterns", type=int, default=64)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None, help="per-band CSV report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--power-iters", type=int, default=cdp.DEFAULT_POWER_ITERS)
    p.add_argument("--gd-iters", type=int, default=cdp.DEFAULT_GD_ITERS)
    p.set_defaults(func=cmd_cdp)

    p = sub.add_parser("hdm2d", help="brute-force Hamming decoder demo in the plane")
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=math.sqrt(2.0))
    p.add_argument("--tau", type=_tau_rule, default="sqrt_ab")
    p.add_argument("--zeta", type=float, default=0.0, help="fraction of flipped bits")
    p.add_argument("--radial", type=int, default=200)
    p.add_argument("--angular", type=int, default=800)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_hdm2d)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"phasebit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
