"""Command-line entry point and scenario orchestration.

Exit codes: 0 success, 1 configuration error, 2 runtime abort,
3 property violation.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import blowup_3d, kernels_3d, solver_1d
from .config import BlowupSettings, KernelSettings, SimConfig, load_config, validate
from .errors import ConfigError, NordVlasovError, PropertyViolation, RuntimeAbort
from .io import write_csv, write_diagnostics, write_snapshot

OUTPUT_ENV = "NORDVLASOV_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_PROPERTY = 0, 1, 2, 3

# kernel suite thresholds
IDENTITY_RTOL = 1e-13
SPHERE_TOL = 1e-8
BOUND_CONSTANT = 4.0


class Outcome:
    def __init__(self, status=EXIT_OK, message="", artifacts=None):
        self.status = status
        self.message = message
        self.artifacts = artifacts if artifacts is not None else []


def _figures():
    # imported lazily so library use never pulls in matplotlib
    from . import plotting
    return plotting


def check_run_properties(records, lattice):
    """Lambda nondecreasing and mu <= 2 |f| asinh(P) + 2 dp |f| at every record."""
    problems = []
    lam = [r.Lambda for r in records]
    for k in range(1, len(lam)):
        if lam[k] < lam[k - 1]:
            problems.append(f"Lambda decreased at step {records[k].step}: {lam[k - 1]!r} -> {lam[k]!r}")
            break
    for r in records:
        if r.mu_bound_slack < -2.0 * lattice.dp * r.f_sup:
            problems.append(f"mu bound violated at step {r.step} (slack {r.mu_bound_slack!r})")
            break
    return problems


def _run_solve1d(cfg, out):
    arts = []
    try:
        result = solver_1d.run(cfg)
    except RuntimeAbort as exc:
        if exc.records:
            arts.append(write_diagnostics(exc.records, out / "diagnostics.csv"))
        if exc.last_state is not None:
            arts.append(write_snapshot(exc.last_state, out / f"snapshot_{exc.last_state.n:06d}.csv"))
        last = arts[-1] if arts else "none"
        return Outcome(EXIT_ABORT, f"{exc} (last artifact written: {last})", arts)
    arts.append(write_diagnostics(result.records, out / "diagnostics.csv"))
    for s in result.snapshots:
        arts.append(write_snapshot(s, out / f"snapshot_{s.n:06d}.csv"))
    arts.append(write_snapshot(result.final, out / "final_state.csv"))
    plt = _figures()
    arts.append(plt.plot_diagnostics(result.records, out / "diagnostics.png"))
    arts.append(plt.plot_snapshot(result.final, out / "final_state.png"))
    recs = result.records
    e0, m0 = recs[0].total_energy, recs[0].rest_mass

    def drift(vals, ref):
        return max(abs(v - ref) for v in vals) / abs(ref) if ref else max(abs(v) for v in vals)

    problems = check_run_properties(recs, cfg.lattice())
    lines = [
        f"steps: {len(recs) - 1}, t_final: {recs[-1].t!r}",
        f"max relative energy drift: {drift([r.total_energy for r in recs], e0):.6e}",
        f"max relative rest-mass drift: {drift([r.rest_mass for r in recs], m0):.6e}",
        f"Lambda(t_final): {recs[-1].Lambda!r} (P = {recs[-1].P_sup!r}, Q = {recs[-1].Q_sup!r})",
        f"max local energy residual: {max(r.energy_residual_sup for r in recs):.6e}",
        f"min mu-bound slack: {min(r.mu_bound_slack for r in recs):.6e}",
        "property checks: " + ("passed" if not problems else "; ".join(problems)),
    ]
    arts.append(_write_text(out / "report.txt", "\n".join(lines) + "\n"))
    if problems:
        return Outcome(EXIT_PROPERTY, "; ".join(problems), arts)
    return Outcome(EXIT_OK, lines[1] + "; " + lines[2], arts)


def _run_picard1d(cfg, out):
    rep = solver_1d.picard_solve(cfg.lattice(), cfg.density(), cfg.wave_data(), cfg.t_final,
                                 cfg.picard.tol, cfg.picard.max_iter, cfg.sign, cfg.solver)
    ratios = [None] + rep.ratios()
    rows = [{"iterate": k + 1, "delta_f": rep.delta_f[k], "delta_phi": rep.delta_phi[k],
             "delta_dphi": rep.delta_dphi[k], "delta_total": rep.deltas[k],
             "ratio": ratios[k] if k < len(ratios) else None} for k in range(rep.iterations)]
    arts = [write_csv(out / "picard.csv", ["iterate", "delta_f", "delta_phi", "delta_dphi", "delta_total", "ratio"],
                      rows)]
    arts.append(_figures().plot_picard(rep, out / "picard.png"))
    state = rep.field_levels[-1]
    status = "converged" if rep.converged else ("diverged" if rep.diverged else "max_iter reached")
    text = f"picard iterates: {rep.iterations}, status: {status}, last delta: {rep.deltas[-1]:.6e}\n"
    arts.append(_write_text(out / "report.txt", text))
    if rep.diverged:
        return Outcome(EXIT_ABORT, f"Picard iteration diverged (last artifact written: {arts[-1]})", arts)
    return Outcome(EXIT_OK, text.strip(), arts)


def _run_blowup3d(cfg, out):
    b = cfg.blowup
    profile = cfg.profile()
    rep = blowup_3d.verify_blowup_bound(b.R, profile, b.phi0, b.dphi0, cfg.controls(), strict=False)
    lo, hi = rep.run.bracket if rep.run.bracket else (None, None)
    row = {"R": b.R, "mu0": rep.mu0, "phi0": b.phi0, "dphi0": b.dphi0,
           "hyp_radius": rep.hyp_radius, "hyp_speed": rep.hyp_speed, "lambda": rep.lam,
           "t_bound": rep.t_bound, "status": rep.run.status, "t_star": rep.run.t_star,
           "bracket_lo": lo, "bracket_hi": hi, "steps": rep.run.steps,
           "step_violations": rep.checks.violations,
           "bound_holds": "" if rep.bound_holds is None else rep.bound_holds}
    arts = [write_csv(out / "blowup.csv", list(row), [row])]
    a = rep.run.trajectory.arrays()
    cols = ["t", "phi", "dphi", "mu", "dmu"]
    arts.append(write_csv(out / "trajectory.csv", cols, zip(*(a[c] for c in cols))))
    arts.append(_figures().plot_blowup(rep, out / "blowup.png"))
    arts.append(_write_text(out / "report.txt", rep.summary() + "\n"))
    if rep.bound_holds is False or not rep.checks.passed:
        return Outcome(EXIT_PROPERTY, rep.summary(), arts)
    return Outcome(EXIT_OK, rep.summary(), arts)


def kernel_verdicts(res):
    """(name, value, threshold, passed) for every checked kernel property."""
    rows = [
        ("ineq1_violations", res["ineq1_violations"], 0, res["ineq1_violations"] == 0),
        ("ineq2_violations", res["ineq2_violations"], 0, res["ineq2_violations"] == 0),
    ]
    for k in ("ident_a_phi_t", "ident_a_phi_x", "ident_b_phi_x", "ident_c_phi_x"):
        rows.append((k, res[k], IDENTITY_RTOL, res[k] <= IDENTITY_RTOL))
    for k in ("bound_a_phi_t", "bound_b_phi_t", "bound_c_phi_t", "bound_a_phi_x", "bound_b_phi_x"):
        rows.append((k, res[k], BOUND_CONSTANT, res[k] <= BOUND_CONSTANT))
    for k in sorted(k for k in res if k.startswith("sphere_avg_")):
        rows.append((k, res[k], SPHERE_TOL, abs(res[k]) <= SPHERE_TOL))
    return rows


def _run_kernelcheck(cfg, out):
    k = cfg.kernels
    res = kernels_3d.property_sweep(cfg.seed, k.samples, k.p_max, k.chunk, k.sphere_order)
    rows = kernel_verdicts(res)
    arts = [write_csv(out / "kernels.csv", ["quantity", "value", "threshold", "passed"],
                      [(n, float(v) if isinstance(v, float) else v, t, p) for n, v, t, p in rows])]
    failed = [n for n, _, _, p in rows if not p]
    text = f"samples: {res['samples']}, seed: {cfg.seed}\n" + "".join(
        f"{n}: {v!r} (threshold {t}) {'ok' if p else 'FAILED'}\n" for n, v, t, p in rows)
    arts.append(_write_text(out / "report.txt", text))
    if failed:
        return Outcome(EXIT_PROPERTY, "kernel properties failed: " + ", ".join(failed), arts)
    return Outcome(EXIT_OK, f"all {len(rows)} kernel properties hold on {res['samples']} samples", arts)


_DISPATCH = {"solve1d": _run_solve1d, "picard1d": _run_picard1d,
             "blowup3d": _run_blowup3d, "kernelcheck": _run_kernelcheck}


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def resolve_output_dir(cfg):
    override = os.environ.get(OUTPUT_ENV)
    return Path(override) if override else Path(cfg.output_dir or "output")


def run_scenario(cfg):
    """Run one configured scenario, writing artifacts and a manifest.

    Returns an Outcome whose ``status`` is the process exit code.
    """
    validate(cfg)
    out = resolve_output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        outcome = _DISPATCH[cfg.mode](cfg, out)
    except ConfigError as exc:
        outcome = Outcome(EXIT_CONFIG, str(exc))
    except PropertyViolation as exc:
        outcome = Outcome(EXIT_PROPERTY, str(exc))
    except (RuntimeAbort, NordVlasovError, FloatingPointError) as exc:
        outcome = Outcome(EXIT_ABORT, str(exc))
    manifest = {
        "version": __version__,
        "mode": cfg.mode,
        "config": cfg.to_dict(),
        "wall_time_s": time.perf_counter() - start,
        "exit_status": outcome.status,
        "message": outcome.message,
        "artifacts": [str(Path(a).name) for a in outcome.artifacts],
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return outcome


def build_parser():
    p = argparse.ArgumentParser(prog="nordvlasov", description="Nordstrom-Vlasov simulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a TOML config file")
    r.add_argument("config")
    k = sub.add_parser("check-kernels", help="randomized property suite for the 3D kernels")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--samples", type=int, default=KernelSettings.samples)
    k.add_argument("--p-max", type=float, default=KernelSettings.p_max)
    k.add_argument("--output-dir", default="kernelcheck")
    b = sub.add_parser("verify-blowup", help="integrate a homogeneous blow-up instance and check the bound")
    b.add_argument("--mu0", type=float, required=True)
    b.add_argument("--phidot0", type=float, required=True)
    b.add_argument("--R", type=float, required=True)
    b.add_argument("--phi0", type=float, default=0.0)
    b.add_argument("--family", default="bump")
    b.add_argument("--radius", type=float, default=1.0)
    b.add_argument("--dt", type=float, default=BlowupSettings.dt)
    b.add_argument("--output-dir", default="blowup")
    return p


def config_for(args):
    if args.command == "run":
        try:
            return load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if args.command == "check-kernels":
        return SimConfig(mode="kernelcheck", seed=args.seed, output_dir=args.output_dir,
                         kernels=replace(KernelSettings(), samples=args.samples, p_max=args.p_max))
    return SimConfig(mode="blowup3d", output_dir=args.output_dir,
                     blowup=replace(BlowupSettings(), family=args.family, radius=args.radius, mu0=args.mu0,
                                    phi0=args.phi0, dphi0=args.phidot0, R=args.R, dt=args.dt))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_for(args)
        outcome = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stream = sys.stdout if outcome.status == EXIT_OK else sys.stderr
    print(outcome.message, file=stream)
    if outcome.artifacts:
        print(f"artifacts in {resolve_output_dir(cfg)}", file=stream)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
