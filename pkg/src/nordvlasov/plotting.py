"""Report figures, rendered off-screen to PNG files."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_diagnostics(records, path):
    t = np.array([r.t for r in records])
    e = np.array([r.total_energy for r in records])
    m = np.array([r.rest_mass for r in records])
    lam = np.array([r.Lambda for r in records])
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for ax, y, title in ((axes[0], e, "energy"), (axes[1], m, "rest mass")):
        ref = y[0] if y[0] != 0 else 1.0
        ax.plot(t, (y - y[0]) / abs(ref))
        ax.set_title(f"relative {title} drift")
        ax.set_xlabel("t")
    axes[2].plot(t, lam, label="Lambda")
    axes[2].plot(t, [r.P_sup for r in records], "--", label="P")
    axes[2].plot(t, [r.Q_sup for r in records], ":", label="Q")
    axes[2].set_title("continuation monitor")
    axes[2].set_xlabel("t")
    axes[2].legend()
    return _save(fig, path)


def plot_snapshot(state, path):
    lat = state.f.lattice
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    im = axes[0].imshow(state.f.f.T, origin="lower", aspect="auto",
                        extent=(lat.x_min, lat.x_max, lat.p_min, lat.p_max))
    fig.colorbar(im, ax=axes[0])
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("p")
    axes[0].set_title(f"f at t = {state.t:.4g}")
    axes[1].plot(lat.x, state.field.phi)
    axes[1].set_xlabel("x")
    axes[1].set_title("phi")
    return _save(fig, path)


def plot_picard(report, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    k = np.arange(1, report.iterations + 1)
    for vals, label in ((report.delta_f, "f"), (report.delta_phi, "phi"), (report.delta_dphi, "D phi")):
        ax.semilogy(k, np.maximum(vals, 1e-300), "o-", label=label)
    ax.set_xlabel("iterate")
    ax.set_title("sup difference of successive iterates")
    ax.legend()
    return _save(fig, path)


def plot_blowup(report, path):
    a = report.run.trajectory.arrays()
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
    axes[0].plot(a["t"], a["phi"])
    axes[0].set_xlabel("t")
    axes[0].set_title("phi")
    axes[1].plot(a["t"], np.exp(-(a["phi"] - report.phi0) / 2), label="exp(-(phi - phi0)/2)")
    if np.isfinite(report.t_bound) and report.lam > 0:
        tt = np.linspace(0, report.t_bound, 50)
        axes[1].plot(tt, 1 - 0.5 * np.sqrt(report.lam) * np.exp(report.phi0 / 2) * tt, "--", label="sub-solution")
    axes[1].set_xlabel("t")
    axes[1].legend()
    return _save(fig, path)
