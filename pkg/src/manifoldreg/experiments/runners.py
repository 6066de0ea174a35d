"""Experiment runners.  Each is a pure function of its :class:`ExperimentConfig`."""

import os

import numpy as np

from ..frames import pca_spectrum
from ..manifold_gen import ManifoldSpec, NoiseSpec, add_noise, bend_dataset, sample_uniform
from ..moments import assemble_normal_system, quadrature_moments
from ..regression import LocalLinearRegression, diagnose_degeneracy, solve_from_data, solve_normal_system
from ..theory import (
    block_error_order,
    error_order,
    predict_codim2_noisy_wy2,
    predict_curve2d,
    predict_curve2d_noisy,
    predict_curve_nd_all,
    predict_hypersurface,
)
from .config import ExperimentConfig
from .data import (
    load_dataset,
    random_nonlinear_quantities,
    random_unit_vector,
    resolve_target,
    tangent_quadratic,
)
from .results import ExperimentResult, Table, make_metadata


def loglog_slope(x, y):
    """Least-squares slope of ``log|y|`` against ``log x``; nan if any ``y`` is zero."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(y == 0) or x.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _quad_solve(spec, g, L):
    return solve_normal_system(assemble_normal_system(quadrature_moments(spec, g, L)))


def _result(config, columns, rows, **kw):
    return ExperimentResult(config.name, columns, rows, metadata=make_metadata(config), **kw)


def _plot(result, out_dir, stem, fn, *args, **kw):
    path = os.path.join(out_dir, f"{result.name}_{stem}.svg")
    fn(path, *args, **kw)
    result.plots.append(path)


# ---------------------------------------------------------------------------
# planar curve sweeps
# ---------------------------------------------------------------------------

def run_sweep_curvature(config: ExperimentConfig):
    """Monte Carlo and quadrature fits on ``(x, kappa x^2)`` across a curvature grid.

    The same sample seed is reused at every curvature, so neighbouring grid
    points differ only through ``kappa``.
    """
    p = config.parameters
    g = resolve_target(p["g"], ("x", "y"), config.seed)
    L, N = float(p["L"]), int(p["N"])
    cols = ["kappa", "mc_w_x", "mc_w_y", "mc_b", "quad_w_x", "quad_w_y", "quad_b",
            "theory_w_x", "theory_w_y", "theory_b", "abs_err_w_y", "rel_err_w_y"]
    rows = []
    for kappa in sorted(float(k) for k in p["kappas"]):
        spec = ManifoldSpec.curve2d(kappa)
        s = sample_uniform(spec, L, N, config.seed)
        mc = solve_from_data(s, g(s.points))
        q = _quad_solve(spec, g, L)
        th = predict_curve2d(g, kappa).theta
        err = abs(q.w[1] - th[1])
        rows.append([kappa, *mc.w, mc.b, *q.w, q.b, *th, err, err / abs(th[1])])
    return _result(config, cols, rows)


def plot_sweep_curvature(result, out_dir):
    from .plotting import line_plot

    t = result.table
    _plot(result, out_dir, "coefficients", line_plot, t.column("kappa"),
          {"w_x": t.column("mc_w_x"), "w_y": t.column("mc_w_y"), "b": t.column("mc_b"),
           "w_y theory": t.column("theory_w_y")},
          xlabel="kappa", ylabel="coefficient", logx=True)


def run_sweep_noise(config: ExperimentConfig):
    """Noisy Monte Carlo fits on ``(x, kappa x^2 + sigma eta)`` across a noise grid.

    ``g`` is evaluated at the noisy points.  Each grid point averages
    ``n_seeds`` independent samples (seeds ``seed, seed + 1, ...``).
    """
    p = config.parameters
    g = resolve_target(p["g"], ("x", "y"), config.seed)
    kappa, L, N, n_seeds = float(p["kappa"]), float(p["L"]), int(p["N"]), int(p["n_seeds"])
    spec = ManifoldSpec.curve2d(kappa)
    gx, b0 = g.partial_at_origin((1, 0)), g.value_at_origin()
    cols = ["sigma", "n_seeds", "mean_w_x", "mean_w_y", "mean_b", "std_w_y",
            "theory_w_y", "abs_err_w_y", "abs_err_w_x", "abs_err_b"]
    rows = []
    for sigma in sorted(float(s) for s in p["sigmas"]):
        fits = []
        for i in range(n_seeds):
            s = sample_uniform(spec, L, N, config.seed + i)
            s = add_noise(s, NoiseSpec((sigma,), config.seed + i))
            fits.append(solve_from_data(s, g(s.points)).theta)
        fits = np.array(fits)
        m = fits.mean(axis=0)
        sd = fits[:, 1].std(ddof=1) if n_seeds > 1 else float("nan")
        th = predict_curve2d_noisy(g, kappa, L, sigma)
        rows.append([sigma, n_seeds, m[0], m[1], m[2], sd, th,
                     abs(m[1] - th), abs(m[0] - gx), abs(m[2] - b0)])
    return _result(config, cols, rows)


def plot_sweep_noise(result, out_dir):
    from .plotting import line_plot, scatter_plot

    t = result.table
    sig = t.column("sigma")
    keep = sig > 0
    _plot(result, out_dir, "coefficients", line_plot, sig[keep],
          {"w_x": t.column("mean_w_x")[keep], "w_y": t.column("mean_w_y")[keep],
           "b": t.column("mean_b")[keep], "w_y theory": t.column("theory_w_y")[keep]},
          xlabel="sigma", ylabel="coefficient", logx=True)
    p = result.metadata["parameters"]
    spec = ManifoldSpec.curve2d(float(p["kappa"]))
    seed = result.metadata["seed"]
    for sigma in p["scatter_sigmas"]:
        s = sample_uniform(spec, float(p["L"]), int(p["scatter_points"]), seed)
        s = add_noise(s, NoiseSpec((float(sigma),), seed))
        _plot(result, out_dir, f"scatter_sigma_{float(sigma):g}", scatter_plot,
              s.points[:, 0], s.points[:, 1], xlabel="x", ylabel="y",
              title=f"sigma = {float(sigma):g}")


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

def run_validate_hypersurface(config: ExperimentConfig):
    """Quadrature fits on ``y = sum kappa_i x_i^2`` against the leading-order formulas.

    ``summary["slopes"]`` maps each coefficient to the fitted log-log slope of
    its error against ``L``; ``summary["slopes_corrected"]`` does the same
    after adding the ``O(L^2)`` bias term.
    """
    p = config.parameters
    kappa = np.asarray(p["curvatures"], dtype=float)
    spec = ManifoldSpec.hypersurface(kappa)
    g = resolve_target(p["g"], spec.labels(), config.seed)
    Ls = [float(v) for v in p["Ls"]]
    cols = ["L", "coefficient", "numeric", "leading", "corrected", "abs_err", "abs_err_corrected"]
    rows, errs, errs_c, labels = [], [], [], None
    for L in Ls:
        sol = _quad_solve(spec, g, L)
        pred = predict_hypersurface(g, kappa, L)
        labels = pred.labels
        e = np.abs(sol.theta - pred.theta)
        ec = np.abs(sol.theta - pred.corrected_theta())
        errs.append(e)
        errs_c.append(ec)
        for i, lab in enumerate(labels):
            rows.append([L, lab, sol.theta[i], pred.theta[i], pred.corrected_theta()[i], e[i], ec[i]])
    errs, errs_c = np.array(errs), np.array(errs_c)
    summary = {
        "slopes": {lab: loglog_slope(Ls, errs[:, i]) for i, lab in enumerate(labels)},
        "slopes_corrected": {lab: loglog_slope(Ls, errs_c[:, i]) for i, lab in enumerate(labels)},
    }
    return _result(config, cols, rows, summary=summary)


def _parity_coupling(A):
    """Largest normalized ``A_ij`` linking an odd and an even power of ``x``.

    Columns are ``x^1 .. x^d`` followed by the bias ``x^0``.
    """
    d = A.shape[0] - 1
    powers = np.array(list(range(1, d + 1)) + [0])
    diag = np.sqrt(np.abs(np.diag(A)))
    C = np.abs(A) / np.outer(diag, diag)
    mask = (powers[:, None] + powers[None, :]) % 2 == 1
    return float(C[mask].max(initial=0.0))


def run_validate_curve_nd(config: ExperimentConfig):
    """Quadrature fits on ``(x, k_2 x^2, ..., k_d x^d)`` against the composition formula.

    Rows are indexed by ``(L, n)`` with ``n = 0`` for the bias.  The summary
    holds the measured exponents next to :func:`error_order` and
    :func:`block_error_order`, and the largest normalized odd/even coupling
    in the assembled systems.  Raises :class:`FlatDirection` when some
    ``k_n`` vanishes.
    """
    p = config.parameters
    d = int(p["d"])
    ks = (np.asarray(p["ks"], dtype=float) if p["ks"] is not None
          else random_nonlinear_quantities(d - 1, config.seed))
    spec = ManifoldSpec.space_curve(ks)
    g = resolve_target(p["g"], [f"x_{i + 1}" for i in range(d)], config.seed)
    pred = predict_curve_nd_all(g, ks)
    Ls = [float(v) for v in p["Ls"]]
    ns = list(range(1, d + 1)) + [0]
    cols = ["L", "n", "numeric", "theory", "abs_err", "error_order", "block_error_order"]
    rows, errs, coupling = [], [], 0.0
    for L in Ls:
        system = assemble_normal_system(quadrature_moments(spec, g, L))
        coupling = max(coupling, _parity_coupling(system.matrix_A))
        sol = solve_normal_system(system)
        e = np.abs(sol.theta - pred.theta)
        errs.append(e)
        for i, n in enumerate(ns):
            rows.append([L, n, sol.theta[i], pred.theta[i], e[i], error_order(n, d),
                         block_error_order(n, d)])
    errs = np.array(errs)
    measured = {n: loglog_slope(Ls, errs[:, i]) for i, n in enumerate(ns)}
    summary = {
        "ks": ks.tolist(),
        "measured_exponent": measured,
        "error_order": {n: error_order(n, d) for n in ns},
        "block_error_order": {n: block_error_order(n, d) for n in ns},
        "max_parity_coupling": coupling,
    }
    return _result(config, cols, rows, summary=summary)


def plot_convergence(result, out_dir, key):
    from .plotting import line_plot

    t = result.table
    labels = t.column(key)
    series = {}
    Ls = None
    for lab in dict.fromkeys(labels.tolist()):
        m = labels == lab
        Ls = t.column("L")[m]
        series[f"{key} {lab}"] = t.column("abs_err")[m]
    _plot(result, out_dir, "errors", line_plot, Ls, series, xlabel="L", ylabel="|error|",
          logx=True, logy=True)


# ---------------------------------------------------------------------------
# degeneracy
# ---------------------------------------------------------------------------

def run_degeneracy_demo(config: ExperimentConfig):
    """Flat normal direction: detect it, then restore rank with noise along it.

    Row ``sigma = 0`` describes the clean quadrature system (rank deficiency,
    minimum-norm coefficient).  Every other row averages ``n_seeds`` noisy
    Monte Carlo fits; noise is added only along the flat directions.
    """
    p = config.parameters
    spec = ManifoldSpec.codim_k([np.asarray(F, dtype=float) for F in p["forms"]])
    labels = spec.labels()
    g = resolve_target(p["g"], labels, config.seed)
    L, N, n_seeds = float(p["L"]), int(p["N"]), int(p["n_seeds"])
    t = spec.tangent_dim
    flat = [t + j for j, f in enumerate(spec.flat_flags) if f]
    system = assemble_normal_system(quadrature_moments(spec, g, L))
    report = diagnose_degeneracy(system)
    clean = solve_normal_system(system)
    cols = ["sigma", "coordinate", "rank", "min_rank", "mean_w", "target", "mean_abs_err", "std_w"]
    rows = []
    for j in flat:
        target = g.partial_at_origin(tuple(int(i == j) for i in range(spec.ambient_dim)))
        rows.append([0.0, labels[j], clean.rank, clean.rank, clean.w[j], target,
                     abs(clean.w[j] - target), 0.0])
    for sigma in sorted((float(s) for s in p["sigmas"]), reverse=True):
        noise = tuple(sigma if f else 0.0 for f in spec.flat_flags)
        fits, ranks = [], []
        for i in range(n_seeds):
            s = sample_uniform(spec, L, N, config.seed + i)
            s = add_noise(s, NoiseSpec(noise, config.seed + i))
            sol = solve_from_data(s, g(s.points))
            fits.append(sol.w)
            ranks.append(sol.rank)
        fits = np.array(fits)
        for j in flat:
            target = predict_codim2_noisy_wy2(g, sigma, j)
            w = fits[:, j]
            rows.append([sigma, labels[j], float(np.mean(ranks)), int(min(ranks)), w.mean(),
                         target, float(np.mean(np.abs(w - target))),
                         w.std(ddof=1) if n_seeds > 1 else float("nan")])
    summary = {
        "clean_rank": report.rank,
        "n_parameters": spec.ambient_dim + 1,
        "flat_coordinates": report.flat_labels(),
        "expected_flat": [labels[j] for j in flat],
        "min_norm_flat_coefficients": [float(clean.w[j]) for j in flat],
    }
    noisy = [r for r in rows if r[0] > 0]
    if len(flat) == 1 and len(noisy) >= 2:
        summary["error_ratios"] = [
            a[6] / b[6] for a, b in zip(noisy[:-1], noisy[1:])
        ]
    return _result(config, cols, rows, summary=summary)


# ---------------------------------------------------------------------------
# intrinsic dimension and bending
# ---------------------------------------------------------------------------

def run_intrinsic_dim(config: ExperimentConfig):
    """Full-dimensional versus projected regression of a linear target.

    The main table has one row per ambient coordinate: the minimum-norm
    coefficient, whether the coordinate is flat, and the coefficient after
    perturbing every flat coordinate.  Side tables hold the singular-value
    spectrum and the projected fit.
    """
    p = config.parameters
    X = load_dataset(p, config.seed)
    N, D = X.shape
    u = random_unit_vector(D, config.seed)
    y = X @ u

    spec = pca_spectrum(X)
    r = spec.gap_cutoff(float(p["gap_ratio"]))

    full = LocalLinearRegression().fit(X, y)
    flat = np.zeros(D, dtype=bool)
    flat[full.flat_coordinates_] = True
    res = np.abs(full.predict(X) - y)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, 99])))
    w_pert = full.coef_.copy()
    w_pert[flat] += float(p["perturbation"]) * gen.standard_normal(int(flat.sum()))
    res_pert = np.abs(X @ w_pert + full.intercept_ - y)

    Z = (X - spec.mean) @ spec.components[:, :r]
    proj = LocalLinearRegression().fit(Z, y)
    target_w = spec.components[:, :r].T @ u
    target_b = float(spec.mean @ u)

    cols = ["index", "w_full", "flat", "w_perturbed"]
    rows = [[i + 1, full.coef_[i], bool(flat[i]), w_pert[i]] for i in range(D)]
    tables = {
        "spectrum": Table(["index", "singular_value"],
                          [[i + 1, s] for i, s in enumerate(spec.singular_values)]),
        "projected": Table(["index", "w", "target", "abs_err"],
                           [[i + 1, w, t, abs(w - t)]
                            for i, (w, t) in enumerate(zip(proj.coef_, target_w))]
                           + [[r + 1, proj.intercept_, target_b, abs(proj.intercept_ - target_b)]]),
    }
    summary = {
        "n_samples": N,
        "ambient_dim": D,
        "numerical_rank": spec.numerical_rank(),
        "cutoff": r,
        "full_rank": full.rank_,
        "n_flat": int(flat.sum()),
        "max_abs_flat_coefficient": float(np.max(np.abs(full.coef_[flat]), initial=0.0)),
        "residual_max": float(res.max()),
        "perturbed_residual_max": float(res_pert.max()),
        "residual_change": float(np.max(np.abs(res_pert - res))),
        "projected_rank": proj.rank_,
        "projected_parameters": r + 1,
        "projected_param_err": float(max(np.max(np.abs(proj.coef_ - target_w)),
                                         abs(proj.intercept_ - target_b))),
        "projected_residual_max": float(np.max(np.abs(proj.predict(Z) - y))),
    }
    return _result(config, cols, rows, summary=summary, tables=tables)


def plot_intrinsic_dim(result, out_dir):
    from .plotting import line_plot, scatter_plot

    spec = result.tables["spectrum"]
    sv = spec.column("singular_value")
    keep = sv > 0
    _plot(result, out_dir, "spectrum", line_plot, spec.column("index")[keep],
          {"singular value": sv[keep]}, xlabel="index", ylabel="singular value", logy=True)
    t = result.table
    _plot(result, out_dir, "full_solution", scatter_plot, t.column("index"), t.column("w_full"),
          xlabel="coordinate", ylabel="w")
    _plot(result, out_dir, "full_perturbed", scatter_plot, t.column("index"),
          t.column("w_perturbed"), xlabel="coordinate", ylabel="w")
    pr = result.tables["projected"]
    _plot(result, out_dir, "projected_solution", scatter_plot, pr.column("index"), pr.column("w"),
          xlabel="coordinate", ylabel="w")


def run_bend(config: ExperimentConfig):
    """Bend projected data off its flat subspace and fit a quadratic target.

    The data are projected onto their leading principal subspace (``x~``),
    then displaced along every discarded direction ``q_i`` by
    ``alpha sum_j eta_ij x~_j^2``.  The target is a quadratic in the
    principal coordinates, so bending leaves its values unchanged.  Per
    ``alpha`` the table reports ``||w||``, the in-sample error ``e1`` and the
    error ``e2`` at ``x~ + out_shift * sum_i q_i``.
    """
    p = config.parameters
    X = load_dataset(p, config.seed)
    spec = pca_spectrum(X)
    r = spec.gap_cutoff(float(p["gap_ratio"]))
    P = spec.components[:, :r]
    Q = spec.components[:, r:]
    Xt = (X - spec.mean) @ P @ P.T
    c0, a, S = tangent_quadratic(r, config.seed)

    def g(points):
        C = points @ P
        return c0 + C @ a + 0.5 * np.einsum("ni,ij,nj->n", C, S, C)

    x_out = Xt + float(p["out_shift"]) * Q.sum(axis=1)
    cols = ["alpha", "w_norm", "e1", "e2", "rank"]
    rows = []
    for alpha in sorted((float(v) for v in p["alphas"]), reverse=True):
        Xb = bend_dataset(Xt, Q, alpha, config.seed)
        fit = LocalLinearRegression().fit(Xb, g(Xb))
        e1 = float(np.linalg.norm(fit.predict(Xb) - g(Xb)))
        e2 = float(np.linalg.norm(fit.predict(x_out) - g(x_out)))
        rows.append([alpha, float(np.linalg.norm(fit.coef_)), e1, e2, fit.rank_])
    summary = {"cutoff": r, "n_normals": Q.shape[1]}
    return _result(config, cols, rows, summary=summary)


def plot_bend(result, out_dir):
    from .plotting import line_plot

    t = result.table
    _plot(result, out_dir, "magnitudes", line_plot, t.column("alpha"),
          {"||w||": t.column("w_norm"), "e1": t.column("e1"), "e2": t.column("e2")},
          xlabel="alpha", ylabel="magnitude", logx=True, logy=True)


RUNNERS = {
    "SweepCurvature": (run_sweep_curvature, plot_sweep_curvature),
    "SweepNoise": (run_sweep_noise, plot_sweep_noise),
    "ValidateHypersurface": (run_validate_hypersurface,
                             lambda r, o: plot_convergence(r, o, "coefficient")),
    "ValidateCurveNd": (run_validate_curve_nd, lambda r, o: plot_convergence(r, o, "n")),
    "Degeneracy": (run_degeneracy_demo, None),
    "IntrinsicDim": (run_intrinsic_dim, plot_intrinsic_dim),
    "Bend": (run_bend, plot_bend),
}


def run_experiment(config, out_dir=None, fmt="csv", plot=False):
    """Run ``config``; optionally write tables (and SVGs) under ``out_dir``."""
    run, plotter = RUNNERS[config.experiment]
    result = run(config)
    if out_dir is not None:
        result.write(out_dir, fmt)
        if plot and plotter is not None:
            plotter(result, out_dir)
    return result
