"""Three-stage spatial prediction: iterative amplitude kriging, positive-weight
phase kriging with sphere projection, and scalar translation kriging, plus the
ordinary functional kriging baseline and a LOOCV harness with error metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from spafda.dataio import SpatialDataset
from spafda.fdcore import (
    Grid,
    PsiFunction,
    SampledFunction,
    SrsfFunction,
    WarpingFunction,
    group_action,
    identity_warp,
    l2_distance,
    l2_norm,
    psi_to_warp,
    srsf_inverse,
    srsf_transform,
    warp_invert,
    warp_to_psi,
)
from spafda.metrics import (
    amplitude_distance,
    dp_align,
    penalized_align,
    phase_distance,
    shape_distance,
)
from spafda.variogram import (
    DEFAULT_OMEGA_CANDIDATES,
    EmpiricalVariogram,
    InsufficientDataError,
    VariogramModel,
    empirical_variogram,
    fit_matern,
    pairwise_sq_l2,
    select_omega,
)

__all__ = [
    "KrigingConfig",
    "KrigingResult",
    "AmplitudeKrigingResult",
    "solve_sum_one_weights",
    "solve_positive_weights",
    "amplitude_krige",
    "phase_krige",
    "translation_krige",
    "combine_prediction",
    "krige_site",
    "ordinary_krige_functional",
    "loocv_metrics",
    "select_penalty_weight",
    "pairwise_shape_sq_dists",
    "LoocvResult",
    "METRIC_NAMES",
]

METRIC_NAMES = ("E1", "E2", "E3", "E4", "E5")

DEFAULT_LAMBDA_GRID: tuple[float, ...] = (0.0, 0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class KrigingConfig:
    """Knobs for the amplitude/phase/translation kriging pipeline."""

    max_iterations: int = 20
    tolerance: float = 1e-6
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    omega_candidates: tuple[float, ...] = DEFAULT_OMEGA_CANDIDATES
    weight_floor: float = 1e-6
    seed: int = 0
    n_bins: int = 12
    cv_folds: int = 5
    cv_repeats: int = 3

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.weight_floor <= 0:
            raise ValueError("weight floor must be positive")


@dataclass(frozen=True)
class AmplitudeKrigingResult:
    amplitude: SrsfFunction
    weights: np.ndarray
    warps: tuple[WarpingFunction, ...]
    model: VariogramModel
    iterations: int
    converged: bool


@dataclass(frozen=True)
class KrigingResult:
    """Full three-stage prediction at one target site."""

    amplitude: SrsfFunction
    phase: WarpingFunction
    translation: float
    combined: SampledFunction
    amp_weights: np.ndarray
    phase_weights: np.ndarray
    iterations: int
    converged: bool
    omega: float
    lam: float
    flags: tuple[str, ...] = ()


def _solve_sum_one(V: np.ndarray) -> tuple[np.ndarray, bool]:
    n = V.shape[0]
    if n == 1:
        return np.array([1.0]), False
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = 2.0 * V
    K[:n, n] = 1.0
    K[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
        ridged = False
    except np.linalg.LinAlgError:
        K[:n, :n] += 1e-10 * np.eye(n)
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        ridged = True
    w = sol[:n]
    return w / w.sum(), ridged


def solve_sum_one_weights(Va: np.ndarray) -> np.ndarray:
    """Minimize w'Va w subject to sum(w)=1 (Lagrange system); weights may be negative."""
    Va = np.asarray(Va, dtype=float)
    if not np.allclose(Va, Va.T, atol=1e-8):
        raise ValueError("variogram matrix must be symmetric")
    return _solve_sum_one(Va)[0]


def solve_positive_weights(Vp: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """Sum-one weights with every entry kept above ``floor`` by active-set clamping."""
    Vp = np.asarray(Vp, dtype=float)
    if not np.allclose(Vp, Vp.T, atol=1e-8):
        raise ValueError("variogram matrix must be symmetric")
    n = Vp.shape[0]
    if floor >= 1.0 / n:
        raise ValueError("weight floor too large for dataset size")
    w, _ = _solve_sum_one(Vp)
    clamped = np.zeros(n, dtype=bool)
    for _ in range(n):
        if np.all(w[~clamped] > 0.0):
            break
        clamped |= w <= 0.0
        free = ~clamped
        m = int(free.sum())
        if m == 0:
            w = np.full(n, 1.0 / n)
            return w
        # equality-constrained subproblem over the free set
        Vff = Vp[np.ix_(free, free)]
        Vfc = Vp[np.ix_(free, clamped)]
        budget = 1.0 - floor * (n - m)
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = 2.0 * Vff
        K[:m, m] = 1.0
        K[m, :m] = 1.0
        rhs = np.concatenate([-2.0 * Vfc @ np.full(n - m, floor), [budget]])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            K[:m, :m] += 1e-10 * np.eye(m)
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        w = np.full(n, floor)
        w[free] = sol[:m]
    w = np.maximum(w, floor)
    # redistribute the normalization error over entries above the floor
    for _ in range(100):
        excess = w.sum() - 1.0
        if abs(excess) < 1e-15:
            break
        room = w > floor
        if not np.any(room):
            w = np.full(n, 1.0 / n)
            break
        w[room] -= excess * w[room] / w[room].sum()
        w = np.maximum(w, floor)
    return w / w.sum() if abs(w.sum() - 1.0) > 1e-12 else w


def _spatial_dist_matrix(sites: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1))
    np.fill_diagonal(d, 0.0)
    return d


def _variogram_matrix(model: VariogramModel, dists: np.ndarray, target_dists: np.ndarray) -> np.ndarray:
    v0 = model.evaluate(target_dists)
    return v0[None, :] + v0[:, None] - model.evaluate(dists)


def amplitude_krige(
    srsfs: list[SrsfFunction],
    sites: np.ndarray,
    target_site,
    config: KrigingConfig = KrigingConfig(),
) -> AmplitudeKrigingResult:
    """Iterative spatially weighted amplitude prediction.

    Starts from the observation nearest the target, then alternates aligning
    all observations to the current template, refitting the aligned-data
    variogram, and re-solving the kriging weights, until the template change
    drops below the tolerance.
    """
    n = len(srsfs)
    if n < 2:
        raise InsufficientDataError("amplitude kriging needs at least 2 observations")
    sites = np.asarray(sites, dtype=float)
    target = np.asarray(target_site, dtype=float)
    grid = srsfs[0].grid
    dists = _spatial_dist_matrix(sites)
    target_dists = np.sqrt(np.sum((sites - target) ** 2, axis=1))

    nearest = int(np.argmin(target_dists))
    template = srsfs[nearest]
    warps: tuple[WarpingFunction, ...] = tuple(identity_warp(grid) for _ in srsfs)
    weights = np.zeros(n)
    model = None
    converged = False
    iterations = 0
    for k in range(config.max_iterations):
        iterations = k + 1
        results = [dp_align(template, q) for q in srsfs]
        warps = tuple(r.warp for r in results)
        aligned = np.array([r.aligned.values for r in results])
        emp = empirical_variogram(dists, pairwise_sq_l2(aligned, grid), n_bins=config.n_bins)
        model = fit_matern(emp)
        Va = _variogram_matrix(model, dists, target_dists)
        weights, _ = _solve_sum_one(Va)
        new_vals = weights @ aligned
        delta = l2_distance(new_vals, template.values, grid)
        template = SrsfFunction(grid, new_vals, start=0.0, site=(target[0], target[1]))
        if delta < config.tolerance:
            converged = True
            break
    return AmplitudeKrigingResult(template, weights, warps, model, iterations, converged)


def pairwise_shape_sq_dists(srsfs: list[SrsfFunction]) -> np.ndarray:
    """Symmetrized matrix of squared shape distances between observations."""
    n = len(srsfs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = 0.5 * (shape_distance(srsfs[i], srsfs[j]) + shape_distance(srsfs[j], srsfs[i]))
            D[i, j] = D[j, i] = d * d
    return D


def phase_krige(
    template: SrsfFunction,
    srsfs: list[SrsfFunction],
    sites: np.ndarray,
    target_site,
    lam: float,
    config: KrigingConfig = KrigingConfig(),
    shape_sq_dists: np.ndarray | None = None,
    omega: float | None = None,
) -> tuple[WarpingFunction, np.ndarray, float, VariogramModel]:
    """Predict the relative phase at the target from penalized alignments to the template.

    The linear combination of the observations' phase representations is formed
    with positive sum-one weights, projected back to the unit sphere, and
    integrated into a warping function.
    """
    n = len(srsfs)
    sites = np.asarray(sites, dtype=float)
    target = np.asarray(target_site, dtype=float)
    grid = template.grid
    warps = [penalized_align(template, q, lam).warp for q in srsfs]
    psis = np.array([warp_to_psi(g).values for g in warps])

    if shape_sq_dists is None:
        shape_sq_dists = pairwise_shape_sq_dists(srsfs)
    psi_sq = pairwise_sq_l2(psis, grid)
    if omega is None:
        omega, model = select_omega(
            sites, shape_sq_dists, psi_sq, candidates=config.omega_candidates, n_bins=config.n_bins
        )
    else:
        spatial_sq = np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1)
        D = np.sqrt(spatial_sq + omega * shape_sq_dists)
        np.fill_diagonal(D, 0.0)
        model = fit_matern(empirical_variogram(D, psi_sq, n_bins=config.n_bins))

    spatial_sq = np.sum((sites[:, None, :] - sites[None, :, :]) ** 2, axis=-1)
    dists = np.sqrt(spatial_sq + omega * shape_sq_dists)
    np.fill_diagonal(dists, 0.0)
    target_sq = np.sum((sites - target) ** 2, axis=1)
    if omega > 0.0:
        shape_to_target = np.array(
            [
                0.5 * (shape_distance(template, q) + shape_distance(q, template))
                for q in srsfs
            ]
        )
        target_dists = np.sqrt(target_sq + omega * shape_to_target**2)
    else:
        target_dists = np.sqrt(target_sq)

    Vp = _variogram_matrix(model, dists, target_dists)
    zeta = solve_positive_weights(Vp, config.weight_floor)
    tilde_psi = zeta @ psis
    nrm = l2_norm(tilde_psi, grid)
    psi0 = PsiFunction(grid, tilde_psi / nrm)
    return psi_to_warp(psi0), zeta, float(omega), model


def translation_krige(starts, sites, target_site, n_bins: int = 12) -> float:
    """Scalar ordinary kriging of the functions' starting values."""
    starts = np.asarray(starts, dtype=float)
    if starts.size < 2:
        raise InsufficientDataError("translation kriging needs at least 2 observations")
    if np.ptp(starts) < 1e-14:
        return float(starts[0])
    sites = np.asarray(sites, dtype=float)
    target = np.asarray(target_site, dtype=float)
    dists = _spatial_dist_matrix(sites)
    sq = np.subtract.outer(starts, starts) ** 2
    model = fit_matern(empirical_variogram(dists, sq, n_bins=n_bins))
    target_dists = np.sqrt(np.sum((sites - target) ** 2, axis=1))
    w, _ = _solve_sum_one(_variogram_matrix(model, dists, target_dists))
    return float(w @ starts)


def combine_prediction(
    amplitude: SrsfFunction, phase: WarpingFunction, translation: float
) -> SampledFunction:
    """Undo the predicted warp on the predicted amplitude and integrate back."""
    q0_star = group_action(amplitude, warp_invert(phase))
    return srsf_inverse(
        SrsfFunction(q0_star.grid, q0_star.values, start=translation, site=amplitude.site)
    )


def _single_site_result(dataset: SpatialDataset, lam: float) -> KrigingResult:
    f = dataset.functions[0]
    q = srsf_transform(f)
    gid = identity_warp(dataset.grid)
    return KrigingResult(
        amplitude=q,
        phase=gid,
        translation=float(f.values[0]),
        combined=f,
        amp_weights=np.array([1.0]),
        phase_weights=np.array([1.0]),
        iterations=0,
        converged=True,
        omega=0.0,
        lam=lam,
        flags=("single-observation",),
    )


def krige_site(
    dataset: SpatialDataset,
    target_site,
    config: KrigingConfig = KrigingConfig(),
    lam: float | None = None,
    shape_sq_dists: np.ndarray | None = None,
) -> KrigingResult:
    """Full amplitude-phase-translation prediction at one unobserved site."""
    if lam is None:
        if len(config.lambda_grid) == 1:
            lam = float(config.lambda_grid[0])
        else:
            lam = select_penalty_weight(dataset, config)
    if dataset.n == 1:
        return _single_site_result(dataset, lam)
    srsfs = dataset.srsfs()
    sites = dataset.sites
    amp = amplitude_krige(srsfs, sites, target_site, config)
    phase, zeta, omega, _ = phase_krige(
        amp.amplitude, srsfs, sites, target_site, lam, config, shape_sq_dists=shape_sq_dists
    )
    translation = translation_krige(dataset.starts, sites, target_site, config.n_bins)
    amp_sited = SrsfFunction(
        amp.amplitude.grid,
        amp.amplitude.values,
        start=translation,
        site=(float(target_site[0]), float(target_site[1])),
    )
    combined = combine_prediction(amp_sited, phase, translation)
    flags = () if amp.converged else ("amplitude-not-converged",)
    return KrigingResult(
        amplitude=amp_sited,
        phase=phase,
        translation=translation,
        combined=combined,
        amp_weights=amp.weights,
        phase_weights=zeta,
        iterations=amp.iterations,
        converged=amp.converged,
        omega=omega,
        lam=lam,
        flags=flags,
    )


def ordinary_krige_functional(
    dataset: SpatialDataset, target_site, n_bins: int = 12
) -> tuple[SampledFunction, np.ndarray]:
    """Functional ordinary kriging baseline: raw trace-variogram, no alignment."""
    if dataset.n == 1:
        return dataset.functions[0], np.array([1.0])
    sites = dataset.sites
    target = np.asarray(target_site, dtype=float)
    dists = _spatial_dist_matrix(sites)
    values = dataset.values_matrix
    model = fit_matern(
        empirical_variogram(dists, pairwise_sq_l2(values, dataset.grid), n_bins=n_bins)
    )
    target_dists = np.sqrt(np.sum((sites - target) ** 2, axis=1))
    w, _ = _solve_sum_one(_variogram_matrix(model, dists, target_dists))
    pred = SampledFunction(dataset.grid, w @ values, site=(float(target[0]), float(target[1])))
    return pred, w


def select_penalty_weight(dataset: SpatialDataset, config: KrigingConfig) -> float:
    """Pick the alignment penalty by repeated k-fold CV on phase prediction error.

    Each held-out site's phase is predicted from the remaining folds and scored
    with the squared extrinsic phase distance against the phase obtained by
    aligning the held-out observation to the training template.
    """
    if len(config.lambda_grid) == 1:
        return float(config.lambda_grid[0])
    n = dataset.n
    if n < config.cv_folds + 1:
        return float(config.lambda_grid[0])
    rng = np.random.default_rng(config.seed)
    grid = dataset.grid
    losses = {lam: 0.0 for lam in config.lambda_grid}
    for _ in range(config.cv_repeats):
        perm = rng.permutation(n)
        folds = np.array_split(perm, config.cv_folds)
        for fold in folds:
            train_idx = np.setdiff1d(perm, fold)
            train = dataset.subset(train_idx)
            srsfs = train.srsfs()
            sites = train.sites
            for lam in config.lambda_grid:
                for i in fold:
                    target_site = dataset.functions[i].site
                    try:
                        amp = amplitude_krige(srsfs, sites, target_site, config)
                        phase, _, _, _ = phase_krige(
                            amp.amplitude, srsfs, sites, target_site, lam, config
                        )
                    except (InsufficientDataError, np.linalg.LinAlgError):
                        losses[lam] += np.inf
                        continue
                    q_i = srsf_transform(dataset.functions[i])
                    truth_warp = penalized_align(amp.amplitude, q_i, lam).warp
                    psi_pred = warp_to_psi(phase).values
                    psi_true = warp_to_psi(truth_warp).values
                    losses[lam] += l2_distance(psi_pred, psi_true, grid) ** 2
    return float(min(config.lambda_grid, key=lambda lam: (losses[lam], lam)))


@dataclass(frozen=True)
class LoocvResult:
    """Per-site and mean E1..E5 for one method."""

    method: str
    site_ids: tuple[str, ...]
    per_site: np.ndarray  # (n, 5)
    failed: tuple[str, ...] = ()

    @property
    def means(self) -> dict:
        ok = np.all(np.isfinite(self.per_site), axis=1)
        return dict(zip(METRIC_NAMES, self.per_site[ok].mean(axis=0)))


def _fold_metrics(pred: SampledFunction, truth: SampledFunction) -> np.ndarray:
    grid = truth.grid
    t = grid.points
    q_pred = srsf_transform(pred)
    q_true = srsf_transform(truth)
    res = dp_align(q_true, q_pred)
    aligned_vals = np.interp(res.warp.values, t, pred.values)
    e1 = l2_distance(aligned_vals, truth.values, grid) ** 2
    d_aligned = np.gradient(aligned_vals, t)
    d_truth = np.gradient(truth.values, t)
    e2 = l2_distance(d_aligned, d_truth, grid) ** 2
    e3 = amplitude_distance(q_pred, q_true) ** 2
    e4 = phase_distance(q_pred, q_true).intrinsic ** 2
    e5 = l2_distance(pred.values, truth.values, grid) ** 2
    return np.array([e1, e2, e3, e4, e5])


def loocv_metrics(
    dataset: SpatialDataset,
    config: KrigingConfig = KrigingConfig(),
    method: str = "apk",
) -> LoocvResult:
    """Leave-one-site-out prediction errors E1..E5 for APK or the OK baseline."""
    if dataset.n < 3:
        raise InsufficientDataError("LOOCV needs at least 3 sites")
    if method not in ("apk", "ok"):
        raise ValueError("method must be 'apk' or 'ok'")
    shape_sq = None
    if method == "apk":
        shape_sq = pairwise_shape_sq_dists(dataset.srsfs())
    per_site = np.full((dataset.n, 5), np.nan)
    failed = []
    for i in range(dataset.n):
        rest = [j for j in range(dataset.n) if j != i]
        train = dataset.subset(rest)
        target_site = dataset.functions[i].site
        try:
            if method == "apk":
                sub_shape = shape_sq[np.ix_(rest, rest)]
                pred = krige_site(train, target_site, config, shape_sq_dists=sub_shape).combined
            else:
                pred, _ = ordinary_krige_functional(train, target_site, config.n_bins)
            per_site[i] = _fold_metrics(pred, dataset.functions[i])
        except (InsufficientDataError, np.linalg.LinAlgError, ValueError) as exc:
            failed.append(f"{dataset.site_ids[i]}: {exc}")
    return LoocvResult(method, dataset.site_ids, per_site, tuple(failed))
