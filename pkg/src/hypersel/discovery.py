"""Model discovery strategies on top of the fit machinery.

Two complementary routes:

* discrete subset selection, where every mask of a given cardinality k is
  fitted without penalty (the count penalty is a constant alpha * k inside a
  mask, so it is added after the fact) and the masks are ranked by penalized
  loss; and
* continuous shrinkage, where the full eight-term model is trained under an
  Lp penalty over grids of (p, alpha) with restart ensembles.

Landscape grids evaluate the total loss of a two-term model over a dense
weight window, which is exact and fast because with frozen inner exponents
every family's stress is linear in the two amplitudes.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .materials import (
    EXP_TERM_INDICES,
    ModelFamily,
    ParamVector,
    TermMask,
    masks_of_cardinality,
)
from .objective import (
    LossModel,
    Normalization,
    PenaltyConfig,
    Reduction,
    data_loss,
    penalty,
)
from .optim import AdamConfig, derive_seed, fit, multi_restart_fit, summarize_results

#: inner exponents used when a landscape grid freezes the invariant family's
#: exponential terms (one value per term 2, 4, 6, 8)
DEFAULT_FROZEN_EXPONENTS = np.array([0.25, 0.25, 0.25, 0.25])


@dataclass(frozen=True)
class SubsetReport:
    """One fitted mask of the discrete subset search."""

    mask: TermMask
    fitted: object
    alpha: float
    failed: bool = False
    error: str = None

    @property
    def data_total(self):
        return self.fitted.loss.data_total if self.fitted is not None else np.inf

    def penalized_loss(self, alpha=None):
        a = self.alpha if alpha is None else alpha
        return self.data_total + a * self.mask.count


@dataclass(frozen=True)
class SweepCell:
    p: float
    alpha: float
    n_runs: int
    summary: object
    r2_mean: dict
    r2_std: dict
    failures: tuple = ()


@dataclass(frozen=True)
class LandscapeGrid:
    family: ModelFamily
    terms: tuple
    wi_values: np.ndarray
    wj_values: np.ndarray
    loss: np.ndarray
    penalty_config: PenaltyConfig
    normalization: Normalization
    frozen_exponents: np.ndarray = None
    reduction: Reduction = Reduction.MEAN

    @property
    def argmin_indices(self):
        return np.unravel_index(np.argmin(self.loss), self.loss.shape)

    @property
    def argmin_weights(self):
        i, j = self.argmin_indices
        return float(self.wi_values[i]), float(self.wj_values[j])

    @property
    def min_loss(self):
        return float(self.loss[self.argmin_indices])


def _fit_mask_best(family, mask, dataset, normalization, adam_config,
                   master_seed, mask_index, n_restarts, reduction):
    """Best unpenalized fit of one mask over deterministic restart seeds.

    Purely linear masks are convex, so one run suffices; masks containing
    exponential terms get the full restart budget.
    """
    runs = 1 if mask.exponential_count == 0 else n_restarts
    best = None
    last_error = None
    for r in range(runs):
        cfg = adam_config.with_seed(derive_seed(master_seed, mask_index, r))
        try:
            res = fit(family, mask, dataset, normalization,
                      PenaltyConfig.none(), cfg, reduction=reduction)
        except DivergenceError as exc:
            last_error = str(exc)
            continue
        if best is None or res.loss.data_total < best.loss.data_total:
            best = res
    return best, last_error


def enumerate_best_in_class(family, dataset, k, alpha=0.0,
                            normalization=Normalization.MAX_STRESS,
                            adam_config=None, master_seed=0, n_restarts=6,
                            reduction=Reduction.MEAN):
    """Fit every mask with exactly k active terms and rank by penalized loss.

    Within a fixed mask the count penalty is the constant alpha * k, so each
    mask is fitted with alpha = 0 and the constant is added when ranking.
    Ties prefer masks with fewer exponential terms, then lexicographic term
    order. Masks whose every restart diverged are ranked last and flagged.
    """
    if adam_config is None:
        adam_config = AdamConfig()
    reports = []
    for idx, mask in enumerate(masks_of_cardinality(k)):
        best, err = _fit_mask_best(family, mask, dataset, normalization,
                                   adam_config, master_seed, idx, n_restarts,
                                   reduction)
        if best is None:
            reports.append(SubsetReport(mask, None, alpha, failed=True, error=err))
        else:
            reports.append(SubsetReport(mask, best, alpha))
    reports.sort(key=lambda r: (r.failed, r.penalized_loss(),
                                r.mask.exponential_count, r.mask.terms))
    return reports


def l0_crossover(best_k1, best_k2):
    """Penalty parameter at which the subset-count penalty flips the selection.

    The two-term model wins for alpha below the returned value, the one-term
    model at or above it.
    """
    return best_k1.data_total - best_k2.data_total


def greedy_densify(family, dataset, alpha=0.0, improvement_tol=1e-6,
                   normalization=Normalization.MAX_STRESS, adam_config=None,
                   master_seed=0, n_restarts=6, max_terms=8, cold_start=False,
                   reduction=Reduction.MEAN):
    """Grow a model one term at a time, starting from the best one-term mask.

    Each step fits every single-term extension of the incumbent, warm-started
    from the incumbent weights unless ``cold_start`` is set, and adopts the
    best extension while the penalized loss improves by at least
    ``improvement_tol``. Returns the incumbent trajectory.
    """
    if improvement_tol <= 0.0:
        raise ConfigurationError("improvement_tol must be positive")
    if adam_config is None:
        adam_config = AdamConfig()
    ranked = enumerate_best_in_class(family, dataset, 1, alpha, normalization,
                                     adam_config, master_seed, n_restarts,
                                     reduction)
    incumbent = ranked[0]
    if incumbent.failed:
        raise DivergenceError("every one-term fit diverged")
    trajectory = [incumbent]
    step = 0
    while incumbent.mask.count < max_terms:
        step += 1
        candidates = []
        for idx, term in enumerate(t for t in range(1, 9)
                                   if t not in incumbent.mask.terms):
            mask = TermMask.from_terms(incumbent.mask.terms + (term,))
            best, err = None, None
            runs = 1 if (cold_start and mask.exponential_count == 0) else n_restarts
            for r in range(runs):
                cfg = adam_config.with_seed(derive_seed(master_seed, 1000 + step, idx, r))
                init = None if cold_start else _warm_start(
                    family, mask, incumbent.fitted.params, cfg.seed)
                try:
                    res = fit(family, mask, dataset, normalization,
                              PenaltyConfig.none(), cfg, init_params=init,
                              reduction=reduction)
                except DivergenceError as exc:
                    err = str(exc)
                    continue
                if best is None or res.loss.data_total < best.loss.data_total:
                    best = res
            if best is None:
                candidates.append(SubsetReport(mask, None, alpha, failed=True, error=err))
            else:
                candidates.append(SubsetReport(mask, best, alpha))
        candidates.sort(key=lambda r: (r.failed, r.penalized_loss(),
                                       r.mask.exponential_count, r.mask.terms))
        best = candidates[0]
        if best.failed:
            break
        if incumbent.penalized_loss() - best.penalized_loss() < improvement_tol:
            break
        incumbent = best
        trajectory.append(incumbent)
    return trajectory


def _warm_start(family, mask, incumbent_params, seed):
    """Incumbent weights for shared terms, seeded random start for the new one."""
    rng = np.random.default_rng(derive_seed(seed, 7))
    amp = incumbent_params.amplitudes.copy()
    exps = None
    if family is ModelFamily.INVARIANT8:
        exps = incumbent_params.exponents.copy()
    for i in mask.indices:
        if amp[i] == 0.0:
            amp[i] = rng.uniform(0.0, 1.0)
            if family is ModelFamily.INVARIANT8 and i in EXP_TERM_INDICES:
                exps[EXP_TERM_INDICES.index(i)] = rng.uniform(0.1, 2.0)
    return ParamVector(family, amp, exps)


def lp_sweep(family, dataset, powers, alphas, n_runs=10, master_seed=0,
             normalization=Normalization.MAX_STRESS, adam_config=None,
             weight_norms=None, mask=None, reduction=Reduction.MEAN):
    """Restart ensembles over a grid of penalty powers and strengths.

    Returns a list of rows, one per power, each a list of SweepCell. Cell
    failures are recorded in the cell instead of aborting the sweep.
    """
    for p in powers:
        if p <= 0.0:
            raise ConfigurationError(
                "sweeps cover p > 0; handle p = 0 by subset enumeration")
    if any(a < 0.0 for a in alphas):
        raise ConfigurationError("penalty parameters must be >= 0")
    if adam_config is None:
        adam_config = AdamConfig()
    if mask is None:
        mask = TermMask.all_active()
    grid = []
    for ip, p in enumerate(powers):
        row = []
        for ia, alpha in enumerate(alphas):
            cfg = PenaltyConfig(p=p, alpha=alpha, weight_norms=weight_norms)
            results, summary, failures = multi_restart_fit(
                n_runs, family, mask, dataset, normalization, cfg,
                adam_config, master_seed=derive_seed(master_seed, ip, ia),
                reduction=reduction)
            r2_mean, r2_std = _r2_stats(results)
            row.append(SweepCell(p=p, alpha=alpha, n_runs=n_runs,
                                 summary=summary, r2_mean=r2_mean,
                                 r2_std=r2_std, failures=tuple(failures)))
        grid.append(row)
    return grid


def _r2_stats(results):
    mean, std = {}, {}
    modes = ("tension", "compression", "shear")
    pooled = []
    for mode in modes:
        vals = [r.r2[mode] for r in results if r.r2[mode] is not None]
        if vals:
            mean[mode] = float(np.mean(vals))
            std[mode] = float(np.std(vals))
        else:
            mean[mode] = None
            std[mode] = None
    for r in results:
        vals = [r.r2[m] for m in modes if r.r2[m] is not None]
        if vals:
            pooled.append(float(np.mean(vals)))
    mean["pooled"] = float(np.mean(pooled)) if pooled else None
    std["pooled"] = float(np.std(pooled)) if pooled else None
    return mean, std


def calibrate_alpha(family, mask, dataset, p, corner_params,
                    normalization=Normalization.MAX_STRESS,
                    reduction=Reduction.MEAN):
    """Penalty parameter that balances data loss and penalty at a corner point.

    The returned alpha makes alpha * ||theta_corner||_p^p equal to the data
    loss at the corner of the screened weight window.
    """
    masked = corner_params.masked(mask)
    w = masked.amplitudes[list(mask.indices)]
    if np.any(w <= 0.0):
        raise ConfigurationError("corner weights must be strictly positive")
    norm_p = penalty(masked, PenaltyConfig(p=p, alpha=1.0))
    if norm_p == 0.0:
        raise ConfigurationError("penalty norm vanishes at the corner")
    base = data_loss(masked, dataset, normalization, reduction)
    return base.data_total / norm_p


def loss_landscape_grid(family, terms, dataset, range_i=(0.0, 2.0),
                        range_j=(0.0, 2.0), resolution=101,
                        penalty_config=None,
                        normalization=Normalization.MAX_STRESS,
                        frozen_exponents=None, reduction=Reduction.MEAN):
    """Dense total-loss grid for a two-term model.

    ``terms`` are 1-based term numbers (i, j). All other amplitudes are zero
    and, for the invariant family, the inner exponents are frozen to
    ``frozen_exponents`` (defaults to 0.25 per exponential term), which makes
    the stress linear in the two grid weights; the grid is then evaluated
    through its exact quadratic expansion. Overflowing cells would be
    recorded as +inf.
    """
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")
    ti, tj = terms
    mask = TermMask.from_terms((ti, tj))
    if penalty_config is None:
        penalty_config = PenaltyConfig.none()
    if family is ModelFamily.INVARIANT8:
        frozen = (DEFAULT_FROZEN_EXPONENTS if frozen_exponents is None
                  else np.asarray(frozen_exponents, dtype=float))
    else:
        frozen = None

    wi = np.linspace(range_i[0], range_i[1], resolution)
    wj = np.linspace(range_j[0], range_j[1], resolution)

    model = LossModel(family, dataset, normalization, reduction)
    probe = ParamVector(family, _pair_amplitudes(ti, tj, 1.0, 1.0), frozen)
    gii = gjj = gij = ci = cj = t2 = 0.0
    try:
        units = model.term_stresses(probe)
    except FloatingPointError:
        loss = np.full((resolution, resolution), np.inf)
        return LandscapeGrid(family, (ti, tj), wi, wj, loss,
                             penalty_config, normalization, frozen, reduction)
    for mode, controls, measured, div in model.protocols:
        if reduction is Reduction.MEAN:
            div = div * np.sqrt(controls.size)
        phi_i = units[mode][ti - 1] / div
        phi_j = units[mode][tj - 1] / div
        y = measured / div
        gii += phi_i @ phi_i
        gjj += phi_j @ phi_j
        gij += phi_i @ phi_j
        ci += phi_i @ y
        cj += phi_j @ y
        t2 += y @ y

    WI, WJ = wi[:, None], wj[None, :]
    loss = (t2 - 2.0 * (ci * WI + cj * WJ)
            + gii * WI ** 2 + gjj * WJ ** 2 + 2.0 * gij * WI * WJ)
    if penalty_config.alpha > 0.0:
        loss = loss + (_penalty_profile(wi, ti, penalty_config)[:, None]
                       + _penalty_profile(wj, tj, penalty_config)[None, :])
    return LandscapeGrid(family, (ti, tj), wi, wj, loss,
                         penalty_config, normalization, frozen, reduction)


def _pair_amplitudes(ti, tj, vi, vj):
    amp = np.zeros(8)
    amp[ti - 1] = vi
    amp[tj - 1] = vj
    return amp


def _penalty_profile(w, term, config):
    nu = 1.0
    if config.weight_norms is not None:
        nu = config.weight_norms[term - 1]
    z = np.abs(w) / nu
    if config.p == 0.0:
        return config.alpha * (z > config.tau_zero).astype(float)
    return config.alpha * z ** config.p
