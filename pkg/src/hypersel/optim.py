"""Projected Adam on masked parameter vectors, single runs and ensembles.

The optimizer works on the free parameters of a (family, mask) pair: the
masked-in amplitudes plus, for the invariant family, the inner exponents of
the masked-in exponential terms. After every Adam step all free parameters
are clipped to [0, inf), so discarded weights are exact zeros rather than
small numbers. Runs are deterministic functions of their seed.
"""

from dataclasses import dataclass, replace

import numpy as np

from .dataio import r_squared
from .errors import ConfigurationError, DivergenceError, TermOverflowError
from .materials import EXP_TERM_INDICES, ModelFamily, ParamVector, TermMask
from .objective import (
    LossModel,
    Normalization,
    PenaltyConfig,
    Reduction,
    count_active,
)


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 20000
    convergence_tol: float = 1e-9
    convergence_window: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ConfigurationError("learning_rate must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigurationError("beta1 and beta2 must lie in (0, 1)")
        if self.max_epochs < 1 or self.convergence_window < 1:
            raise ConfigurationError("max_epochs and convergence_window must be >= 1")

    def with_seed(self, seed):
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.eps,
                          self.max_epochs, self.convergence_tol,
                          self.convergence_window, int(seed))


@dataclass(frozen=True)
class FitResult:
    params: ParamVector
    loss: "LossBreakdown"
    r2: dict
    active_terms: int
    epochs_run: int
    converged: bool
    seed: int


def derive_seed(*parts):
    """Stable child seed from any tuple of integers."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


class _FreeLayout:
    """Mapping between the flat free vector and a ParamVector."""

    def __init__(self, family, mask):
        self.family = family
        self.mask = mask
        self.amp_idx = list(mask.indices)
        if family is ModelFamily.MOONEY_RIVLIN:
            bad = [i + 1 for i in self.amp_idx if i not in (0, 4)]
            if bad:
                raise ConfigurationError(
                    f"Mooney-Rivlin cannot activate terms {bad}"
                )
        if family is ModelFamily.INVARIANT8:
            self.exp_slots = [EXP_TERM_INDICES.index(i)
                              for i in self.amp_idx if i in EXP_TERM_INDICES]
        else:
            self.exp_slots = []
        self.size = len(self.amp_idx) + len(self.exp_slots)

    def pack(self, params):
        vec = np.empty(self.size)
        vec[: len(self.amp_idx)] = params.amplitudes[self.amp_idx]
        if self.exp_slots:
            vec[len(self.amp_idx):] = params.exponents[self.exp_slots]
        return vec

    def unpack(self, vec):
        amp = np.zeros(8)
        amp[self.amp_idx] = vec[: len(self.amp_idx)]
        exps = None
        if self.family is ModelFamily.INVARIANT8:
            exps = np.zeros(4)
            exps[self.exp_slots] = vec[len(self.amp_idx):]
        return ParamVector(self.family, amp, exps)

    def pack_gradient(self, d_amp, d_exp):
        vec = np.empty(self.size)
        vec[: len(self.amp_idx)] = d_amp[self.amp_idx]
        if self.exp_slots:
            vec[len(self.amp_idx):] = d_exp[self.exp_slots]
        return vec

    def random_init(self, rng):
        """Amplitudes uniform in [0, 1], inner exponents uniform in [0.1, 2]."""
        vec = np.empty(self.size)
        vec[: len(self.amp_idx)] = rng.uniform(0.0, 1.0, len(self.amp_idx))
        if self.exp_slots:
            vec[len(self.amp_idx):] = rng.uniform(0.1, 2.0, len(self.exp_slots))
        return vec


def informed_init(family, one_term_weights, one_term_exponents=None):
    """Initial ParamVector seeded with single-term fit results.

    ``one_term_weights`` are the eight amplitudes discovered by the
    cardinality-1 enumeration; exponential terms may also carry their
    discovered inner exponents.
    """
    exps = None
    if family is ModelFamily.INVARIANT8:
        exps = np.ones(4) if one_term_exponents is None else one_term_exponents
    return ParamVector(family, np.asarray(one_term_weights, dtype=float), exps)


def fit(family, mask, dataset, normalization=Normalization.MAX_STRESS,
        penalty_config=None, adam_config=None, init_params=None,
        reduction=Reduction.MEAN):
    """Minimize the total loss over the masked free weights with projected Adam.

    Initial weights come from ``init_params`` (masked-off amplitudes are
    pinned at zero) or, by default, from the seeded random strategy.
    Raises DivergenceError when the loss stops being finite.
    """
    if penalty_config is None:
        penalty_config = PenaltyConfig.none()
    if adam_config is None:
        adam_config = AdamConfig()
    layout = _FreeLayout(family, mask)
    model = LossModel(family, dataset, normalization, reduction)
    rng = np.random.default_rng(adam_config.seed)
    if init_params is not None:
        theta = np.maximum(layout.pack(init_params), 0.0)
    else:
        theta = layout.random_init(rng)

    na = len(layout.amp_idx)
    exp_slots = tuple(layout.exp_slots)
    amp = np.zeros(8)
    exps = np.zeros(4)
    m = np.zeros(layout.size)
    v = np.zeros(layout.size)
    lr, b1, b2, eps = (adam_config.learning_rate, adam_config.beta1,
                       adam_config.beta2, adam_config.eps)
    window = adam_config.convergence_window
    history = np.empty(adam_config.max_epochs)
    converged = False
    epochs = 0
    last_good = (theta.copy(), np.inf)

    for t in range(1, adam_config.max_epochs + 1):
        amp[layout.amp_idx] = theta[:na]
        exps[exp_slots,] = theta[na:]
        try:
            loss, d_amp, d_exp = model.raw_loss_and_gradient(
                amp, exps, penalty_config, exp_slots)
        except TermOverflowError as exc:
            raise DivergenceError(
                f"overflow after {epochs} epochs: {exc}",
                last_params=layout.unpack(last_good[0]),
                last_loss=last_good[1], epoch=epochs,
            ) from exc
        if not np.isfinite(loss):
            raise DivergenceError(
                f"non-finite loss after {epochs} epochs",
                last_params=layout.unpack(last_good[0]),
                last_loss=last_good[1], epoch=epochs,
            )
        last_good = (theta.copy(), loss)
        history[t - 1] = loss
        epochs = t
        if t > window:
            prev = history[t - 1 - window]
            if abs(prev - loss) <= adam_config.convergence_tol * max(abs(prev), 1e-300):
                converged = True
                break

        grad = layout.pack_gradient(d_amp, d_exp)
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
        np.maximum(theta, 0.0, out=theta)

    params = layout.unpack(theta)
    breakdown = model.total_loss(params, penalty_config)
    if not np.isfinite(breakdown.total):
        raise DivergenceError("non-finite final loss",
                              last_params=layout.unpack(last_good[0]),
                              last_loss=last_good[1], epoch=epochs)
    r2 = r_squared(model.stresses(params), dataset)
    return FitResult(
        params=params,
        loss=breakdown,
        r2=r2,
        active_terms=count_active(params, penalty_config),
        epochs_run=epochs,
        converged=converged,
        seed=adam_config.seed,
    )


@dataclass(frozen=True)
class RestartSummary:
    n_runs: int
    n_failed: int
    amp_mean: np.ndarray
    amp_std: np.ndarray
    exp_mean: np.ndarray
    exp_std: np.ndarray
    loss_mean: float
    loss_std: float
    active_mean: float
    active_std: float


def summarize_results(results):
    amps = np.array([r.params.amplitudes for r in results])
    if results and results[0].params.family is ModelFamily.INVARIANT8:
        exps = np.array([r.params.exponents for r in results])
    else:
        exps = np.zeros((len(results), 4))
    losses = np.array([r.loss.total for r in results])
    active = np.array([r.active_terms for r in results], dtype=float)
    return RestartSummary(
        n_runs=len(results),
        n_failed=0,
        amp_mean=amps.mean(axis=0), amp_std=amps.std(axis=0),
        exp_mean=exps.mean(axis=0), exp_std=exps.std(axis=0),
        loss_mean=float(losses.mean()), loss_std=float(losses.std()),
        active_mean=float(active.mean()), active_std=float(active.std()),
    )


def multi_restart_fit(n_runs, family, mask, dataset,
                      normalization=Normalization.MAX_STRESS,
                      penalty_config=None, adam_config=None,
                      master_seed=0, init_params=None,
                      reduction=Reduction.MEAN):
    """Independent fits from ``n_runs`` derived seeds plus per-weight statistics.

    Returns ``(results, summary, failures)``; a failed run is recorded as
    (run index, error message) and excluded from the statistics instead of
    aborting the ensemble.
    """
    if n_runs < 1:
        raise ConfigurationError("n_runs must be >= 1")
    if adam_config is None:
        adam_config = AdamConfig()
    results, failures = [], []
    for run in range(n_runs):
        cfg = adam_config.with_seed(derive_seed(master_seed, run))
        try:
            results.append(fit(family, mask, dataset, normalization,
                               penalty_config, cfg, init_params=init_params,
                               reduction=reduction))
        except DivergenceError as exc:
            failures.append((run, str(exc)))
    if not results:
        raise DivergenceError(f"all {n_runs} restarts diverged")
    summary = replace(summarize_results(results), n_failed=len(failures))
    return results, summary, failures
