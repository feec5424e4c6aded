"""Pseudo-likelihood and MCMC maximum likelihood fitting.

The parameter vector is ``theta = (alpha_1, ..., alpha_{K-1}, beta)`` and the
matching statistic is ``G = (T_1, ..., T_{K-1}, S)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from .errors import ConvergenceError, DegenerateDataError, DimensionError, SteppingStallError
from .hull import ANCHORS, convex_hull_gamma
from .lattice import Grid, PottsParams, SuffStats, TaperingSpec, suff_stats
from .samplers import METHODS, SITE_UPDATES, SWAP_RULES, ChainConfig, SampleBatch, sample_like

GRAD_TOL = 1e-6
MAX_EVALUATIONS = 500

METHOD_PL = "pseudo_likelihood"
METHOD_POTTS = "mcmcmle_potts"
METHOD_TAPERED = "mcmcmle_tapered"


# --- summaries --------------------------------------------------------------


def _autocov_time(x: np.ndarray) -> float:
    """Integrated autocorrelation time, Geyer's initial positive sequence."""
    n = len(x)
    x = x - x.mean()
    var = x @ x / n
    if var == 0 or n < 4:
        return 1.0
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    return max(tau, 1.0)


def monte_carlo_se(samples) -> np.ndarray:
    """Autocorrelation-adjusted standard error of the mean, per column."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    out = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        out[j] = np.sqrt(np.var(x[:, j], ddof=1) * _autocov_time(x[:, j]) / n) if n > 1 else np.inf
    return out


@dataclass(frozen=True, eq=False)
class StatsSummary:
    """Moments of the statistic vectors of a sample batch."""

    mean: np.ndarray
    cov: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    size: int

    @classmethod
    def from_samples(cls, g) -> "StatsSummary":
        g = np.asarray(g.g if isinstance(g, SampleBatch) else g, dtype=float)
        if g.ndim != 2 or len(g) < 2:
            raise ValueError("need at least two sample rows")
        mean = g.mean(axis=0)
        cov = np.cov(g, rowvar=False).reshape(g.shape[1], g.shape[1])
        d = g - mean
        m2 = (d**2).mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            skew = (d**3).mean(axis=0) / m2**1.5
            kurt = (d**4).mean(axis=0) / m2**2
        return cls(mean, 0.5 * (cov + cov.T), skew, kurt, len(g))


# --- pseudo-likelihood ------------------------------------------------------


def neighbor_color_counts(grid: Grid) -> np.ndarray:
    """``n[i, l]`` = number of neighbors of cell ``i`` with color ``l``."""
    nbr = grid.neighbors()
    flat = grid.flat
    out = np.zeros((grid.size, grid.num_colors), dtype=float)
    rows = np.arange(grid.size)
    for q in range(nbr.shape[1]):
        ok = nbr[:, q] >= 0
        np.add.at(out, (rows[ok], flat[nbr[ok, q]]), 1.0)
    return out


def _site_features(grid: Grid):
    k = grid.num_colors
    n = neighbor_color_counts(grid)
    return grid.flat, n, np.eye(k)[:, : k - 1]


def _pll(theta, x, n, onehot, hessian=False):
    alpha = np.append(theta[:-1], 0.0)
    beta = theta[-1]
    eta = alpha[None, :] + beta * n
    lse = logsumexp(eta, axis=1)
    rows = np.arange(len(x))
    value = float(np.sum(eta[rows, x] - lse))
    p = np.exp(eta - lse[:, None])
    grad = np.empty_like(theta, dtype=float)
    grad[:-1] = onehot[x].sum(axis=0) - p[:, :-1].sum(axis=0)
    grad[-1] = np.sum(n[rows, x] - np.sum(p * n, axis=1))
    if not hessian:
        return value, grad
    # features per (site, color): (onehot row, n[i, l])
    feats = np.concatenate([np.broadcast_to(onehot, (len(x),) + onehot.shape), n[:, :, None]], axis=2)
    mean = np.einsum("il,ild->id", p, feats)
    second = np.einsum("il,ild,ile->de", p, feats, feats)
    return value, grad, -(second - mean.T @ mean)


def pseudo_log_likelihood(grid: Grid, params, *, hessian: bool = False):
    """Log pseudo-likelihood and its gradient in ``theta``.

    ``params`` may be a :class:`PottsParams` or a raw ``theta`` vector (the
    latter allows evaluation at negative ``beta``).  Returns ``(value, grad)``,
    plus the Hessian when ``hessian`` is set.
    """
    theta = params.theta if isinstance(params, PottsParams) else np.asarray(params, dtype=float)
    if theta.shape != (grid.num_colors,):
        raise DimensionError(f"theta must have length {grid.num_colors}")
    return _pll(theta, *_site_features(grid), hessian=hessian)


def _projected_grad(theta, grad):
    g = np.array(grad, dtype=float)
    # ascent direction: at beta = 0 a negative derivative points out of the domain
    if theta[-1] <= 0 and g[-1] < 0:
        g[-1] = 0.0
    return g


def maximize(fun, theta0, *, hess=None, tol: float = GRAD_TOL,
             max_evaluations: int = MAX_EVALUATIONS):
    """Maximize a concave ``fun(theta) -> (value, grad)`` subject to ``beta >= 0``.

    L-BFGS-B does the bulk of the work; when its line search stalls short of
    the gradient tolerance and ``hess`` is available, projected Newton steps
    finish the job.  Returns ``(theta, value, grad, evaluations)`` and raises
    :class:`ConvergenceError` carrying the best iterate otherwise.
    """
    theta0 = np.asarray(theta0, dtype=float).copy()
    theta0[-1] = max(theta0[-1], 0.0)
    evals = [0]

    def neg(th):
        evals[0] += 1
        v, g = fun(th)
        return -v, -np.asarray(g)

    bounds = [(None, None)] * (len(theta0) - 1) + [(0.0, None)]
    res = minimize(neg, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxfun": max_evaluations, "maxiter": max_evaluations,
                            "gtol": tol, "ftol": 1e-15, "maxcor": 20})
    theta = res.x
    value, grad = fun(theta)
    evals[0] += 1
    if hess is not None:
        while np.max(np.abs(_projected_grad(theta, grad))) >= tol and evals[0] < max_evaluations:
            h = hess(theta)
            free = np.ones(len(theta), dtype=bool)
            if theta[-1] <= 0 and grad[-1] < 0:
                free[-1] = False
            step = np.zeros_like(theta)
            try:
                step[free] = -np.linalg.solve(h[np.ix_(free, free)], grad[free])
            except np.linalg.LinAlgError:
                break
            t = 1.0
            while True:
                cand = theta + t * step
                cand[-1] = max(cand[-1], 0.0)
                v, g = fun(cand)
                evals[0] += 1
                if v >= value - 1e-12 * (1 + abs(value)) or t < 1e-8:
                    break
                t *= 0.5
            if v < value - 1e-12 * (1 + abs(value)):
                break
            theta, value, grad = cand, v, np.asarray(g)
    if not np.all(np.isfinite(theta)) or np.max(np.abs(_projected_grad(theta, grad))) >= tol:
        raise ConvergenceError(
            f"optimizer stopped with projected gradient norm "
            f"{np.max(np.abs(_projected_grad(theta, grad))):.3g} after {evals[0]} evaluations",
            best=theta)
    return theta, value, np.asarray(grad), evals[0]


def _check_colors_present(grid: Grid):
    t = np.bincount(grid.flat, minlength=grid.num_colors)
    if np.count_nonzero(t) < 2:
        raise DegenerateDataError("grid is monochrome: the interaction estimate diverges")
    if np.any(t == 0):
        missing = [k + 1 for k in np.flatnonzero(t == 0)]
        raise DegenerateDataError(f"colors {missing} never occur: their field estimates diverge")
    return t


# --- reports ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentCheck:
    """Fresh-batch mean of ``G`` at the estimate against the observed ``G``."""

    observed: np.ndarray
    simulated_mean: np.ndarray
    std_error: np.ndarray
    sample_size: int
    seed: int
    threshold: float = 4.0

    @property
    def z(self) -> np.ndarray:
        diff = self.simulated_mean - self.observed
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / self.std_error
        return np.where(diff == 0, 0.0, z)

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.z) <= self.threshold))

    def to_dict(self) -> dict:
        return {"observed": self.observed.tolist(), "simulated_mean": self.simulated_mean.tolist(),
                "std_error": self.std_error.tolist(), "z": [float(v) for v in self.z],
                "sample_size": self.sample_size, "seed": self.seed, "passed": self.passed}


@dataclass(frozen=True, eq=False)
class SteppingIteration:
    theta0: np.ndarray
    mean_g: np.ndarray
    gamma: float
    zeta_hat: np.ndarray
    mean_t: np.ndarray
    theta_next: Optional[np.ndarray]
    seed: int

    def to_dict(self) -> dict:
        return {"theta0": self.theta0.tolist(), "mean_g": self.mean_g.tolist(),
                "gamma": self.gamma, "zeta_hat": self.zeta_hat.tolist(),
                "mean_t": self.mean_t.tolist(),
                "theta_next": None if self.theta_next is None else self.theta_next.tolist(),
                "seed": self.seed}


@dataclass(frozen=True, eq=False)
class SteppingTrace:
    iterations: list
    converged: bool
    stop_reason: str
    theta_final: np.ndarray

    @property
    def gammas(self) -> np.ndarray:
        return np.array([it.gamma for it in self.iterations])

    @property
    def mean_t(self) -> np.ndarray:
        """Per-iteration sample means of every color count, shape ``(iters, K)``."""
        return np.array([it.mean_t for it in self.iterations])

    def __len__(self):
        return len(self.iterations)

    def to_dict(self) -> dict:
        return {"converged": self.converged, "stop_reason": self.stop_reason,
                "iterations_used": len(self.iterations),
                "theta_final": self.theta_final.tolist(),
                "iterations": [it.to_dict() for it in self.iterations]}


@dataclass(eq=False)
class FitReport:
    method: str
    estimates: PottsParams
    observed: SuffStats
    converged: bool
    seed: Optional[int] = None
    tapering: Optional[TaperingSpec] = None
    trace: Optional[SteppingTrace] = None
    moment_check: Optional[MomentCheck] = None
    initial: Optional[PottsParams] = None
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0
    final_batch: Optional[SampleBatch] = field(default=None, repr=False)
    check_batch: Optional[SampleBatch] = field(default=None, repr=False)
    diagnosis: Optional[dict] = None

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "method": self.method,
            "converged": self.converged,
            "estimates": self.estimates.to_dict(),
            "initial": None if self.initial is None else self.initial.to_dict(),
            "tapering": None if self.tapering is None else self.tapering.to_dict(),
            "observed": self.observed.to_dict(),
            "moment_check": None if self.moment_check is None else self.moment_check.to_dict(),
            "trace": None if self.trace is None else self.trace.to_dict(),
            "seed": self.seed,
            "conventions": {"neighborhood": "rook", "s_counts": "unordered pairs",
                            "reference_color": self.observed.num_colors},
            "config": self.config,
        }
        if self.diagnosis is not None:
            out["diagnosis"] = self.diagnosis
        if include_timing:
            out["wall_time"] = self.wall_time
        return out


def fit_pseudolikelihood(grid: Grid, *, tol: float = GRAD_TOL,
                         max_evaluations: int = MAX_EVALUATIONS) -> FitReport:
    """Maximum pseudo-likelihood estimate of ``(alpha, beta)``, with ``beta >= 0``."""
    start = time.perf_counter()
    t = _check_colors_present(grid)
    x, n, onehot = _site_features(grid)
    # start at the independence fit: alpha_k = log(T_k / T_K)
    theta0 = np.append(np.log(t[:-1] / t[-1]), 0.0)
    theta, _, _, _ = maximize(lambda th: _pll(th, x, n, onehot), theta0,
                              hess=lambda th: _pll(th, x, n, onehot, hessian=True)[2],
                              tol=tol, max_evaluations=max_evaluations)
    return FitReport(METHOD_PL, PottsParams.from_theta(theta), suff_stats(grid), True,
                     config={"tol": tol, "max_evaluations": max_evaluations},
                     wall_time=time.perf_counter() - start)


# --- MCMC-MLE approximations ------------------------------------------------


def _batch_g(batch) -> np.ndarray:
    g = batch.g if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if g.ndim != 2 or len(g) == 0:
        raise DegenerateDataError("empty sample batch")
    return g


def naive_loglik_ratio(theta, theta0, g_obs, batch, *, hessian: bool = False):
    """Importance-sampling estimate of ``l(theta) - l(theta0)`` and its gradient."""
    g = _batch_g(batch)
    delta = np.asarray(theta, dtype=float) - np.asarray(theta0, dtype=float)
    g_obs = np.asarray(g_obs.g if isinstance(g_obs, SuffStats) else g_obs, dtype=float)
    if delta.shape != (g.shape[1],) or g_obs.shape != delta.shape:
        raise DimensionError("theta, theta0, g_obs and batch dimensions disagree")
    eta = g @ delta
    value = float(delta @ g_obs - (logsumexp(eta) - np.log(len(g))))
    w = softmax(eta)
    wmean = w @ g
    grad = g_obs - wmean
    if not hessian:
        return value, grad
    d = g - wmean
    return value, grad, -(d * w[:, None]).T @ d


def _summary_of(summary) -> StatsSummary:
    return summary if isinstance(summary, StatsSummary) else StatsSummary.from_samples(summary)


def cumulant_approx(theta, theta0, g_obs, summary) -> float:
    """Second-order cumulant expansion of ``l(theta) - l(theta0)``."""
    summary = _summary_of(summary)
    delta = np.asarray(theta, dtype=float) - np.asarray(theta0, dtype=float)
    g_obs = np.asarray(g_obs.g if isinstance(g_obs, SuffStats) else g_obs, dtype=float)
    if delta.shape != summary.mean.shape or g_obs.shape != delta.shape:
        raise DimensionError("theta, theta0, g_obs and summary dimensions disagree")
    return float(delta @ (g_obs - summary.mean) - 0.5 * delta @ summary.cov @ delta)


def cumulant_maximizer(theta0, g_obs, summary) -> np.ndarray:
    """Closed-form maximizer ``theta0 + cov^{-1} (g_obs - mean)``.

    A ridge ``1e-8 * trace / dim`` is added when the covariance condition
    number exceeds ``1e12``.
    """
    summary = _summary_of(summary)
    theta0 = np.asarray(theta0, dtype=float)
    g_obs = np.asarray(g_obs.g if isinstance(g_obs, SuffStats) else g_obs, dtype=float)
    if theta0.shape != summary.mean.shape or g_obs.shape != theta0.shape:
        raise DimensionError("theta0, g_obs and summary dimensions disagree")
    cov = summary.cov
    trace = float(np.trace(cov))
    if not np.isfinite(trace) or trace <= 1e-12:
        raise DegenerateDataError("sample statistics are constant: covariance is numerically zero")
    if np.linalg.cond(cov) > 1e12:
        cov = cov + (1e-8 * trace / len(theta0)) * np.eye(len(theta0))
    return theta0 + np.linalg.solve(cov, g_obs - summary.mean)


# --- partial stepping -------------------------------------------------------


@dataclass(frozen=True)
class SteppingConfig:
    """Settings for partial stepping and the final MCMC-MLE polish.

    ``sample_size``/``burn_in``/``thinning`` apply to every stepping batch,
    ``final_sample_size`` to the batch used by the last optimization and
    ``check_sample_size`` to the fresh batch of the moment check.
    """

    sample_size: int = 500
    burn_in: int = 500
    thinning: int = 1
    final_sample_size: int = 1000
    check_sample_size: int = 1000
    max_iterations: int = 50
    approx: str = "cumulant"
    margin_anchor: str = "paper"
    gamma_min: float = 1e-3
    gamma_tol: float = 1e-3
    method: str = "gibbs"
    swap_rule: str = "metropolis"
    site_update: str = "auto"
    chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.approx not in ("cumulant", "naive"):
            raise ValueError("approx must be 'cumulant' or 'naive'")
        if self.margin_anchor not in ANCHORS:
            raise ValueError(f"margin_anchor must be one of {ANCHORS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.swap_rule not in SWAP_RULES:
            raise ValueError(f"swap_rule must be one of {SWAP_RULES}")
        if self.site_update not in SITE_UPDATES:
            raise ValueError(f"site_update must be one of {SITE_UPDATES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def chain(self, seed: int, sample_size: Optional[int] = None) -> ChainConfig:
        return ChainConfig(sample_size=sample_size or self.sample_size, burn_in=self.burn_in,
                           thinning=self.thinning, seed=seed, swap_rule=self.swap_rule,
                           site_update=self.site_update,
                           chains=self.chains)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def derived_seed(seed: int, *stream: int) -> int:
    """Deterministic 64-bit seed for a sub-stream of a run."""
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1, np.uint64)[0])


_STREAM_STEP, _STREAM_FINAL, _STREAM_CHECK = 1, 2, 3


def _as_theta(theta, num_colors):
    theta = theta.theta if isinstance(theta, PottsParams) else np.asarray(theta, dtype=float)
    if theta.shape != (num_colors,):
        raise DimensionError(f"theta must have length {num_colors}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    return theta


def _sampling_params(theta) -> PottsParams:
    theta = np.array(theta, dtype=float)
    # samplers need beta >= 0; negative-beta proposals are clipped to the boundary
    theta[-1] = max(theta[-1], 0.0)
    return PottsParams.from_theta(theta)


def _draw(grid, theta, tapering, config: SteppingConfig, seed, size=None):
    method = "gibbs" if tapering is not None else config.method
    return sample_like(grid, _sampling_params(theta), config.chain(seed, size),
                       tapering=tapering, method=method)


def partial_stepping(grid: Grid, theta_init, *, tapering: Optional[TaperingSpec] = None,
                     config: SteppingConfig = SteppingConfig()) -> SteppingTrace:
    """Move ``theta0`` toward the MLE through pseudo-observations on the sample hull.

    Stops as converged after two consecutive full steps (``gamma = 1``), or
    as not converged after ``max_iterations`` or when no admissible step
    exists.  Non-convergence is returned, not raised.
    """
    g_obs = suff_stats(grid).g
    theta0 = _as_theta(theta_init, grid.num_colors)
    iterations = []
    full_steps = 0
    reason = "max_iterations"
    converged = False
    for it in range(config.max_iterations):
        seed = derived_seed(config.seed, _STREAM_STEP, it)
        batch = _draw(grid, theta0, tapering, config, seed)
        g = batch.g
        mean = g.mean(axis=0)
        mean_t = batch.t.mean(axis=0)
        try:
            gamma = convex_hull_gamma(g_obs, g, mean, anchor=config.margin_anchor,
                                      gamma_min=config.gamma_min, tol=config.gamma_tol)
        except SteppingStallError:
            iterations.append(SteppingIteration(theta0, mean, float("nan"), mean, mean_t, None, seed))
            reason = "stall"
            break
        zeta = gamma * g_obs + (1.0 - gamma) * mean
        try:
            if config.approx == "cumulant":
                theta_next = cumulant_maximizer(theta0, zeta, StatsSummary.from_samples(g))
            else:
                theta_next, _, _, _ = maximize(
                    lambda th: naive_loglik_ratio(th, theta0, zeta, g), theta0,
                    hess=lambda th: naive_loglik_ratio(th, theta0, zeta, g, hessian=True)[2])
        except DegenerateDataError:
            iterations.append(SteppingIteration(theta0, mean, gamma, zeta, mean_t, None, seed))
            reason = "degenerate_batch"
            break
        except ConvergenceError as err:
            theta_next = err.best
        theta_next = np.array(theta_next, dtype=float)
        theta_next[-1] = max(theta_next[-1], 0.0)
        iterations.append(SteppingIteration(theta0, mean, gamma, zeta, mean_t, theta_next, seed))
        full_steps = full_steps + 1 if gamma == 1.0 else 0
        theta0 = theta_next
        if not np.all(np.isfinite(theta0)):
            reason = "diverged"
            break
        if full_steps >= 2:
            converged = True
            reason = "converged"
            break
    return SteppingTrace(iterations, converged, reason, theta0)


def moment_check(grid: Grid, params: PottsParams, *, tapering: Optional[TaperingSpec] = None,
                 config: SteppingConfig = SteppingConfig(), seed: Optional[int] = None,
                 batch: Optional[SampleBatch] = None) -> MomentCheck:
    """Compare a fresh batch mean of ``G`` at ``params`` with the observed ``G``."""
    if batch is None:
        seed = derived_seed(config.seed, _STREAM_CHECK) if seed is None else seed
        batch = _draw(grid, params.theta, tapering, config, seed, config.check_sample_size)
    g = batch.g
    return MomentCheck(suff_stats(grid).g, g.mean(axis=0), monte_carlo_se(g), len(g),
                       int(batch.config.seed))


def mcmcmle(grid: Grid, theta_init=None, *, tapering: Optional[TaperingSpec] = None,
            config: SteppingConfig = SteppingConfig()) -> FitReport:
    """Approximate MLE for the classical (``tapering=None``) or tapered model.

    ``theta_init`` defaults to the pseudo-likelihood estimate.  After
    partial stepping converges, a larger batch is drawn at the final
    ``theta0`` and the naive log-likelihood ratio is maximized against the
    observed statistics.  When stepping does not converge the report carries
    ``converged=False`` and the last ``theta0`` as its estimate.
    """
    start = time.perf_counter()
    _check_colors_present(grid)
    if tapering is not None:
        tapering.check(grid.num_colors, grid.size)
    initial = None
    if theta_init is None:
        initial = fit_pseudolikelihood(grid).estimates
        theta_init = initial.theta
    elif isinstance(theta_init, PottsParams):
        initial = theta_init
    theta_init = _as_theta(theta_init, grid.num_colors)
    if initial is None:
        initial = _sampling_params(theta_init)
    observed = suff_stats(grid)
    trace = partial_stepping(grid, theta_init, tapering=tapering, config=config)
    final_batch = None
    theta_hat = trace.theta_final
    converged = trace.converged
    if converged:
        seed = derived_seed(config.seed, _STREAM_FINAL)
        final_batch = _draw(grid, trace.theta_final, tapering, config, seed,
                            config.final_sample_size)
        g = final_batch.g
        try:
            theta_hat, _, _, _ = maximize(
                lambda th: naive_loglik_ratio(th, trace.theta_final, observed.g, g),
                trace.theta_final,
                hess=lambda th: naive_loglik_ratio(th, trace.theta_final, observed.g, g,
                                                   hessian=True)[2])
        except ConvergenceError as err:
            theta_hat = err.best
            converged = False
    estimates = _sampling_params(theta_hat)
    check_batch = _draw(grid, estimates.theta, tapering, config,
                        derived_seed(config.seed, _STREAM_CHECK), config.check_sample_size)
    check = moment_check(grid, estimates, batch=check_batch)
    cfg = config.to_dict()
    return FitReport(METHOD_TAPERED if tapering is not None else METHOD_POTTS, estimates,
                     observed, converged, seed=config.seed, tapering=tapering, trace=trace,
                     moment_check=check, initial=initial, config=cfg,
                     wall_time=time.perf_counter() - start, final_batch=final_batch,
                     check_batch=check_batch)


def with_seed(config: SteppingConfig, seed: int) -> SteppingConfig:
    return replace(config, seed=int(seed))
