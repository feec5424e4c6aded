"""Lack-of-fit diagnosis and selection of the tapering strength."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import TauSearchError
from .inference import (FitReport, SteppingConfig, SteppingTrace, derived_seed,
                        fit_pseudolikelihood, mcmcmle)
from .lattice import Grid, PottsParams, TaperingSpec, suff_stats
from .samplers import SampleBatch

UNIMODAL_BOUND = 5.0 / 9.0
MIN_BIMODALITY_SAMPLES = 100

CLASSICAL_OK = "classical_ok"
NEEDS_TAPERING = "needs_tapering"
ROUTES = ("auto", "bimodality", "convergence")

_STREAM_TAU = 10


def bimodality_coefficient(samples) -> float:
    """``(skewness^2 + 1) / kurtosis`` from central sample moments.

    Kurtosis is the raw (non-excess) ``m4 / m2^2``, so a uniform sample gives
    5/9, a normal one 1/3 and a symmetric two-point one 1.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < MIN_BIMODALITY_SAMPLES:
        raise ValueError(f"need at least {MIN_BIMODALITY_SAMPLES} samples, got {len(x)}")
    d = x - x.mean()
    m2 = np.mean(d**2)
    if m2 <= 0:
        raise ValueError("samples have zero variance")
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2
    return float((skew**2 + 1.0) / kurt)


def is_unimodal(samples) -> bool:
    return bimodality_coefficient(samples) <= UNIMODAL_BOUND


def color_bimodality(batch: SampleBatch) -> list:
    """Bimodality coefficient of each non-reference color count; ``nan`` if constant."""
    out = []
    for k in range(batch.num_colors - 1):
        try:
            out.append(bimodality_coefficient(batch.t[:, k]))
        except ValueError:
            out.append(float("nan"))
    return out


def proportion_ratio(grid: Grid) -> float:
    t = np.asarray(suff_stats(grid).t, dtype=float)
    return float(t.max() / t.min()) if t.min() > 0 else float("inf")


@dataclass(frozen=True)
class TauSearchConfig:
    tau_init: float = 0.002
    shrink: float = 0.9
    max_steps: int = 30
    route: str = "auto"
    proportion_ratio_threshold: float = 1.5

    def __post_init__(self):
        if not self.tau_init > 0:
            raise ValueError("tau_init must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class DiagnosisReport:
    recommendation: str
    reasons: tuple
    converged: bool
    gammas: tuple
    oscillation: tuple
    oscillating: bool
    proportion_ratio: float
    bimodality: Optional[tuple] = None
    pl_beta: Optional[float] = None

    def to_dict(self) -> dict:
        return {"recommendation": self.recommendation, "reasons": list(self.reasons),
                "converged": self.converged, "gammas": list(self.gammas),
                "oscillation_per_color": list(self.oscillation), "oscillating": self.oscillating,
                "proportion_ratio": self.proportion_ratio,
                "bimodality": None if self.bimodality is None else list(self.bimodality),
                "pl_beta": self.pl_beta}


def oscillation_amplitude(trace: SteppingTrace) -> np.ndarray:
    """Largest change of each color's batch mean between consecutive iterations."""
    mt = trace.mean_t
    if len(mt) < 2:
        return np.zeros(mt.shape[1] if mt.ndim == 2 else 0)
    return np.abs(np.diff(mt, axis=0)).max(axis=0)


def diagnose(grid: Grid, stepping: SteppingTrace, *, pl_fit: Optional[FitReport] = None,
             batch: Optional[SampleBatch] = None,
             search: TauSearchConfig = TauSearchConfig()) -> DiagnosisReport:
    """Decide whether the classical model fits, from a classical stepping attempt.

    Tapering is recommended when stepping did not converge, or when it
    converged on data with near-equal color proportions while some color
    count is not unimodal at the fitted parameters (``batch``).
    """
    amp = oscillation_amplitude(stepping)
    oscillating = bool(np.any(amp > 0.5 * grid.size))
    ratio = proportion_ratio(grid)
    reasons = []
    bimod = None
    if not stepping.converged:
        reasons.append(f"partial stepping did not converge ({stepping.stop_reason})")
    if oscillating:
        reasons.append("batch color means swing by more than half the lattice between iterations")
    if batch is not None:
        bimod = tuple(color_bimodality(batch))
    if stepping.converged and ratio <= search.proportion_ratio_threshold and bimod is not None:
        if any(b > UNIMODAL_BOUND for b in bimod):
            reasons.append("color proportions are near-equal and a fitted color count is not unimodal")
    rec = NEEDS_TAPERING if (not stepping.converged or reasons) else CLASSICAL_OK
    return DiagnosisReport(rec, tuple(reasons), stepping.converged,
                           tuple(float(g) for g in stepping.gammas), tuple(float(a) for a in amp),
                           oscillating, ratio, bimod,
                           None if pl_fit is None else pl_fit.estimates.beta)


def assess(grid: Grid, config: SteppingConfig = SteppingConfig(),
           search: TauSearchConfig = TauSearchConfig()):
    """Pseudo-likelihood start, classical MCMC-MLE attempt and diagnosis.

    Returns ``(pl_fit, classical_fit, diagnosis)``.
    """
    pl = fit_pseudolikelihood(grid)
    fit = mcmcmle(grid, pl.estimates, config=config)
    diag = diagnose(grid, fit.trace, pl_fit=pl,
                    batch=fit.check_batch if fit.converged else None, search=search)
    fit.diagnosis = diag.to_dict()
    return pl, fit, diag


@dataclass(frozen=True)
class TauStep:
    tau: float
    converged: bool
    bimodality: tuple
    criterion: bool
    estimates: PottsParams

    def to_dict(self) -> dict:
        return {"tau": self.tau, "converged": self.converged,
                "bimodality": [None if np.isnan(b) else b for b in self.bimodality],
                "criterion_holds": self.criterion, "estimates": self.estimates.to_dict()}


@dataclass(eq=False)
class TauSearchResult:
    tau: float
    report: FitReport
    route: str
    steps: list = field(default_factory=list)
    floor_not_found: bool = False

    def to_dict(self) -> dict:
        return {"tau": self.tau, "route": self.route, "floor_not_found": self.floor_not_found,
                "steps": [s.to_dict() for s in self.steps],
                "report": self.report.to_dict(include_timing=False)}


def resolve_route(grid: Grid, search: TauSearchConfig) -> str:
    if search.route != "auto":
        return search.route
    if proportion_ratio(grid) <= search.proportion_ratio_threshold:
        return "bimodality"
    return "convergence"


def choose_tau(grid: Grid, search: TauSearchConfig = TauSearchConfig(),
               config: SteppingConfig = SteppingConfig(),
               theta_init=None) -> TauSearchResult:
    """Smallest common tapering strength on the shrinking sequence that still passes.

    The center is the observed color counts.  Each candidate is fitted
    (warm-started from the previous passing fit) and judged by the route's
    criterion: convergence of partial stepping, or additionally unimodality
    of every fitted color count.  The search stops at the first failure and
    returns the previous candidate.
    """
    route = resolve_route(grid, search)
    if theta_init is None:
        theta_init = fit_pseudolikelihood(grid).estimates
    steps = []
    best = None
    tau = search.tau_init
    for j in range(search.max_steps):
        tapering = TaperingSpec.around(grid, tau)
        cfg = replace(config, seed=derived_seed(config.seed, _STREAM_TAU, j))
        fit = mcmcmle(grid, theta_init, tapering=tapering, config=cfg)
        bimod = tuple(color_bimodality(fit.check_batch))
        ok = fit.converged
        if route == "bimodality":
            ok = ok and all(b <= UNIMODAL_BOUND for b in bimod)
        steps.append(TauStep(tau, fit.converged, bimod, ok, fit.estimates))
        if not ok:
            if best is None:
                raise TauSearchError(
                    f"tau_init={search.tau_init} already fails the {route} criterion; "
                    "start from a larger tau_init")
            break
        best = (tau, fit)
        theta_init = fit.estimates
        tau *= search.shrink
    else:
        return TauSearchResult(best[0], best[1], route, steps, floor_not_found=True)
    return TauSearchResult(best[0], best[1], route, steps)
