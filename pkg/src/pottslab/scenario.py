"""Benchmark lattices from thresholded Gaussian processes.

Each of the K classes gets an independent Gaussian field with a constant mean
and a gamma-exponential covariance over cell centroids; every cell takes the
class whose field is largest there.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.spatial.distance import cdist

from .lattice import PERIODIC, Grid


@dataclass(frozen=True)
class ScenarioConfig:
    width: int = 30
    height: int = 30
    num_classes: int = 4
    mu: tuple = (0.0, 0.0, 0.0, 0.0)
    length: float = 1.5
    exponent: float = 1.5
    nugget: float = 0.25
    seed: int = 0
    boundary: str = PERIODIC
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        if self.num_classes < 2:
            raise ValueError("num_classes must be at least 2")
        if len(self.mu) != self.num_classes:
            raise ValueError("mu needs one mean per class")
        if self.length <= 0:
            raise ValueError("length must be positive")
        if not 0 < self.exponent <= 2:
            raise ValueError("kernel exponent must lie in (0, 2]")
        if self.nugget < 0:
            raise ValueError("nugget must be non-negative")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mu"] = list(self.mu)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def gamma_exp_cov(config: ScenarioConfig) -> np.ndarray:
    """``exp(-(d_ij / l)^gamma) + nugget * I`` over unit-spaced cell centroids."""
    rows, cols = np.divmod(np.arange(config.width * config.height), config.width)
    xy = np.column_stack([cols, rows]).astype(float)
    d = cdist(xy, xy)
    cov = np.exp(-((d / config.length) ** config.exponent))
    cov[np.diag_indices_from(cov)] = 1.0 + config.nugget
    return cov


def generate_scenario(config: ScenarioConfig) -> Grid:
    """Draw the K latent fields and label every cell by the arg-max class.

    Ties go to the lowest class index.  Raises ``LinAlgError`` with a hint
    when the covariance cannot be factorized (use a positive nugget).
    """
    cov = gamma_exp_cov(config)
    try:
        chol = cholesky(cov, lower=True)
    except LinAlgError as err:
        raise LinAlgError(f"covariance factorization failed ({err}); add a positive nugget") from err
    rng = np.random.default_rng(config.seed)
    eps = rng.standard_normal((config.num_classes, cov.shape[0]))
    z = np.asarray(config.mu)[:, None] + eps @ chol.T
    labels = np.argmax(z, axis=0)
    return Grid(labels.reshape(config.height, config.width), config.num_classes, config.boundary)


# (length, nugget) per correlation level
CORRELATION_LEVELS = {
    "moderate": (1.5, 0.25),
    "strong_noise": (6.0, 0.05),
    "strong_minimal_noise": (8.0, 0.01),
}


def builtin_scenarios(seed: int = 0) -> dict:
    """The six benchmark presets on a 30x30 grid with four classes.

    Presets 1-3 have equal class means, 4-6 means ``(1, 0.5, 0, 0)``; within
    each triple the correlation goes moderate, strong with noise, strong with
    minimal noise.
    """
    means: Sequence = ((0.0, 0.0, 0.0, 0.0), (1.0, 0.5, 0.0, 0.0))
    out = {}
    i = 1
    for mu in means:
        for level, (length, nugget) in CORRELATION_LEVELS.items():
            out[i] = ScenarioConfig(30, 30, 4, mu, length, 1.5, nugget, seed,
                                    name=f"scenario-{i}-{level}")
            i += 1
    return out
