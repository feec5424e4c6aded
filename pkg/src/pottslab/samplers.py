"""MCMC samplers for the classical and tapered Potts models.

Two kernels are available for the classical model: raster-scan single-site
Metropolis ("Gibbs") updates followed by a global color-relabeling swap, and
Swendsen-Wang cluster updates.  The tapered model only has the first one,
since its tapering term couples every site through the color counts.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DimensionError
from .lattice import (PERIODIC, Grid, PottsParams, SuffStats, TaperingSpec, _check_dims,
                      _check_params, edge_list, neighbor_table, suff_stats)

SWAP_RULES = ("metropolis", "paper")
SITE_UPDATES = ("auto", "metropolis", "heat_bath")
METHODS = ("gibbs", "swendsen_wang")

# random numbers drawn per block; bounds memory for long chains
_BLOCK_CELLS = 1 << 18


@dataclass(frozen=True)
class ChainConfig:
    """Run length and reproducibility settings for one sampling run.

    ``thinning`` counts iterations (one sweep plus one swap, or one cluster
    update) between retained draws.  ``swap_rule="paper"`` accepts a swap
    only when its odds are at least one; ``"metropolis"`` accepts with
    probability ``min(1, odds)``.  ``site_update="metropolis"`` proposes a
    uniformly chosen other color at each site; ``"heat_bath"`` draws the
    site from its full conditional.  With two colors the Metropolis proposal
    is a forced flip and the resulting chain is periodic at ``beta = 0`` and
    can be reducible on small lattices, so ``"auto"`` uses heat bath for
    ``K = 2`` and Metropolis otherwise.
    """

    sample_size: int = 500
    burn_in: int = 500
    thinning: int = 1
    seed: int = 0
    keep_grids: bool = False
    swap_rule: str = "metropolis"
    chains: int = 1
    site_update: str = "auto"

    def __post_init__(self):
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.swap_rule not in SWAP_RULES:
            raise ValueError(f"swap_rule must be one of {SWAP_RULES}")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if self.site_update not in SITE_UPDATES:
            raise ValueError(f"site_update must be one of {SITE_UPDATES}")

    def to_dict(self) -> dict:
        return {"sample_size": self.sample_size, "burn_in": self.burn_in,
                "thinning": self.thinning, "seed": self.seed, "keep_grids": self.keep_grids,
                "swap_rule": self.swap_rule, "chains": self.chains,
                "site_update": self.site_update}


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Retained draws from one sampling run.

    ``t`` has shape ``(n, K)`` and ``s`` shape ``(n,)``; ``grids`` (0-based,
    shape ``(n, H, W)``) is present only when the config asked for it.
    """

    t: np.ndarray
    s: np.ndarray
    width: int
    height: int
    boundary: str
    params: PottsParams
    config: ChainConfig
    method: str = "gibbs"
    tapering: Optional[TaperingSpec] = None
    grids: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.s)

    @property
    def num_colors(self) -> int:
        return self.t.shape[1]

    @property
    def g(self) -> np.ndarray:
        """Statistic matrix with rows ``(t_1, ..., t_{K-1}, s)``."""
        return np.column_stack([self.t[:, :-1], self.s]).astype(float)

    @property
    def stats(self) -> list:
        return [SuffStats(tuple(int(v) for v in t), int(s)) for t, s in zip(self.t, self.s)]

    def grid(self, i: int) -> Grid:
        if self.grids is None:
            raise ValueError("batch was drawn with keep_grids=False")
        return Grid(self.grids[i], self.num_colors, self.boundary)


def _check_tapering(tapering, num_colors, num_cells):
    if tapering is not None:
        tapering.check(num_colors, num_cells)


def _field_arrays(params: PottsParams, tapering: Optional[TaperingSpec]):
    if tapering is None:
        k = params.num_colors
        return params.alpha_full, np.zeros(k), np.zeros(k)
    return params.alpha_full, tapering.tau_full, tapering.center_full


# --- single moves on a Grid -------------------------------------------------


def resolve_site_update(update: str, num_colors: int) -> str:
    """Concrete rule for ``update``; ``"auto"`` means heat bath for two colors only."""
    if update not in SITE_UPDATES:
        raise ValueError(f"site update must be one of {SITE_UPDATES}")
    if update == "auto":
        return "heat_bath" if num_colors == 2 else "metropolis"
    return update


def log_acceptance_ratio(grid: Grid, params: PottsParams, site: int, new_color: int,
                         tapering: Optional[TaperingSpec] = None) -> float:
    """Log of the single-site acceptance numerator for a proposed recoloring."""
    _check_params(params, grid.num_colors)
    _check_tapering(tapering, grid.num_colors, grid.size)
    alpha, tau, center = _field_arrays(params, tapering)
    counts = np.bincount(grid.flat, minlength=grid.num_colors).astype(np.int64)
    logr, _ = _kernels.site_log_ratio(grid.flat, grid.neighbors(), alpha, params.beta,
                                      tau, center, counts, site, new_color)
    return float(logr)


def gibbs_sweep(grid: Grid, params: PottsParams, rng: np.random.Generator,
                tapering: Optional[TaperingSpec] = None, update: str = "auto") -> Grid:
    """One raster sweep of site updates; returns the new grid.

    ``update`` is a site-update rule as in :class:`ChainConfig`.
    """
    _check_params(params, grid.num_colors)
    _check_tapering(tapering, grid.num_colors, grid.size)
    update = resolve_site_update(update, grid.num_colors)
    alpha, tau, center = _field_arrays(params, tapering)
    cells = grid.flat.copy()
    counts = np.bincount(cells, minlength=grid.num_colors).astype(np.int64)
    if update == "heat_bath":
        _kernels.heat_bath_sweep(cells, grid.neighbors(), alpha, params.beta, tau, center,
                                 counts, rng.random(grid.size))
    else:
        offsets = rng.integers(1, grid.num_colors, size=grid.size)
        uniforms = rng.random(grid.size)
        _kernels.gibbs_sweep(cells, grid.neighbors(), alpha, params.beta, tau, center, counts,
                             offsets, uniforms)
    return grid.with_cells(cells)


def symmetric_swap(grid: Grid, params: PottsParams, rng: np.random.Generator,
                   tapering: Optional[TaperingSpec] = None, rule: str = "metropolis") -> Grid:
    """Propose a uniformly random relabeling of all colors."""
    _check_params(params, grid.num_colors)
    _check_tapering(tapering, grid.num_colors, grid.size)
    if rule not in SWAP_RULES:
        raise ValueError(f"rule must be one of {SWAP_RULES}")
    alpha, tau, center = _field_arrays(params, tapering)
    cells = grid.flat.copy()
    counts = np.bincount(cells, minlength=grid.num_colors).astype(np.int64)
    perm = rng.permutation(grid.num_colors)
    u = rng.random()
    _kernels.symmetric_swap(cells, alpha, tau, center, counts, perm, u, rule == "metropolis")
    return grid.with_cells(cells)


def swendsen_wang_step(grid: Grid, params: PottsParams, rng: np.random.Generator) -> Grid:
    _check_params(params, grid.num_colors)
    cells = grid.flat.copy()
    edges = grid.edges()
    work = np.empty(grid.size, dtype=np.int64), np.empty(grid.size, dtype=np.int64)
    _kernels.swendsen_wang_step(cells, edges, params.alpha_full, -np.expm1(-params.beta),
                                rng.random(len(edges)), rng.random(grid.size), *work)
    return grid.with_cells(cells)


# --- chains -----------------------------------------------------------------


def chain_rng(seed: int, chain: int = 0, *stream) -> np.random.Generator:
    """Independent generator for ``(seed, chain, *stream)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(chain), *map(int, stream)]))


def max_threads() -> int:
    env = os.environ.get("POTTSLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_chain(method, width, height, boundary, params, tapering, config, size, rng):
    k = params.num_colors
    m = width * height
    total = config.burn_in + size * config.thinning
    cells = np.full(m, rng.integers(k), dtype=np.int64)
    counts = np.bincount(cells, minlength=k).astype(np.int64)
    edges = edge_list(width, height, boundary)
    out_t = np.empty((size, k), dtype=np.int64)
    out_s = np.empty(size, dtype=np.int64)
    out_cells = np.empty((size if config.keep_grids else 0, m), dtype=np.int16)
    out_pos = np.zeros(1, dtype=np.int64)
    alpha, tau, center = _field_arrays(params, tapering)
    block = max(1, _BLOCK_CELLS // m)

    if method == "gibbs":
        nbr = neighbor_table(width, height, boundary)
        state_s = np.array([_kernels.count_concordant(cells, edges)], dtype=np.int64)
        metropolis = config.swap_rule == "metropolis"
        heat_bath = resolve_site_update(config.site_update, k) == "heat_bath"
        for start in range(0, total, block):
            n = min(block, total - start)
            offsets = (np.empty((n, 0), dtype=np.int64) if heat_bath
                       else rng.integers(1, k, size=(n, m)))
            uniforms = rng.random((n, m))
            perms = np.argsort(rng.random((n, k)), axis=1)
            swap_u = rng.random(n)
            _kernels.gibbs_chain(cells, nbr, alpha, params.beta, tau, center, counts, state_s,
                                 offsets, uniforms, perms, swap_u, metropolis, heat_bath,
                                 start, config.burn_in, config.thinning,
                                 out_t, out_s, out_cells, config.keep_grids, out_pos)
    else:
        p_bond = -np.expm1(-params.beta)
        parent = np.empty(m, dtype=np.int64)
        csize = np.empty(m, dtype=np.int64)
        for start in range(0, total, block):
            n = min(block, total - start)
            edge_u = rng.random((n, len(edges)))
            site_u = rng.random((n, m))
            _kernels.swendsen_wang_chain(cells, edges, alpha, p_bond, counts, edge_u, site_u,
                                         parent, csize, start, config.burn_in, config.thinning,
                                         out_t, out_s, out_cells, config.keep_grids, out_pos)
    assert out_pos[0] == size
    return out_t, out_s, out_cells


def _split(total: int, parts: int) -> list:
    return [total // parts + (1 if i < total % parts else 0) for i in range(parts)]


def draw(width: int, height: int, num_colors: int, params: PottsParams, config: ChainConfig,
         *, tapering: Optional[TaperingSpec] = None, method: str = "gibbs",
         boundary: str = PERIODIC) -> SampleBatch:
    """Sample statistics (and optionally grids) from the classical or tapered model.

    With ``config.chains > 1`` the sample is split across independent chains,
    each seeded from ``(seed, chain index)`` and run on a worker thread; the
    result is concatenated in chain order and does not depend on scheduling.
    """
    _check_dims(width, height, boundary)
    _check_params(params, num_colors)
    _check_tapering(tapering, num_colors, width * height)
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if method == "swendsen_wang" and tapering is not None:
        raise ValueError("Swendsen-Wang is not available for the tapered model")
    sizes = [n for n in _split(config.sample_size, config.chains) if n > 0]

    def job(c):
        return _run_chain(method, width, height, boundary, params, tapering, config,
                          sizes[c], chain_rng(config.seed, c))

    if len(sizes) == 1:
        parts = [job(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(len(sizes), max_threads())) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    t = np.concatenate([p[0] for p in parts])
    s = np.concatenate([p[1] for p in parts])
    grids = None
    if config.keep_grids:
        grids = np.concatenate([p[2] for p in parts]).reshape(-1, height, width)
    return SampleBatch(t, s, width, height, boundary, params, config, method, tapering, grids)


def gibbs_sample(width: int, height: int, num_colors: int, params: PottsParams,
                 config: ChainConfig, *, boundary: str = PERIODIC) -> SampleBatch:
    """Classical model: sweep plus symmetric swap per iteration, monochrome start."""
    return draw(width, height, num_colors, params, config, boundary=boundary)


def tapered_gibbs_sample(width: int, height: int, num_colors: int, params: PottsParams,
                         tapering: TaperingSpec, config: ChainConfig, *,
                         boundary: str = PERIODIC) -> SampleBatch:
    if tapering is None:
        raise DimensionError("tapered sampler needs a TaperingSpec")
    return draw(width, height, num_colors, params, config, tapering=tapering, boundary=boundary)


def swendsen_wang_sample(width: int, height: int, num_colors: int, params: PottsParams,
                         config: ChainConfig, *, boundary: str = PERIODIC) -> SampleBatch:
    return draw(width, height, num_colors, params, config, method="swendsen_wang",
                boundary=boundary)


def sample_like(grid: Grid, params: PottsParams, config: ChainConfig, *,
                tapering: Optional[TaperingSpec] = None, method: str = "gibbs") -> SampleBatch:
    """Sample on a lattice with the same shape and boundary as ``grid``."""
    return draw(grid.width, grid.height, grid.num_colors, params, config,
                tapering=tapering, method=method, boundary=grid.boundary)


def quench(width: int, height: int, num_colors: int, params: PottsParams, sweeps: int,
           rng: np.random.Generator, *, boundary: str = PERIODIC, update: str = "auto") -> Grid:
    """Uniformly random start followed by ``sweeps`` local sweeps and no swaps.

    At strong interaction this freezes into a multi-domain pattern far from
    equilibrium, a useful stand-in for data the classical model fits badly.
    """
    _check_dims(width, height, boundary)
    _check_params(params, num_colors)
    if sweeps < 0:
        raise ValueError("sweeps must be non-negative")
    heat_bath = resolve_site_update(update, num_colors) == "heat_bath"
    m = width * height
    cells = rng.integers(num_colors, size=m).astype(np.int64)
    counts = np.bincount(cells, minlength=num_colors).astype(np.int64)
    nbr = neighbor_table(width, height, boundary)
    alpha, tau, center = _field_arrays(params, None)
    for _ in range(sweeps):
        if heat_bath:
            _kernels.heat_bath_sweep(cells, nbr, alpha, params.beta, tau, center, counts,
                                     rng.random(m))
        else:
            offsets = rng.integers(1, num_colors, size=m)
            uniforms = rng.random(m)
            _kernels.gibbs_sweep(cells, nbr, alpha, params.beta, tau, center, counts,
                                 offsets, uniforms)
    return Grid(cells.reshape(height, width), num_colors, boundary)


def with_seed(config: ChainConfig, seed: int) -> ChainConfig:
    return replace(config, seed=int(seed))


__all__ = [
    "ChainConfig", "SampleBatch", "gibbs_sweep", "symmetric_swap", "swendsen_wang_step",
    "gibbs_sample", "tapered_gibbs_sample", "swendsen_wang_sample", "draw", "sample_like",
    "log_acceptance_ratio", "chain_rng", "quench",
]
