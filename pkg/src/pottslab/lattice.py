"""Lattice representation, sufficient statistics and the enumeration oracle.

Colors are 0-based inside the package (``0..K-1``) and 1-based in files and
reports.  The neighborhood is the 4-nearest (rook) adjacency and the
concordance statistic ``S`` counts every unordered neighbor pair once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionError, EnumerationCapError

PERIODIC = "periodic"
FREE = "free"
BOUNDARIES = (PERIODIC, FREE)

DEFAULT_ENUMERATION_CAP = 10**7


def _check_dims(width: int, height: int, boundary: str) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"grid dimensions must be positive, got {width}x{height}")
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    if boundary == PERIODIC and min(width, height) < 3:
        raise ValueError("periodic boundary requires width and height >= 3")


@lru_cache(maxsize=64)
def neighbor_table(width: int, height: int, boundary: str = PERIODIC) -> np.ndarray:
    """Return an ``(M, 4)`` table of rook neighbors, ``-1`` where absent.

    Column order is left, right, up, down.  The returned array is read-only
    and shared between callers.
    """
    _check_dims(width, height, boundary)
    m = width * height
    nbr = np.full((m, 4), -1, dtype=np.int64)
    rows, cols = np.divmod(np.arange(m), width)
    periodic = boundary == PERIODIC
    for k, (dr, dc) in enumerate(((0, -1), (0, 1), (-1, 0), (1, 0))):
        r = rows + dr
        c = cols + dc
        if periodic:
            r %= height
            c %= width
            nbr[:, k] = r * width + c
        else:
            ok = (r >= 0) & (r < height) & (c >= 0) & (c < width)
            nbr[ok, k] = r[ok] * width + c[ok]
    nbr.flags.writeable = False
    return nbr


@lru_cache(maxsize=64)
def edge_list(width: int, height: int, boundary: str = PERIODIC) -> np.ndarray:
    """Return the ``(|E|, 2)`` array of unordered neighbor pairs ``i < j``."""
    nbr = neighbor_table(width, height, boundary)
    # right and down links enumerate every pair exactly once
    pairs = []
    for k in (1, 3):
        j = nbr[:, k]
        i = np.arange(len(j))
        ok = j >= 0
        pairs.append(np.stack([np.minimum(i[ok], j[ok]), np.maximum(i[ok], j[ok])], axis=1))
    edges = np.concatenate(pairs)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    edges.flags.writeable = False
    return edges


@dataclass(frozen=True, eq=False)
class Grid:
    """Rectangular lattice of color labels.

    ``cells`` has shape ``(height, width)`` and holds 0-based colors.  Use
    :meth:`from_labels` to build a grid from 1-based labels.
    """

    cells: np.ndarray
    num_colors: int
    boundary: str = PERIODIC

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64, copy=True)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-D array (height, width)")
        if self.num_colors < 2:
            raise ValueError("num_colors must be at least 2")
        _check_dims(cells.shape[1], cells.shape[0], self.boundary)
        if cells.size and (cells.min() < 0 or cells.max() >= self.num_colors):
            raise ValueError(f"cell values must lie in 1..{self.num_colors}")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "num_colors", int(self.num_colors))

    @classmethod
    def from_labels(cls, labels, num_colors: Optional[int] = None, boundary: str = PERIODIC) -> "Grid":
        """Build a grid from 1-based labels; ``num_colors`` defaults to the max label."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and labels.min() < 1:
            raise ValueError("labels are 1-based")
        if num_colors is None:
            num_colors = int(labels.max())
        return cls(labels - 1, num_colors, boundary)

    @classmethod
    def constant(cls, width: int, height: int, num_colors: int, color: int = 0,
                 boundary: str = PERIODIC) -> "Grid":
        return cls(np.full((height, width), color), num_colors, boundary)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def size(self) -> int:
        return self.cells.size

    @property
    def flat(self) -> np.ndarray:
        return self.cells.reshape(-1)

    @property
    def labels(self) -> np.ndarray:
        """1-based labels, shape ``(height, width)``."""
        return self.cells + 1

    def neighbors(self) -> np.ndarray:
        return neighbor_table(self.width, self.height, self.boundary)

    def edges(self) -> np.ndarray:
        return edge_list(self.width, self.height, self.boundary)

    def with_cells(self, cells) -> "Grid":
        return Grid(np.asarray(cells).reshape(self.height, self.width), self.num_colors, self.boundary)

    def recolor(self, site: int, color: int) -> "Grid":
        flat = self.flat.copy()
        flat[site] = color
        return self.with_cells(flat)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.num_colors == other.num_colors and self.boundary == other.boundary
                and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.num_colors, self.boundary, self.cells.shape, self.cells.tobytes()))

    def __repr__(self):
        return f"Grid({self.width}x{self.height}, K={self.num_colors}, boundary={self.boundary!r})"


@dataclass(frozen=True)
class SuffStats:
    """Color counts ``t`` (length K) and concordant pair count ``s``."""

    t: tuple
    s: int

    @property
    def num_colors(self) -> int:
        return len(self.t)

    @property
    def g(self) -> np.ndarray:
        """The statistic vector ``(t_1, ..., t_{K-1}, s)`` paired with ``theta``."""
        return np.array(self.t[:-1] + (self.s,), dtype=float)

    def to_dict(self) -> dict:
        out = {f"t_{k + 1}": int(v) for k, v in enumerate(self.t)}
        out["s"] = int(self.s)
        return out


@dataclass(frozen=True)
class PottsParams:
    """External field ``alpha`` (colors 1..K-1, reference color K has 0) and ``beta``."""

    alpha: tuple
    beta: float

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        beta = float(self.beta)
        if not all(math.isfinite(a) for a in alpha) or not math.isfinite(beta):
            raise ValueError("parameters must be finite")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_theta(cls, theta) -> "PottsParams":
        theta = np.asarray(theta, dtype=float)
        return cls(tuple(theta[:-1]), float(theta[-1]))

    @classmethod
    def zero(cls, num_colors: int, beta: float = 0.0) -> "PottsParams":
        return cls((0.0,) * (num_colors - 1), beta)

    @property
    def num_colors(self) -> int:
        return len(self.alpha) + 1

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.alpha + (self.beta,))

    @property
    def alpha_full(self) -> np.ndarray:
        return np.array(self.alpha + (0.0,))

    def to_dict(self) -> dict:
        return {"alpha": list(self.alpha), "beta": self.beta}


@dataclass(frozen=True)
class TaperingSpec:
    """Per-color tapering strength ``tau`` and center ``m`` for colors 1..K-1."""

    tau: tuple
    center: tuple

    def __post_init__(self):
        tau = tuple(float(v) for v in np.atleast_1d(self.tau))
        center = tuple(float(v) for v in np.atleast_1d(self.center))
        if len(tau) != len(center):
            raise DimensionError("tau and center must have the same length")
        if any(v < 0 or not math.isfinite(v) for v in tau):
            raise ValueError("tau entries must be finite and non-negative")
        if any(not math.isfinite(v) for v in center):
            raise ValueError("center entries must be finite")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "center", center)

    @classmethod
    def around(cls, grid: Grid, tau: float) -> "TaperingSpec":
        """Common ``tau`` for every color, centered on the grid's own counts."""
        t = suff_stats(grid).t
        return cls((float(tau),) * (grid.num_colors - 1), tuple(float(v) for v in t[:-1]))

    @property
    def num_colors(self) -> int:
        return len(self.tau) + 1

    @property
    def tau_full(self) -> np.ndarray:
        return np.array(self.tau + (0.0,))

    @property
    def center_full(self) -> np.ndarray:
        return np.array(self.center + (0.0,))

    def check(self, num_colors: int, num_cells: int) -> None:
        if self.num_colors != num_colors:
            raise DimensionError(f"tapering has {len(self.tau)} entries, expected {num_colors - 1}")
        if any(c < 0 or c > num_cells for c in self.center):
            raise ValueError(f"tapering center must lie in [0, {num_cells}]")

    def to_dict(self) -> dict:
        return {"tau": list(self.tau), "center": list(self.center)}


def _check_params(params: PottsParams, num_colors: int) -> None:
    if params.num_colors != num_colors:
        raise DimensionError(f"alpha has {len(params.alpha)} entries, expected {num_colors - 1}")


def suff_stats(grid: Grid) -> SuffStats:
    """Per-color counts and the number of concordant unordered neighbor pairs."""
    flat = grid.flat
    t = np.bincount(flat, minlength=grid.num_colors)
    e = grid.edges()
    s = int(np.count_nonzero(flat[e[:, 0]] == flat[e[:, 1]]))
    return SuffStats(tuple(int(v) for v in t), s)


def delta_s(grid: Grid, site: int, new_color: int) -> int:
    """Change in ``S`` if ``site`` is recolored to ``new_color`` (0-based)."""
    if not 0 <= site < grid.size:
        raise IndexError(f"site {site} out of range")
    if not 0 <= new_color < grid.num_colors:
        raise ValueError(f"color {new_color} out of range")
    flat = grid.flat
    old = flat[site]
    if new_color == old:
        return 0
    d = 0
    for j in grid.neighbors()[site]:
        if j >= 0:
            d += int(flat[j] == new_color) - int(flat[j] == old)
    return d


def tapering_penalty(t, tapering: TaperingSpec) -> float:
    """``sum_k tau_k (T_k - m_k)^2`` over colors 1..K-1."""
    t = np.asarray(t, dtype=float)[..., :-1]
    return np.sum(np.asarray(tapering.tau) * (t - np.asarray(tapering.center)) ** 2, axis=-1)


def unnormalized_log_prob(grid: Grid, params: PottsParams,
                          tapering: Optional[TaperingSpec] = None) -> float:
    _check_params(params, grid.num_colors)
    st = suff_stats(grid)
    value = float(params.theta @ st.g)
    if tapering is not None:
        tapering.check(grid.num_colors, grid.size)
        value -= float(tapering_penalty(st.t, tapering))
    return value


def phase_transition_beta(num_colors: int) -> float:
    """Critical interaction ``log(1 + sqrt(K))`` of the zero-field model."""
    if num_colors < 2:
        raise ValueError("num_colors must be at least 2")
    return math.log1p(math.sqrt(num_colors))


# --- exhaustive enumeration -------------------------------------------------


def _decode(codes: np.ndarray, num_cells: int, num_colors: int) -> np.ndarray:
    """Map base-K state codes to cell arrays; cell ``i`` is digit ``i``."""
    out = np.empty((len(codes), num_cells), dtype=np.int64)
    rest = codes.copy()
    for i in range(num_cells):
        rest, out[:, i] = np.divmod(rest, num_colors)
    return out


def state_code(grid: Grid) -> int:
    """Index of the grid among the ``K**M`` enumerated states."""
    powers = grid.num_colors ** np.arange(grid.size, dtype=np.int64)
    return int(grid.flat @ powers)


def _chunks(total: int, chunk: int):
    for start in range(0, total, chunk):
        yield np.arange(start, min(total, start + chunk), dtype=np.int64)


def _batch_stats(states: np.ndarray, edges: np.ndarray, num_colors: int):
    t = np.stack([(states == k).sum(axis=1) for k in range(num_colors)], axis=1)
    s = (states[:, edges[:, 0]] == states[:, edges[:, 1]]).sum(axis=1)
    return t, s


def _num_states(width, height, num_colors, cap):
    n = num_colors ** (width * height)
    if n > cap:
        raise EnumerationCapError(f"{num_colors}^{width * height} = {n} states exceeds cap {cap}")
    return n


@lru_cache(maxsize=16)
def _stat_table(width: int, height: int, num_colors: int, boundary: str, cap: int):
    """Distinct statistic rows and how many states share each one."""
    n = _num_states(width, height, num_colors, cap)
    m = width * height
    edges = edge_list(width, height, boundary)
    base_t = m + 1
    base_s = len(edges) + 1
    counts: dict = {}
    for codes in _chunks(n, 1 << 16):
        t, s = _batch_stats(_decode(codes, m, num_colors), edges, num_colors)
        key = s.astype(np.int64)
        for k in range(num_colors - 1):
            key = key * base_t + t[:, k]
        uniq, cnt = np.unique(key, return_counts=True)
        for u, c in zip(uniq.tolist(), cnt.tolist()):
            counts[u] = counts.get(u, 0) + c
    keys = np.array(sorted(counts), dtype=np.int64)
    mult = np.array([counts[k] for k in keys.tolist()], dtype=float)
    t = np.empty((len(keys), num_colors), dtype=np.int64)
    rest = keys
    for k in reversed(range(num_colors - 1)):
        rest, t[:, k] = np.divmod(rest, base_t)
    s = rest
    t[:, -1] = m - t[:, :-1].sum(axis=1)
    return t, s, np.log(mult)


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """Exact law of the statistics on a small lattice.

    Rows of ``t``/``s`` are the distinct statistic values; ``prob[i]`` is the
    total probability of all configurations sharing row ``i`` and
    ``log_count[i]`` the log of their number.
    """

    width: int
    height: int
    num_colors: int
    boundary: str
    params: PottsParams
    tapering: Optional[TaperingSpec]
    t: np.ndarray
    s: np.ndarray
    log_count: np.ndarray
    log_normalizer: float
    prob: np.ndarray
    cap: int = field(default=DEFAULT_ENUMERATION_CAP, repr=False)

    @property
    def g(self) -> np.ndarray:
        return np.column_stack([self.t[:, :-1], self.s]).astype(float)

    @property
    def mean_g(self) -> np.ndarray:
        return self.prob @ self.g

    @property
    def cov_g(self) -> np.ndarray:
        d = self.g - self.mean_g
        return (d * self.prob[:, None]).T @ d

    @property
    def mean_t(self) -> np.ndarray:
        return self.prob @ self.t

    @property
    def mean_s(self) -> float:
        return float(self.prob @ self.s)

    def table(self) -> list:
        """List of ``(SuffStats, probability)`` pairs."""
        return [(SuffStats(tuple(int(v) for v in t), int(s)), float(p))
                for t, s, p in zip(self.t, self.s, self.prob)]

    def state_log_weight(self, t, s) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        g = np.concatenate([t[..., :-1], np.asarray(s, dtype=float)[..., None]], axis=-1)
        lw = g @ self.params.theta
        if self.tapering is not None:
            lw = lw - tapering_penalty(t, self.tapering)
        return lw

    def state_probabilities(self) -> np.ndarray:
        """Probability of every configuration, indexed by :func:`state_code`."""
        m = self.width * self.height
        n = _num_states(self.width, self.height, self.num_colors, self.cap)
        edges = edge_list(self.width, self.height, self.boundary)
        out = np.empty(n)
        for codes in _chunks(n, 1 << 16):
            t, s = _batch_stats(_decode(codes, m, self.num_colors), edges, self.num_colors)
            out[codes] = np.exp(self.state_log_weight(t, s) - self.log_normalizer)
        return out


def exact_distribution(width: int, height: int, num_colors: int, params: PottsParams,
                       tapering: Optional[TaperingSpec] = None, *, boundary: str = PERIODIC,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> ExactDistribution:
    """Enumerate all ``K**(W*H)`` configurations of a small lattice.

    Raises :class:`EnumerationCapError` when the state count exceeds ``cap``.
    """
    _check_dims(width, height, boundary)
    _check_params(params, num_colors)
    if tapering is not None:
        tapering.check(num_colors, width * height)
    t, s, log_count = _stat_table(width, height, num_colors, boundary, int(cap))
    dist = ExactDistribution(width, height, num_colors, boundary, params, tapering,
                             t, s, log_count, 0.0, np.empty(0), cap)
    log_w = log_count + dist.state_log_weight(t, s)
    log_c = float(logsumexp(log_w))
    object.__setattr__(dist, "log_normalizer", log_c)
    object.__setattr__(dist, "prob", np.exp(log_w - log_c))
    return dist


def random_grid(width: int, height: int, num_colors: int, rng, boundary: str = PERIODIC,
                probs: Optional[Sequence[float]] = None) -> Grid:
    """Independent cells, uniform over colors unless ``probs`` is given."""
    cells = rng.choice(num_colors, size=(height, width), p=probs)
    return Grid(cells, num_colors, boundary)
