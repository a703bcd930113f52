"""Averaged-pushforward measures and empirical ergodic components.

The basic estimator iterates a cloud of uniformly drawn points and deposits
the first n orbit points of each into a histogram, approximating the
average of the first n pushforwards of normalized Lebesgue measure.
Diagnostics quantify invariance (one-step transfer defect), distance to an
oracle density, and the number of distinct orbit-average histograms
(empirical ergodic components).
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .expansion import branch_stats, fiber_branch_stats
from .maps import MapSequence, SkewProduct, wrap
from .rng import make_generator, rng_metadata


@dataclass(frozen=True)
class BinGrid1D:
    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if self.bins < 1 or not self.lo < self.hi:
            raise ValueError("need bins >= 1 and lo < hi")

    @property
    def size(self):
        return self.bins

    @property
    def edges(self):
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def index(self, x):
        scaled = (np.asarray(x) - self.lo) / (self.hi - self.lo) * self.bins
        return np.clip(scaled.astype(int), 0, self.bins - 1)

    def describe(self):
        return {"kind": "1d", "lo": self.lo, "hi": self.hi, "bins": self.bins}


@dataclass(frozen=True)
class BinGrid2D:
    """Row-major bins over the circle (base) times a fiber interval."""

    base_bins: int
    fiber_lo: float
    fiber_hi: float
    fiber_bins: int

    def __post_init__(self):
        if self.base_bins < 1 or self.fiber_bins < 1:
            raise ValueError("need at least one bin per axis")
        if not self.fiber_lo < self.fiber_hi:
            raise ValueError("need fiber_lo < fiber_hi")

    @property
    def size(self):
        return self.base_bins * self.fiber_bins

    def index(self, theta, x):
        ti = np.clip((np.asarray(theta) % 1.0 * self.base_bins).astype(int),
                     0, self.base_bins - 1)
        span = self.fiber_hi - self.fiber_lo
        xi = np.clip(((np.asarray(x) - self.fiber_lo) / span
                      * self.fiber_bins).astype(int), 0, self.fiber_bins - 1)
        return ti * self.fiber_bins + xi

    def describe(self):
        return {"kind": "2d", "base_bins": self.base_bins,
                "fiber_lo": self.fiber_lo, "fiber_hi": self.fiber_hi,
                "fiber_bins": self.fiber_bins,
                "order": "row-major (base outer, fiber inner)"}


def resolve_grid(system, grid=None):
    """Turn an int bin count into the natural grid for the system.

    None picks the defaults: 256 bins for interval maps, 128 x 128 for
    skew-products.
    """
    if isinstance(grid, (BinGrid1D, BinGrid2D)):
        return grid
    if isinstance(system, SkewProduct):
        side = 128 if grid is None else max(1, int(round(math.sqrt(grid))))
        dom = system.fiber_domain
        return BinGrid2D(side, dom.lo, dom.hi, side)
    bins = 256 if grid is None else int(grid)
    return BinGrid1D(system.domain.lo, system.domain.hi, bins)


@dataclass(frozen=True)
class EmpiricalMeasure:
    grid: object
    weights: np.ndarray
    metadata: dict

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.min() < 0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    def coarsen(self, factor):
        """Merge adjacent 1-d bins (bin count must divide evenly).

        When the metadata carries the deposit count, integer bin counts are
        recovered first so the result is bit-identical to building the
        measure at the coarse resolution from the same orbit data.
        """
        g = self.grid
        if not isinstance(g, BinGrid1D) or g.bins % factor:
            raise ValueError("coarsen needs a 1-d grid with divisible bins")
        coarse = BinGrid1D(g.lo, g.hi, g.bins // factor)
        total = (self.metadata.get("samples", 0)
                 * self.metadata.get("iterations", 0))
        if total > 0:
            counts = np.rint(self.weights * total)
            w = counts.reshape(-1, factor).sum(axis=1) / float(total)
        else:
            w = self.weights.reshape(-1, factor).sum(axis=1)
        return EmpiricalMeasure(coarse, w, dict(self.metadata))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            if isinstance(self.grid, BinGrid1D):
                wr.writerow(["bin_lo", "bin_hi", "weight"])
                e = self.grid.edges
                for i, w in enumerate(self.weights):
                    wr.writerow([repr(float(e[i])), repr(float(e[i + 1])),
                                 repr(float(w))])
            else:
                wr.writerow(["flat_index", "weight"])
                for i, w in enumerate(self.weights):
                    wr.writerow([i, repr(float(w))])

    def metadata_json(self):
        meta = dict(self.metadata)
        meta["grid"] = self.grid.describe()
        return json.dumps(meta, sort_keys=True)


def _step_state(system, state, j):
    if isinstance(system, SkewProduct):
        th, x = state
        return (wrap(np.asarray(system.base(th), float)),
                np.asarray(system.fiber(th, x), float))
    if isinstance(system, MapSequence):
        return np.asarray(system.map_at(j).evaluator(state), float)
    return np.asarray(system.evaluator(state), float)


def _bin_state(system, grid, state):
    if isinstance(system, SkewProduct):
        return grid.index(state[0], state[1])
    return grid.index(state)


def orbit_bin_counts(system, samples, n, grid=None, seed=0):
    """Bin counts of iterates 0..n of a uniform cloud; shape (n+1, bins).

    The first n rows accumulate to the averaged-pushforward estimate; row n
    exists so that one-step transfer identities can be checked on matched
    orbit data.
    """
    grid = resolve_grid(system, grid)
    rng = make_generator(seed)
    if isinstance(system, SkewProduct):
        dom = system.fiber_domain
        state = (rng.uniform(0.0, 1.0, samples),
                 rng.uniform(dom.lo, dom.hi, samples))
    else:
        dom = system.domain
        state = rng.uniform(dom.lo, dom.hi, samples)
    counts = np.zeros((n + 1, grid.size), dtype=np.int64)
    for j in range(n + 1):
        idx = _bin_state(system, grid, state)
        counts[j] = np.bincount(idx, minlength=grid.size)
        if j < n:
            state = _step_state(system, state, j)
    return counts, grid


def empirical_measure(system, samples, n, grid=None, seed=0):
    """Average of the first n pushforwards of a uniform sample cloud.

    Deposits iterates 0..n-1 of each of `samples` points with weight
    1/(samples*n); deterministic for a fixed seed.  Orbit points that land
    exactly on critical points simply continue (the image is defined).
    """
    if samples < 1 or n < 1:
        raise ValueError("need samples >= 1 and n >= 1")
    counts, grid = orbit_bin_counts(system, samples, n, grid, seed)
    weights = counts[:n].sum(axis=0) / float(samples * n)
    label = getattr(system, "label", "")
    meta = {"samples": int(samples), "iterations": int(n),
            "system": label, **rng_metadata(seed)}
    return EmpiricalMeasure(grid, weights, meta)


def invariance_defect(measure: EmpiricalMeasure, system, transfer_samples,
                      seed):
    """L1 distance between the measure and its one-step pushforward.

    The pushforward is estimated by sampling each bin uniformly with a
    point budget proportional to its weight (at least one point per loaded
    bin) and applying the map once.
    """
    grid = measure.grid
    rng = make_generator(seed)
    push = np.zeros(grid.size)
    w = measure.weights
    for b in np.flatnonzero(w > 0):
        n_b = max(1, int(round(w[b] * transfer_samples)))
        if isinstance(grid, BinGrid1D):
            width = (grid.hi - grid.lo) / grid.bins
            lo = grid.lo + b * width
            pts = rng.uniform(lo, lo + width, n_b)
            state = pts
        else:
            ti, xi = divmod(int(b), grid.fiber_bins)
            bw = 1.0 / grid.base_bins
            fw = (grid.fiber_hi - grid.fiber_lo) / grid.fiber_bins
            state = (rng.uniform(ti * bw, (ti + 1) * bw, n_b),
                     rng.uniform(grid.fiber_lo + xi * fw,
                                 grid.fiber_lo + (xi + 1) * fw, n_b))
        new = _step_state(system, state, 0)
        idx = _bin_state(system, grid, new)
        push += np.bincount(idx, minlength=grid.size) * (w[b] / n_b)
    return float(np.abs(push - w).sum())


def density_compare(measure: EmpiricalMeasure, oracle):
    """L1 distance between the measure and an oracle density's bin masses.

    1-d oracles are integrated per bin with adaptive quadrature; 2-d
    oracles (callables of (theta, x)) with a refined midpoint rule.
    """
    grid = measure.grid
    if isinstance(grid, BinGrid1D):
        e = grid.edges
        masses = np.array([
            integrate.quad(oracle, e[i], e[i + 1], limit=100)[0]
            for i in range(grid.bins)])
    else:
        sub = 4
        masses = np.empty(grid.size)
        bw = 1.0 / grid.base_bins
        fw = (grid.fiber_hi - grid.fiber_lo) / grid.fiber_bins
        for b in range(grid.size):
            ti, xi = divmod(b, grid.fiber_bins)
            ts = (ti + (np.arange(sub) + 0.5) / sub) * bw
            xs = grid.fiber_lo + (xi + (np.arange(sub) + 0.5) / sub) * fw
            T, X = np.meshgrid(ts, xs, indexing="ij")
            masses[b] = float(np.mean(oracle(T, X))) * bw * fw
    return float(np.abs(measure.weights - masses).sum())


# ---------------------------------------------------------------------------
# empirical ergodic components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentReport:
    count: int
    assignment: tuple
    link_threshold: float
    sensitivity: dict         # threshold -> cluster count
    metadata: dict

    def to_json(self):
        return json.dumps({
            "count": self.count,
            "assignment": list(self.assignment),
            "link_threshold": self.link_threshold,
            "sensitivity": {repr(k): v for k, v in self.sensitivity.items()},
            "metadata": self.metadata,
        }, sort_keys=True)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        self.parent[self.find(i)] = self.find(j)


def _cluster_count(hists, threshold):
    p = hists.shape[0]
    uf = _UnionFind(p)
    for i in range(p):
        d = np.abs(hists[i + 1:] - hists[i]).sum(axis=1)
        for off in np.flatnonzero(d < threshold):
            uf.union(i, i + 1 + int(off))
    roots = [uf.find(i) for i in range(p)]
    order = {}
    assignment = []
    for r in roots:
        order.setdefault(r, len(order))
        assignment.append(order[r])
    return len(order), tuple(assignment)


def ergodic_components(system, probes, n, grid, seed, link_threshold=0.3,
                       burn_frac=0.1,
                       sensitivity=(0.1, 0.2, 0.3, 0.5)):
    """Cluster per-orbit histograms to count empirical ergodic components.

    Each probe runs a single orbit of n steps, discards the first
    `burn_frac` fraction as burn-in, and histograms the rest; probes are
    merged by single linkage whenever their L1 distance is below the
    threshold.
    """
    if probes < 10**2:
        raise ValueError("need at least 100 probes")
    grid = resolve_grid(system, grid)
    rng = make_generator(seed)
    if isinstance(system, SkewProduct):
        dom = system.fiber_domain
        state = (rng.uniform(0.0, 1.0, probes),
                 rng.uniform(dom.lo, dom.hi, probes))
    else:
        dom = system.domain
        state = rng.uniform(dom.lo, dom.hi, probes)
    burn = int(n * burn_frac)
    hists = np.zeros((probes, grid.size))
    rows = np.arange(probes)
    for j in range(n):
        if j >= burn:
            idx = _bin_state(system, grid, state)
            hists[rows, idx] += 1.0
        state = _step_state(system, state, j)
    hists /= hists.sum(axis=1, keepdims=True)
    count, assignment = _cluster_count(hists, link_threshold)
    sens = {}
    for t in sensitivity:
        sens[float(t)], _ = _cluster_count(hists, float(t))
    meta = {"probes": int(probes), "iterations": int(n),
            "burn_in": burn, "system": getattr(system, "label", ""),
            **rng_metadata(seed)}
    return ComponentReport(count, assignment, float(link_threshold), sens,
                           meta)


# ---------------------------------------------------------------------------
# mass carried at hyperbolic-like times
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NuLikeMass:
    mass: float               # average density of hyperbolic-like indices
    anchor_fraction: float    # anchors with sum r_i >= 2 delta n
    zeta: float               # Pliss density floor for such anchors
    bound_holds: bool


def nu_like_mass(system, samples, n, delta_tilde, seed):
    """Fraction of orbit indices that are hyperbolic-like, versus the floor.

    Anchors whose branch sizes satisfy sum r_i >= 2*delta*n carry at least
    a zeta fraction of hyperbolic-like indices, so the deposited mass must
    be at least zeta times the fraction of such anchors.
    """
    rng = make_generator(seed)
    if isinstance(system, SkewProduct):
        dom = system.fiber_domain
        th = rng.uniform(0.0, 1.0, samples)
        xs = rng.uniform(dom.lo, dom.hi, samples)
        r, _, _ = fiber_branch_stats(system, th, xs, n)
    else:
        m = system.map_at(0) if isinstance(system, MapSequence) else system
        dom = m.domain
        xs = rng.uniform(dom.lo, dom.hi, samples)
        r, _, _ = branch_stats(m, xs, n)
    mass = float((r >= delta_tilde).mean())
    anchors = float((r.sum(axis=0) >= 2.0 * delta_tilde * n).mean())
    zeta = delta_tilde / (dom.length - delta_tilde)
    return NuLikeMass(mass, anchors, zeta, mass >= zeta * anchors - 1e-12)
