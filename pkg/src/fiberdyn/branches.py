"""Maximal monotone branches, monotonicity partitions and censuses.

A depth-n branch around x is the largest interval whose first n images
never meet the critical set of the map applied at that step.  Branches are
grown image-side: the image interval is cut at critical points and every
cut is pulled back to a domain endpoint by monotone bisection run to float
exhaustion (residual well below the 1e-12 pullback tolerance), so each
endpoint carries a checkable certificate (step, critical value).
"""

import csv
from dataclasses import dataclass

from .errors import (BranchTerminated, CapExceeded, HitCritical)

HIT_TOL = 1e-12
PULLBACK_VALUE_TOL = 1e-13
CENSUS_GUARD = 1e-9


def compose_maps(maps, x):
    for m in maps:
        x = float(m.evaluator(x))
    return x


def bisect_preimage(maps, target, lo, hi, value_tol=PULLBACK_VALUE_TOL):
    """Solve F(t) = target on [lo, hi], F the composition of `maps`.

    F must be strictly monotone on the bracket with the target between the
    endpoint values.  Bisection runs until the residual drops below
    `value_tol` or the bracket cannot be split in floats; returns the point
    with the smallest observed residual.
    """
    if not maps:
        return float(target)
    flo = compose_maps(maps, lo)
    fhi = compose_maps(maps, hi)
    increasing = fhi >= flo
    best_t, best_r = lo, abs(flo - target)
    if abs(fhi - target) < best_r:
        best_t, best_r = hi, abs(fhi - target)
    for _ in range(200):
        if best_r <= value_tol:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        fm = compose_maps(maps, mid)
        r = abs(fm - target)
        if r < best_r:
            best_t, best_r = mid, r
        if (fm < target) == increasing:
            lo = mid
        else:
            hi = mid
    return best_t


@dataclass(frozen=True)
class EndpointCut:
    """Certificate for a branch endpoint: f^level(endpoint) = critical."""

    level: int
    critical: float


@dataclass(frozen=True)
class MonotoneBranch:
    x: float
    n: int
    t_lo: float
    t_hi: float
    img_lo: float
    img_hi: float
    orientation: int
    r_history: tuple
    lo_cut: EndpointCut = None    # None: endpoint sits on the domain boundary
    hi_cut: EndpointCut = None
    terminated: bool = False
    termination_step: int = None

    @property
    def r_n(self):
        return self.r_history[-1] if self.r_history else None


def track_branch(seq, x, n, hit_tol=HIT_TOL):
    """Depth-n maximal monotone branch around x for the map sequence.

    Raises HitCritical(j) when the orbit of x lands on a critical point of
    f_j within `hit_tol`; the exception carries the truncated branch.
    """
    dom = seq.domain
    x = float(x)
    if not dom.lo < x < dom.hi:
        raise ValueError("anchor must be interior to the domain")
    t_lo, t_hi = dom.lo, dom.hi
    a, b = dom.lo, dom.hi          # image of the current branch
    y = x
    lo_to_lo = True                # does t_lo map to a (vs b)?
    orientation = 1
    r_hist = []
    lo_cut = hi_cut = None
    maps = []

    def snapshot(j):
        return MonotoneBranch(x, j, t_lo, t_hi, a, b, orientation,
                              tuple(r_hist), lo_cut, hi_cut,
                              terminated=True, termination_step=j)

    for j in range(n):
        m = seq.map_at(j)
        for c in m.critical_points:
            if abs(y - c) <= hit_tol:
                raise HitCritical(j, branch=snapshot(j))
        cut_lo = cut_hi = None
        for c in m.critical_points:
            if a < c < y and (cut_lo is None or c > cut_lo):
                cut_lo = c
            if y < c < b and (cut_hi is None or c < cut_hi):
                cut_hi = c
        if cut_lo is not None:
            if lo_to_lo:
                t_lo = bisect_preimage(maps, cut_lo, t_lo, x)
                lo_cut = EndpointCut(j, cut_lo)
            else:
                t_hi = bisect_preimage(maps, cut_lo, x, t_hi)
                hi_cut = EndpointCut(j, cut_lo)
            a = cut_lo
        if cut_hi is not None:
            if lo_to_lo:
                t_hi = bisect_preimage(maps, cut_hi, x, t_hi)
                hi_cut = EndpointCut(j, cut_hi)
            else:
                t_lo = bisect_preimage(maps, cut_hi, t_lo, x)
                lo_cut = EndpointCut(j, cut_hi)
            b = cut_hi
        fa = float(m.evaluator(a))
        fb = float(m.evaluator(b))
        y = float(m.evaluator(y))
        if fa <= fb:
            a, b = fa, fb
        else:
            a, b = fb, fa
            lo_to_lo = not lo_to_lo
            orientation = -orientation
        maps.append(m)
        r_hist.append(min(y - a, b - y))
    return MonotoneBranch(x, n, t_lo, t_hi, a, b, orientation,
                          tuple(r_hist), lo_cut, hi_cut)


def symbol_sequence(branch: MonotoneBranch, delta):
    """Threshold the branch r-history: 1 where r_i >= delta, else 0."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if branch.terminated:
        raise BranchTerminated(
            f"branch ended at step {branch.termination_step}")
    return tuple(1 if r >= delta else 0 for r in branch.r_history)


# ---------------------------------------------------------------------------
# monotonicity partition
# ---------------------------------------------------------------------------

class _Cell:
    __slots__ = ("lo", "hi", "img_lo", "img_hi", "lo_to_lo", "branch_imgs")

    def __init__(self, lo, hi, img_lo, img_hi, lo_to_lo, branch_imgs):
        self.lo = lo
        self.hi = hi
        self.img_lo = img_lo
        self.img_hi = img_hi
        self.lo_to_lo = lo_to_lo
        self.branch_imgs = branch_imgs


@dataclass(frozen=True)
class BranchPartition:
    """All depth-n monotone cells of a map sequence.

    `levels[i]` holds the sorted cut points of the depth-i partition
    (including the domain boundary); `branch_images[k][i-1]` is the image
    f^i(T_i) of the depth-i ancestor of final cell k.
    """

    depth: int
    cells: tuple               # (lo, hi) per cell, sorted
    cell_images: tuple         # ordered image interval per cell at depth n
    levels: tuple              # per level 0..n: sorted endpoint tuple
    branch_images: tuple       # per cell: tuple over i=1..n of (A_i, B_i)

    def cell_index(self, x):
        for i, (lo, hi) in enumerate(self.cells):
            if lo <= x <= hi:
                return i
        raise ValueError(f"{x} outside the partition")


def monotonicity_partition(seq, n, cap=10**5):
    """Refine the domain into depth-n monotone cells by critical pullback."""
    if n < 1:
        raise ValueError("depth must be >= 1")
    dom = seq.domain
    cells = [_Cell(dom.lo, dom.hi, dom.lo, dom.hi, True, [])]
    levels = [(dom.lo, dom.hi)]
    maps = []
    for j in range(n):
        m = seq.map_at(j)
        new_cells = []
        for cell in cells:
            inside = sorted(c for c in m.critical_points
                            if cell.img_lo < c < cell.img_hi)
            if not inside:
                pieces = [(cell.lo, cell.hi, cell.img_lo, cell.img_hi)]
            else:
                ts = [bisect_preimage(maps, c, cell.lo, cell.hi)
                      for c in inside]
                img_knots = [cell.img_lo, *inside, cell.img_hi]
                if cell.lo_to_lo:
                    d_knots = [cell.lo, *ts, cell.hi]
                else:
                    d_knots = [cell.lo, *ts[::-1], cell.hi]
                    img_knots = img_knots[::-1]
                pieces = []
                for i in range(len(d_knots) - 1):
                    ia, ib = img_knots[i], img_knots[i + 1]
                    pieces.append((d_knots[i], d_knots[i + 1],
                                   min(ia, ib), max(ia, ib)))
            for (plo, phi, ia, ib) in pieces:
                fa = float(m.evaluator(ia))
                fb = float(m.evaluator(ib))
                flip = fa > fb
                child_lo_to_lo = cell.lo_to_lo != flip
                nlo, nhi = (fb, fa) if flip else (fa, fb)
                new_cells.append(_Cell(plo, phi, nlo, nhi, child_lo_to_lo,
                                       cell.branch_imgs + [(nlo, nhi)]))
        if len(new_cells) > cap:
            raise CapExceeded(f"{len(new_cells)} cells exceed cap {cap}")
        cells = new_cells
        maps.append(m)
        pts = sorted({c.lo for c in cells} | {dom.hi})
        levels.append(tuple(pts))
    return BranchPartition(
        depth=n,
        cells=tuple((c.lo, c.hi) for c in cells),
        cell_images=tuple((c.img_lo, c.img_hi) for c in cells),
        levels=tuple(levels),
        branch_images=tuple(tuple(c.branch_imgs) for c in cells),
    )


# ---------------------------------------------------------------------------
# census of r-threshold words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CensusRecord:
    """Connected components of every realized r-threshold word at depth n."""

    depth: int
    delta: float
    components: dict           # word tuple -> list of (lo, hi)

    def words(self):
        return sorted(self.components)

    def count(self, word):
        return len(self.components.get(tuple(word), ()))

    def measure(self, word):
        return sum(hi - lo for lo, hi in self.components.get(tuple(word), ()))

    def total_measure(self):
        return sum(self.measure(w) for w in self.components)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "component_count", "total_measure"])
            for word in self.words():
                w.writerow(["".join(map(str, word)), self.count(word),
                            repr(self.measure(word))])


def component_census(seq, n, delta, word=None, cap=10**5,
                     guard=CENSUS_GUARD):
    """Classify depth-n cells by their r-threshold word.

    Within each monotone cell every r_i is piecewise monotone with a single
    breakpoint, so the sign pattern of r_i - delta changes only where the
    i-th image crosses A_i + delta or B_i - delta; those crossings are
    solved by monotone bisection and the word is evaluated on midpoints.
    Points within `guard` of the threshold are assigned to the >= side.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if word is not None and len(word) != n:
        raise ValueError(f"word length {len(word)} does not match depth {n}")
    part = monotonicity_partition(seq, n, cap)
    maps = [seq.map_at(j) for j in range(n)]
    components = {}
    for (clo, chi), bimgs in zip(part.cells, part.branch_images):
        cuts = []
        for i in range(1, n + 1):
            A, B = bimgs[i - 1]
            if B - A < 2 * delta:
                continue            # r_i < delta on the whole cell
            sub = maps[:i]
            Fu = compose_maps(sub, clo)
            Fv = compose_maps(sub, chi)
            flo, fhi = min(Fu, Fv), max(Fu, Fv)
            for target in (A + delta, B - delta):
                if flo < target < fhi:
                    cuts.append(bisect_preimage(sub, target, clo, chi))
        cuts = sorted(cuts)
        knots = [clo]
        for t in cuts:
            if t - knots[-1] > guard and chi - t > guard:
                knots.append(t)
        knots.append(chi)
        prev_word = None
        for klo, khi in zip(knots, knots[1:]):
            mid = 0.5 * (klo + khi)
            w = []
            z = mid
            for i in range(1, n + 1):
                z = float(maps[i - 1].evaluator(z))
                A, B = bimgs[i - 1]
                r = min(z - A, B - z)
                w.append(1 if r >= delta - guard else 0)
            w = tuple(w)
            if w == prev_word:
                # crossing did not flip the word (threshold tangency);
                # merge with the previous component
                lo0, _ = components[w][-1]
                components[w][-1] = (lo0, khi)
            else:
                components.setdefault(w, []).append((klo, khi))
            prev_word = w
    record = CensusRecord(n, delta,
                          {w: tuple(v) for w, v in components.items()})
    if word is not None:
        word = tuple(word)
        return CensusRecord(n, delta,
                            {word: record.components.get(word, ())})
    return record


def interval_images(seq, lo, hi, depth, extra, guard=CENSUS_GUARD):
    """Forward images of [lo, hi] for depth < m <= depth + extra.

    Steps the interval while every image stays clear of the critical set of
    the map applied at that level (contact within `guard` of an image
    endpoint does not count, matching the pullback exactness of cut
    points); returns the list of (m, img_lo, img_hi) computed and the
    number of clean extra steps.
    """
    a, b = float(lo), float(hi)
    out = []
    for m in range(depth):
        mp = seq.map_at(m)
        for c in mp.critical_points:
            if a + guard < c < b - guard:
                raise ValueError("interval is not inside a monotone cell")
        fa, fb = float(mp.evaluator(a)), float(mp.evaluator(b))
        a, b = min(fa, fb), max(fa, fb)
    clean = 0
    for m in range(depth, depth + extra):
        mp = seq.map_at(m)
        if any(a + guard < c < b - guard for c in mp.critical_points):
            break
        fa, fb = float(mp.evaluator(a)), float(mp.evaluator(b))
        a, b = min(fa, fb), max(fa, fb)
        clean += 1
        out.append((m + 1, a, b))
    return out, clean
