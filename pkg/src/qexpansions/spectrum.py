"""Sorted values of {0,1}-polynomials at a point 1 < x <= 2.

The spectrum ``Y(x) = {P(x)}`` is enumerated by meet-in-the-middle: the
coefficient indices are split into a low and a high half, each half's subset
sums are sorted once, and sums are combined with ``searchsorted`` (bulk) or a
heap over high-half cursors (streaming).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Tuple

import mpmath
import numpy as np

DEFAULT_POINT_CAP = 2 ** 24
EXACT_DEGREE_CAP = 44


class SpectrumBudgetError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SpectrumPoint:
    value: float
    coeffs: Tuple[int, ...]  # coefficient of x**k at index k

    def evaluate_mp(self, x):
        x = mpmath.mpf(x)
        return mpmath.fsum(x ** k for k, a in enumerate(self.coeffs) if a)


@dataclass(frozen=True)
class SpectrumQueryConfig:
    x: float
    value_bound: Optional[float] = None
    count_bound: Optional[int] = None
    dedup_tolerance: float = 1e-12
    max_degree: Optional[int] = None
    point_cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        if (self.value_bound is None) == (self.count_bound is None):
            raise ValueError("set exactly one of value_bound and count_bound")
        if self.dedup_tolerance < 0:
            raise ValueError("dedup_tolerance must be nonnegative")
        _check_x(self.x)


def _check_x(x: float):
    if not 1 < x <= 2:
        raise ValueError(f"spectrum point x must satisfy 1 < x <= 2, got {x}")


def _mask_to_coeffs(mask: int, degree: int) -> Tuple[int, ...]:
    if mask == 0:
        return ()
    top = int(mask).bit_length()
    return tuple((int(mask) >> k) & 1 for k in range(top))


def subset_sums(powers) -> Tuple[np.ndarray, np.ndarray]:
    """All subset sums of ``powers`` (sorted) with bitmasks over their indices."""
    vals = np.zeros(1)
    masks = np.zeros(1, dtype=np.int64)
    for i, pw in enumerate(powers):
        vals = np.concatenate([vals, vals + pw])
        masks = np.concatenate([masks, masks | (1 << i)])
    order = np.argsort(vals, kind="stable")
    return vals[order], masks[order]


def _split(x: float, degree: int, cap: int = DEFAULT_POINT_CAP):
    h = (degree + 1) // 2
    if 2 ** (degree + 1 - h) > cap:
        raise SpectrumBudgetError(
            f"degree {degree} needs half-tables of 2**{degree + 1 - h} entries (cap {cap})")
    powers = [x ** k for k in range(degree + 1)]
    lo_v, lo_m = subset_sums(powers[:h])
    hi_v, hi_m = subset_sums(powers[h:])
    return lo_v, lo_m, hi_v, hi_m << h


def _dedup(vals: np.ndarray, masks: np.ndarray, tol: float):
    # a value within tol of its predecessor joins the predecessor's cluster
    if len(vals) == 0:
        return vals, masks
    keep = np.empty(len(vals), dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(vals) > tol * np.maximum(1.0, vals[1:])
    return vals[keep], masks[keep]


def _values_below(x: float, degree: int, bound: float, cap: int, strict: bool = False):
    lo_v, lo_m, hi_v, hi_m = _split(x, degree, cap)
    out_v, out_m = [], []
    total = 0
    side = "left" if strict else "right"
    for hv, hm in zip(hi_v, hi_m):
        if hv > bound:
            break
        k = np.searchsorted(lo_v, bound - hv, side=side)
        total += k
        if total > cap:
            raise SpectrumBudgetError(f"more than {cap} spectrum points below {bound}")
        out_v.append(lo_v[:k] + hv)
        out_m.append(lo_m[:k] | hm)
    vals = np.concatenate(out_v)
    masks = np.concatenate(out_m)
    order = np.argsort(vals, kind="stable")
    return vals[order], masks[order]


def _points(vals, masks, degree):
    return [SpectrumPoint(float(v), _mask_to_coeffs(int(m), degree)) for v, m in zip(vals, masks)]


def enumerate_spectrum(cfg: SpectrumQueryConfig) -> list:
    """The spectrum in increasing order, near-equal values merged."""
    x = cfg.x
    if cfg.value_bound is not None:
        bound = cfg.value_bound
        degree = int(math.floor(math.log(bound) / math.log(x) + 1e-12)) if bound >= 1 else 0
        if cfg.max_degree is not None:
            degree = min(degree, cfg.max_degree)
        vals, masks = _values_below(x, degree, bound * (1 + 1e-15), cfg.point_cap)
        vals, masks = _dedup(vals, masks, cfg.dedup_tolerance)
        return _points(vals, masks, degree)
    count = cfg.count_bound
    degree = 0
    while True:
        if cfg.max_degree is not None and degree > cfg.max_degree:
            raise SpectrumBudgetError(f"fewer than {count} points up to degree {cfg.max_degree}")
        # every value below x**(degree+1) has degree <= degree
        vals, masks = _values_below(x, degree, x ** (degree + 1), cfg.point_cap, strict=True)
        vals, masks = _dedup(vals, masks, cfg.dedup_tolerance)
        if len(vals) >= count:
            return _points(vals[:count], masks[:count], degree)
        degree += 1


def iter_spectrum(x: float, max_degree: int, dedup_tolerance: float = 1e-12) -> Iterator[SpectrumPoint]:
    """Stream the values of {0,1}-polynomials of degree <= ``max_degree`` in order."""
    _check_x(x)
    lo_v, lo_m, hi_v, hi_m = _split(x, max_degree)
    heap = [(float(hv), i, 0) for i, hv in enumerate(hi_v)]
    heapq.heapify(heap)
    last = None
    while heap:
        v, i, c = heapq.heappop(heap)
        if last is None or v - last > dedup_tolerance * max(1.0, v):
            last = v
            yield SpectrumPoint(v, _mask_to_coeffs(int(hi_m[i] | lo_m[c]), max_degree))
        if c + 1 < len(lo_v):
            heapq.heappush(heap, (float(hi_v[i] + lo_v[c + 1]), i, c + 1))


@dataclass(frozen=True)
class Bracket:
    lower: SpectrumPoint
    upper: SpectrumPoint
    gap: float
    meets_goal: bool


def bracket(x: float, target: float, gap_goal: float, tolerance: float = 1e-12,
            degree_cap: int = EXACT_DEGREE_CAP) -> Bracket:
    """Consecutive spectrum points with ``lower < target <= upper``.

    Values within ``tolerance`` (relative) of ``target`` count as the upper
    point.  ``meets_goal`` reports whether the gap is below ``gap_goal``.
    """
    _check_x(x)
    if not target > 0:
        raise ValueError("target must be positive")
    degree = max(0, math.ceil(math.log(target) / math.log(x) - 1e-12)) if target > 1 else 0
    if degree + 1 > degree_cap:
        raise SpectrumBudgetError(
            f"bracketing {target} at x={x} needs degree {degree} > cap {degree_cap}",
            partial={"degree": degree},
        )
    lo_v, lo_m, hi_v, hi_m = _split(x, degree)
    thr = target - tolerance * max(1.0, target)
    idx = np.searchsorted(lo_v, thr - hi_v, side="left")
    below = idx - 1
    ok = below >= 0
    cand = np.where(ok, hi_v + lo_v[np.clip(below, 0, None)], -np.inf)
    cand = np.where(cand < thr, cand, -np.inf)
    i_lo = int(np.argmax(cand))
    above_ok = idx < len(lo_v)
    cand2 = np.where(above_ok, hi_v + lo_v[np.clip(idx, 0, len(lo_v) - 1)], np.inf)
    cand2 = np.where(cand2 >= thr, cand2, np.inf)
    i_hi = int(np.argmin(cand2))
    lower = SpectrumPoint(float(cand[i_lo]), _mask_to_coeffs(int(hi_m[i_lo] | lo_m[below[i_lo]]), degree))
    upper = SpectrumPoint(float(cand2[i_hi]), _mask_to_coeffs(int(hi_m[i_hi] | lo_m[idx[i_hi]]), degree))
    gap = upper.value - lower.value
    return Bracket(lower, upper, gap, gap < gap_goal)


def max_gap(x: float, window: Tuple[float, float], dedup_tolerance: float = 1e-12,
            point_cap: int = DEFAULT_POINT_CAP) -> float:
    """Largest ``y[k+1] - y[k]`` over consecutive pairs meeting ``[a, b]``."""
    a, b = window
    if not 0 <= a < b:
        raise ValueError("window must satisfy 0 <= a < b")
    _check_x(x)
    degree = max(1, math.floor(math.log(b) / math.log(x)) + 1) if b >= 1 else 1
    # x**degree > b is itself a spectrum point, so the successor of b is captured
    pts = enumerate_spectrum(SpectrumQueryConfig(
        x, value_bound=x ** degree, dedup_tolerance=dedup_tolerance, point_cap=point_cap))
    vals = [pt.value for pt in pts]
    best = 0.0
    for lo, hi in zip(vals, vals[1:]):
        if hi >= a and lo <= b:
            best = max(best, hi - lo)
    return best


def second_pisot_mp(dps: int = 40) -> mpmath.mpf:
    """Real root > 1 of x**4 - x**3 - 1, by bisection then Newton."""
    with mpmath.workdps(dps + 10):
        f = lambda t: t ** 4 - t ** 3 - 1
        lo, hi = mpmath.mpf("1.3"), mpmath.mpf("1.4")
        for _ in range(30):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        r = (lo + hi) / 2
        for _ in range(20):
            r -= f(r) / (4 * r ** 3 - 3 * r ** 2)
        return +r


SECOND_PISOT = float(second_pisot_mp())


def second_pisot() -> float:
    return SECOND_PISOT


# --- lower points at large degree (suffix-extension driver) -----------------------

@lru_cache(maxsize=32)
def _low_table(x_float: float, bits: int):
    return subset_sums([x_float ** k for k in range(bits)])


@dataclass(frozen=True)
class LowerPoint:
    coeffs: Tuple[int, ...]  # length == degree, coefficient of x**k at index k
    value: object            # mpmath value of the polynomial
    residual: object         # target - value, in (0, gap)


def lower_point(x, target, gap, degree: int, *, aim: float = 0.5, budget: int = 256,
                table_bits: int = 16) -> Optional[LowerPoint]:
    """Find a {0,1}-polynomial ``P`` of degree < ``degree`` with ``0 < target - P(x) < gap``.

    ``x``, ``target`` and ``gap`` are mpmath numbers; the returned residual is
    checked at the current mpmath precision.  The top coefficients are chosen
    by depth-first search keeping the remainder near the middle of what the
    remaining powers can reach; the lowest ``table_bits`` coefficients come
    from a sorted subset-sum table, picking the residual closest to
    ``aim * gap``.  Returns None if ``budget`` table lookups fail.
    """
    n = degree
    L = min(n, table_bits)
    xf = float(x)
    vals, masks = _low_table(xf, L)
    powers = [mpmath.mpf(1)]
    for _ in range(1, n):
        powers.append(powers[-1] * x)
    reach = [mpmath.mpf(0)]
    for pw in powers:
        reach.append(reach[-1] + pw)
    gap_f = float(gap)
    margin = gap_f * 1e-6
    leaves = 0

    def leaf(r):
        rf = float(r)
        want = rf - aim * gap_f
        i = int(np.searchsorted(vals, want))
        best = None
        for j in (i - 1, i, i - 2, i + 1):
            if 0 <= j < len(vals):
                res = rf - vals[j]
                if margin < res < gap_f - margin:
                    if best is None or abs(res - aim * gap_f) < abs(rf - vals[best] - aim * gap_f):
                        best = j
        if best is None:
            return None
        mask = int(masks[best])
        y = mpmath.fsum(powers[k] for k in range(L) if (mask >> k) & 1)
        res = r - y
        if 0 < res < gap:
            return mask, res
        return None

    # iterative DFS over coefficients n-1 .. L
    chosen = [0] * n
    stack = [(n - 1, target, None)]
    # each frame: (level, remainder before choosing level, pending option list)
    while stack:
        k, r, opts = stack[-1]
        if k < L:
            stack.pop()
            leaves += 1
            hit = leaf(r)
            if hit is not None:
                mask, res = hit
                for j in range(L):
                    chosen[j] = (mask >> j) & 1
                coeffs = tuple(chosen)
                return LowerPoint(coeffs, target - res, res)
            if leaves >= budget:
                return None
            continue
        if opts is None:
            center = reach[k] / 2
            cands = []
            for a in (1, 0):
                r2 = r - powers[k] if a else r
                if r2 > 0 and r2 < reach[k] + gap:
                    cands.append((abs(r2 - center), a, r2))
            cands.sort(key=lambda t: t[0])
            opts = [(a, r2) for _, a, r2 in cands]
            stack[-1] = (k, r, opts)
        if not opts:
            stack.pop()
            continue
        a, r2 = opts.pop(0)
        chosen[k] = a
        stack.append((k - 1, r2, None))
    return None
