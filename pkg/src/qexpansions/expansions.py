"""Constructing expansions and counting them at finite depth.

Every search works on the scaled remainder ``r_k = q**k * (x - sum_{i<=k} c_i q**-i)``,
advanced by ``r' = q*r - c``.  Digit ``c`` is kept when ``r'`` lies in the
bound for J_q returned by the family rule: exact intervals for real bases
with p <= 2, the exact rectangle for q = +-ip with p <= sqrt(2), and only the
necessary disk ``|r'| <= 1/(p-1)`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Tuple, Union

import mpmath
from mpmath import mp

from .bases import Base, is_full_region, parse_complex, real_value
from .digits import DigitSequence, transform_T

GOLDEN = (1 + 5 ** 0.5) / 2
TOL = mpmath.mpf("1e-20")
DEPTH_LIMIT = 4096


class ExpansionFailure(RuntimeError):
    """No expansion was found; ``prefix`` is the deepest prefix reached."""

    def __init__(self, message, prefix=()):
        super().__init__(message)
        self.prefix = tuple(prefix)


Target = Union[float, complex, str, Callable[[], object]]


def working_dps(base: Base, depth: int) -> int:
    """Decimal digits so that remainders at ``depth`` keep ~25 correct digits."""
    return 30 + int(math.ceil(depth * math.log10(base.p)))


def target_mp(x: Target):
    """Evaluate a target at the current precision (callables are called)."""
    if callable(x):
        return x()
    if isinstance(x, str):
        s = x.strip()
        if s.endswith("i"):
            return mpmath.mpmathify(parse_complex(s))
        return real_value(s)
    if isinstance(x, complex):
        return mpmath.mpc(x.real, x.imag) if x.imag else mpmath.mpf(x.real)
    return mpmath.mpmathify(x)


class _Rule:
    """Remainder bound and step map for one base, at the current precision."""

    def __init__(self, base: Base):
        self.base = base
        self.family = base.family
        p = base.p_mp()
        self.p = p
        self.exact = self.family in ("positive", "negative", "imaginary") and is_full_region(base)
        if self.family == "positive":
            self.q = p
            self.box = (mpmath.mpf(0), 1 / (p - 1))
        elif self.family == "negative":
            self.q = -p
            self.box = (-p / (p * p - 1), 1 / (p * p - 1))
        elif self.family == "imaginary":
            self.q = base.q_mp()
            den = p ** 4 - 1
            im_lo, im_hi = -p ** 3 / den, p / den
            if base.turn == Fraction(3, 4):
                im_lo, im_hi = -im_hi, -im_lo
            self.box = ((-p * p / den, 1 / den), (im_lo, im_hi))
        else:
            self.q = base.q_mp()
            self.radius = 1 / (p - 1)

    def contains(self, r) -> bool:
        if self.family in ("positive", "negative"):
            lo, hi = self.box
            return lo - TOL <= r <= hi + TOL
        if self.family == "imaginary":
            (xl, xh), (yl, yh) = self.box
            r = mpmath.mpc(r)
            return xl - TOL <= r.real <= xh + TOL and yl - TOL <= r.imag <= yh + TOL
        return abs(r) <= self.radius + TOL

    def step(self, r, c):
        return self.q * r - c


def count_is_exact(base: Base) -> bool:
    """Whether the prune rule decides feasibility exactly for this base."""
    with mpmath.workdps(30):
        return _Rule(base).exact


def feasible_digits(remainder, base: Base) -> Tuple[int, ...]:
    """Digits ``c`` whose next remainder ``q*r - c`` stays inside the J_q bound."""
    rule = _Rule(base)
    r = target_mp(remainder)
    return tuple(c for c in (0, 1) if rule.contains(rule.step(r, c)))


@dataclass(frozen=True)
class PrefixNode:
    digits: Tuple[int, ...]
    remainder: object
    depth: int


def iter_prefixes(x: Target, base: Base, depth: int):
    """Yield every surviving prefix of length ``depth`` as a ``PrefixNode``."""
    if depth > DEPTH_LIMIT:
        raise ValueError(f"depth {depth} beyond limit {DEPTH_LIMIT}")
    with mpmath.workdps(working_dps(base, depth)):
        rule = _Rule(base)
        r0 = target_mp(x)
        if not rule.contains(r0):
            return
        stack = [((), r0)]
        while stack:
            digits, r = stack.pop()
            if len(digits) == depth:
                yield PrefixNode(digits, r, depth)
                continue
            for c in (0, 1):
                r2 = rule.step(r, c)
                if rule.contains(r2):
                    stack.append((digits + (c,), r2))


def count_prefixes(x: Target, base: Base, depth: int, limit: Optional[int] = None) -> int:
    """Number of length-``depth`` words surviving the prune at every step.

    For complex bases outside the exact families this is an upper bound.  With
    ``limit`` the count stops once it reaches ``limit``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > DEPTH_LIMIT:
        raise ValueError(f"depth {depth} beyond limit {DEPTH_LIMIT}")
    with mpmath.workdps(working_dps(base, depth)):
        rule = _Rule(base)
        r0 = target_mp(x)
        if not rule.contains(r0):
            return 0
        count = 0
        stack = [(0, r0)]
        while stack:
            k, r = stack.pop()
            if k == depth:
                count += 1
                if limit is not None and count >= limit:
                    return count
                continue
            for c in (0, 1):
                r2 = rule.step(r, c)
                if rule.contains(r2):
                    stack.append((k + 1, r2))
        return count


@dataclass(frozen=True)
class BranchWitness:
    digits: Tuple[int, ...]
    positions: Tuple[int, ...]  # 1-based positions where both digits were feasible


def _best_branching(r: float, q: float, top: float, steps: int) -> int:
    if steps == 0:
        return 0
    opts = [q * r - c for c in (0, 1) if -1e-12 <= q * r - c <= top + 1e-12]
    here = 1 if len(opts) == 2 else 0
    return here + max(_best_branching(r2, q, top, steps - 1) for r2 in opts)


def branching_witness(x: Target, base: Base, depth: int, lookahead: int = 8) -> BranchWitness:
    """A feasible path of length ``depth`` with many positions where both digits fit.

    Every branch position certifies one more distinct feasible prefix, since
    with q <= 2 no feasible remainder is a dead end.  The path is steered by
    an exhaustive float look-ahead of ``lookahead`` steps; ties prefer 1.
    """
    if base.family != "positive" or not base.p < GOLDEN:
        raise ValueError("branching_witness needs a positive real base 1 < q < golden mean")
    with mpmath.workdps(working_dps(base, depth)):
        rule = _Rule(base)
        r = target_mp(x)
        lo, hi = rule.box
        if not (lo + TOL < r < hi - TOL):
            raise ValueError("x must be an interior point of J_q")
        qf, top = float(rule.q), float(hi)
        digits, positions = [], []
        for k in range(1, depth + 1):
            opts = [(c, rule.step(r, c)) for c in (1, 0) if rule.contains(rule.step(r, c))]
            if len(opts) == 2:
                positions.append(k)
                steps = min(lookahead, depth - k)
                scores = [_best_branching(float(r2), qf, top, steps) for _, r2 in opts]
                c, r = opts[scores.index(max(scores))]
            else:
                c, r = opts[0]
            digits.append(c)
        return BranchWitness(tuple(digits), tuple(positions))


def _quasi_greedy(rule: _Rule, r, K: int) -> List[int]:
    digits = []
    for _ in range(K):
        for c in (1, 0):
            r2 = rule.step(r, c)
            if rule.contains(r2):
                digits.append(c)
                r = r2
                break
        else:
            raise ExpansionFailure("dead end: no feasible digit", digits)
    return digits


def expand_positive(x: Target, base: Base, K: int) -> DigitSequence:
    """Quasi-greedy expansion in a positive real base."""
    if base.family != "positive":
        raise ValueError("expected a positive real base")
    with mpmath.workdps(working_dps(base, K)):
        rule = _Rule(base)
        r = target_mp(x)
        if not rule.contains(r):
            raise ExpansionFailure(f"x outside [0, 1/(q-1)] for q={base}")
        return DigitSequence(tuple(_quasi_greedy(rule, r, K)))


def expand_negative_base(x: Target, base: Base, K: int) -> DigitSequence:
    """Expand in base ``-p`` through the base-``p`` expansion of ``x + p/(p^2-1)``."""
    if base.family != "negative":
        raise ValueError("expected a negative real base")
    pos = Base(base.p_text)
    with mpmath.workdps(working_dps(base, K)):
        p = base.p_mp()
        y = target_mp(x) + p / (p * p - 1)
        rule = _Rule(pos)
        if not rule.contains(y):
            raise ExpansionFailure(f"x + p/(p^2-1) outside [0, 1/(p-1)] for p={pos}")
        digits = _quasi_greedy(rule, y, K)
    return transform_T(DigitSequence(tuple(digits)), 1)


def expand_imaginary(z: Target, base: Base, K: int) -> DigitSequence:
    """Expand in base ``q = +-ip``: ``z = q*u + v`` with u, v expanded in base ``-p^2``."""
    if base.family != "imaginary":
        raise ValueError("expected a purely imaginary base")
    q2 = Base(f"({base.p_text})**2", turn=Fraction(1, 2))
    half = (K + 1) // 2
    with mpmath.workdps(working_dps(base, K)):
        w = mpmath.mpc(target_mp(z))
        p = base.p_mp()
        sign = 1 if base.turn == Fraction(1, 4) else -1
        u = sign * w.imag / p
        v = w.real
        if not _Rule(base).contains(w):
            raise ExpansionFailure("z outside the rectangle bounding J_q")
        # pass exact mp values through callables so no precision is lost
        try:
            du = expand_negative_base(lambda: u, q2, half).head
            dv = expand_negative_base(lambda: v, q2, half).head
        except ExpansionFailure as exc:
            raise ExpansionFailure(f"imaginary base with p^2 > 2 not representable here: {exc}")
    out = []
    for a, b in zip(du, dv):
        out.extend((a, b))
    return DigitSequence(tuple(out[:K]))


def expand_complex_greedy(z: Target, base: Base, K: int, backtrack_budget: int = 10 ** 6) -> DigitSequence:
    """Depth-first search preferring the smaller next remainder.

    Only the necessary bound ``|r| <= 1/(p-1)`` prunes, so dead ends are
    possible; the search backtracks until ``backtrack_budget`` node
    expansions are spent and then raises ``ExpansionFailure``.
    """
    with mpmath.workdps(working_dps(base, K)):
        p = base.p_mp()
        q = base.q_mp()
        radius = 1 / (p - 1)
        r0 = mpmath.mpmathify(target_mp(z))
        if abs(r0) > radius + TOL:
            raise ExpansionFailure(f"|z| exceeds 1/(p-1) = {float(radius):.6g}")
        digits = [0] * K
        # frame: remainder before choosing position k, and options not yet tried
        stack = [(r0, None)]
        best = ()
        spent = 0
        while stack:
            k = len(stack) - 1
            r, opts = stack[-1]
            if k == K:
                return DigitSequence(tuple(digits))
            if opts is None:
                spent += 1
                if spent > backtrack_budget:
                    raise ExpansionFailure("backtrack budget exhausted", best)
                cands = []
                for c in (0, 1):
                    r2 = q * r - c
                    if abs(r2) <= radius + TOL:
                        cands.append((abs(r2), c, r2))
                cands.sort(key=lambda t: t[0])
                opts = [(c, r2) for _, c, r2 in cands]
            if not opts:
                stack.pop()
                continue
            c, r2 = opts.pop(0)
            stack[-1] = (r, opts)
            digits[k] = c
            if k + 1 > len(best):
                best = tuple(digits[: k + 1])
            stack.append((r2, None))
        raise ExpansionFailure("no expansion within the disk bound", best)


def expand(x: Target, base: Base, K: int, backtrack_budget: int = 10 ** 6) -> DigitSequence:
    """Dispatch to the expander for the base's family."""
    family = base.family
    if family == "positive":
        return expand_positive(x, base, K)
    if family == "negative":
        return expand_negative_base(x, base, K)
    if family == "imaginary":
        return expand_imaginary(x, base, K)
    return expand_complex_greedy(x, base, K, backtrack_budget)


@dataclass(frozen=True)
class SubsetFamily:
    """A finite subset of the odd indices ``2n+1, 2n+3, ...``."""

    n: int
    members: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        members = frozenset(int(k) for k in self.members)
        for k in members:
            if k % 2 == 0 or k < 2 * self.n + 1:
                raise ValueError(f"member {k} is not an odd index >= {2 * self.n + 1}")
        object.__setattr__(self, "members", members)


def least_family_start(p: float, R: float) -> int:
    """Least n with ``p**-(2n+1) + p**-(2n+3) + ... < R``, with a 1e-6 safety factor."""
    n = 1
    while p ** -(2 * n + 1) / (1 - p ** -2) >= R * (1 - 1e-6):
        n += 1
    return n


def continuum_family(z: Target, base: Base, R: float, family: SubsetFamily, K: int,
                     backtrack_budget: int = 10 ** 6) -> DigitSequence:
    """One expansion of ``z`` per subset: ones at the subset's odd positions.

    ``w = z - sum_{k in A} q**-k`` is expanded in base ``q^2`` and its digits
    are placed at the even positions.
    """
    p = base.p
    if family.n < least_family_start(p, R):
        raise ValueError(f"n={family.n} too small: need n >= {least_family_start(p, R)}")
    if any(k > K for k in family.members):
        raise ValueError("subset members must not exceed K")
    base2 = base.squared()
    with mpmath.workdps(working_dps(base, K)):
        zz = mpmath.mpmathify(target_mp(z))
        if abs(zz) > R * (1 + 1e-12):
            raise ValueError("|z| exceeds R")
        w = zz - mpmath.fsum(1 / base.power_mp(k) for k in sorted(family.members))
        even = expand(lambda: w, base2, K // 2, backtrack_budget).head
    digits = [0] * K
    for k in family.members:
        digits[k - 1] = 1
    for j, e in enumerate(even, start=1):
        if 2 * j <= K:
            digits[2 * j - 1] = e
    return DigitSequence(tuple(digits))
