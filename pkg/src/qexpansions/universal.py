"""Universal expansions in bases q = p*omega with omega a root of unity.

A point is written in the frame ``f_j = (p*omega)**(m-j)``, ``j = 1..m``, as
``sum_j f_j * alpha_j``; a digit sequence expands it when every coordinate
satisfies ``alpha_j = sum_i d_{m*i+j} * x**-(i+1)`` with ``x = p**m``.  The
construction stitches blocks onto the sequence one at a time, each stage
solving a {0,1}-polynomial approximation problem at ``x`` and leaving a
rescaled residual in ``(0, 1)`` for the next stage.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .bases import Base, frame
from .digits import Block, DigitSequence, enumerate_blocks, padded_block, transform_T
from .expansions import target_mp
from .spectrum import lower_point, second_pisot

FOURTH_ROOT_2 = 2 ** 0.25
PISOT_WARN_DISTANCE = 1e-6
MARGIN = 1e-6


class PreconditionError(ValueError):
    """The hypotheses of the construction are not met."""


class ConstructionError(RuntimeError):
    """The construction could not complete within its caps."""


@dataclass(frozen=True)
class AlphaVector:
    """Real coordinates of a point in the frame ``(p*omega)**(size-j)``."""

    base: Base
    alphas: Tuple[float, ...]

    @property
    def size(self) -> int:
        return len(self.alphas)

    def point(self) -> complex:
        return sum(f * a for f, a in zip(frame(self.base, self.size), self.alphas))


@dataclass(frozen=True)
class ConstructionCheckpoint:
    index: int                  # i_k: number of complete rows of m digits
    residuals: Tuple[object, ...]  # alpha_j - partial sum, mpmath values
    scaled: Tuple[object, ...]     # residuals times x**index, in (0, 1)
    block: Block                # the block the prefix now ends with


# --- first step: coordinates strictly inside (0, 1) ---------------------------

def _frame_matrix(base: Base, size: int) -> np.ndarray:
    f = frame(base, size)
    return np.array([[v.real for v in f], [v.imag for v in f]])


def _projection(A: np.ndarray, b: np.ndarray, center: np.ndarray) -> np.ndarray:
    # point of {A a = b} nearest to center
    return center + A.T @ np.linalg.solve(A @ A.T, b - A @ center)


def _lp_point(A: np.ndarray, b: np.ndarray, lo: float, hi: float) -> Optional[np.ndarray]:
    from scipy.optimize import linprog

    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b,
                  bounds=[(lo, hi)] * A.shape[1], method="highs")
    return res.x if res.status == 0 else None


def decompose_alpha(z, base: Base, t: float = 1 + 1e-3, retries: int = 10) -> AlphaVector:
    """Coordinates ``0 < alpha_j < 1`` of ``z`` in the frame of ``base``.

    The nearest solution to the all-halves vector is returned when it is
    comfortably inside the cube.  Otherwise a representation of ``t*z`` in
    ``[0, 1]**m`` is divided by ``t`` and shifted along the kernel direction
    ``s * p**(j-m)``, which the frame maps to ``s * sum_j omega**(m-j) = 0``.
    """
    m = base.order
    if m is None or m < 3:
        raise PreconditionError("decompose_alpha needs omega of order m >= 3")
    p = base.p
    if not 1 < p ** m <= 2 * (1 + 1e-15):
        raise PreconditionError("needs 1 < p**m <= 2")
    z = complex(z)
    A = _frame_matrix(base, m)
    b = np.array([z.real, z.imag])
    alpha = _projection(A, b, np.full(m, 0.5))
    if alpha.min() >= MARGIN and alpha.max() <= 1 - MARGIN:
        return AlphaVector(base, tuple(float(a) for a in alpha))
    kernel = np.array([p ** (j - m) for j in range(1, m + 1)])
    step = t - 1
    for _ in range(retries):
        tt = 1 + step
        sol = _lp_point(A, tt * b, 0.0, 1.0)
        if sol is not None:
            alpha = sol / tt
            s_lo = max(0.0, float(np.max((MARGIN - alpha) / kernel)))
            s_hi = float(np.min((1 - MARGIN - alpha) / kernel))
            if s_lo <= s_hi:
                alpha = alpha + s_lo * kernel
                return AlphaVector(base, tuple(float(a) for a in alpha))
        step /= 2
    raise PreconditionError(f"{z} is not an interior point of (p^m - 1) J_q")


# --- second step: one block ----------------------------------------------------

@dataclass(frozen=True)
class SuffixExtension:
    digits: Tuple[int, ...]        # length m*(n+N), ends with the block
    n: int
    scaled_residuals: Tuple[object, ...]  # x**(n+N) * (alpha_j - partial sum), in (0, 1)


def _check_x(x: float, strict_quarter: bool = True):
    if not 1 < x < FOURTH_ROOT_2:
        raise PreconditionError(f"needs 1 < p**m < 2**(1/4), got p**m = {x:.10g}")
    if abs(x * x - second_pisot()) < PISOT_WARN_DISTANCE:
        warnings.warn(f"(p**m)**2 = {x * x:.10g} is within {PISOT_WARN_DISTANCE} of the "
                      "second Pisot number; the construction may not terminate", RuntimeWarning)


def _extend(x, alphas: Sequence, c: Sequence[int], m: int, n_cap: int,
            budget: int = 256) -> SuffixExtension:
    # all arithmetic in mpmath at the caller's precision
    if len(c) % m:
        raise ValueError("block length must be a multiple of m")
    N = len(c) // m
    A = [mpmath.fsum(x ** -(i + 1) for i in range(N) if c[m * i + j]) for j in range(m)]
    gap = x ** -N
    n = 1
    while any(x ** n * a <= Aj for a, Aj in zip(alphas, A)):
        n += 1
    first = n
    while n <= first + n_cap:
        xn = x ** n
        found = []
        for a, Aj in zip(alphas, A):
            lp = lower_point(x, xn * a - Aj, gap, n, budget=budget)
            if lp is None:
                break
            found.append(lp)
        if len(found) == m:
            d = [0] * (m * n)
            for j, lp in enumerate(found):
                for i in range(n):
                    d[m * i + j] = lp.coeffs[n - 1 - i]
            scaled = tuple(lp.residual * x ** N for lp in found)
            return SuffixExtension(tuple(d) + tuple(c), n, scaled)
        n += 1
    raise ConstructionError(
        f"no suitable n in [{first}, {first + n_cap}] for p**m = {float(x):.10g}, "
        f"block length {len(c)}; p**m may be too close to the second Pisot number "
        "or the search budget too small")


def default_n_cap(m: int) -> int:
    return max(1, 400 // m)


def extend_with_suffix(alpha: AlphaVector, c, n_cap: Optional[int] = None,
                       dps: Optional[int] = None) -> SuffixExtension:
    """Prepend digits to block ``c`` so each coordinate's residual lands in ``(0, x**-(n+N))``."""
    m = alpha.size
    digits = c.digits if isinstance(c, Block) else tuple(c)
    if any(not 0 < a <= 1 for a in alpha.alphas):
        raise PreconditionError("needs 0 < alpha_j <= 1")
    _check_x(alpha.base.p ** m)
    cap = default_n_cap(m) if n_cap is None else n_cap
    if dps is None:
        dps = 40 + int(math.ceil((len(digits) // m + 2 * cap) * math.log10(alpha.base.p ** m)))
    with mpmath.workdps(dps):
        x = alpha.base.p_mp() ** m
        return _extend(x, [mpmath.mpf(a) for a in alpha.alphas], digits, m, cap)


# --- third step: stitching -----------------------------------------------------

class _NeedPrecision(Exception):
    def __init__(self, dps):
        self.dps = dps


@dataclass
class UniversalResult:
    digits: DigitSequence
    checkpoints: List[ConstructionCheckpoint]
    blocks: List[Block]           # the blocks stitched in, in order
    size: int                     # frame size m
    alphas: Tuple[object, ...]    # coordinates the digits expand (mpmath values)
    dps: int
    inner: Optional["UniversalResult"] = None   # the transformed construction (even route)
    meta: dict = field(default_factory=dict)


def _stitch_at(base: Base, size: int, alphas_fn: Callable, blocks: Sequence[Block],
               n_cap: int, dps: int) -> UniversalResult:
    with mpmath.workdps(dps):
        x = base.p_mp() ** size
        logx = float(mpmath.log10(x))
        alphas = [mpmath.mpf(a) for a in alphas_fn()]
        rho = list(alphas)
        digits: List[int] = []
        checkpoints = []
        rows = 0
        for k, blk in enumerate(blocks, start=1):
            c = blk.digits + (0,) * (-len(blk) % size)
            ext = _extend(x, rho, c, size, n_cap)
            digits.extend(ext.digits)
            rows += len(ext.digits) // size
            rho = list(ext.scaled_residuals)
            if not all(0 < r < 1 for r in rho):
                raise ConstructionError("rescaled residual left (0, 1)")
            scale = x ** -rows
            checkpoints.append(ConstructionCheckpoint(
                rows, tuple(r * scale for r in rho), tuple(rho), blk))
            if rows * logx + 30 > dps:
                per_block = rows / k
                raise _NeedPrecision(int(1.25 * per_block * len(blocks) * logx) + 80)
        return UniversalResult(DigitSequence(tuple(digits)), checkpoints, list(blocks),
                               size, tuple(alphas), dps)


def _stitch(base: Base, size: int, alphas_fn: Callable, blocks: Sequence[Block],
            n_cap: Optional[int] = None, dps: int = 60) -> UniversalResult:
    cap = default_n_cap(size) if n_cap is None else n_cap
    for _ in range(8):
        try:
            return _stitch_at(base, size, alphas_fn, blocks, cap, dps)
        except _NeedPrecision as need:
            dps = max(need.dps, 2 * dps)
    raise ConstructionError("precision escalation did not converge")


def level_block_count(level: int) -> int:
    """Number of blocks of length <= ``level``."""
    return 2 ** (level + 1) - 2


def universal_expansion(alpha: AlphaVector, num_blocks: int, n_cap: Optional[int] = None) -> UniversalResult:
    """A prefix of a universal expansion of the point with coordinates ``alpha``.

    Blocks ``B_1..B_k`` in length-lexicographic order, each padded with zeros
    to a multiple of the frame size, are stitched in turn; the checkpoint after
    block ``B_k`` records ``0 < alpha_j - partial < x**-i_k``.
    """
    m = alpha.size
    if any(not 0 < a < 1 for a in alpha.alphas):
        raise PreconditionError("needs 0 < alpha_j < 1")
    _check_x(alpha.base.p ** m)
    blocks = enumerate_blocks(num_blocks)
    return _stitch(alpha.base, m, lambda: alpha.alphas, blocks, n_cap)


def even_range(base: Base, m_prime: int) -> Tuple[float, float]:
    """Open range for the coordinates in the even-order construction."""
    x = base.p ** m_prime
    lo = -x / (x * x - 1)
    return lo, (x * x - x - 1) / (x * x - 1)


def _even_alphas_mp(z, base: Base, m_prime: int):
    # coordinates of z in the frame (p*omega)**(m'-j), j = 1..m'
    w = mpmath.mpmathify(target_mp(z))
    if m_prime == 1:
        w = mpmath.mpc(w)
        if abs(w.imag) > 1e-15 * max(1, abs(w)):
            raise PreconditionError("for m' = 1 the point must be real")
        return [w.real]
    if m_prime == 2:
        w = mpmath.mpc(w)
        f = base.power_mp(1)
        a1 = w.imag / f.imag
        return [a1, w.real - f.real * a1]
    lo, hi = even_range(base, m_prime)
    A = _frame_matrix(base, m_prime)
    zz = complex(w)
    b = np.array([zz.real, zz.imag])
    center = np.full(m_prime, (lo + hi) / 2)
    sol = _projection(A, b, center)
    width = hi - lo
    if not (sol.min() > lo + MARGIN * width and sol.max() < hi - MARGIN * width):
        sol = _lp_point(A, b, lo + MARGIN * width, hi - MARGIN * width)
        if sol is None:
            raise PreconditionError("no frame coordinates inside the open range")
    return [mpmath.mpf(float(a)) for a in sol]


def universal_even(z, base: Base, num_blocks: int, n_cap: Optional[int] = None) -> UniversalResult:
    """Universal expansion for an even order ``m = 2m'`` via the translate and ``T``.

    The translate ``z' = z + x/(x^2-1) * sum_j (p*omega)**(m'-j)``, ``x = p**m'``,
    has coordinates in ``(0, 1)``; its expansion ``d'`` is built from the blocks
    ``padded_block(B_k, m')`` and ``d = T(d', m')`` is returned, so ``d`` contains
    every ``B_k``.
    """
    m = base.order
    if m is None or m % 2:
        raise PreconditionError("universal_even needs omega of even order m = 2m'")
    m_prime = m // 2
    x = base.p ** m_prime
    if not x * x < 2 ** 0.5:
        raise PreconditionError("needs 1 < p < 2**(1/(2m))")
    _check_x(x)
    lo, hi = even_range(base, m_prime)
    with mpmath.workdps(40):
        alphas = [float(a) for a in _even_alphas_mp(z, base, m_prime)]
    for a in alphas:
        if not lo < a < hi:
            raise PreconditionError(
                f"coordinate {a:.10g} outside the open range ({lo:.10g}, {hi:.10g})")

    def translated():
        xx = base.p_mp() ** m_prime
        shift = xx / (xx * xx - 1)
        return [a + shift for a in _even_alphas_mp(z, base, m_prime)]

    blocks = [padded_block(b, m_prime) for b in enumerate_blocks(num_blocks)]
    inner = _stitch(base, m_prime, translated, blocks, n_cap)
    d = transform_T(inner.digits, m_prime)
    with mpmath.workdps(inner.dps):
        exact = tuple(_even_alphas_mp(z, base, m_prime))
    return UniversalResult(d, inner.checkpoints, enumerate_blocks(num_blocks), m_prime,
                           exact, inner.dps, inner=inner,
                           meta={"m_prime": m_prime})


# --- certificates --------------------------------------------------------------

def _decimal(v) -> str:
    if isinstance(v, float):
        return format(Decimal(v))   # exact binary value
    return mpmath.nstr(v, mpmath.mp.dps, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)


def build_certificate(result: UniversalResult, base: Base, z=None, level: Optional[int] = None) -> dict:
    """JSON-ready record of a construction that :func:`verify_certificate` can recheck."""
    route = "even" if result.inner is not None else "frame"
    with mpmath.workdps(40):
        checkpoints = [{
            "index": cp.index,
            "block": str(blk),
            "scaled_residuals": [_decimal(r) for r in cp.scaled],
        } for cp, blk in zip(result.checkpoints, result.blocks)]
    with mpmath.workdps(result.dps):
        alphas = [_decimal(a) for a in result.alphas]
    cert = {
        "schema": 1,
        "kind": "universal",
        "route": route,
        "base": str(base),
        "frame_size": result.size,
        "alpha": alphas,
        "num_blocks": len(result.blocks),
        "level": level,
        "dps": result.dps,
        "digits": str(result.digits),
        "checkpoints": checkpoints,
    }
    if z is not None:
        z = complex(z)
        cert["z"] = [repr(z.real), repr(z.imag)]
    return cert


@dataclass
class VerifyReport:
    valid: bool
    failures: List[str]
    min_margin: float = math.inf   # smallest residual margin relative to its window


def verify_certificate(cert: dict) -> VerifyReport:
    """Recheck a certificate from its digits alone, at twice the construction precision."""
    from .bases import evaluate, parse_base
    from .digits import is_universal_prefix

    fails: List[str] = []

    def fail(msg):
        fails.append(msg)
        return VerifyReport(False, fails)

    try:
        if cert.get("schema") != 1 or cert.get("kind") != "universal":
            return fail("unsupported schema or kind")
        base = parse_base(cert["base"])
        size = int(cert["frame_size"])
        d = DigitSequence.parse(cert["digits"])
        if not d.is_finite or len(d) % size:
            return fail("digit string is not a whole number of frame rows")
        route = cert["route"]
        num_blocks = int(cert["num_blocks"])
        checkpoints = cert["checkpoints"]
    except (KeyError, TypeError, ValueError) as exc:
        return fail(f"malformed certificate: {exc}")

    blocks = enumerate_blocks(num_blocks)
    if route == "even":
        stitched = [padded_block(b, size) for b in blocks]
        inner = transform_T(d, size)
    elif route == "frame":
        stitched = blocks
        inner = d
    else:
        return fail(f"unknown route {route!r}")
    if len(checkpoints) != num_blocks:
        return fail("one checkpoint per block expected")

    dps = 2 * int(cert.get("dps", 60)) + 20
    word = inner.head
    report = VerifyReport(True, fails)
    with mpmath.workdps(dps):
        x = base.p_mp() ** size
        alphas = [mpmath.mpf(a) for a in cert["alpha"]]
        if route == "even":
            shift = x / (x * x - 1)
            alphas = [a + shift for a in alphas]
        if len(alphas) != size:
            return fail("alpha has the wrong length")
        if not all(0 < a <= 1 for a in alphas):
            fails.append("coordinates are not in (0, 1]")
        # error of each running sum: a few ulps per term
        ulp = mpmath.mpf(2) ** (-mpmath.mp.prec + 4)
        partial = [mpmath.mpf(0)] * size
        inv = 1 / x
        w = inv
        row = 0
        last = 0
        for k, cp in enumerate(checkpoints):
            idx = int(cp["index"])
            if idx <= last or idx * size > len(word):
                fails.append(f"checkpoint {k + 1}: bad index {idx}")
                break
            while row < idx:
                for j in range(size):
                    if word[size * row + j]:
                        partial[j] += w
                w *= inv
                row += 1
            blk = stitched[k].digits + (0,) * (-len(stitched[k]) % size)
            if tuple(word[size * idx - len(blk): size * idx]) != blk:
                fails.append(f"checkpoint {k + 1}: prefix does not end with block {blocks[k]}")
            if cp["block"] != str(blocks[k]):
                fails.append(f"checkpoint {k + 1}: block label {cp['block']} != {blocks[k]}")
            window = x ** -idx
            err = 10 * (idx + 2) * ulp
            for j in range(size):
                r = alphas[j] - partial[j]
                if not err < r < window - err:
                    fails.append(f"checkpoint {k + 1}: residual {j + 1} outside (0, x^-{idx})")
                    continue
                claimed = mpmath.mpf(cp["scaled_residuals"][j])
                if abs(r / window - claimed) > mpmath.mpf(10) ** -25:
                    fails.append(f"checkpoint {k + 1}: scaled residual {j + 1} does not match")
                report.min_margin = min(report.min_margin, float(min(r, window - r) / window))
            last = idx
        if last * size != len(word):
            fails.append("digits run past the last checkpoint")
        if "z" in cert and not fails:
            z = mpmath.mpc(mpmath.mpf(cert["z"][0]), mpmath.mpf(cert["z"][1]))
            ev = evaluate(d, base, use_mp=True)
            if abs(ev.value - z) > ev.tail_radius + 1e-9:
                fails.append("digits do not evaluate to z")
    level = cert.get("level")
    if level and not is_universal_prefix(d, int(level)):
        fails.append(f"digits are not universal to level {level}")
    report.valid = not fails
    return report
