"""Bases q = p*omega, evaluation of digit sequences and the sets J_q."""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import mpmath
from mpmath import mp

from .digits import DigitSequence, transform_T


class UnsupportedBase(ValueError):
    """The operation is not defined for this family of bases."""


_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


@lru_cache(maxsize=256)
def _real_at(text: str, prec: int) -> mpmath.mpf:
    with mpmath.workprec(prec):
        if _DECIMAL_RE.match(text):
            return +mpmath.mpf(text)
        import sympy

        expr = sympy.sympify(text)
        if not expr.is_real:
            raise ValueError(f"{text!r} is not a real constant")
        dps = int(prec * 0.30103) + 10
        return +mpmath.mpf(str(sympy.N(expr, dps)))


def real_value(text: str) -> mpmath.mpf:
    """Evaluate a real constant (decimal or sympy expression) at the current precision."""
    return _real_at(text.strip(), mp.prec)


def real_float(text: str) -> float:
    with mpmath.workdps(30):
        return float(real_value(text))


# exact values of exp(2*pi*i*k/4)
_QUARTER = {0: (1, 0), 1: (0, 1), 2: (-1, 0), 3: (0, -1)}


@dataclass(frozen=True)
class Base:
    """The base ``q = p * omega`` with ``p > 1`` and ``|omega| = 1``.

    ``omega`` is ``exp(2*pi*i*turn)`` for a rational ``turn`` (exact powers by
    index arithmetic), or ``exp(i*angle)`` for a free angle in radians.
    """

    p_text: str
    turn: Optional[Fraction] = None
    angle: Optional[float] = None

    def __post_init__(self):
        if self.turn is not None and self.angle is not None:
            raise ValueError("give either a rational turn or a free angle")
        if self.turn is None and self.angle is None:
            object.__setattr__(self, "turn", Fraction(0))
        if self.turn is not None:
            object.__setattr__(self, "turn", Fraction(self.turn) % 1)
        p = real_float(self.p_text)
        if not p > 1:
            raise ValueError(f"modulus p must exceed 1, got {self.p_text}")

    @classmethod
    def real(cls, q) -> "Base":
        text = str(q)
        if text.startswith("-"):
            return cls(text[1:], turn=Fraction(1, 2))
        return cls(text)

    @property
    def p(self) -> float:
        return real_float(self.p_text)

    @property
    def order(self) -> Optional[int]:
        """Smallest m with omega**m == 1, when omega is a rational rotation."""
        return None if self.turn is None else self.turn.denominator

    @property
    def family(self) -> str:
        m = self.order
        if m is None:
            return "general"
        return {1: "positive", 2: "negative", 4: "imaginary"}.get(m, "root_of_unity")

    def omega_power(self, k: int) -> complex:
        if self.turn is None:
            return cmath.exp(1j * self.angle * k)
        r = self.turn * k % 1
        if r.denominator in (1, 2, 4):
            re_, im_ = _QUARTER[int(r * 4)]
            return complex(re_, im_)
        return cmath.exp(2j * math.pi * float(r))

    def omega_power_mp(self, k: int):
        if self.turn is None:
            return mpmath.expj(mpmath.mpf(self.angle) * k)
        r = self.turn * k % 1
        if r.denominator in (1, 2, 4):
            re_, im_ = _QUARTER[int(r * 4)]
            return mpmath.mpc(re_, im_)
        return mpmath.mpc(mpmath.cospi(2 * mpmath.mpf(r.numerator) / r.denominator),
                          mpmath.sinpi(2 * mpmath.mpf(r.numerator) / r.denominator))

    @property
    def omega(self) -> complex:
        return self.omega_power(1)

    @property
    def q(self) -> complex:
        return self.p * self.omega

    def p_mp(self) -> mpmath.mpf:
        return real_value(self.p_text)

    def q_mp(self):
        return self.p_mp() * self.omega_power_mp(1)

    def power_mp(self, k: int):
        """``q**k`` with the rotation part computed by index arithmetic."""
        return self.p_mp() ** k * self.omega_power_mp(k)

    def power(self, k: int) -> complex:
        return self.p ** k * self.omega_power(k)

    def squared(self) -> "Base":
        text = f"({self.p_text})**2"
        if self.turn is not None:
            return Base(text, turn=2 * self.turn)
        return Base(text, angle=2 * self.angle)

    def __str__(self):
        if self.turn is None:
            return f"{self.p_text}@rad:{self.angle!r}"
        if self.turn == 0:
            return self.p_text
        if self.turn == Fraction(1, 2):
            return f"-{self.p_text}"
        if self.turn == Fraction(1, 4):
            return f"{self.p_text}*i"
        if self.turn == Fraction(3, 4):
            return f"-{self.p_text}*i"
        return f"{self.p_text}@{self.turn.numerator}/{self.turn.denominator}"


def parse_base(text: str) -> Base:
    """Parse ``"p"``, ``"-p"``, ``"p*i"``, ``"-p*i"``, ``"p@a/b"`` or ``"p@rad:theta"``."""
    s = text.strip().replace(" ", "")
    if "@" in s:
        p_text, _, rot = s.partition("@")
        if rot.startswith("rad:"):
            return Base(p_text, angle=float(rot[4:]))
        a, _, b = rot.partition("/")
        if not b:
            raise ValueError(f"rotation must be a/b or rad:theta, got {rot!r}")
        return Base(p_text, turn=Fraction(int(a), int(b)))
    turn = Fraction(0)
    if s.endswith("*i"):
        s = s[:-2]
        turn = Fraction(1, 4)
    if s.startswith("-"):
        s = s[1:]
        turn = turn + Fraction(1, 2)
    return Base(s, turn=turn)


def parse_complex(text: str) -> complex:
    """``"0.3+0.4i"``, ``"-1.2"``, ``"0.2i"``, ``"-i"``."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("j", "i")
    if s.endswith("i"):
        m = re.match(r"^([+-]?[^+-]*(?:[eE][+-]?\d+)?)?([+-][^+-]*(?:[eE][+-]?\d+)?)i$", s)
        if m and m.group(1):
            re_, im_ = m.group(1), m.group(2)
        else:
            re_, im_ = "0", s[:-1]
        if im_ in ("", "+"):
            im_ = "1"
        elif im_ == "-":
            im_ = "-1"
        return complex(float(re_), float(im_))
    return complex(float(s), 0.0)


@dataclass(frozen=True)
class EvaluatedValue:
    value: complex
    tail_radius: float


def _digit_sums_by_residue(digits: Sequence[int], base: Base, offset: int, use_mp: bool):
    # returns sum_k digits[k] q**-(k+1+offset), rotation applied per residue class
    if base.turn is None:
        if use_mp:
            qi = 1 / base.q_mp()
            acc = mpmath.mpc(0)
            for d in reversed(digits):
                acc = (acc + d) * qi
            return acc * qi ** offset
        qi = 1 / base.q
        acc = 0j
        for d in reversed(digits):
            acc = (acc + d) * qi
        return acc * qi ** offset
    b = base.turn.denominator
    if use_mp:
        pinv = 1 / base.p_mp()
        sums = [mpmath.mpf(0)] * b
        w = pinv ** (offset + 1)
        for k, d in enumerate(digits):
            if d:
                r = (k + 1 + offset) % b
                sums[r] += w
            w *= pinv
        return mpmath.fsum(base.omega_power_mp(-r) * s for r, s in enumerate(sums) if s)
    p = base.p
    sums = [[] for _ in range(b)]
    for k, d in enumerate(digits):
        if d:
            sums[(k + 1 + offset) % b].append(p ** -(k + 1 + offset))
    return sum(base.omega_power(-r) * math.fsum(s) for r, s in enumerate(sums) if s) + 0j


def evaluate(d, base: Base, K: Optional[int] = None, use_mp: bool = False) -> EvaluatedValue:
    """Value of ``sum_k c_k q**-k``.

    Periodic sequences are summed in closed form (``tail_radius`` 0).  A finite
    word is read as the first digits of an unknown expansion: the first ``K``
    digits (default: all of them) are summed and ``tail_radius`` bounds what an
    all-ones continuation could add, ``p**-K / (p - 1)``.
    """
    if not isinstance(d, DigitSequence):
        d = DigitSequence(tuple(d))
    if d.tail is not None:
        h = len(d.head)
        L = len(d.tail)
        head = _digit_sums_by_residue(d.head, base, 0, use_mp)
        tail = _digit_sums_by_residue(d.tail, base, h, use_mp)
        if use_mp:
            factor = 1 / (1 - 1 / base.power_mp(L))
        else:
            factor = 1 / (1 - 1 / base.power(L))
        return EvaluatedValue(head + tail * factor, 0.0)
    if K is None:
        K = len(d.head)
    digits = d.prefix(K)
    value = _digit_sums_by_residue(digits, base, 0, use_mp)
    p = base.p
    return EvaluatedValue(value, p ** -K / (p - 1))


@dataclass(frozen=True)
class Region:
    """A bound for J_q: an interval, a rectangle, or an alpha-box.

    ``bounds`` holds one ``(lo, hi)`` pair per coordinate: one for an
    interval, (real, imaginary) for a rectangle, and one per frame vector for
    an alpha-box, whose points are ``sum_j frame[j] * alpha_j``.
    """

    kind: str
    bounds: Tuple[Tuple[float, float], ...]
    frame: Tuple[complex, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle", "alpha_box"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError("empty coordinate range")
        if self.kind == "alpha_box" and len(self.frame) != len(self.bounds):
            raise ValueError("alpha_box needs one bound per frame vector")

    def contains(self, z, tol: float = 1e-12) -> bool:
        z = complex(z)
        if self.kind == "interval":
            (lo, hi), = self.bounds
            return abs(z.imag) <= tol and lo - tol <= z.real <= hi + tol
        if self.kind == "rectangle":
            (xl, xh), (yl, yh) = self.bounds
            return xl - tol <= z.real <= xh + tol and yl - tol <= z.imag <= yh + tol
        from scipy.optimize import linprog

        A = [[f.real for f in self.frame], [f.imag for f in self.frame]]
        res = linprog(
            [0.0] * len(self.frame), A_eq=A, b_eq=[z.real, z.imag],
            bounds=[(lo - tol, hi + tol) for lo, hi in self.bounds], method="highs",
        )
        return res.status == 0

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "bounds": [[repr(lo), repr(hi)] for lo, hi in self.bounds]}
        if self.frame:
            out["frame"] = [[repr(f.real), repr(f.imag)] for f in self.frame]
        return out


def negative_offset(p: float) -> float:
    """``p / (p**2 - 1)``: J_{-p} is J_p shifted left by this amount."""
    return p / (p * p - 1)


def frame(base: Base, size: int, use_mp: bool = False) -> list:
    """The frame vectors ``(p*omega)**(size - j)`` for ``j = 1..size``."""
    if use_mp:
        return [base.power_mp(size - j) for j in range(1, size + 1)]
    return [base.power(size - j) for j in range(1, size + 1)]


def jq_bounds(base: Base) -> Region:
    family = base.family
    p = base.p
    if family == "positive":
        return Region("interval", ((0.0, 1 / (p - 1)),))
    if family == "negative":
        return Region("interval", ((-p / (p * p - 1), 1 / (p * p - 1)),))
    if family == "imaginary":
        den = p ** 4 - 1
        re_b = (-p * p / den, 1 / den)
        im_b = (-p ** 3 / den, p / den)
        if base.turn == Fraction(3, 4):
            im_b = (-im_b[1], -im_b[0])
        return Region("rectangle", (re_b, im_b))
    if family == "root_of_unity":
        m = base.order
        hi = 1 / (p ** m - 1)
        return Region("alpha_box", tuple((0.0, hi) for _ in range(m)), tuple(frame(base, m)))
    raise UnsupportedBase(f"no description of J_q for base {base} (omega not a root of unity)")


def is_full_region(base: Base) -> bool:
    """Whether J_q is all of ``jq_bounds(base)``."""
    family = base.family
    with mpmath.workdps(50):
        p = base.p_mp()
        eps = mpmath.mpf(10) ** -40
        if family == "positive":
            return bool(p <= 2 + eps)
        if family == "negative":
            return bool(p <= 2 + eps)
        if family == "imaginary":
            return bool(p * p <= 2 + eps)
        if family == "root_of_unity":
            return bool(p ** base.order <= 2 + eps)
    raise UnsupportedBase(f"no description of J_q for base {base}")


def negative_base_bijection(d: DigitSequence) -> Tuple[DigitSequence, Callable[[float], float]]:
    """Map an expansion in base ``-p`` to one in base ``p``.

    ``(c_k)`` expands ``x`` in base ``-p`` iff the returned sequence expands
    ``x + offset(p)`` in base ``p``.
    """
    return transform_T(d, 1), negative_offset


def imaginary_split(d: DigitSequence) -> Tuple[DigitSequence, DigitSequence]:
    """Odd- and even-position digits: value(d, q) = q*value(odd, q^2) + value(even, q^2)."""
    if d.tail is None:
        return DigitSequence(d.head[0::2]), DigitSequence(d.head[1::2])
    head, tail = d.unrolled(2, 2)
    return (DigitSequence(head[0::2], tail[0::2]),
            DigitSequence(head[1::2], tail[1::2]))
