"""Digit words over {0, 1}, block enumeration and the block-parity transform."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

Digits = Tuple[int, ...]

_SEQ_RE = re.compile(r"^([01]*)(?:\(([01]+)\)\*)?$")


def _check_digits(digits: Sequence[int]) -> Digits:
    out = tuple(int(d) for d in digits)
    for d in out:
        if d not in (0, 1):
            raise ValueError(f"digit {d!r} is not 0 or 1")
    return out


def _min_period(tail: Digits) -> Digits:
    n = len(tail)
    for k in range(1, n + 1):
        if n % k == 0 and tail[:k] * (n // k) == tail:
            return tail[:k]
    return tail


@dataclass(frozen=True)
class DigitSequence:
    """A finite word, or an eventually periodic sequence ``head (tail)^inf``.

    ``tail=None`` means a finite word; its length is significant (it is a
    prefix, not the number ``head 0^inf``).  Periodic sequences are stored in
    canonical form: minimal period and minimal preperiod, so equality is
    equality of the infinite sequences.
    """

    head: Digits = ()
    tail: Optional[Digits] = None

    def __post_init__(self):
        head = _check_digits(self.head)
        tail = self.tail
        if tail is not None:
            tail = _check_digits(tail)
            if not tail:
                raise ValueError("periodic tail must be nonempty")
            tail = _min_period(tail)
            while head and head[-1] == tail[-1]:
                head = head[:-1]
                tail = (tail[-1],) + tail[:-1]
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def parse(cls, text: str) -> "DigitSequence":
        """Parse ``"0110"`` or ``"11(01)*"``."""
        m = _SEQ_RE.match(text.strip())
        if m is None:
            raise ValueError(f"cannot parse digit sequence {text!r}")
        head = tuple(int(c) for c in m.group(1))
        tail = tuple(int(c) for c in m.group(2)) if m.group(2) else None
        return cls(head, tail)

    @classmethod
    def periodic(cls, tail: Sequence[int], head: Sequence[int] = ()) -> "DigitSequence":
        return cls(tuple(head), tuple(tail))

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def __len__(self):
        if self.tail is not None:
            raise TypeError("periodic sequence has no finite length")
        return len(self.head)

    def __str__(self):
        s = "".join(map(str, self.head))
        if self.tail is not None:
            s += "(" + "".join(map(str, self.tail)) + ")*"
        return s

    def digit(self, k: int) -> int:
        """Digit at 1-based position ``k``; finite words read as 0 past their end."""
        if k < 1:
            raise IndexError(k)
        if k <= len(self.head):
            return self.head[k - 1]
        if self.tail is None:
            return 0
        return self.tail[(k - 1 - len(self.head)) % len(self.tail)]

    def prefix(self, n: int) -> Digits:
        """First ``n`` digits (finite words padded with zeros)."""
        if n <= len(self.head):
            return self.head[:n]
        if self.tail is None:
            return self.head + (0,) * (n - len(self.head))
        extra = n - len(self.head)
        reps = -(-extra // len(self.tail))
        return self.head + (self.tail * reps)[:extra]

    def unrolled(self, head_multiple: int, tail_multiple: int) -> Tuple[Digits, Digits]:
        """Non-canonical ``(head, tail)`` with lengths divisible by the given moduli."""
        if self.tail is None:
            raise TypeError("finite word has no tail to unroll")
        h = -(-len(self.head) // head_multiple) * head_multiple
        head = self.prefix(h)
        shift = (h - len(self.head)) % len(self.tail)
        tail = self.tail[shift:] + self.tail[:shift]
        period = len(tail) * tail_multiple // math.gcd(len(tail), tail_multiple)
        return head, tail * (period // len(tail))


@dataclass(frozen=True)
class Block:
    digits: Digits

    def __post_init__(self):
        digits = _check_digits(self.digits)
        if not digits:
            raise ValueError("a block has at least one digit")
        object.__setattr__(self, "digits", digits)

    def __len__(self):
        return len(self.digits)

    def __str__(self):
        return "".join(map(str, self.digits))


def iter_blocks() -> Iterator[Block]:
    """All finite blocks, shortest first, lexicographic within a length."""
    for length in itertools.count(1):
        for digits in itertools.product((0, 1), repeat=length):
            yield Block(digits)


def enumerate_blocks(count: int) -> list:
    """The first ``count`` blocks in length-then-lexicographic order."""
    if count < 1:
        raise ValueError("count must be positive")
    return list(itertools.islice(iter_blocks(), count))


def blocks_up_to(length: int) -> list:
    """Every block of length <= ``length`` (2**(length+1) - 2 of them)."""
    return enumerate_blocks(2 ** (length + 1) - 2)


def _transform_word(word: Digits, m_prime: int, start: int = 0) -> Digits:
    # position k (0-based, absolute start + offset) lies in block k // m'
    return tuple(
        1 - d if ((start + k) // m_prime) % 2 == 0 else d
        for k, d in enumerate(word)
    )


def transform_T(d, m_prime: int):
    """Complement the even-indexed length-``m_prime`` blocks, copy the odd ones.

    Accepts a ``DigitSequence``, a ``Block`` or a plain tuple of digits and
    returns the same kind.  The map is an involution.
    """
    if m_prime < 1:
        raise ValueError("m_prime must be a positive integer")
    if isinstance(d, Block):
        return Block(_transform_word(d.digits, m_prime))
    if isinstance(d, DigitSequence):
        if d.tail is None:
            return DigitSequence(_transform_word(d.head, m_prime))
        head, tail = d.unrolled(2 * m_prime, 2 * m_prime)
        return DigitSequence(
            _transform_word(head, m_prime), _transform_word(tail, m_prime)
        )
    return _transform_word(_check_digits(d), m_prime)


def padded_block(b_prime, m_prime: int, pad: bool = True) -> Block:
    """A block ``B`` whose transform contains ``b_prime`` wherever ``B`` sits.

    ``B`` is ``2*m_prime`` copies of ``T(b_prime)`` separated by equal runs of
    zeros; the run length makes consecutive copies start one residue apart
    modulo ``2*m_prime``, so one copy is always aligned with the parity
    pattern of ``T`` and is mapped back onto ``b_prime``.
    """
    if m_prime < 1:
        raise ValueError("m_prime must be a positive integer")
    digits = b_prime.digits if isinstance(b_prime, Block) else _check_digits(b_prime)
    if len(digits) % m_prime:
        if not pad:
            raise ValueError("block length is not a multiple of m_prime")
        digits = digits + (0,) * (-len(digits) % m_prime)
    t = _transform_word(digits, m_prime)
    period = 2 * m_prime
    sep = (-1 - len(t)) % period
    out = []
    for s in range(period):
        if s:
            out.extend([0] * sep)
        out.extend(t)
    return Block(tuple(out))


def contains_factor(word: Sequence[int], factor: Sequence[int]) -> bool:
    w = "".join(map(str, word))
    f = "".join(map(str, factor))
    return f in w


def is_universal_prefix(w, level: int) -> bool:
    """True iff every block of length <= ``level`` occurs in ``w``."""
    if level < 1:
        raise ValueError("level must be positive")
    word = w.head if isinstance(w, DigitSequence) else _check_digits(w)
    if isinstance(w, DigitSequence) and w.tail is not None:
        raise ValueError("expected a finite word")
    # every shorter block is a prefix of some block of length `level`
    if len(word) < level:
        return False
    seen = set()
    mask = (1 << level) - 1
    v = 0
    for k, d in enumerate(word):
        v = ((v << 1) | d) & mask
        if k >= level - 1:
            seen.add(v)
    return len(seen) == 1 << level
