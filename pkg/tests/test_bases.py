import cmath
import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from qexpansions.bases import (
    Base, UnsupportedBase, evaluate, frame, imaginary_split, is_full_region, jq_bounds,
    negative_base_bijection, negative_offset, parse_base, parse_complex, real_value,
)
from qexpansions.digits import DigitSequence, transform_T
from oracles import eval_mp

PHI = "(1+sqrt(5))/2"


@pytest.mark.parametrize("text,family,order,q", [
    ("2", "positive", 1, 2),
    ("-1.5", "negative", 2, -1.5),
    ("1.2*i", "imaginary", 4, 1.2j),
    ("-1.2*i", "imaginary", 4, -1.2j),
    ("1.1@1/3", "root_of_unity", 3, 1.1 * cmath.exp(2j * math.pi / 3)),
    ("1.1@2/6", "root_of_unity", 3, 1.1 * cmath.exp(2j * math.pi / 3)),
    ("1.02@rad:1.0", "general", None, 1.02 * cmath.exp(1j)),
])
def test_parse_base(text, family, order, q):
    b = parse_base(text)
    assert b.family == family
    assert b.order == order
    assert abs(b.q - q) < 1e-12
    assert abs(abs(b.q) - b.p) < 1e-12
    assert parse_base(str(b)) == b


def test_base_rejects_small_modulus():
    for text in ["1", "0.5", "-1"]:
        with pytest.raises(ValueError):
            parse_base(text)


def test_symbolic_modulus():
    b = parse_base(PHI)
    assert abs(b.p - (1 + 5 ** 0.5) / 2) < 1e-15
    with mpmath.workdps(60):
        assert abs(b.p_mp() ** 2 - b.p_mp() - 1) < mpmath.mpf(10) ** -55


def test_exact_rotation_powers():
    b = parse_base("1.3*i")
    assert b.omega_power(4) == 1
    assert b.omega_power(2) == -1
    assert b.omega_power(1) == 1j


@pytest.mark.parametrize("text,z", [
    ("0.3+0.4i", 0.3 + 0.4j), ("-1.2", -1.2), ("0.2i", 0.2j), ("-i", -1j),
    ("1e-3-2.5i", 0.001 - 2.5j), ("+0.5-0.5i", 0.5 - 0.5j),
])
def test_parse_complex(text, z):
    assert parse_complex(text) == z


def test_evaluate_ones_base_two():
    ev = evaluate(DigitSequence.parse("(1)*"), parse_base("2"))
    assert abs(ev.value - 1) < 1e-15 and ev.tail_radius == 0


def test_evaluate_golden():
    ev = evaluate(DigitSequence.parse("11"), parse_base(PHI))
    assert abs(ev.value - 1) < 1e-15


def test_evaluate_negative_endpoint():
    ev = evaluate(DigitSequence.parse("(10)*"), parse_base("-1.5"))
    assert abs(ev.value - (-1.2)) < 1e-14


def test_tail_radius_formula():
    ev = evaluate(DigitSequence((1, 0, 1)), parse_base("1.5"), K=3)
    assert ev.tail_radius == pytest.approx(1.5 ** -3 / 0.5)


def test_evaluate_mp_matches_direct():
    rng = random.Random(5)
    b = parse_base("1.1@1/3")
    w = tuple(rng.randint(0, 1) for _ in range(120))
    with mpmath.workdps(50):
        ev = evaluate(DigitSequence(w), b, use_mp=True)
        assert abs(ev.value - eval_mp(w, b.q_mp())) < mpmath.mpf(10) ** -40


def test_jq_bounds_examples():
    assert jq_bounds(parse_base("2")).bounds == ((0.0, 1.0),)
    (lo, hi), = jq_bounds(parse_base("-1.5")).bounds
    assert lo == pytest.approx(-1.2) and hi == pytest.approx(0.8)
    r = jq_bounds(parse_base("1.2*i"))
    (xl, xh), (yl, yh) = r.bounds
    assert r.kind == "rectangle"
    assert xl == pytest.approx(-1.3412816692, abs=1e-9)
    assert xh == pytest.approx(0.9314456036, abs=1e-9)
    assert yl == pytest.approx(-1.6095380030, abs=1e-9)
    assert yh == pytest.approx(1.1177347243, abs=1e-9)


def test_jq_bounds_alpha_box():
    r = jq_bounds(parse_base("1.1@1/3"))
    assert r.kind == "alpha_box" and len(r.bounds) == 3
    assert r.bounds[0][1] == pytest.approx(1 / (1.1 ** 3 - 1))
    assert r.contains(0)
    assert not r.contains(100)


def test_jq_bounds_general_angle_unsupported():
    with pytest.raises(UnsupportedBase):
        jq_bounds(parse_base("1.02@rad:1.0"))


@pytest.mark.parametrize("text,full", [
    ("1.7", True), ("2.5", False), ("2", True), ("-2", True), ("-2.1", False),
    ("1.5*i", False), ("1.4*i", True), ("2**(1/6)@1/3", True), ("1.3@1/3", False),
])
def test_is_full_region(text, full):
    assert is_full_region(parse_base(text)) is full


def test_negative_bijection_endpoints():
    d, off = negative_base_bijection(DigitSequence.parse("(10)*"))
    assert d == DigitSequence.parse("(0)*")
    d, off = negative_base_bijection(DigitSequence.parse("(01)*"))
    assert d == DigitSequence.parse("(1)*")
    for p in (1.1, 1.5, 1.9):
        x = 1 / (p * p - 1)
        assert evaluate(d, Base.real(p)).value == pytest.approx(x + off(p))
        assert off(p) == negative_offset(p)


@given(st.lists(st.integers(0, 1), min_size=60, max_size=60), st.floats(1.05, 2.0))
@settings(max_examples=100)
def test_negative_bijection_identity(word, p):
    d = DigitSequence(tuple(word))
    d2, off = negative_base_bijection(d)
    lhs = evaluate(d, Base.real(-p), K=60)
    rhs = evaluate(d2, Base.real(p), K=60)
    assert abs(lhs.value + off(p) - rhs.value) <= lhs.tail_radius + rhs.tail_radius + 1e-10


@given(st.lists(st.integers(0, 1), max_size=30))
def test_negative_bijection_round_trip(word):
    d = DigitSequence(tuple(word))
    d2, off = negative_base_bijection(d)
    d3, _ = negative_base_bijection(d2)
    assert d3 == d


def test_imaginary_split_example():
    odd, even = imaginary_split(DigitSequence.parse("(1000)*"))
    assert odd == DigitSequence.parse("(10)*")
    assert even == DigitSequence.parse("(0)*")
    assert imaginary_split(DigitSequence.parse("(0)*")) == (DigitSequence.parse("(0)*"),) * 2


@pytest.mark.parametrize("p", [1.1, 1.2, 1.3])
def test_rectangle_vertices(p):
    b = parse_base(f"{p}*i")
    (xl, xh), (yl, yh) = jq_bounds(b).bounds
    corners = {"(1100)*": complex(xl, yl), "(1001)*": complex(xh, yl),
               "(0110)*": complex(xl, yh), "(0011)*": complex(xh, yh)}
    for text, corner in corners.items():
        assert abs(evaluate(DigitSequence.parse(text), b).value - corner) < 1e-12
    # (1000)* lies on the bottom edge, at real part 0
    v = evaluate(DigitSequence.parse("(1000)*"), b).value
    assert abs(v - (-1j * p ** 3 / (p ** 4 - 1))) < 1e-12


@given(st.lists(st.integers(0, 1), min_size=80, max_size=80), st.floats(1.01, 2 ** 0.5))
@settings(max_examples=100)
def test_imaginary_split_recombination(word, p):
    b = parse_base(f"{p!r}*i")
    b2 = b.squared()
    d = DigitSequence(tuple(word))
    odd, even = imaginary_split(d)
    ev = evaluate(d, b, K=80)
    eo = evaluate(odd, b2, K=40)
    ee = evaluate(even, b2, K=40)
    lhs, rhs = ev.value, b.q * eo.value + ee.value
    assert abs(lhs - rhs) <= ev.tail_radius + p * eo.tail_radius + ee.tail_radius + 1e-10


@given(st.lists(st.integers(0, 1), min_size=1, max_size=60),
       st.sampled_from(["1.3", "1.9", "-1.5", "-1.9", "1.2*i", "-1.3*i", "1.1@1/3", "1.05@2/5"]))
@settings(max_examples=200)
def test_values_inside_bounds(word, text):
    b = parse_base(text)
    ev = evaluate(DigitSequence(tuple(word)), b)
    p = b.p
    assert abs(ev.value) <= (1 - p ** -len(word)) / (p - 1) + 1e-12
    # a finite word's coordinates are partial sums, so it lies in the bound itself
    assert jq_bounds(b).contains(ev.value, tol=1e-9)


def test_alpha_box_contains_words():
    # a word of length divisible by m has coordinates sum_i d_{mi+j} x^-(i+1) in [0, 1/(x-1)]
    b = parse_base("1.1@1/3")
    rng = random.Random(9)
    region = jq_bounds(b)
    for _ in range(20):
        w = tuple(rng.randint(0, 1) for _ in range(60))
        v = evaluate(DigitSequence(w), b).value
        assert region.contains(v, tol=1e-9)


def test_frame_vectors():
    b = parse_base("1.1@1/3")
    f = frame(b, 3)
    assert f[-1] == 1
    assert abs(f[0] - b.q ** 2) < 1e-12


def test_real_value_precision():
    with mpmath.workdps(50):
        assert real_value("1.05") == mpmath.mpf("1.05")
