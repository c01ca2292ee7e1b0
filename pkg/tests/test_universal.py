import copy
import json
import math
import random
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qexpansions.bases import evaluate, frame, parse_base
from qexpansions.digits import Block, DigitSequence, enumerate_blocks, is_universal_prefix, transform_T
from qexpansions.spectrum import second_pisot
from qexpansions.universal import (
    AlphaVector, ConstructionError, PreconditionError, build_certificate, decompose_alpha,
    even_range, extend_with_suffix, level_block_count, universal_even, universal_expansion,
    verify_certificate,
)
from oracles import coordinate_residuals, contains


def check_extension(alpha, c, ext, dps=120):
    """Both strict inequalities of the suffix extension by direct re-summation."""
    m = alpha.size
    d = ext.digits
    assert d[len(d) - len(c):] == tuple(c)
    rows = len(d) // m
    with mpmath.workdps(dps):
        x = alpha.base.p_mp() ** m
        res = coordinate_residuals(d, [mpmath.mpf(a) for a in alpha.alphas], x, m, rows)
        err = mpmath.mpf(10) ** (-dps + 10)
        for r in res:
            assert 10 * err < r < x ** -rows - 10 * err


def test_decompose_zero_is_kernel_vector():
    b = parse_base("1.05@1/3")
    a = decompose_alpha(0, b)
    assert abs(a.point()) < 1e-12
    assert all(0 < v < 1 for v in a.alphas)
    ratios = [a.alphas[j] / a.alphas[2] for j in range(3)]
    assert ratios == pytest.approx([1.05 ** -2, 1.05 ** -1, 1.0])


def test_decompose_all_halves():
    b = parse_base("1.04@1/4")
    z = sum(f * 0.5 for f in frame(b, 4))
    a = decompose_alpha(z, b)
    assert a.alphas == pytest.approx((0.5,) * 4)


def test_decompose_generic_point():
    b = parse_base("1.05@1/3")
    a = decompose_alpha(0.3 + 0.1j, b)
    assert abs(a.point() - (0.3 + 0.1j)) < 1e-12
    assert all(1e-9 <= v <= 1 - 1e-9 for v in a.alphas)


def test_decompose_uses_lp_near_boundary():
    # a point far from the centre of the box needs the LP route
    b = parse_base("1.05@1/5")
    f = frame(b, 5)
    z = sum(fj * a for fj, a in zip(f, (0.02, 0.97, 0.03, 0.96, 0.5)))
    a = decompose_alpha(z, b)
    assert abs(a.point() - z) < 1e-12
    assert all(1e-9 <= v <= 1 - 1e-9 for v in a.alphas)


def test_decompose_rejects_outside_points():
    b = parse_base("1.05@1/3")
    with pytest.raises(PreconditionError):
        decompose_alpha(100, b)
    with pytest.raises(PreconditionError):
        decompose_alpha(0, parse_base("1.05"))


@given(st.lists(st.floats(0.05, 0.95), min_size=3, max_size=3))
@settings(max_examples=50, deadline=None)
def test_decompose_reconstructs(alphas):
    b = parse_base("1.05@1/3")
    z = sum(f * a for f, a in zip(frame(b, 3), alphas))
    a = decompose_alpha(z, b)
    assert abs(a.point() - z) <= 1e-12 * max(1, abs(z))
    assert all(1e-9 <= v <= 1 - 1e-9 for v in a.alphas)


@pytest.mark.parametrize("text,alphas,c", [
    ("1.1", (0.5,), (1, 0, 1)),
    ("1.1", (1.0,), ()),
    ("-1.04", (0.3, 0.7), (1, 1, 0, 0)),
])
def test_extend_examples(text, alphas, c):
    alpha = AlphaVector(parse_base(text), alphas)
    ext = extend_with_suffix(alpha, c)
    check_extension(alpha, c, ext)
    assert all(0 < r < 1 for r in ext.scaled_residuals)


def test_extend_preconditions():
    with pytest.raises(PreconditionError):
        extend_with_suffix(AlphaVector(parse_base("1.3"), (0.5,)), (1,))
    with pytest.raises(PreconditionError):
        extend_with_suffix(AlphaVector(parse_base("1.1"), (0.0,)), (1,))
    with pytest.raises(ValueError):
        extend_with_suffix(AlphaVector(parse_base("-1.04"), (0.3, 0.3)), (1,))


def test_extend_cap_exhaustion():
    # forty ones: A ~ 17.16 and the window is 1.05**-40 ~ 0.142; alpha is chosen so the
    # first admissible target is ~0.5, which sits in the spectrum gap (0, 1)
    x, c = 1.05, (1,) * 40
    A = sum(x ** -(i + 1) for i in range(40))
    alpha = (A + 0.5) / x ** 59
    assert alpha * x ** 58 < A
    with pytest.raises(ConstructionError):
        extend_with_suffix(AlphaVector(parse_base("1.05"), (alpha,)), c, n_cap=0)
    ext = extend_with_suffix(AlphaVector(parse_base("1.05"), (alpha,)), c)
    assert ext.n > 59


def test_pisot_proximity_warns():
    p = math.sqrt(second_pisot())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            extend_with_suffix(AlphaVector(parse_base(repr(p)), (0.5,)), (1,), n_cap=20)
        except ConstructionError:
            pass
    assert any("Pisot" in str(w.message) for w in caught)


@given(st.sampled_from([1.02, 1.05, 1.1, 1.15]), st.floats(0.01, 1.0),
       st.lists(st.integers(0, 1), min_size=1, max_size=10))
@settings(max_examples=30, deadline=None)
def test_extend_property(p, a, c):
    alpha = AlphaVector(parse_base(repr(p)), (a,))
    ext = extend_with_suffix(alpha, c)
    check_extension(alpha, tuple(c), ext)


def _check_checkpoints(result, alphas, base, size):
    with mpmath.workdps(2 * result.dps + 20):
        x = base.p_mp() ** size
        word = result.digits.head if result.inner is None else result.inner.digits.head
        for cp in result.checkpoints:
            res = coordinate_residuals(word, alphas, x, size, cp.index)
            for r in res:
                assert 0 < r < x ** -cp.index


def test_universal_m1_six_blocks():
    base = parse_base("1.05")
    r = universal_expansion(AlphaVector(base, (0.5,)), 6)
    assert is_universal_prefix(r.digits, 2)
    for b in ("0", "1", "00", "01", "10", "11"):
        assert contains(r.digits.head, tuple(map(int, b)))
    with mpmath.workdps(60):
        _check_checkpoints(r, [mpmath.mpf("0.5")], base, 1)


def test_universal_single_block():
    r = universal_expansion(AlphaVector(parse_base("1.05"), (0.5,)), 1)
    assert r.digits.head[-1] == 0
    assert len(r.checkpoints) == 1


def test_universal_m3():
    base = parse_base("1.02@1/3")
    alpha = decompose_alpha(0.2 + 0.1j, base)
    r = universal_expansion(alpha, 6)
    _check_checkpoints(r, [mpmath.mpf(a) for a in alpha.alphas], base, 3)
    # the digits expand the point up to the last checkpoint's residual window
    ev = evaluate(r.digits, base)
    rows = r.checkpoints[-1].index
    bound = sum(abs(f) for f in frame(base, 3)) * (1.02 ** 3) ** -rows
    assert abs(ev.value - (0.2 + 0.1j)) < bound + 1e-12


def test_universal_preconditions():
    with pytest.raises(PreconditionError):
        universal_expansion(AlphaVector(parse_base("1.3"), (0.5,)), 3)
    with pytest.raises(PreconditionError):
        universal_expansion(AlphaVector(parse_base("1.05"), (1.0,)), 3)


def test_level_block_count():
    assert level_block_count(1) == 2
    assert level_block_count(7) == 254
    assert level_block_count(8) == 510


def test_even_range_values():
    lo, hi = even_range(parse_base("-1.05"), 1)
    assert lo == pytest.approx(-10.2439, abs=1e-4)
    assert hi == pytest.approx(-9.2439, abs=1e-4)
    assert hi - lo == pytest.approx(1.0)


def test_universal_even_m1():
    base = parse_base("-1.05")
    r = universal_even(-9.7, base, 14)
    assert r.digits == transform_T(r.inner.digits, 1)
    assert is_universal_prefix(r.digits, 3)
    ev = evaluate(r.digits, base)
    # alternating coordinates: residual below x**-rows plus the translate's own tail
    rows = r.checkpoints[-1].index
    assert abs(ev.value - (-9.7)) < 2 * 1.05 ** -rows / (1.05 - 1) + 1e-12


def test_universal_even_range_errors():
    base = parse_base("-1.05")
    with pytest.raises(PreconditionError):
        universal_even(-0.4, base, 6)
    lo, _ = even_range(base, 1)
    with pytest.raises(PreconditionError):
        universal_even(lo, base, 6)
    with pytest.raises(PreconditionError):
        universal_even(0.1, parse_base("1.05@1/3"), 6)
    with pytest.raises(PreconditionError):
        universal_even(0.1, parse_base("1.2*i"), 6)


def _translate_sides(d, base, m_prime, rows):
    """Truncated sides of the translate identity with their tail bounds."""
    x = base.p ** m_prime
    f = frame(base, m_prime)
    K = m_prime * rows
    left = evaluate(DigitSequence(tuple(d[:K])), base, K=K)
    lhs = left.value + x / (x * x - 1) * sum(f)
    dp = transform_T(tuple(d[:K]), m_prime)
    rhs = sum(fj * sum(dp[m_prime * i + j] * x ** -(i + 1) for i in range(rows))
              for j, fj in enumerate(f))
    bound = left.tail_radius + sum(abs(v) for v in f) * x ** -rows / (x - 1)
    return lhs, rhs, bound


@given(st.lists(st.integers(0, 1), min_size=60, max_size=60))
@settings(max_examples=50)
def test_translate_identity_random_words(word):
    base = parse_base("1.1*i")
    lhs, rhs, bound = _translate_sides(word, base, 2, 30)
    assert abs(lhs - rhs) <= bound + 1e-10


def _frame_route_cert():
    base = parse_base("1.05@1/3")
    alpha = decompose_alpha(0.3 + 0.1j, base)
    r = universal_expansion(alpha, 14)
    return build_certificate(r, base, 0.3 + 0.1j, 3)


def test_certificate_round_trip_and_json():
    cert = json.loads(json.dumps(_frame_route_cert()))
    rep = verify_certificate(cert)
    assert rep.valid, rep.failures
    assert rep.min_margin > 0


def test_certificate_digit_flips_rejected():
    cert = _frame_route_cert()
    rng = random.Random(11)
    n = len(cert["digits"])
    for k in rng.sample(range(n), 25):
        bad = copy.deepcopy(cert)
        s = list(bad["digits"])
        s[k] = "1" if s[k] == "0" else "0"
        bad["digits"] = "".join(s)
        assert not verify_certificate(bad).valid


def test_certificate_residual_perturbation_rejected():
    cert = _frame_route_cert()
    for k in (0, 5, 13):
        bad = copy.deepcopy(cert)
        r = mpmath.mpf(bad["checkpoints"][k]["scaled_residuals"][1])
        bad["checkpoints"][k]["scaled_residuals"][1] = mpmath.nstr(r * (1 + mpmath.mpf(10) ** -12), 40)
        assert not verify_certificate(bad).valid


def test_certificate_other_tampering_rejected():
    cert = _frame_route_cert()
    bad = copy.deepcopy(cert)
    bad["alpha"][0] = str(float(bad["alpha"][0]) + 1e-9)
    assert not verify_certificate(bad).valid
    bad = copy.deepcopy(cert)
    bad["checkpoints"][3]["block"] = "111"
    assert not verify_certificate(bad).valid
    bad = copy.deepcopy(cert)
    bad["schema"] = 2
    assert not verify_certificate(bad).valid
    bad = copy.deepcopy(cert)
    bad["digits"] = bad["digits"] + "000"
    assert not verify_certificate(bad).valid
    assert not verify_certificate({"schema": 1}).valid


def test_even_certificate():
    base = parse_base("-1.05")
    r = universal_even(-9.7, base, 14)
    cert = build_certificate(r, base, -9.7, 3)
    assert cert["route"] == "even"
    assert verify_certificate(cert).valid
    s = list(cert["digits"])
    s[40] = "1" if s[40] == "0" else "0"
    cert["digits"] = "".join(s)
    assert not verify_certificate(cert).valid
