import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dwke import kernel
from dwke.kernel import KernelError, g_functional, kernel_terms, rhs, rhs_H, rhs_rows, sort_triple
from dwke.oracle import oracle_rhs, scaled_errors
from dwke.spectrum import Spectrum, random_spectrum

from conftest import spectrum_of


def terms(values, n, backend, K=8):
    # raw arrays: some examples carry more than unit mass
    F = np.zeros(K)
    F[: len(values)] = values
    return kernel_terms(F, n, backend=backend)


# -- individual groups -----------------------------------------------------


def test_L_condensate_only(backend):
    assert terms([1.0], 2, backend).L == pytest.approx(1.0, abs=1e-15)


def test_L_with_F3(backend):
    assert terms([0.5, 0, 0.3], 2, backend).L == pytest.approx(0.5 + 0.3 / math.sqrt(3), rel=1e-14)


def test_L_empty(backend):
    assert terms([0.0], 5, backend).L == 0.0


def test_Q_condensate_only_and_empty(backend):
    assert terms([1.0], 2, backend).Q == 0.0
    assert terms([0.0], 7, backend).Q == 0.0


def test_Q2_with_F1_and_F3(backend):
    # only the F_3^2 / 3 group survives; see the double-counting test below
    assert terms([0.6, 0, 0.2], 2, backend).Q == pytest.approx(0.04 / 3, rel=1e-14)


def test_q2_printed_value_breaks_oracle_agreement():
    """Adding the 4/sqrt(6) F1 F3 group to Q_2 double counts interactions.

    The F_2-linear part of row 2 from the oracle is recovered by polynomial
    fitting; the closed form reproduces it only without that group.
    """
    F1, F3 = 0.6, 0.2
    eps = np.array([1e-3, 2e-3, 3e-3])
    rows = [oracle_rhs(spectrum_of([F1 - e / 2, e, F3 - e / 2], 8), 2)[1] for e in eps]
    linear_oracle = np.polyfit(eps, rows, 2)[1]

    def closed_linear(extra_q):
        out = []
        for e in eps:
            s = spectrum_of([F1 - e / 2, e, F3 - e / 2], 8)
            t = kernel_terms(s, 2)
            out.append(e * (t.Q + extra_q(s) - t.U) - e * e * t.L + t.C)
        return np.polyfit(eps, out, 2)[1]

    ok = closed_linear(lambda s: 0.0)
    printed = closed_linear(lambda s: 4 / math.sqrt(2) * s.F(1) * s.F(3) / math.sqrt(3))
    assert ok == pytest.approx(linear_oracle, rel=1e-6)
    assert abs(printed - linear_oracle) > 0.1


def test_U2_neighbours(backend):
    t = terms([0, 0, 0.3, 0.2], 2, backend)
    assert t.U == pytest.approx(math.sqrt(2) * 0.06 / math.sqrt(12), rel=1e-14)


def test_U3_condensate_group(backend):
    t = terms([0.5, 0.4], 3, backend)
    assert t.U == pytest.approx(4 / math.sqrt(3) * 0.5 * 0.4 / math.sqrt(2), rel=1e-14)


def test_U_condensate_only(backend):
    assert terms([1.0], 2, backend).U == 0.0


def test_C3_square_group(backend):
    assert terms([0.5, 0.4], 3, backend).C == pytest.approx(0.4**2 * 0.5 / 2, rel=1e-14)


def test_C2_shifted_first_group(backend):
    t = terms([0.5, 0.4, 0.3], 2, backend)
    assert t.C == pytest.approx(2 * 0.5 * 0.3 * 0.4 / math.sqrt(6), rel=1e-14)


def test_C_empty(backend):
    assert terms([0.0], 4, backend).C == 0.0


def test_row_below_two_rejected():
    with pytest.raises(KernelError):
        kernel.term_L(spectrum_of([1.0], 4), 1)


def test_scalar_accessors_agree_with_kernel_terms():
    s = spectrum_of([0.3, 0.2, 0.1, 0.15, 0.05], 8)
    t = kernel_terms(s, 3)
    assert (kernel.term_L(s, 3), kernel.term_Q(s, 3), kernel.term_U(s, 3), kernel.term_C(s, 3)) == (t.L, t.Q, t.U, t.C)


# -- right-hand side ---------------------------------------------------------


def test_rhs_two_bins(backend):
    out = rhs(spectrum_of([0.5, 0.5], 6), backend=backend)
    assert out[:3] == pytest.approx([0.0625, -0.125, 0.0625], abs=1e-16)
    assert not out[3:].any()


@pytest.mark.parametrize("values", [[1.0], [0.0, 1.0]])
def test_single_dirac_is_steady(values, backend):
    assert not rhs(spectrum_of(values, 8), backend=backend).any()


def test_rhs_H_two_bins():
    assert rhs_H(spectrum_of([0.5, 0.5], 6), 2) == pytest.approx(0.5, rel=1e-14)


def test_rhs_H_rejects_empty_bin():
    with pytest.raises(KernelError):
        rhs_H(spectrum_of([1.0], 6), 2)


def test_rhs_H_consistency_example():
    s = spectrum_of([0.5, 0.4, 0.1], 8)
    assert rhs_H(s, 3) == pytest.approx(-rhs(s)[2] / 0.1**2, rel=1e-12)


def test_rhs_H_consistency_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        s = random_spectrum(rng, 10)
        r = rhs(s)
        for n in s.support():
            if n >= 2:
                assert rhs_H(s, n) == pytest.approx(-r[n - 1] / s.F(n) ** 2, rel=1e-12, abs=1e-300)


def test_rhs_accepts_arrays_and_spectra():
    s = spectrum_of([0.3, 0.3, 0.4], 5)
    assert np.array_equal(rhs(s), rhs(s.values))


def test_backends_agree():
    rng = np.random.default_rng(5)
    if len(kernel.BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    for K in (4, 9, 33, 80):
        F = random_spectrum(rng, K).values
        a, b = rhs(F, backend="compiled"), rhs(F, backend="python")
        assert np.allclose(a, b, rtol=1e-13, atol=1e-17)


@pytest.mark.parametrize("threads", [2, 3, 7])
def test_threaded_rows_are_bit_identical(threads, backend):
    F = random_spectrum(np.random.default_rng(threads), 40).values
    assert np.array_equal(rhs_rows(F, 40, threads=threads, backend=backend), rhs_rows(F, 40, backend=backend))


def test_rows_beyond_cutoff_are_gains_only():
    F = spectrum_of([0.5, 0.5], 2).values
    out = rhs_rows(F, 5)
    assert out[2] == pytest.approx(0.0625) and out[3] == 0.0 and out[4] == 0.0


# -- oracle agreement and conservation -------------------------------------


def padded(s: Spectrum) -> np.ndarray:
    out = np.zeros(2 * s.cutoff - 1)
    out[: s.cutoff] = s.values
    return out


@pytest.mark.parametrize("K", [2, 3, 5, 8, 12])
def test_closed_forms_match_oracle(K, backend):
    rng = np.random.default_rng(100 + K)
    for _ in range(25):
        s = random_spectrum(rng, K)
        closed = rhs(padded(s), backend=backend)
        assert scaled_errors(closed, s, 2 * K - 1).max() <= 1e-12


def test_unshifted_C_group_disagrees_with_oracle():
    s = spectrum_of([0.4, 0.3, 0.2, 0.1], 4)
    closed = rhs(padded(s), c_shift=0)
    assert scaled_errors(closed, s, 7).max() > 1e-3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=9).filter(lambda v: sum(v) > 0))
def test_closed_forms_match_oracle_hypothesis(v):
    v = np.array(v) / math.fsum(v)
    s = Spectrum(v)
    assert scaled_errors(rhs(padded(s)), s, 2 * s.cutoff - 1).max() <= 1e-12


def test_mass_and_energy_nullity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = random_spectrum(rng, 9)
        r = rhs(padded(s))
        n = np.arange(1, r.size + 1)
        assert abs(math.fsum(r)) <= 1e-12
        assert abs(math.fsum(n * r)) <= 1e-12


def test_sign_structure():
    rng = np.random.default_rng(8)
    for _ in range(30):
        s = random_spectrum(rng, 12)
        r = rhs(s)
        for n in range(2, 13):
            t = kernel_terms(s, n)
            assert min(t.L, t.Q, t.U, t.C) >= 0
            Fn = s.F(n)
            assert r[n - 1] >= -Fn * (t.U + Fn * t.L) - 1e-15


# -- monotonicity functionals ------------------------------------------------


@pytest.mark.parametrize("w, out", [((1, 2, 3), (3, 2, 1)), ((2, 2, 3), (3, 2, 2)), ((5, 5, 5), (5, 5, 5))])
def test_sort_triple(w, out):
    t = sort_triple(*w)
    assert (t.w_plus, t.w_zero, t.w_minus) == out


def test_sort_triple_rejects_negative():
    with pytest.raises(KernelError):
        sort_triple(1, -2, 3)


@pytest.mark.parametrize("w", [(1, 2, 3), (2, 2, 3), (4, 1, 7), (5, 5, 5)])
def test_G_vanishes_on_conserved_quantities(w):
    assert g_functional(lambda x: 1.0, *w) == 0.0
    assert g_functional(lambda x: x, *w) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("w", [(1, 2, 3), (2, 2, 3)])
def test_G_square(w):
    assert g_functional(lambda x: x * x, *w) == pytest.approx(2 / 3, rel=1e-15)


CONVEX = {
    "square": lambda x: x * x,
    "cube": lambda x: x**3,
    "exp": lambda x: math.exp(x / 10),
    "hinge3": lambda x: max(x - 3, 0.0) ** 2,
    "condensate": lambda x: max(3 - 2 * x, 0.0),
    "abs7": lambda x: abs(x - 7),
}


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_G_nonnegative_for_convex(name):
    phi = CONVEX[name]
    r = range(1, 21)
    worst = min(g_functional(phi, a, b, c) for a in r for b in r for c in r)
    assert worst >= -1e-12
