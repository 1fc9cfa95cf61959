import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwke.spectrum import (
    FrequencySet,
    InitialData,
    Spectrum,
    SpectrumError,
    closure_set,
    energy,
    load_initial_data,
    make_spectrum,
    mass,
    next_interaction_set,
    random_spectrum,
    read_spectra_csv,
    write_spectra_csv,
)


def test_direct_placement():
    p = make_spectrum(InitialData(0.5, ((2, 0.5),)), 8)
    assert p.spectrum.values.tolist() == [0.5, 0.5, 0, 0, 0, 0, 0, 0]
    assert p.spectrum.time == 0.0 and p.rescale == 1.0


def test_single_dirac_placement():
    p = make_spectrum(InitialData(0.0, ((3, 1.0),)), 8)
    assert p.spectrum.values.tolist() == [0, 0, 1, 0, 0, 0, 0, 0]


def test_mass_is_normalized_and_factor_recorded():
    p = make_spectrum(InitialData(1.0, ((2, 1.0),)), 8)
    assert p.spectrum.values[:2].tolist() == [0.5, 0.5]
    assert p.rescale == 2.0
    assert mass(p.spectrum) == 1.0


def test_tail_beyond_cutoff_names_frequency():
    with pytest.raises(SpectrumError, match="tail frequency 9"):
        make_spectrum(InitialData(0.5, ((9, 0.5),)), 8)


def test_zero_measure_rejected():
    with pytest.raises(SpectrumError, match="zero mass"):
        make_spectrum(InitialData(0.0, ()), 8)


def test_non_integer_frequency_rejected():
    with pytest.raises(SpectrumError, match="not an integer"):
        InitialData(0.5, ((2.5, 0.5),))


def test_initial_data_json_round_trip(tmp_path):
    d = InitialData(0.25, ((2, 0.5), (5, 0.25)))
    path = tmp_path / "init.json"
    path.write_text(__import__("json").dumps(d.to_dict()))
    assert load_initial_data(path) == d
    assert d.weighted_tail_norm(2) == pytest.approx(4 * 0.5 + 25 * 0.25)


@pytest.mark.parametrize(
    "values, m, e",
    [([0.5, 0.5, 0, 0], 1.0, 1.5), ([1.0, 0, 0], 1.0, 1.0), ([0.25] * 4, 1.0, 2.5)],
)
def test_mass_and_energy(values, m, e):
    s = Spectrum(values)
    assert mass(s) == m
    assert energy(s) == e


def test_spectrum_invariants():
    with pytest.raises(SpectrumError):
        Spectrum([1.0])
    with pytest.raises(SpectrumError):
        Spectrum([0.5, -0.1])
    with pytest.raises(SpectrumError):
        Spectrum([0.7, 0.7])
    with pytest.raises(SpectrumError):
        Spectrum([0.5, math.nan])
    Spectrum([0.7, 0.7], mass_tol=0.5)


@pytest.mark.parametrize(
    "elements, window, expected",
    [((1,), 10, (1,)), ((1, 2, 3), 10, (1, 2, 3, 4, 5)), ((1, 3), 10, (1, 3, 5))],
)
def test_next_interaction_set(elements, window, expected):
    assert next_interaction_set(FrequencySet(elements, window)).elements == expected


def test_next_interaction_set_matches_triple_loop():
    a = (2, 3, 7)
    brute = sorted({x + y - z for x in a for y in a for z in a if 1 <= x + y - z <= 12})
    assert list(next_interaction_set(FrequencySet(a, 12)).elements) == brute


def test_empty_set_rejected():
    with pytest.raises(SpectrumError):
        next_interaction_set(FrequencySet((), 5))


@pytest.mark.parametrize(
    "elements, window, expected",
    [((1, 2), 12, tuple(range(1, 13))), ((1, 3), 9, (1, 3, 5, 7, 9)), ((2,), 9, (2,))],
)
def test_closure_set(elements, window, expected):
    assert closure_set(FrequencySet(elements, window)).elements == expected


@pytest.mark.parametrize("n0", [2, 3, 5])
@pytest.mark.parametrize("K", [5, 17, 40])
def test_closure_of_initial_block_fills_window(n0, K):
    assert closure_set(FrequencySet(tuple(range(1, n0 + 1)), K)).elements == tuple(range(1, K + 1))


@given(st.sets(st.integers(1, 20), min_size=1, max_size=6))
def test_next_interaction_set_is_monotone(elements):
    a = FrequencySet(tuple(elements), 20)
    assert set(a.elements) <= set(next_interaction_set(a).elements)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    spectra = [random_spectrum(rng, 6) for _ in range(3)]
    path = tmp_path / "s.csv"
    write_spectra_csv(path, spectra)
    back = read_spectra_csv(path)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(spectra, back))
