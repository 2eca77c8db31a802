import math

import numpy as np
import pytest

from bellrand.bell import SettingsDistribution, all_deterministic_behaviors, is_local_2222, uniform_behavior
from bellrand.guessing import Mode, ProgramSpec, certify
from bellrand.oracle import (
    ExplicitDecomposition,
    SandwichError,
    decomposition_guess_value,
    greedy_local_extraction,
    random_local_mixture,
    sandwich_check,
    trivial_decomposition,
)
from bellrand.quantum import behavior_from_model, white_noise_model

G_MAX = (2 + math.sqrt(2)) / 8
POINT = SettingsDistribution.point_mass(0, 0)
UNIFORM = SettingsDistribution.uniform()


def white(v):
    return behavior_from_model(white_noise_model(v))


def test_trivial_value_extremal():
    d = trivial_decomposition(white(1.0))
    assert decomposition_guess_value(d, POINT) == pytest.approx(G_MAX, abs=1e-15)


def test_deterministic_decomposition_of_uniform():
    dets = all_deterministic_behaviors()
    d = ExplicitDecomposition(tuple((1 / 16, b) for b in dets), uniform_behavior(), complete=True)
    assert decomposition_guess_value(d, UNIFORM) == pytest.approx(1.0)


def test_value_bounds():
    rng = np.random.default_rng(11)
    for _ in range(10):
        b = random_local_mixture(rng, support=5)
        floor = decomposition_guess_value(trivial_decomposition(b), UNIFORM)
        for d in (trivial_decomposition(b), greedy_local_extraction(b)):
            value = decomposition_guess_value(d, UNIFORM)
            assert floor - 1e-12 <= value <= 1 + 1e-12


def test_local_point_fully_extracted():
    d = greedy_local_extraction(white(0.5))
    assert is_local_2222(white(0.5)).local
    assert d.complete
    assert decomposition_guess_value(d, UNIFORM) == pytest.approx(1.0, abs=1e-9)


def test_extremal_point_leaves_remainder():
    assert not greedy_local_extraction(white(1.0)).complete


def test_deterministic_single_term():
    b = all_deterministic_behaviors()[5]
    d = greedy_local_extraction(b)
    assert d.complete and len(d.terms) == 1
    assert d.weights[0] == pytest.approx(1.0)


def test_decomposition_validation():
    b = white(0.8)
    with pytest.raises(ValueError):
        ExplicitDecomposition(((0.5, b), (0.6, b)), b)
    with pytest.raises(ValueError):
        ExplicitDecomposition(((1.0, uniform_behavior()),), b)
    with pytest.raises(ValueError):
        ExplicitDecomposition((), b)


def test_sandwich_extremal():
    spec = ProgramSpec(Mode.CASE2, white(1.0), (0, 0))
    report = sandwich_check(spec, certify(spec))
    assert report.gap <= 1e-4
    assert report.greedy is None


@pytest.mark.parametrize("case", [1, 2])
def test_sandwich_local(case):
    spec = ProgramSpec(Mode.from_case(case), white(0.5), (0, 0))
    report = sandwich_check(spec, certify(spec))
    assert report.lower == pytest.approx(1.0, abs=1e-4)
    assert report.upper == pytest.approx(1.0, abs=1e-4)


def test_sandwich_one_sided():
    spec = ProgramSpec(Mode.CASE3, white(0.9))
    report = sandwich_check(spec, certify(spec))
    assert report.lower <= report.upper + 1e-6


def test_sandwich_detects_broken_bound():
    spec = ProgramSpec(Mode.CASE2, white(0.5), (0, 0))

    class Fake:
        guessing_upper = 0.5

    with pytest.raises(SandwichError):
        sandwich_check(spec, Fake())
