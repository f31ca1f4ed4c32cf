import json
import math
import statistics

import numpy as np
import pytest

from kmht import (
    AsymmetricPareto,
    CenterSet,
    DomainError,
    Empirical,
    Gaussian,
    OneSidedPareto,
    RandomStream,
    SortedSample,
    SymmetricPareto,
    ThresholdPartition,
    Uniform,
)
from kmht.population import (
    alpha0_k2,
    center_split,
    landscape_1d,
    landscape_value,
    pareto2_infimum,
    population_centers_k2,
    tail_diagnostic,
    uniform_deviation,
)


def asym_inf(p):
    return -4.0 * max(1.0, max(p, 1 - p) + (2 * p - 1) ** 2)


WIDE = np.concatenate((-np.logspace(4, -3, 3000), [0.0], np.logspace(-3, 4, 3000)))


# --- landscape --------------------------------------------------------------

def test_symmetric_landscape():
    rep = landscape_1d(SymmetricPareto(), np.linspace(-3, 3, 601))
    assert rep.values[300] == pytest.approx(-4.0)
    assert rep.infimum == -4.0 and rep.attained and rep.case_label == "i"
    assert rep.argmin_set == ((-1.0, 1.0),)
    inside = np.abs(rep.grid) <= 1
    assert np.allclose(rep.values[inside], -4.0)
    assert np.all(rep.values[~inside] > -4.0)


def test_symmetric_closed_form_outside():
    for r in (1.5, 2.0, 10.0):
        assert landscape_value(SymmetricPareto(), r) == pytest.approx(-2 * r * r / (r * r - 0.5))


def test_one_sided_landscape():
    grid = np.linspace(-5, 1000, 5000)
    rep = landscape_1d(OneSidedPareto(), grid)
    assert rep.infimum == -8.0 and not rep.attained and rep.case_label == "ii"
    assert rep.argmin_set == ()
    right = rep.values[grid >= 1]
    assert np.all(np.diff(right) < 0)
    assert landscape_value(OneSidedPareto(), 3.0) == pytest.approx(-6.0)


@pytest.mark.parametrize("p", [0.05, 0.1, 0.2, 0.8, 0.9])
def test_asymmetric_infimum(p):
    rep = landscape_1d(AsymmetricPareto(p), WIDE)
    assert rep.infimum == pytest.approx(asym_inf(p), abs=1e-12)
    assert rep.values.min() == pytest.approx(asym_inf(p), abs=1e-3)
    assert not rep.attained and rep.case_label == "ii"


@pytest.mark.parametrize("p", [0.25, 0.3, 0.5, 0.75])
def test_asymmetric_attained_window(p):
    rep = landscape_1d(AsymmetricPareto(p), WIDE)
    assert rep.attained and rep.infimum == -4.0
    assert rep.values.min() >= -4.0 - 1e-12


def test_pareto2_infimum_values():
    assert pareto2_infimum(0.5) == -4.0
    assert pareto2_infimum(1.0) == -8.0
    assert pareto2_infimum(0.1) == pytest.approx(-6.16)


@pytest.mark.parametrize("dist", [SymmetricPareto(), OneSidedPareto(), AsymmetricPareto(0.1), AsymmetricPareto(0.85)], ids=repr)
def test_closed_forms_match_generic(dist):
    grid = np.concatenate((np.linspace(-50, 50, 500), np.geomspace(1.0001, 1e4, 250), -np.geomspace(1.0001, 1e4, 250)))
    for r in grid:
        assert landscape_value(dist, r) == pytest.approx(landscape_value(dist, r, closed_form=False), abs=1e-9)


def test_symmetric_landscape_is_even():
    rng = np.random.default_rng(0)
    for r in rng.standard_cauchy(500):
        assert landscape_value(SymmetricPareto(), r) == pytest.approx(landscape_value(SymmetricPareto(), -r), abs=1e-12)


def test_generic_paths():
    g = landscape_1d(Gaussian(), np.linspace(-4, 4, 801))
    assert g.method == "numeric" and g.attained and g.case_label == "i"
    assert g.infimum == pytest.approx(-2 / math.pi, abs=1e-12)
    heavy = landscape_1d(OneSidedPareto(alpha=1.5), np.linspace(-3, 100, 200))
    assert heavy.case_label == "iii" and heavy.infimum == -math.inf
    light = landscape_1d(SymmetricPareto(alpha=3.0), np.linspace(-5, 5, 1001))
    assert light.case_label == "i" and light.attained


def test_attained_argmin_hits_infimum():
    for dist, grid in ((Uniform(), np.linspace(0, 1, 1001)), (Gaussian(), np.linspace(-3, 3, 601)), (SymmetricPareto(), np.linspace(-3, 3, 61))):
        rep = landscape_1d(dist, grid)
        assert rep.attained and rep.argmin_set
        for a, b in rep.argmin_set:
            assert landscape_value(dist, a) == pytest.approx(rep.infimum, abs=1e-9)
            assert landscape_value(dist, b) == pytest.approx(rep.infimum, abs=1e-9)


def test_landscape_rejects_bad_grid():
    with pytest.raises(ValueError):
        landscape_1d(Gaussian(), [1.0, 0.0])
    with pytest.raises(ValueError):
        landscape_1d(Gaussian(), [])


def test_landscape_serializes():
    rep = landscape_1d(OneSidedPareto(alpha=1.5), [0.0, 2.0])
    json.dumps(rep.to_json())
    assert rep.to_csv().splitlines()[0] == "r,D"


# --- population centers and alpha0 -----------------------------------------

def test_population_centers():
    assert population_centers_k2(SymmetricPareto()) == (CenterSet.of(-2.0, 2.0),)
    assert population_centers_k2(OneSidedPareto()) == ()
    assert population_centers_k2(AsymmetricPareto(0.1)) == ()
    (u,) = population_centers_k2(Uniform())
    assert np.allclose(u.values, [0.25, 0.75], atol=1e-12)
    (g,) = population_centers_k2(Gaussian())
    assert np.allclose(g.values, [-math.sqrt(2 / math.pi), math.sqrt(2 / math.pi)], atol=1e-9)


def test_population_centers_asymmetric_in_window():
    assert population_centers_k2(AsymmetricPareto(0.4)) == (CenterSet.of(-2.0, 2.0),)


def test_population_centers_grid_oracle_uniform():
    # independent fine-grid minimization of the closed-form Uniform(0, 1) landscape
    r = np.linspace(0, 1, 200001)
    D = -r * (r / 2) ** 2 - (1 - r) * ((1 + r) / 2) ** 2
    r_star = r[np.argmin(D)]
    (u,) = population_centers_k2(Uniform())
    assert np.allclose(u.values, [r_star / 2, (1 + r_star) / 2], atol=1e-5)


def test_alpha0():
    assert alpha0_k2(SymmetricPareto()) == pytest.approx(0.5)
    assert alpha0_k2(Gaussian()) == pytest.approx(0.5, abs=1e-9)
    assert alpha0_k2(Uniform()) == pytest.approx(0.5, abs=1e-9)
    assert alpha0_k2(AsymmetricPareto(0.3)) == pytest.approx(0.3)
    with pytest.raises(DomainError):
        alpha0_k2(OneSidedPareto())


def test_empirical_law_uses_exact_solver():
    law = Empirical(np.array([1.0, 2.0, 3.0, 4.0]))
    assert population_centers_k2(law) == (CenterSet.of(1.5, 3.5),)
    assert alpha0_k2(law) == 0.5


# --- tail diagnostic --------------------------------------------------------

def test_hill_on_pareto2():
    for seed in range(20):
        x = np.abs(SymmetricPareto().sample(100_000, RandomStream(seed)))
        d = tail_diagnostic(x)
        assert 1.8 <= d.hill_index <= 2.2
        assert d.sup_t_stat >= 0


def test_heavy_tail_flagged():
    for seed in range(5):
        d = tail_diagnostic(OneSidedPareto(alpha=1.5).sample(100_000, RandomStream(seed)))
        assert d.classification == "infinite_objective_plausible"


def test_constant_sample():
    d = tail_diagnostic(np.ones(50))
    assert d.sup_t_stat == 1.0
    assert d.classification == "finite_objective_plausible"
    json.dumps(d.to_json())
    with pytest.raises(ValueError):
        tail_diagnostic(np.ones(9))


def test_sup_t_stat_by_enumeration():
    rng = np.random.default_rng(1)
    x = rng.standard_cauchy(200)
    a = np.abs(x)
    expect = max(t * t * np.mean(a >= t) for t in a)
    assert tail_diagnostic(x).sup_t_stat == pytest.approx(expect, rel=1e-12)


# --- deviation statistic ----------------------------------------------------

def test_uniform_deviation_examples():
    V = ThresholdPartition((0.0,))
    s = SortedSample.from_values(SymmetricPareto().sample(300, RandomStream(4)))
    assert uniform_deviation(s, Empirical(s.values), V) == pytest.approx(0.0, abs=1e-12)
    assert uniform_deviation(SortedSample.from_values([1.0]), SymmetricPareto(), ThresholdPartition()) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        uniform_deviation(s, SymmetricPareto(), ThresholdPartition((-0.5, 0.5)))


def test_uniform_deviation_empty_cell_uses_zero_mean():
    # all points positive: the left cell is empty and its sample mean counts as 0
    # Dn = -(1/2) * 2 * 1.5**2 = -2.25 vs D = -4; mass term 0.5 * 2**2 + 0.5 * 0.5**2 = 2.125
    s = SortedSample.from_values([1.0, 2.0])
    assert uniform_deviation(s, SymmetricPareto(), ThresholdPartition((0.0,))) == pytest.approx(2.125)


def test_uniform_deviation_shrinks():
    d, V = SymmetricPareto(), ThresholdPartition((0.0,))
    med = lambda n: statistics.median(
        uniform_deviation(SortedSample.from_values(d.sample(n, RandomStream(s))), d, V) for s in range(20)
    )
    assert med(100_000) < med(1_000)


# --- center split -----------------------------------------------------------

def test_center_split():
    A, B = center_split(CenterSet.of(-2, 2, 500), 10)
    assert A == CenterSet.of(-2, 2) and B == CenterSet.of(500)
    A, B = center_split(CenterSet.of(1), 10)
    assert A == CenterSet.of(1) and B is None
    A, B = center_split([300.0], 10)
    assert A is None and B == CenterSet.of(300)
    with pytest.raises(ValueError):
        center_split(CenterSet.of(1), 0)
