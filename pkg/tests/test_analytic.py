import math

import numpy as np
import pytest

from fracture_bench.analytic import (
    EvaluationDomainError,
    StrainState,
    StressState,
    far_field_strain,
    reference_energies,
    strain_energy_density,
    strain_from_stress,
    stress_at,
    stress_components,
)
from fracture_bench.config import MaterialParams, table1_config

A = 0.2015625
SIGMA0 = 10.0
MAT = MaterialParams(E=1e6, nu=0.25, Gc=5.936506e-5)


def test_no_crack_far_field():
    s = stress_at((0.37, -1.2), 0.0, SIGMA0)
    assert (s.s11, s.s22, s.s12) == (SIGMA0, SIGMA0, 0.0)


def test_on_axis_value():
    # ahead of the tip the field reduces to sigma0 * x / sqrt(x^2 - a^2)
    x = 2 * A
    expected = SIGMA0 * x / math.sqrt(x * x - A * A)
    s = stress_at((x, 0.0), A, SIGMA0)
    assert s.s11 == pytest.approx(expected, rel=1e-12)
    assert s.s22 == pytest.approx(expected, rel=1e-12)
    assert s.s12 == 0.0
    assert expected == pytest.approx(SIGMA0 * 2 / math.sqrt(3), rel=1e-12)


def test_far_field_limit():
    r = 1e6 * A
    for ang in (0.3, 1.7, 3.0, -2.2):
        s = stress_at((r * math.cos(ang), r * math.sin(ang)), A, SIGMA0)
        assert abs(s.s11 - SIGMA0) < 1e-5 * SIGMA0
        assert abs(s.s22 - SIGMA0) < 1e-5 * SIGMA0
        assert abs(s.s12) < 1e-5 * SIGMA0


def test_tip_evaluation_rejected():
    with pytest.raises(EvaluationDomainError):
        stress_at((A, 0.0), A, SIGMA0)


def test_vectorized_matches_scalar():
    xs = np.array([0.5, -0.3, 0.0])
    ys = np.array([0.2, 0.9, -1.1])
    s11, s22, s12 = stress_components(xs, ys, A, SIGMA0)
    for k in range(3):
        s = stress_at((xs[k], ys[k]), A, SIGMA0)
        assert s11[k] == pytest.approx(s.s11, rel=1e-14)
        assert s22[k] == pytest.approx(s.s22, rel=1e-14)
        assert s12[k] == pytest.approx(s.s12, rel=1e-14)


# ---------------------------------------------------------------------------
# Constitutive law and energy density
# ---------------------------------------------------------------------------

def test_hydrostatic_strain():
    e = strain_from_stress(StressState(SIGMA0, SIGMA0, 0.0), MAT)
    expected = (1 - 2 * 0.25) * (1 + 0.25) * SIGMA0 / 1e6
    assert e.e11 == pytest.approx(expected, rel=1e-14)
    assert e.e22 == pytest.approx(expected, rel=1e-14)
    assert e.g12 == 0.0
    assert expected == pytest.approx(6.25e-6, rel=1e-14)


def test_pure_shear_strain():
    s = 3.5
    e = strain_from_stress(StressState(0.0, 0.0, s), MAT)
    assert e.g12 == pytest.approx(2 * (1 + 0.25) * s / 1e6, rel=1e-14)
    assert e.e11 == 0.0 and e.e22 == 0.0


def test_zero_stress_zero_strain():
    e = strain_from_stress(StressState(0.0, 0.0, 0.0), MAT)
    assert (e.e11, e.e22, e.g12) == (0.0, 0.0, 0.0)


def test_far_field_energy_density():
    W0 = strain_energy_density(far_field_strain(SIGMA0, MAT), MAT)
    assert W0 == pytest.approx(6.25e-5, rel=1e-13)


def test_energy_density_zero_and_scaling():
    assert strain_energy_density(StrainState(0, 0, 0), MAT) == 0.0
    e = StrainState(1e-5, -2e-5, 3e-5)
    W1 = strain_energy_density(e, MAT)
    W2 = strain_energy_density(StrainState(2e-5, -4e-5, 6e-5), MAT)
    assert W2 == pytest.approx(4 * W1, rel=1e-13)
    assert W1 > 0


# ---------------------------------------------------------------------------
# Reference energies
# ---------------------------------------------------------------------------

def test_reference_energies_table1():
    refs = reference_energies(table1_config().problem)
    # frozen from direct evaluation of the closed forms
    assert refs.W0 == pytest.approx(6.25e-5, rel=1e-12)
    assert refs.Pi_elastic_exact == pytest.approx(-1.574466e-3, rel=1e-6)
    assert refs.E_fracture_exact == pytest.approx(2.39315e-5, rel=1e-5)
    assert refs.Pi_total_exact == pytest.approx(-1.550534e-3, rel=1e-6)
    assert refs.K_I == pytest.approx(SIGMA0 * math.sqrt(math.pi * A), rel=1e-12)
    assert refs.Pi_elastic_exact < 0 < refs.E_fracture_exact


def test_reference_energies_uncracked():
    p = table1_config().problem
    import dataclasses
    refs = reference_energies(dataclasses.replace(p, a=0.0))
    assert refs.Pi_elastic_exact == pytest.approx(-1.5625e-3, rel=1e-13)
    assert refs.E_fracture_exact == 0.0


# ---------------------------------------------------------------------------
# Field invariants
# ---------------------------------------------------------------------------

def test_equilibrium_finite_differences():
    rng = np.random.default_rng(42)
    step = 1e-5 * A
    checked = 0
    while checked < 100:
        x = rng.uniform(-2.4, 2.4)
        y = rng.uniform(-2.4, 2.4)
        r1 = math.hypot(x - A, y)
        r2 = math.hypot(x + A, y)
        if min(r1, r2) < 0.1 * A or abs(y) < 3 * step:
            continue
        def s(xx, yy):
            return stress_components(np.array(xx), np.array(yy), A, SIGMA0)
        ds11_dx = (s(x + step, y)[0] - s(x - step, y)[0]) / (2 * step)
        ds12_dy = (s(x, y + step)[2] - s(x, y - step)[2]) / (2 * step)
        ds12_dx = (s(x + step, y)[2] - s(x - step, y)[2]) / (2 * step)
        ds22_dy = (s(x, y + step)[1] - s(x, y - step)[1]) / (2 * step)
        scale = SIGMA0 / A
        assert abs(ds11_dx + ds12_dy) < 1e-5 * scale
        assert abs(ds12_dx + ds22_dy) < 1e-5 * scale
        checked += 1


def test_mode_one_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.uniform(-2, 2)
        y = rng.uniform(0.05, 2)
        s_up = stress_at((x, y), A, SIGMA0)
        s_dn = stress_at((x, -y), A, SIGMA0)
        assert s_up.s11 == pytest.approx(s_dn.s11, rel=1e-12)
        assert s_up.s22 == pytest.approx(s_dn.s22, rel=1e-12)
        assert s_up.s12 == pytest.approx(-s_dn.s12, rel=1e-12)


def test_traction_free_crack_faces():
    y = 1e-6 * A
    for x in np.linspace(-0.9 * A, 0.9 * A, 13):
        s = stress_at((x, y), A, SIGMA0)
        assert abs(s.s22) < 1e-3 * SIGMA0
        assert abs(s.s12) < 1e-3 * SIGMA0


def test_near_tip_asymptotics():
    K_I = SIGMA0 * math.sqrt(math.pi * A)
    for rho in np.geomspace(1e-4 * A, 1e-3 * A, 7):
        s = stress_at((A + rho, 0.0), A, SIGMA0)
        ratio = s.s22 * math.sqrt(2 * math.pi * rho) / K_I
        assert 0.99 <= ratio <= 1.01
