"""Polynomial families and closed-form eigenfunctions."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import eval_genlaguerre, eval_jacobi, roots_genlaguerre, roots_jacobi

from blocksep.errors import InadmissibleParametersError
from blocksep.models import (
    Constant,
    Zero,
    coulomb_spec,
    model2_potential,
    operator_context,
    oscillator_spec,
    build_hamiltonian,
)
from blocksep.numerics import FDScheme, apply_numeric, model_point_guards, sample_points
from blocksep.specfun import (
    EigenfunctionSpec,
    assemble_eigenfunction,
    coulomb_energy_value,
    coulomb_gamma,
    jacobi,
    laguerre,
    model2_angular_factor,
    oscillator_energy,
    oscillator_gamma,
    x1_jacobi,
    x1_jacobi_coefficients,
)


def test_laguerre_low_degrees():
    assert laguerre(0, Fraction(1, 2), Fraction(3)) == 1
    a, x = Fraction(1, 3), Fraction(2, 5)
    assert laguerre(1, a, x) == 1 + a - x
    # cross-check higher degrees against an independent implementation
    for n in (2, 3, 5):
        got = laguerre(n, 0.75, 1.3)
        assert got == pytest.approx(eval_genlaguerre(n, 0.75, 1.3), rel=1e-12)


def test_jacobi_low_degrees():
    a, b, x = Fraction(1, 2), Fraction(-1, 2), Fraction(1, 4)
    assert jacobi(1, a, b, x) == (a + 1) + (a + b + 2) * (x - 1) / 2
    for n in (2, 3, 6):
        got = jacobi(n, 0.5, 1.25, -0.3)
        assert got == pytest.approx(eval_jacobi(n, 0.5, 1.25, -0.3), rel=1e-12)


def test_laguerre_orthogonality_quadrature():
    alpha = 0.5
    nodes, weights = roots_genlaguerre(12, alpha)
    for m in range(4):
        for n in range(m + 1, 5):
            val = float(np.sum(weights * laguerre(m, alpha, nodes) * laguerre(n, alpha, nodes)))
            assert abs(val) < 1e-8, (m, n, val)


def test_jacobi_orthogonality_quadrature():
    a, b = 0.5, 1.5
    nodes, weights = roots_jacobi(12, a, b)
    for m in range(4):
        for n in range(m + 1, 5):
            val = float(np.sum(weights * jacobi(m, a, b, nodes) * jacobi(n, a, b, nodes)))
            assert abs(val) < 1e-8, (m, n, val)


def test_x1_degree_and_uniqueness():
    alpha, beta = Fraction(1, 2), Fraction(7, 6)
    for n in (1, 2, 3, 4):
        coeffs = x1_jacobi_coefficients(n, alpha, beta)
        assert len(coeffs) == n + 1 and coeffs[-1] > 0
    v = x1_jacobi(1, alpha, beta, Fraction(1, 2))
    assert isinstance(v, Fraction)


def test_x1_admissibility():
    with pytest.raises(InadmissibleParametersError):
        x1_jacobi(0, Fraction(1, 2), Fraction(7, 6), 0.3)
    with pytest.raises(InadmissibleParametersError):
        x1_jacobi(1, Fraction(1, 2), Fraction(1, 2), 0.3)  # alpha == beta
    with pytest.raises(InadmissibleParametersError):
        x1_jacobi(1, Fraction(-3, 2), Fraction(1, 2), 0.3)


def _angular_ode_residual(h_of_phi, potential_of_phi, eigenvalue, phis):
    """max |-h'' + V h - E h| / max(1, |E h|) by high-order differences."""
    worst = 0.0
    d = 1e-3
    w2 = [-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]
    for phi in phis:
        pts = [h_of_phi(phi + d * k) for k in range(-4, 5)]
        hpp = sum(w * p for w, p in zip(w2, pts)) / d**2
        val = -hpp + potential_of_phi(phi) * h_of_phi(phi) - eigenvalue * h_of_phi(phi)
        worst = max(worst, abs(val) / max(1.0, abs(eigenvalue * h_of_phi(phi))))
    return worst


def test_x1_factor_satisfies_angular_equation():
    from blocksep.models import Model2F11

    pot = Model2F11(4, 1)
    for J in range(4):
        h = model2_angular_factor(4, 1, J)
        res = _angular_ode_residual(
            lambda phi: float(h(math.sin(3 * phi))),
            lambda phi: pot.value_at_s(math.sin(3 * phi)),
            float((4 + 3 * J) ** 2),
            np.linspace(0.05, 0.45, 20),
        )
        assert res < 1e-8, (J, res)


def test_x1_perturbed_eigenvalue_control():
    from blocksep.models import Model2F11

    pot = Model2F11(4, 1)
    h = model2_angular_factor(4, 1, 0)
    res = _angular_ode_residual(
        lambda phi: float(h(math.sin(3 * phi))),
        lambda phi: pot.value_at_s(math.sin(3 * phi)),
        float(4**2) + 1.0,
        np.linspace(0.05, 0.45, 20),
    )
    assert res > 1e-2


def test_free_oscillator_eigenfunction_shape():
    spec = oscillator_spec([1, 1], (Zero(), Zero()), omega2=1)
    es = EigenfunctionSpec(spec, angular=(0, 0), radial=(0, 0))
    psi = assemble_eigenfunction(es)
    assert oscillator_energy(es) == pytest.approx(6.0)
    x = (0.7, -0.5)
    got = float(psi([np.array(v) for v in x]))
    expect = abs(x[0]) * abs(x[1]) * math.exp(-(x[0] ** 2 + x[1] ** 2) / 2)
    assert got == pytest.approx(expect, rel=1e-12)


def _h_over_psi_stats(spec, es, n_points=10, seed=3, numeric=False):
    psi = assemble_eigenfunction(es)
    scheme = FDScheme(h=4e-3)
    rng = np.random.default_rng(seed)
    extent = 5 * scheme.h
    pts = sample_points(spec, n_points, rng, margin_extent=extent,
                        guards=model_point_guards(spec, extent))
    ctx = operator_context(spec)
    H = build_hamiltonian(spec, ctx, mode="numeric" if numeric else "symbolic")
    vals = []
    for x in pts:
        hv = apply_numeric(H, psi, x, scheme, spec=spec, params={})
        pv = float(psi([np.array(v) for v in x]))
        vals.append(hv / pv)
    vals = np.array(vals)
    return float(vals.mean()), float(vals.std() / abs(vals.mean()))


def test_model1_oscillator_2_2_residual():
    spec = oscillator_spec([2, 2], (Constant(Fraction(1)), Constant(Fraction(2))), omega2=1)
    es = EigenfunctionSpec(spec, angular=(1, 0), radial=(0, 1))
    mean, spread = _h_over_psi_stats(spec, es)
    assert spread < 1e-6
    assert mean == pytest.approx(oscillator_energy(es), rel=1e-8)


def test_model2_oscillator_2_1_residual():
    spec = oscillator_spec([2, 1], (model2_potential(2, 4, 1), Zero()), omega2=1)
    es = EigenfunctionSpec(spec, angular=((1,), 0), radial=(0, 0))
    mean, spread = _h_over_psi_stats(spec, es, numeric=True)
    assert spread < 1e-6
    assert mean == pytest.approx(19.0, rel=1e-8)  # gamma_1 = 15/2, gamma_2 = 1


def test_coulomb_2_2_residual_and_energy():
    spec = coulomb_spec([2, 2], (Constant(Fraction(1)),), eta=2)
    es = EigenfunctionSpec(spec, angular=(0, 0), radial=(0,), hyper_J=(0,))
    assert coulomb_gamma(es, 0) == pytest.approx(1.0)
    assert coulomb_gamma(es, 1) == pytest.approx(0.0)
    assert coulomb_energy_value(es) == pytest.approx(-4.0 / 25.0)
    mean, spread = _h_over_psi_stats(spec, es)
    assert spread < 1e-6
    assert mean == pytest.approx(-0.16, rel=1e-7)


def test_coulomb_excited_state_residual():
    spec = coulomb_spec([2, 2], (Constant(Fraction(1)),), eta=2)
    es = EigenfunctionSpec(spec, angular=(0, 0), radial=(1,), hyper_J=(1,))
    mean, spread = _h_over_psi_stats(spec, es)
    assert spread < 1e-6
    assert mean == pytest.approx(coulomb_energy_value(es), rel=1e-7)


def test_coulomb_theta_equation_eigenvalues():
    """The printed inter-block factors satisfy their separated equations with
    eigenvalues kappa_i^2 - (i-1)^2/4."""
    spec = coulomb_spec([2, 2], (Constant(Fraction(1)),), eta=2)
    es = EigenfunctionSpec(spec, angular=(0, 0), radial=(0,), hyper_J=(1,))
    g1 = coulomb_gamma(es, 0)
    g2 = coulomb_gamma(es, 1)
    J1 = es.hyper_J[0]
    kappa0 = g1
    kappa1 = 2 * J1 + 1 + g1 + g2
    lam1 = g1**2 - 0.25
    lam2 = g2**2 - 0.25

    def y1(theta):
        c = math.cos(theta)
        return (
            math.sin(theta) ** (kappa0 + 0.5)
            * c ** (g2 + 0.5)
            * float(jacobi(J1, kappa0, g2, 2 * c * c - 1))
        )

    b1 = kappa1**2  # i = 1: (i-1)^2/4 = 0
    res = _angular_ode_residual(
        y1,
        lambda th: lam2 / math.cos(th) ** 2 + lam1 / math.sin(th) ** 2,
        b1,
        np.linspace(0.3, 1.2, 15),
    )
    assert res < 1e-8


def test_admissibility_errors():
    spec = oscillator_spec([2, 1], (Constant(Fraction(1)), Zero()), omega2=1)
    with pytest.raises(InadmissibleParametersError):
        EigenfunctionSpec(spec, angular=(0, 1), radial=(0, 0))  # l != 0 on 1-block
    with pytest.raises(InadmissibleParametersError):
        EigenfunctionSpec(spec, angular=(0, 0), radial=(0, -1))
    bad = oscillator_spec([2, 1], (Constant(Fraction(-10)), Zero()), omega2=1)
    es = EigenfunctionSpec(bad, angular=(0, 0), radial=(0, 0))
    with pytest.raises(InadmissibleParametersError):
        oscillator_gamma(es, 0)  # discriminant 1 + 4(-10) - 1 < 0


def test_symbolic_parameters_rejected_for_eigenfunctions():
    spec = oscillator_spec([2, 2])  # omega2 and betas symbolic
    es = EigenfunctionSpec(spec, angular=(0, 0), radial=(0, 0))
    with pytest.raises(InadmissibleParametersError):
        oscillator_energy(es)
