import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from poisson_pinsker import model as M
from poisson_pinsker.quadrature import simpson_integral


def test_basis_examples():
    assert M.basis_eval(0, 0.3, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert M.basis_eval(1, 0.0, 1.0) == pytest.approx(1.41421356, abs=1e-8)
    assert M.basis_eval(2, 0.25, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert M.CosineBasis(4.0)(0, 1.0) == pytest.approx(0.5)


@pytest.mark.parametrize("l,t", [(-1, 0.2), (1.5, 0.2), (1, -0.1), (1, 1.01)])
def test_basis_domain_errors(l, t):
    with pytest.raises(M.ModelError):
        M.basis_eval(l, t, 1.0)


def test_orthonormality():
    tau = 1.7
    G = np.empty((21, 21))
    for k in range(21):
        for l in range(k, 21):
            G[k, l] = G[l, k] = simpson_integral(
                lambda t: M.basis_eval(k, t, tau) * M.basis_eval(l, t, tau), 0, tau)
    assert np.max(np.abs(G - np.eye(21))) < 1e-10


def test_series_examples(rc):
    tau = 2.0
    assert M.series_eval([3.0 * math.sqrt(tau)], 1.3, tau) == pytest.approx(3.0)
    assert M.series_eval(rc.theta, 0.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert M.series_eval(rc.theta, 1.0, 1.0) == pytest.approx(5.0, abs=1e-14)
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(M.series_eval(rc.theta, t, 1.0), 2.5 * (1 - np.cos(np.pi * t)),
                               atol=1e-14)


def test_intensity_examples(rc):
    assert M.intensity_eval(rc, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert M.intensity_eval(rc, 0.5) == pytest.approx(5 * math.pi / 2, rel=1e-14)
    assert M.intensity_eval(rc, 0.5) == pytest.approx(7.853982, abs=1e-6)
    for model in (rc, M.two_harmonic(3.0, 2.0)):
        assert simpson_integral(lambda t: M.intensity_eval(model, t), 0, model.tau) == \
            pytest.approx(model.S, rel=1e-12)


def test_intensity_is_derivative_second_order():
    model = M.two_harmonic(4.0, 1.5)
    t0 = 0.61
    errs = []
    for h in (1e-2, 5e-3):
        fd = (model.mean(t0 + h) - model.mean(t0 - h)) / (2 * h)
        errs.append(abs(fd - M.intensity_eval(model, t0)))
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.9


def test_lambda_max_bounds_intensity():
    for model in (M.raised_cosine(), M.two_harmonic(7.0, 3.0)):
        t = np.linspace(0, model.tau, 10001)
        assert np.max(M.intensity_eval(model, t)) <= model.lambda_max + 1e-12
    rc = M.raised_cosine(5.0, 1.0)
    assert rc.lambda_max == pytest.approx(5 * math.pi / 2)


def test_sobolev_examples(rc):
    assert M.sobolev_functional([1.0, 0.0, 0.0], 3) == 0.0
    q = M.sobolev_functional(rc.theta, 2)
    assert q == pytest.approx(math.pi**4 * 25 / 8, rel=1e-14)
    assert q == pytest.approx(304.40, abs=0.01)
    assert M.sobolev_functional(2 * rc.theta, 2) == pytest.approx(4 * q, rel=1e-14)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_sobolev_matches_quadrature_of_derivative(m):
    model = M.two_harmonic(5.0, 1.3)
    tau = model.tau

    def deriv(t):
        # m-th derivative of sqrt(2/tau) cos(w t) is sqrt(2/tau) w^m cos(w t + m pi/2)
        out = np.zeros_like(t)
        for l in range(1, model.theta.size):
            w = math.pi * l / tau
            out += model.theta[l] * math.sqrt(2 / tau) * w**m * np.cos(w * t + m * math.pi / 2)
        return out

    quadv = simpson_integral(lambda t: deriv(t) ** 2, 0, tau)
    assert M.sobolev_functional(model.theta, m, tau) == pytest.approx(quadv, rel=1e-8)


def test_validate_examples(rc, negative_model):
    v = M.validate_model(rc, M.EllipsoidSpec(2, 305, 5))
    assert v.member and v.nonnegative_certified
    v = M.validate_model(rc, M.EllipsoidSpec(2, 300, 5))
    assert not v.member and v.reasons == ("sobolev excess",)
    v = M.validate_model(negative_model, M.EllipsoidSpec(2, 1e9, negative_model.S))
    assert not v.member and "negativity" in v.reasons
    assert v.intensity_min_grid < 0


def test_validate_boundary_failures(rc):
    shifted = M.IntensityModel(tau=1.0, theta=rc.theta + np.array([0.1, 0.0]))
    v = M.validate_model(shifted, M.EllipsoidSpec(2, 1e6, shifted.S))
    assert not v.starts_at_zero and not v.member
    v = M.validate_model(rc, M.EllipsoidSpec(2, 1e6, 4.0))
    assert not v.mass_matches


def test_validate_builtins_members():
    for make in M.BUILTIN_MODELS.values():
        model = make()
        q = M.sobolev_functional(model.theta, 3, model.tau)
        assert M.validate_model(model, M.EllipsoidSpec(3, q, model.S, model.tau)).member


@settings(max_examples=30, deadline=None)
@given(R=st.floats(1.0, 1e4), bump=st.floats(0.0, 1e4))
def test_validate_monotone_in_radius(R, bump):
    model = M.two_harmonic(2.0, 1.0)
    a = M.validate_model(model, M.EllipsoidSpec(2, R, model.S), grid_size=257)
    b = M.validate_model(model, M.EllipsoidSpec(2, R + bump, model.S), grid_size=257)
    assert (not a.member) or b.member


def test_intensity_cosine_coeff_examples(rc):
    assert M.intensity_cosine_coeff(rc, 0) == pytest.approx(5.0, rel=1e-14)
    tau2 = M.raised_cosine(5.0, 2.0)
    assert M.intensity_cosine_coeff(tau2, 0) == pytest.approx(5.0 / math.sqrt(2.0), rel=1e-14)
    expect = -(5.0 / 3.0) * math.sqrt(2)
    assert M.intensity_cosine_coeff(rc, 2) == pytest.approx(expect, rel=1e-13)
    oracle = quad(lambda t: M.intensity_eval(rc, t) * M.basis_eval(2, t, 1.0), 0, 1,
                  epsabs=1e-13)[0]
    assert oracle == pytest.approx(expect, rel=1e-10)


def test_constant_intensity_coefficients_vanish():
    c = 3.0
    for l in range(1, 8):
        v = simpson_integral(lambda t: c * M.basis_eval(l, t, 1.0), 0, 1.0)
        assert abs(v) < 1e-12


@pytest.mark.parametrize("l", range(0, 12))
def test_exact_and_quadrature_coefficients_agree(l):
    model = M.two_harmonic(5.0, 1.4)
    assert M.intensity_cosine_coeff(model, l) == pytest.approx(
        M.intensity_cosine_coeff(model, l, method="quadrature"), abs=1e-11)


def test_intensity_sobolev_diagnostic_partial_sums(rc, rc_Q):
    # for m=2 the intensity-side partial sums increase toward the mean-side value
    d = [M.intensity_sobolev_functional(rc, 2, L_max=L) for L in (50, 500, 4000)]
    assert d[0] < d[1] < d[2] < rc_Q
    assert d[2] == pytest.approx(rc_Q, rel=1e-3)


def test_model_json_roundtrip(tmp_path, rc):
    p = tmp_path / "m.json"
    M.save_model(rc, p)
    back = M.load_model(p)
    np.testing.assert_array_equal(back.theta, rc.theta)
    assert back.S == rc.S
    assert set(json.loads(p.read_text())) == {"tau", "theta", "S"}


def test_model_json_rejects_wrong_mass(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"tau": 1.0, "theta": [2.5, -1.7677669529663689], "S": 6.0}))
    with pytest.raises(M.ModelError, match="disagrees"):
        M.load_model(p)
    with pytest.raises(M.ModelError):
        M.model_from_dict({"tau": 1.0, "theta": [1.0], "extra": 1})


def test_ellipsoid_spec_validation():
    with pytest.raises(M.ModelError):
        M.EllipsoidSpec(1, 1.0, 1.0)
    with pytest.raises(M.ModelError):
        M.EllipsoidSpec(2, -1.0, 1.0)
    with pytest.raises(M.ModelError):
        M.EllipsoidSpec(2, 1.0, 0.0)
