import math

import numpy as np
import pytest

from pnpm_dg.physics import (
    GODUNOV,
    NUMERICAL_FLUXES,
    RUSANOV,
    UPWIND,
    Burgers,
    InadmissibleStateError,
    LinearAdvection,
    TrafficLWR,
    flux_eval,
    make_model,
    numerical_flux,
    primitive_eval,
)

MODELS = [LinearAdvection(1.0), LinearAdvection(-0.7), Burgers(), TrafficLWR()]


def samples(model, rng, size):
    if isinstance(model, TrafficLWR):
        return rng.uniform(0.0, 1.0, size)
    return rng.uniform(-5.0, 5.0, size)


def test_flux_examples():
    assert flux_eval(LinearAdvection(1.0), 0.5) == 0.5
    assert flux_eval(Burgers(), 2.0) == 2.0
    assert flux_eval(TrafficLWR(), 0.0) == 0.0


def test_traffic_rejects_out_of_range():
    with pytest.raises(InadmissibleStateError):
        flux_eval(TrafficLWR(), np.array([0.5, 1.2]))
    with pytest.raises(InadmissibleStateError):
        flux_eval(TrafficLWR(), -0.1)


def test_primitive_examples():
    lam = 1.3
    m = LinearAdvection(lam)
    assert primitive_eval(m, 2.0) - primitive_eval(m, 0.0) == pytest.approx(2 * lam)
    b = Burgers()
    assert primitive_eval(b, 1.0) - primitive_eval(b, -1.0) == pytest.approx(1 / 3)
    t = TrafficLWR()
    assert primitive_eval(t, 1.0) - primitive_eval(t, 0.0) == pytest.approx(2 * (1 - math.exp(-0.5)))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_primitive_and_entropy_flux_derivatives(model, rng):
    u = samples(model, rng, 200)
    if isinstance(model, TrafficLWR):
        u = np.clip(u, 1e-3, 1 - 1e-3)
    d = 1e-5
    g_prime = (model.g(u + d) - model.g(u - d)) / (2 * d)
    np.testing.assert_allclose(g_prime, model.f(u), atol=1e-8)
    f_prime = (model.f(u + d) - model.f(u - d)) / (2 * d)
    np.testing.assert_allclose(f_prime, model.df(u), atol=1e-8)
    big_f = (model.entropy_flux(u + d) - model.entropy_flux(u - d)) / (2 * d)
    np.testing.assert_allclose(big_f, u * model.df(u), atol=1e-8)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_mean_flux_is_a_mean_value(model, rng):
    a, b = samples(model, rng, (2, 500))
    mean = model.mean_flux(a, b)
    direct = (model.g(b) - model.g(a)) / (b - a)
    np.testing.assert_allclose(mean, direct, rtol=1e-9, atol=1e-9)
    # bounded by the range of f between the states
    grid = a[:, None] + (b - a)[:, None] * np.linspace(0, 1, 401)
    fv = model.f(grid)
    assert np.all(mean >= fv.min(axis=1) - 1e-10)
    assert np.all(mean <= fv.max(axis=1) + 1e-10)
    np.testing.assert_allclose(model.mean_flux(a, a), model.f(a), rtol=1e-15)


@pytest.mark.parametrize("kind", NUMERICAL_FLUXES)
@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_consistency(kind, model, rng):
    if kind == UPWIND and not model.linear:
        pytest.skip("upwind is linear-only")
    u = samples(model, rng, 300)
    np.testing.assert_allclose(numerical_flux(kind, model, u, u), model.f(u), atol=1e-12)


def test_flux_examples_numeric():
    assert numerical_flux(RUSANOV, Burgers(), 1.0, -1.0) == pytest.approx(1.5)
    assert numerical_flux(GODUNOV, Burgers(), -1.0, 1.0) == pytest.approx(0.0)
    # shock: max of f over [ur, ul]
    assert numerical_flux(GODUNOV, Burgers(), 1.0, -1.0) == pytest.approx(0.5)
    assert numerical_flux(UPWIND, LinearAdvection(2.0), 1.0, 3.0) == 2.0
    assert numerical_flux(UPWIND, LinearAdvection(-2.0), 1.0, 3.0) == -6.0


def test_upwind_rejects_nonlinear():
    with pytest.raises(ValueError):
        numerical_flux(UPWIND, Burgers(), 0.0, 1.0)
    with pytest.raises(ValueError):
        numerical_flux("roe", Burgers(), 0.0, 1.0)


def test_rusanov_bound(rng):
    for model in MODELS:
        ul, ur = samples(model, rng, (2, 300))
        smax = np.maximum(np.abs(model.df(ul)), np.abs(model.df(ur)))
        fbar = numerical_flux(RUSANOV, model, ul, ur)
        assert np.all(fbar <= np.maximum(model.f(ul), model.f(ur)) + smax * np.abs(ur - ul) + 1e-12)


def test_make_model():
    assert isinstance(make_model("burgers"), Burgers)
    assert make_model("advection", speed=2.0).speed == 2.0
    with pytest.raises(ValueError):
        make_model("euler")
