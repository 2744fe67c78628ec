import numpy as np
import pytest
from gamepl.utils import constants as const
from gamepl.utils.numerics import (MappingSpec, clamp_prob, stable_bce, stable_bce_grad,
                                   map_latent, map_latent_derivative, clamp_latent, rms)
from gamepl.utils.attrdict import AttrDict, merge


@pytest.mark.fast
def test_mapping_spec_validation():
    assert MappingSpec() == ('gaussian_cdf', 0.3)
    with pytest.raises(ValueError):
        MappingSpec('tanh', 0.3)
    with pytest.raises(ValueError):
        MappingSpec('gaussian_cdf', 0.)
    with pytest.raises(ValueError):
        MappingSpec('sigmoid', -1.)


@pytest.mark.fast
def test_gaussian_cdf_center_and_symmetry():
    for sigma in [0.1, 0.3, 0.5]:
        spec = MappingSpec('gaussian_cdf', sigma)
        assert map_latent(0.5, spec) == 0.5
        d = np.linspace(0., 6. * sigma, 61)
        np.testing.assert_allclose(map_latent(0.5 + d, spec) + map_latent(0.5 - d, spec),
                                   1., rtol=0., atol=1e-12)
        assert map_latent_derivative(0.5, spec) == pytest.approx(1. / (sigma * const.sqrt_2pi))


@pytest.mark.fast
def test_gaussian_cdf_known_values():
    spec = MappingSpec('gaussian_cdf', 1.)
    # standard normal CDF at 0.5 + z
    for z, phi in [(1., 0.8413447460685429), (-1.96, 0.024997895148220435),
                   (3., 0.9986501019683699)]:
        assert map_latent(0.5 + z, spec) == pytest.approx(phi, abs=1e-7)


@pytest.mark.fast
def test_sigmoid_mapping():
    spec = MappingSpec('sigmoid', 0.3)
    assert map_latent(0., spec) == 0.5
    assert spec.latent_center == 0.
    y = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(map_latent(y, spec), 1. / (1. + np.exp(-y)))
    s = map_latent(y, spec)
    np.testing.assert_allclose(map_latent_derivative(y, spec), s * (1. - s))


@pytest.mark.fast
def test_mapping_derivative_matches_finite_differences():
    rng = np.random.default_rng(0)
    for spec in [MappingSpec('sigmoid'), MappingSpec('gaussian_cdf', 0.1),
                 MappingSpec('gaussian_cdf', 0.5)]:
        y = spec.latent_center + rng.uniform(-1., 1., 50)
        h = 1e-6
        fd = (map_latent(y + h, spec) - map_latent(y - h, spec)) / (2. * h)
        np.testing.assert_allclose(map_latent_derivative(y, spec), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.fast
def test_stable_bce_is_finite_at_the_edges():
    p = np.array([0., 1., 0., 1.])
    q = np.array([0., 0., 1., 1.])
    loss = stable_bce(p, q)
    assert np.all(np.isfinite(loss))
    assert np.all(loss >= 0.)
    assert loss[1] == pytest.approx(-np.log(const.eps_prob))
    assert np.all(np.isfinite(stable_bce_grad(p, q)))
    assert clamp_prob(0.) == const.eps_prob


@pytest.mark.fast
def test_stable_bce_is_smallest_at_the_target():
    q = np.linspace(0., 1., 10001)
    rng = np.random.default_rng(2)
    for p in np.concatenate([[0., 0.5, 1.], rng.uniform(0., 1., 20)]):
        loss = stable_bce(p, q)
        assert np.all(loss >= 0.)
        assert abs(q[np.argmin(loss)] - p) <= 1e-4



@pytest.mark.fast
def test_stable_bce_grad_matches_finite_differences():
    rng = np.random.default_rng(1)
    p = rng.uniform(0., 1., 100)
    q = rng.uniform(0.05, 0.95, 100)
    h = 1e-7
    fd = (stable_bce(p, q + h) - stable_bce(p, q - h)) / (2. * h)
    np.testing.assert_allclose(stable_bce_grad(p, q), fd, rtol=1e-5, atol=1e-6)


@pytest.mark.fast
def test_clamp_latent_bounds():
    spec = MappingSpec('gaussian_cdf', 0.2)
    lo, hi = spec.latent_bounds
    assert lo == pytest.approx(0.5 - 8 * 0.2)
    assert hi == pytest.approx(0.5 + 8 * 0.2)
    np.testing.assert_array_equal(clamp_latent([-100., 0.5, 100.], spec), [lo, 0.5, hi])


@pytest.mark.fast
def test_rms():
    assert rms([]) == 0.
    assert rms([3., -3.]) == 3.


@pytest.mark.fast
def test_attrdict_access_and_merge():
    d = AttrDict(a=1, b={'x': 1, 'y': 2})
    assert d.a == 1
    d.c = 3
    assert d['c'] == 3
    with pytest.raises(AttributeError):
        d.missing
    with pytest.raises(TypeError):
        setattr(d, 'items', 1)
    merged = d + {'b': {'y': 5}}
    assert merged.b == {'x': 1, 'y': 5}
    assert merge({'k': 1}, {'k': 2}) == {'k': 2}
