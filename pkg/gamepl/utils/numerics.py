r"""Numerically stable primitives shared by both players.

The binary cross-entropy between two scalars

.. math::

    L(p, q) = -p \log q - (1-p) \log (1-q)

is always evaluated with ``q`` clamped to :math:`[\epsilon, 1-\epsilon]`,
:math:`\epsilon = 10^{-7}`, so it is finite for every input.

Two mapping functions :math:`F` take a real latent value to a soft label:

- ``'sigmoid'``: :math:`F(y) = 1 / (1 + e^{-y})`
- ``'gaussian_cdf'``: :math:`F(y) = \Phi\left((y - 0.5)/\sigma\right)`

:math:`\Phi` is the standard normal CDF, evaluated as
:math:`\tfrac12 \mathrm{erfc}(-z/\sqrt2)` with ``scipy.special.erfc``
(double precision, well inside the required :math:`10^{-7}` absolute error
and exactly symmetric about the mean).

All functions accept scalars or numpy arrays and broadcast.
"""
from collections import namedtuple
import numpy as np
from scipy.special import expit, erfc
from gamepl.utils import constants as const


MAPPING_KINDS = ('sigmoid', 'gaussian_cdf')


class MappingSpec(namedtuple('MappingSpec', ['kind', 'sigma'])):
    """Which mapping function :math:`F` to use.

    :param str kind:        ``'sigmoid'`` or ``'gaussian_cdf'``
    :param float sigma:     standard deviation of the Gaussian CDF on the
                            latent axis (ignored for ``'sigmoid'``)
                            [default: 0.3]
    :raises: :exc:`ValueError` for an unknown kind or ``sigma <= 0``
    """
    __slots__ = ()

    def __new__(cls, kind='gaussian_cdf', sigma=0.3):
        if kind not in MAPPING_KINDS:
            raise ValueError('mapping kind must be one of {}, got {!r}'.format(
                MAPPING_KINDS, kind))
        sigma = float(sigma)
        if not sigma > 0.:
            raise ValueError('sigma must be positive, got {}'.format(sigma))
        return super(MappingSpec, cls).__new__(cls, kind, sigma)

    @property
    def latent_bounds(self):
        """(lower, upper) clamp range of the latent axis."""
        if self.kind == 'sigmoid':
            return -const.latent_bound_sigmoid, const.latent_bound_sigmoid
        half = const.latent_halfwidth_cdf * self.sigma
        return 0.5 - half, 0.5 + half

    @property
    def latent_center(self):
        """Latent value mapped to exactly 0.5."""
        return 0. if self.kind == 'sigmoid' else 0.5


def clamp_prob(q, eps=const.eps_prob):
    """Clip probabilities into ``[eps, 1-eps]``."""
    return np.clip(q, eps, 1. - eps)


def stable_bce(p, q):
    """Binary cross-entropy :math:`L(p, q)` with ``q`` clamped.

    :param p:   target probability in [0, 1]
    :param q:   predicted probability in [0, 1]
    :returns:   non-negative loss, same shape as the broadcast inputs
    """
    q = clamp_prob(q)
    return -p * np.log(q) - (1. - p) * np.log(1. - q)


def stable_bce_grad(p, q):
    """Derivative of :func:`stable_bce` with respect to ``q``.

    Evaluated at the clamped ``q``: :math:`(q-p) / (q(1-q))`.
    """
    q = clamp_prob(q)
    return (q - p) / (q * (1. - q))


def map_latent(y, spec):
    """Soft label :math:`F(y)` for latent value(s) ``y``."""
    y = np.asarray(y, dtype=float)
    if spec.kind == 'sigmoid':
        return expit(y)
    z = (y - 0.5) / spec.sigma
    return 0.5 * erfc(-z / np.sqrt(2.))


def map_latent_derivative(y, spec):
    """Exact derivative :math:`F'(y)` of :func:`map_latent`.

    For the Gaussian CDF this is the Gaussian pdf, with peak value
    :math:`1/(\\sigma\\sqrt{2\\pi})` at ``y = 0.5``.
    """
    y = np.asarray(y, dtype=float)
    if spec.kind == 'sigmoid':
        s = expit(y)
        return s * (1. - s)
    z = (y - 0.5) / spec.sigma
    return np.exp(-0.5 * z**2) / (spec.sigma * const.sqrt_2pi)


def clamp_latent(y, spec):
    """Clip latent values to the range where the mapping is not saturated
    beyond double precision. The bounds stand in for the roots at infinity."""
    lo, hi = spec.latent_bounds
    return np.clip(y, lo, hi)


def rms(x):
    """Root-mean-square of an array (0 for an empty array)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.
    return float(np.sqrt(np.mean(x**2)))
