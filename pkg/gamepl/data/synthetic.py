"""Synthetic multi-label data.

Every class has a prototype direction in feature space (orthonormal when
``num_classes <= input_dim``). A sample activates a random non-empty subset
of classes: each class independently with a probability calibrated so that
the expected number of positives, given at least one, is
``mean_positives``. Its features are ``separation`` times the sum of the
active prototypes plus standard normal noise. With label noise, the
contribution of a prototype to the features is flipped (dropped or added)
while the ground truth keeps the true activation.
"""
import numpy as np
from scipy.optimize import brentq
from gamepl.data.dataset import PartialDataset


class SyntheticSpec(object):
    """Size and difficulty of a synthetic dataset.

    :param int num_classes:     L [default: 8]
    :param int input_dim:       [default: 16]
    :param int num_train:       training samples [default: 2000]
    :param int num_test:        test samples [default: 1000]
    :param float separation:    prototype scale relative to the unit noise
                                [default: 2.5]
    :param float label_noise:   flip rate of prototype contributions, in
                                [0, 0.5) [default: 0.0]
    :param float mean_positives: expected positives per sample, in
                                [1, num_classes] [default: 2.0]
    """
    def __init__(self, num_classes=8, input_dim=16, num_train=2000, num_test=1000,
                 separation=2.5, label_noise=0.0, mean_positives=2.0):
        for label, value in (('num_classes', num_classes), ('input_dim', input_dim),
                             ('num_train', num_train)):
            if int(value) != value or value < 1:
                raise ValueError('{} must be a positive integer, got {}'.format(label, value))
        if int(num_test) != num_test or num_test < 0:
            raise ValueError('num_test must be a non-negative integer, got {}'.format(num_test))
        if not 0. <= label_noise < 0.5:
            raise ValueError('label_noise must lie in [0, 0.5), got {}'.format(label_noise))
        if not 1. <= mean_positives <= num_classes:
            raise ValueError('mean_positives must lie in [1, {}], got {}'.format(
                num_classes, mean_positives))
        if not separation >= 0.:
            raise ValueError('separation must be non-negative, got {}'.format(separation))
        self.num_classes = int(num_classes)
        self.input_dim = int(input_dim)
        self.num_train = int(num_train)
        self.num_test = int(num_test)
        self.separation = float(separation)
        self.label_noise = float(label_noise)
        self.mean_positives = float(mean_positives)

    def as_dict(self):
        return dict(num_classes=self.num_classes, input_dim=self.input_dim,
                    num_train=self.num_train, num_test=self.num_test,
                    separation=self.separation, label_noise=self.label_noise,
                    mean_positives=self.mean_positives)

    def __repr__(self):
        return 'SyntheticSpec({})'.format(', '.join(
            '{}={!r}'.format(k, v) for k, v in self.as_dict().items()))


def activation_rate(num_classes, mean_positives):
    """Per-class activation probability q such that the mean of a
    zero-truncated Binomial(L, q) equals ``mean_positives``."""
    L, m = num_classes, mean_positives
    if m <= 1. + 1e-12:
        return 0.
    if m >= L - 1e-12:
        return 1.

    def excess(q):
        return L * q / (1. - (1. - q)**L) - m

    return brentq(excess, 1e-12, 1. - 1e-12, xtol=1e-14)


def prototypes(num_classes, input_dim, rng):
    """Unit-norm prototype rows, orthonormal when L <= input_dim."""
    if num_classes <= input_dim:
        q, r = np.linalg.qr(rng.standard_normal((input_dim, num_classes)))
        return q.T
    raw = rng.standard_normal((num_classes, input_dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _activations(n, num_classes, q, rng):
    if q == 0.:
        active = np.zeros((n, num_classes), dtype=np.int8)
        active[np.arange(n), rng.integers(num_classes, size=n)] = 1
        return active
    active = (rng.random((n, num_classes)) < q).astype(np.int8)
    empty = np.flatnonzero(active.sum(axis=1) == 0)
    while empty.size:
        active[empty] = (rng.random((empty.size, num_classes)) < q)
        empty = empty[active[empty].sum(axis=1) == 0]
    return active


def gen_synthetic(spec, seed=0):
    """A fully observed :class:`~gamepl.data.dataset.PartialDataset`
    drawn according to ``spec``. Deterministic per ``seed``.

    Every class is guaranteed at least one positive in the training split.
    """
    rng = np.random.default_rng(seed)
    L = spec.num_classes
    n = spec.num_train + spec.num_test
    protos = prototypes(L, spec.input_dim, rng)
    q = activation_rate(L, spec.mean_positives)
    active = _activations(n, L, q, rng)
    for j in np.flatnonzero(active[:spec.num_train].sum(axis=0) == 0):
        active[rng.integers(spec.num_train), j] = 1
    flips = rng.random((n, L)) < spec.label_noise
    shown = np.where(flips, 1 - active, active)
    features = spec.separation * (shown @ protos) + rng.standard_normal((n, spec.input_dim))
    return PartialDataset(features, active, num_train=spec.num_train)
