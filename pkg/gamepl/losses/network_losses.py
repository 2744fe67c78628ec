r"""Objectives of the network player.

The game objective is

.. math::

    L = L_{obs} + L_{unobs}

- :math:`L_{obs}`: binary cross-entropy between observed labels and
  predictions, plus an expected-positives regularizer
  :math:`w \sum_i \left(\tfrac1L \sum_j \hat{y}_{ij} - k/L\right)^2`
  that penalizes predicting far more positives per image than expected.
  This regularizer is a documented stand-in with the intent of the
  online-estimation regularizer of the literature, not a copy of it.
- :math:`L_{unobs} = \sum_i \sum_{j \in U_i} \xi_{ij} L(\hat{y}_{ij}, \hat{y}_{u,ij})`:
  cross-entropy against the soft pseudo labels, weighted per entry by the
  confidence-aware scheduler.

Baselines for partial labels:

- ``'bce'``: full binary cross-entropy; needs a fully observed mask
- ``'bce-ls'``: full labels with label smoothing
- ``'an'``: assume every unobserved label is negative
- ``'an-ls'``: ``'an'`` with label smoothing (targets eps and 1-eps)
- ``'wan'``: ``'an'`` with every negative term weighted 1/(L-1)
- ``'epr'``: observed entries only plus the expected-positives regularizer

Every loss is a sum over entries and images, and every gradient is taken
with respect to the (post-sigmoid) predictions, evaluated at the clamped
probabilities.
"""
from collections import namedtuple
import numpy as np
from gamepl.utils import constants as const
from gamepl.utils.numerics import stable_bce, stable_bce_grad
from gamepl.utils.exceptions import check_same_shape


BASELINES = ('bce', 'bce-ls', 'an', 'an-ls', 'wan', 'epr')
LOSSES = ('g2netpl',) + BASELINES

LossReport = namedtuple('LossReport', ['total', 'obs_part', 'unobs_part', 'grad'])
LossReport.__doc__ = """Value and gradient of a network objective.
``total == obs_part + unobs_part``; ``grad`` has the shape of the predictions."""

Regularizer = namedtuple('Regularizer', ['expected_positives', 'reg_weight'])
Regularizer.__new__.__defaults__ = (1.0, 0.1)


def _as_arrays(preds, mask):
    preds = np.asarray(preds, dtype=float)
    mask = np.asarray(mask)
    check_same_shape('preds', preds, 'mask', mask)
    return preds, mask


def _weighted_bce(targets, preds, weights):
    """Sum of weighted cross-entropy terms and the elementwise gradient."""
    loss = float(np.sum(weights * stable_bce(targets, preds)))
    grad = weights * stable_bce_grad(targets, preds)
    return loss, grad


def _smooth(targets, eps):
    return targets * (1. - 2. * eps) + eps


def expected_positives_penalty(preds, reg):
    """Regularizer of :func:`loss_obs` alone, as (loss, grad)."""
    L = preds.shape[1]
    dev = preds.mean(axis=1) - reg.expected_positives / L
    loss = float(reg.reg_weight * np.sum(dev**2))
    grad = np.repeat((2. * reg.reg_weight / L) * dev[:, np.newaxis], L, axis=1)
    return loss, grad


def loss_obs(preds, mask, reg=Regularizer()):
    """Cross-entropy over observed entries plus the expected-positives
    regularizer.

    :param array preds:     predictions, shape (B, L)
    :param array mask:      observation mask (1, 0, -1 for unobserved)
    :param reg:             :class:`Regularizer` (k, weight)
    :returns:               (loss, grad)
    :raises: :exc:`~gamepl.utils.exceptions.DimensionError` on shape mismatch
    """
    preds, mask = _as_arrays(preds, mask)
    weights = (mask != const.UNOBSERVED).astype(float)
    targets = (mask == const.OBSERVED_POSITIVE).astype(float)
    loss, grad = _weighted_bce(targets, preds, weights)
    reg_loss, reg_grad = expected_positives_penalty(preds, reg)
    return loss + reg_loss, grad + reg_grad


def loss_unobs(preds, pseudo, mask, xi_weights):
    """Scheduler-weighted cross-entropy against the soft pseudo labels,
    over unobserved entries only.

    :returns:               (loss, grad)
    """
    preds, mask = _as_arrays(preds, mask)
    pseudo = np.asarray(pseudo, dtype=float)
    xi_weights = np.asarray(xi_weights, dtype=float)
    check_same_shape('preds', preds, 'pseudo', pseudo)
    check_same_shape('preds', preds, 'xi_weights', xi_weights)
    weights = xi_weights * (mask == const.UNOBSERVED)
    return _weighted_bce(pseudo, preds, weights)


def loss_g2netpl(preds, mask, pseudo, xi_weights, reg=Regularizer()):
    """The full game objective of the network player.

    :rtype: :class:`LossReport`
    """
    obs, obs_grad = loss_obs(preds, mask, reg)
    unobs, unobs_grad = loss_unobs(preds, pseudo, mask, xi_weights)
    return LossReport(obs + unobs, obs, unobs, obs_grad + unobs_grad)


def baseline_loss(kind, preds, mask, ls_epsilon=0.1, reg=Regularizer()):
    """One of the baseline losses (see module docstring).

    :param str kind:        one of ``BASELINES``
    :param float ls_epsilon: label smoothing for ``'bce-ls'`` / ``'an-ls'``
    :returns:               (loss, grad)
    :raises: :exc:`ValueError` for an unknown kind, or a full-label kind
             with unobserved entries in the mask
    """
    preds, mask = _as_arrays(preds, mask)
    if kind not in BASELINES:
        raise ValueError('unknown baseline loss {!r}; choose from {}'.format(kind, BASELINES))
    if kind == 'epr':
        return loss_obs(preds, mask, reg)
    if kind in ('bce', 'bce-ls') and np.any(mask == const.UNOBSERVED):
        raise ValueError("loss '{}' needs fully observed labels".format(kind))
    targets = (mask == const.OBSERVED_POSITIVE).astype(float)
    weights = np.ones_like(preds)
    if kind in ('bce-ls', 'an-ls'):
        targets = _smooth(targets, ls_epsilon)
    elif kind == 'wan':
        L = preds.shape[1]
        if L > 1:
            weights = np.where(mask == const.OBSERVED_POSITIVE, 1., 1. / (L - 1))
    return _weighted_bce(targets, preds, weights)


def evaluate_loss(kind, preds, mask, pseudo=None, xi_weights=None,
                  reg=Regularizer(), ls_epsilon=0.1):
    """Any network objective as a :class:`LossReport`.

    Baselines report everything as ``obs_part``.
    """
    if kind == 'g2netpl':
        return loss_g2netpl(preds, mask, pseudo, xi_weights, reg)
    total, grad = baseline_loss(kind, preds, mask, ls_epsilon=ls_epsilon, reg=reg)
    return LossReport(total, total, 0., grad)
