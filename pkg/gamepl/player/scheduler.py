r"""Confidence-aware scheduler for the unobserved-label loss terms.

Each unobserved entry :math:`j` of the network objective is weighted by

.. math::

    \xi(\hat{y}_u, \varphi) = \beta \frac{1 - \gamma e^{-10|2\hat{y}_u - 1|}}
                                     {1 + \gamma e^{-10|2\hat{y}_u - 1|}}
                              + (1-\beta)\varphi

where :math:`\hat{y}_u` is the current soft pseudo label and
:math:`\varphi` the training progress (current epoch over total epochs).
Confident pseudo labels (near 0 or 1) get the largest weight; as training
progresses every term gains weight.

:Example:

    ::

        >>> from gamepl.player.scheduler import SchedulerParams, xi
        >>> xi(1., 0., SchedulerParams(beta=0.5, gamma=1.))
        0.49995460...
"""
import warnings
import numpy as np
from gamepl.utils import constants as const
from gamepl.process.diagnostic import DiagnosticProcess


class SchedulerParams(object):
    """Hyperparameters of the scheduler.

    :param float beta:          mixing weight between confidence and progress
                                terms, in [0, 1] [default: 0.7]
    :param float gamma:         strength of the low-confidence suppression,
                                > 0 [default: 1.0]
    :param int total_epochs:    number of epochs defining progress [default: 10]
    :raises: :exc:`ValueError` for out-of-range values

    ``gamma > 1`` is legal but makes the confidence term negative for
    uncertain pseudo labels; a warning is issued.
    """
    def __init__(self, beta=0.7, gamma=1.0, total_epochs=10):
        beta, gamma = float(beta), float(gamma)
        if not 0. <= beta <= 1.:
            raise ValueError('beta must lie in [0, 1], got {}'.format(beta))
        if not gamma > 0.:
            raise ValueError('gamma must be positive, got {}'.format(gamma))
        if int(total_epochs) != total_epochs or total_epochs < 1:
            raise ValueError('total_epochs must be a positive integer, got {}'.format(total_epochs))
        if gamma > 1.:
            warnings.warn('gamma = {} > 1 gives negative scheduler weights for '
                          'uncertain pseudo labels.'.format(gamma))
        self.beta = beta
        self.gamma = gamma
        self.total_epochs = int(total_epochs)

    def __repr__(self):
        return 'SchedulerParams(beta={}, gamma={}, total_epochs={})'.format(
            self.beta, self.gamma, self.total_epochs)


def progress(epoch, params):
    """Training progress :math:`\\varphi_t` = epoch / total_epochs.

    :raises: :exc:`ValueError` unless ``0 <= epoch <= total_epochs``
    """
    if not 0 <= epoch <= params.total_epochs:
        raise ValueError('epoch {} outside [0, {}]'.format(epoch, params.total_epochs))
    return epoch / params.total_epochs


def xi(pseudo, phi, params):
    """Scheduler weight for soft pseudo label(s) ``pseudo`` at progress ``phi``.

    Vectorized over ``pseudo``. Returns a float for scalar input.
    """
    pseudo = np.asarray(pseudo, dtype=float)
    decay = params.gamma * np.exp(-const.confidence_sharpness * np.abs(2. * pseudo - 1.))
    weight = params.beta * (1. - decay) / (1. + decay) + (1. - params.beta) * phi
    if weight.ndim == 0:
        return float(weight)
    return weight


class ConfidenceScheduler(DiagnosticProcess):
    """Diagnostic process holding the scheduler weight of every
    (training image, class) entry.

    The weights are recomputed from the pseudo-label store once per epoch,
    at the first step of the epoch, with progress ``epochs_elapsed / total``.
    Between recomputations the ``xi`` array is constant, so every
    mini-batch of an epoch sees the same weights.

    **Initialization parameters** \n

    :param store:           the pseudo-label store the weights are derived from
    :type store:            :class:`~gamepl.player.pseudo_label.PseudoLabelStore`
    :param params:          scheduler hyperparameters
    :type params:           :class:`SchedulerParams`
    :param bool use_scheduler:
                            if ``False`` every weight is 1 (ablation switch)
                            [default: True]

    **Diagnostics** \n

    :ivar array xi:         weight per entry, shape (N, L). Updated in place.
    :ivar float phi:        progress used for the current weights
    """
    dims = {'xi': ('image', 'class')}

    def __init__(self, store, params, use_scheduler=True, **kwargs):
        super(ConfidenceScheduler, self).__init__(per_epoch=True, **kwargs)
        self.params = params
        self.use_scheduler = use_scheduler
        self.add_input('store', store)
        self.add_diagnostic('xi', np.ones(store.shape))
        self.add_diagnostic('phi', 0.)
        self._update_diagnostics()

    def _update_diagnostics(self):
        epoch = min(self.time['epochs_elapsed'], self.params.total_epochs)
        self.phi = progress(epoch, self.params)
        if self.use_scheduler:
            self.xi[...] = xi(self.store.mapped, self.phi, self.params)
        else:
            self.xi[...] = 1.
