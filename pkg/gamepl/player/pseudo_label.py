r"""The pseudo-label player.

Every unobserved (image, class) entry carries a latent value :math:`y_u`
whose mapped value :math:`\hat{y}_u = F(y_u)` is the soft pseudo label.
Given the network prediction :math:`\hat{y}` the player minimizes the
augmented cross-entropy

.. math::

    L_{ACE} = \sum_j L(\hat{y}_j, F(y_{u,j})) + \lambda_j F(y_{u,j})(1 - F(y_{u,j}))

(additive variant) or

.. math::

    L_{ACE} = \sum_j e^{\lambda_j F(1-F)} L(\hat{y}_j, F(y_{u,j}))

(exponential variant). The penalty vanishes only at 0 and 1, so it pushes
pseudo labels away from the uninformative value 0.5, and more so when the
prediction itself is uncertain: :math:`\lambda_j` is a Gaussian bump in
:math:`\hat{y}_j` centred at 0.5 (see :func:`lambda_at`).

Observed entries are frozen at their label (1 or 0) and never move.
"""
import csv
import numpy as np
from scipy.optimize import minimize_scalar
from gamepl.utils import constants as const
from gamepl.utils.numerics import (MappingSpec, stable_bce, clamp_prob,
                                   map_latent, map_latent_derivative,
                                   clamp_latent)
from gamepl.utils.exceptions import DimensionError, DatasetFormatError, check_same_shape
from gamepl.process.implicit import ImplicitProcess
from gamepl.player.classifier import forward


ACE_VARIANTS = ('additive', 'exponential')


class LambdaSchedule(object):
    """Confidence-dependent weight of the L_ACE penalty.

    :param float lambda_max:    peak weight, reached at prediction 0.5
                                [default: 1.0]
    :param float width:         standard deviation of the bump [default: 0.2]
    """
    def __init__(self, lambda_max=1.0, width=0.2):
        lambda_max, width = float(lambda_max), float(width)
        if not lambda_max > 0.:
            raise ValueError('lambda_max must be positive, got {}'.format(lambda_max))
        if not width > 0.:
            raise ValueError('width must be positive, got {}'.format(width))
        self.lambda_max = lambda_max
        self.width = width

    def __repr__(self):
        return 'LambdaSchedule(lambda_max={}, width={})'.format(self.lambda_max, self.width)


def lambda_at(pred, lam):
    r""":math:`\lambda_j = \lambda_{max} \exp(-(\hat{y}_j - 0.5)^2 / (2 w^2))`"""
    pred = np.asarray(pred, dtype=float)
    value = lam.lambda_max * np.exp(-(pred - 0.5)**2 / (2. * lam.width**2))
    return float(value) if value.ndim == 0 else value


def _lambdas(pred, lam):
    #  a LambdaSchedule, or the weights themselves (scalar or array)
    if isinstance(lam, LambdaSchedule):
        return lambda_at(pred, lam)
    return np.asarray(lam, dtype=float)


def _check_pair(pred, latent):
    pred = np.atleast_1d(np.asarray(pred, dtype=float))
    latent = np.atleast_1d(np.asarray(latent, dtype=float))
    check_same_shape('pred', pred, 'latent', latent)
    return pred, latent


def ace_loss(pred, latent, lam, spec):
    """Additive L_ACE summed over entries.

    :param pred:    network predictions, one per entry
    :param latent:  latent pseudo parameters, same shape as ``pred``
    :param lam:     :class:`LambdaSchedule`, or the penalty weights directly
    :param spec:    :class:`~gamepl.utils.numerics.MappingSpec`
    :raises: :exc:`~gamepl.utils.exceptions.DimensionError` on shape mismatch
    """
    pred, latent = _check_pair(pred, latent)
    lam_j = _lambdas(pred, lam)
    u = map_latent(latent, spec)
    return float(np.sum(stable_bce(pred, u) + lam_j * u * (1. - u)))


def ace_loss_exp(pred, latent, lam, spec):
    """Exponential L_ACE summed over entries. Arguments as :func:`ace_loss`."""
    pred, latent = _check_pair(pred, latent)
    lam_j = _lambdas(pred, lam)
    u = map_latent(latent, spec)
    return float(np.sum(np.exp(lam_j * u * (1. - u)) * stable_bce(pred, u)))


def ace_grad(pred, latent, lam, spec):
    """Derivative of the per-entry additive L_ACE term with respect to the
    latent value,

        ((u - pred) / (u(1-u)) + lam (1 - 2u)) F'(latent)

    with ``u`` the clamped mapped value. Vectorized; ``lam`` is the
    per-entry weight (a number or an array), not a schedule.
    """
    u = clamp_prob(map_latent(latent, spec))
    bracket = (u - pred) / (u * (1. - u)) + lam * (1. - 2. * u)
    return bracket * map_latent_derivative(latent, spec)


def ace_grad_exp(pred, latent, lam, spec):
    """Derivative of the per-entry exponential L_ACE term with respect to
    the latent value. Arguments as :func:`ace_grad`."""
    u = clamp_prob(map_latent(latent, spec))
    factor = np.exp(lam * u * (1. - u))
    bracket = lam * (1. - 2. * u) * stable_bce(pred, u) + (u - pred) / (u * (1. - u))
    return factor * bracket * map_latent_derivative(latent, spec)


class PseudoLabelStore(object):
    """Latent pseudo parameters and soft pseudo labels for a set of images.

    :param array latent:        latent values, shape (N, L)
    :param array frozen_mask:   ``True`` for observed (frozen) entries
    :param array frozen_values: label of every frozen entry (1 or 0);
                                ignored elsewhere
    :param spec:                mapping function
    :type spec:                 :class:`~gamepl.utils.numerics.MappingSpec`
    :param list image_ids:      identifiers of the N images (optional)

    The array ``latent`` is updated in place by the training loop;
    :attr:`mapped` is always derived from it.
    """
    def __init__(self, latent, frozen_mask, frozen_values, spec, image_ids=None):
        self.latent = np.asarray(latent, dtype=float)
        if self.latent.ndim != 2:
            raise DimensionError('latent must be a 2D array, got shape {}'.format(self.latent.shape))
        self.frozen_mask = np.asarray(frozen_mask, dtype=bool)
        self.frozen_values = np.asarray(frozen_values, dtype=float)
        check_same_shape('latent', self.latent, 'frozen_mask', self.frozen_mask)
        check_same_shape('latent', self.latent, 'frozen_values', self.frozen_values)
        self.spec = spec
        if image_ids is None:
            image_ids = [str(n) for n in range(self.latent.shape[0])]
        if len(image_ids) != self.latent.shape[0]:
            raise DimensionError('{} image ids for {} images'.format(
                len(image_ids), self.latent.shape[0]))
        self.image_ids = list(image_ids)

    @classmethod
    def from_mask(cls, mask, spec, image_ids=None):
        """Initial store for an observation mask.

        Observed positives are frozen at 1, observed negatives at 0 and every
        unobserved entry starts at the latent value mapped to 0.5.
        """
        mask = np.asarray(mask)
        frozen = mask != const.UNOBSERVED
        values = np.where(mask == const.OBSERVED_POSITIVE, 1., 0.)
        lo, hi = spec.latent_bounds
        latent = np.full(mask.shape, spec.latent_center, dtype=float)
        latent[mask == const.OBSERVED_POSITIVE] = hi
        latent[mask == const.OBSERVED_NEGATIVE] = lo
        return cls(latent, frozen, values, spec, image_ids=image_ids)

    @property
    def shape(self):
        return self.latent.shape

    @property
    def mapped(self):
        """Soft pseudo labels, shape (N, L). Frozen entries hold their label."""
        return np.where(self.frozen_mask, self.frozen_values, map_latent(self.latent, self.spec))

    @property
    def unobserved(self):
        return ~self.frozen_mask

    def copy(self):
        return PseudoLabelStore(self.latent.copy(), self.frozen_mask.copy(),
                                self.frozen_values.copy(), self.spec,
                                image_ids=self.image_ids)

    def confidence(self):
        """Mean of |2u - 1| over unobserved entries (NaN if there are none)."""
        free = self.unobserved
        if not free.any():
            return float('nan')
        return float(np.mean(np.abs(2. * self.mapped[free] - 1.)))

    def save(self, path):
        """Write the store as CSV: a header line
        ``#gamepl-pseudo-v1,N,L,kind,sigma``, a column line, then one row per
        entry with image id, class index, latent, mapped value and frozen flag.
        Floats are written with 17 significant digits (lossless)."""
        n, L = self.shape
        mapped = self.mapped
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow([const.pseudo_magic, n, L, self.spec.kind, repr(self.spec.sigma)])
            writer.writerow(['image_id', 'class_index', 'latent', 'mapped', 'frozen'])
            for i in range(n):
                for j in range(L):
                    writer.writerow([self.image_ids[i], j,
                                     '%.17g' % self.latent[i, j],
                                     '%.17g' % mapped[i, j],
                                     int(self.frozen_mask[i, j])])

    @classmethod
    def load(cls, path):
        """Read a store written by :meth:`save`.

        :raises: :exc:`~gamepl.utils.exceptions.DatasetFormatError`
                 naming the offending line
        """
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
        if not rows or rows[0][:1] != [const.pseudo_magic] or len(rows[0]) != 5:
            raise DatasetFormatError('expected header {},N,L,kind,sigma'.format(
                const.pseudo_magic), lineno=1)
        try:
            n, L = int(rows[0][1]), int(rows[0][2])
            spec = MappingSpec(rows[0][3], float(rows[0][4]))
        except ValueError as err:
            raise DatasetFormatError(str(err), lineno=1)
        body = rows[2:]
        if len(body) != n * L:
            raise DatasetFormatError('expected {} entries, found {}'.format(n * L, len(body)))
        latent = np.empty((n, L))
        mapped = np.empty((n, L))
        frozen = np.zeros((n, L), dtype=bool)
        ids = [None] * n
        for k, row in enumerate(body):
            lineno = k + 3
            i, j = divmod(k, L)
            try:
                image_id, cls_index, lat, mp, fz = row
                if int(cls_index) != j:
                    raise ValueError('class index {} out of order'.format(cls_index))
                latent[i, j] = float(lat)
                mapped[i, j] = float(mp)
                frozen[i, j] = {'0': False, '1': True}[fz]
            except (ValueError, KeyError) as err:
                raise DatasetFormatError('bad entry {!r}: {}'.format(row, err), lineno=lineno)
            if j == 0:
                ids[i] = image_id
        values = np.where(frozen, mapped, 0.)
        return cls(latent, frozen, values, spec, image_ids=ids)


def update_pseudo(store, preds, lam, spec=None, eta_u=0.1, steps=1, rows=None,
                  variant='additive', tol=None):
    """Gradient steps of the pseudo-label player on every non-frozen entry.

    Each of the ``steps`` iterations is

        latent <- clamp(latent - eta_u * grad)

    with the L_ACE gradient of the chosen ``variant``. The penalty weights
    are derived from ``preds`` once and held fixed during the iterations.

    :param store:       current pseudo labels (not modified)
    :type store:        :class:`PseudoLabelStore`
    :param array preds: network predictions for ``rows`` of the store
                        (all rows if ``rows`` is ``None``), shape (n, L)
    :param lam:         :class:`LambdaSchedule` or per-entry weights
    :param spec:        mapping function [default: ``store.spec``]
    :param float eta_u: step size, >= 0 [default: 0.1]
    :param int steps:   number of iterations, >= 1 [default: 1]
    :param rows:        indices of the images to update (optional)
    :param str variant: ``'additive'`` or ``'exponential'``
    :param float tol:   stop early once the largest latent change of an
                        iteration is below ``tol`` (optional)
    :returns:           a new :class:`PseudoLabelStore`
    :raises: :exc:`~gamepl.utils.exceptions.DimensionError`
                        if ``preds`` does not match the selected rows
    """
    if spec is None:
        spec = store.spec
    if variant not in ACE_VARIANTS:
        raise ValueError('variant must be one of {}, got {!r}'.format(ACE_VARIANTS, variant))
    if eta_u < 0.:
        raise ValueError('eta_u must be non-negative, got {}'.format(eta_u))
    if int(steps) != steps or steps < 1:
        raise ValueError('steps must be a positive integer, got {}'.format(steps))
    preds = np.asarray(preds, dtype=float)
    index = np.arange(store.shape[0]) if rows is None else np.asarray(rows, dtype=int)
    expected = (len(index), store.shape[1])
    if preds.shape != expected:
        raise DimensionError('predictions have shape {}, expected {}'.format(preds.shape, expected))
    new = store.copy()
    free = ~new.frozen_mask[index]
    if not free.any():
        return new
    grad_fn = ace_grad if variant == 'additive' else ace_grad_exp
    lam_j = np.broadcast_to(_lambdas(preds, lam), preds.shape)
    latent = new.latent[index]
    for n in range(int(steps)):
        grad = grad_fn(preds, latent, lam_j, spec)
        updated = np.where(free, clamp_latent(latent - eta_u * grad, spec), latent)
        change = np.max(np.abs(updated - latent))
        latent = updated
        if tol is not None and change < tol:
            break
    new.latent[index] = latent
    return new


def solve_pseudo_exact(pred, lam, spec, variant='additive', num=20001):
    """Global minimizer (latent value) of a single L_ACE term.

    Dense grid search over the latent clamp range followed by a bounded
    Brent refinement between the neighbours of the best grid point.
    Used as a reference solution for the iterative player.

    :param float pred:  network prediction
    :param float lam:   penalty weight of this entry
    :param spec:        mapping function
    :param int num:     number of grid points [default: 20001]
    """
    loss_fn = ace_loss if variant == 'additive' else ace_loss_exp

    def objective(y):
        return loss_fn([pred], [y], lam, spec)

    lo, hi = spec.latent_bounds
    grid = np.linspace(lo, hi, int(num))
    u = map_latent(grid, spec)
    if variant == 'additive':
        values = stable_bce(pred, u) + lam * u * (1. - u)
    else:
        values = np.exp(lam * u * (1. - u)) * stable_bce(pred, u)
    k = int(np.argmin(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(objective, bounds=(a, b), method='bounded',
                          options={'xatol': 1e-12})
    best = grid[k]
    if res.success and objective(res.x) < objective(best):
        best = float(res.x)
    return float(best)


class PseudoLabelPlayer(ImplicitProcess):
    """The pseudo-label player as an implicit process.

    At each step it evaluates the classifier (whose parameters already
    include this step's network update) on the current mini-batch and
    returns the latent values after its best-response moves.

    **Initialization parameters** \n

    :param store:           pseudo labels; ``store.latent`` becomes the
                            ``latent`` state variable (shared, not copied)
    :param model:           the classifier played against
    :type model:            :class:`~gamepl.player.classifier.ClassifierModel`
    :param array features:  features of all N images of the store
    :param lam:             penalty weight schedule
    :type lam:              :class:`LambdaSchedule`
    :param float eta_u:     step size [default: 0.1]
    :param int pseudo_steps: gradient steps per mini-batch [default: 1]
    :param str ace_variant: ``'additive'`` or ``'exponential'``
    :param str mode:        ``'step'`` (``pseudo_steps`` iterations) or
                            ``'full'`` (iterate to a fixed point)
    :param int full_solve_steps: iteration cap for ``mode='full'`` [default: 500]
    :param float full_solve_tol: stopping tolerance for ``mode='full'`` [default: 1e-8]

    The current mini-batch is the input ``batch`` (row indices, or ``None``
    for all rows), set by the parent process before every step.
    """
    dims = {'latent': ('image', 'class')}

    def __init__(self, store, model, features, lam, eta_u=0.1, pseudo_steps=1,
                 ace_variant='additive', mode='step', full_solve_steps=500,
                 full_solve_tol=1e-8, **kwargs):
        super(PseudoLabelPlayer, self).__init__(state={'latent': store.latent}, **kwargs)
        self.time_type = 'implicit'
        if mode not in ('step', 'full'):
            raise ValueError("mode must be 'step' or 'full', got {!r}".format(mode))
        self.param.update({'eta_u': eta_u, 'pseudo_steps': pseudo_steps,
                           'ace_variant': ace_variant, 'mode': mode,
                           'full_solve_steps': full_solve_steps,
                           'full_solve_tol': full_solve_tol})
        self.store = store
        self.lam = lam
        self.add_input('model', model)
        self.add_input('features', np.asarray(features, dtype=float))
        self.add_input('batch', None)
        self.add_diagnostic('pseudo_confidence', store.confidence())

    def solve(self, rows=None):
        """New store after this player's move on ``rows`` (all rows by default)."""
        p = self.param
        X = self.features if rows is None else self.features[rows]
        preds = forward(self.model, X)
        if p['mode'] == 'step':
            steps, tol = p['pseudo_steps'], None
        else:
            steps, tol = p['full_solve_steps'], p['full_solve_tol']
        return update_pseudo(self.store, preds, self.lam, self.store.spec,
                             eta_u=p['eta_u'], steps=steps, rows=rows,
                             variant=p['ace_variant'], tol=tol)

    def _implicit_solver(self):
        return {'latent': self.solve(self.batch).latent}

    def _update_diagnostics(self, newstate):
        free = self.store.unobserved
        if free.any():
            mapped = map_latent(newstate['latent'][free], self.store.spec)
            self.pseudo_confidence = float(np.mean(np.abs(2. * mapped - 1.)))
