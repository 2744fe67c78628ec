r"""The network player: a small classifier with per-class sigmoid outputs.

Two architectures are available:

- ``'linear'``: :math:`\hat{y} = s(W x + b)`
- ``'mlp'``: :math:`\hat{y} = s(W \tanh(W_h x + b_h) + b)`

where :math:`s` is the logistic sigmoid applied per class. Forward and
backward passes are written out by hand with numpy. Gradients flowing in
are with respect to the predictions :math:`\hat{y}` (after the sigmoid),
so the losses do not need to know anything about the classifier.

:Example:

    ::

        >>> import numpy as np
        >>> from gamepl.player.classifier import init_model, forward
        >>> model = init_model('linear', input_dim=4, num_classes=3, seed=0)
        >>> model.params['W'].shape
        (3, 4)
        >>> forward(model, np.zeros((2, 4)))
        array([[0.5, 0.5, 0.5],
               [0.5, 0.5, 0.5]])
"""
import json
import numpy as np
from scipy.special import expit
from gamepl.utils import constants as const
from gamepl.utils.exceptions import DimensionError, DatasetFormatError
from gamepl.process.time_dependent_process import TimeDependentProcess
from gamepl.losses.network_losses import evaluate_loss, Regularizer


ARCHS = ('linear', 'mlp')


class ClassifierModel(object):
    """Architecture and parameters of a classifier.

    :param str arch:        ``'linear'`` or ``'mlp'``
    :param int input_dim:   feature dimension
    :param int num_classes: number of classes L
    :param dict params:     parameter arrays (see :attr:`param_names`)
    :param int hidden_dim:  width of the hidden layer (``'mlp'`` only)

    :ivar dict velocity:    momentum buffers, one per parameter
    """
    def __init__(self, arch, input_dim, num_classes, params, hidden_dim=None):
        if arch not in ARCHS:
            raise ValueError('arch must be one of {}, got {!r}'.format(ARCHS, arch))
        self.arch = arch
        self.input_dim = int(input_dim)
        self.num_classes = int(num_classes)
        self.hidden_dim = int(hidden_dim) if arch == 'mlp' else None
        self.params = {name: np.asarray(params[name], dtype=float) for name in self.param_names}
        for name, shape in self.param_shapes.items():
            if self.params[name].shape != shape:
                raise DimensionError('parameter {} has shape {}, expected {}'.format(
                    name, self.params[name].shape, shape))
        self.velocity = {name: np.zeros_like(value) for name, value in self.params.items()}

    @property
    def param_names(self):
        if self.arch == 'linear':
            return ['W', 'b']
        return ['W_hidden', 'b_hidden', 'W', 'b']

    @property
    def param_shapes(self):
        L, D = self.num_classes, self.input_dim
        if self.arch == 'linear':
            return {'W': (L, D), 'b': (L,)}
        H = self.hidden_dim
        return {'W_hidden': (H, D), 'b_hidden': (H,), 'W': (L, H), 'b': (L,)}

    @property
    def num_params(self):
        return int(sum(value.size for value in self.params.values()))

    def flat_params(self):
        """All parameters concatenated into one vector."""
        return np.concatenate([self.params[name].ravel() for name in self.param_names])

    def copy(self):
        new = ClassifierModel(self.arch, self.input_dim, self.num_classes,
                              {k: v.copy() for k, v in self.params.items()},
                              hidden_dim=self.hidden_dim)
        new.velocity = {k: v.copy() for k, v in self.velocity.items()}
        return new

    def __repr__(self):
        return 'ClassifierModel(arch={!r}, input_dim={}, num_classes={}, hidden_dim={})'.format(
            self.arch, self.input_dim, self.num_classes, self.hidden_dim)


def init_model(arch='linear', input_dim=1, num_classes=1, seed=0, hidden_dim=32):
    """A freshly initialized classifier.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with
    ``numpy.random.default_rng(seed)``, hidden layer first; biases are zero.
    The same seed always gives a bitwise-identical model.

    :raises: :exc:`ValueError` for dimensions < 1 or an unknown arch
    """
    for label, value in (('input_dim', input_dim), ('num_classes', num_classes),
                         ('hidden_dim', hidden_dim)):
        if int(value) != value or value < 1:
            raise ValueError('{} must be a positive integer, got {}'.format(label, value))
    if arch not in ARCHS:
        raise ValueError('arch must be one of {}, got {!r}'.format(ARCHS, arch))
    rng = np.random.default_rng(seed)

    def uniform(fan_out, fan_in):
        bound = 1. / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    if arch == 'linear':
        params = {'W': uniform(num_classes, input_dim), 'b': np.zeros(num_classes)}
        return ClassifierModel(arch, input_dim, num_classes, params)
    params = {'W_hidden': uniform(hidden_dim, input_dim),
              'b_hidden': np.zeros(hidden_dim),
              'W': uniform(num_classes, hidden_dim),
              'b': np.zeros(num_classes)}
    return ClassifierModel(arch, input_dim, num_classes, params, hidden_dim=hidden_dim)


def _check_features(model, features):
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise DimensionError('features have shape {}, expected (batch, {})'.format(
            features.shape, model.input_dim))
    return features


def _hidden(model, features):
    if model.arch == 'linear':
        return features
    return np.tanh(features @ model.params['W_hidden'].T + model.params['b_hidden'])


def forward(model, features):
    """Per-class probabilities, shape (batch, L), every entry in (0, 1).

    :raises: :exc:`~gamepl.utils.exceptions.DimensionError`
             if the feature width differs from ``model.input_dim``
    """
    features = _check_features(model, features)
    h = _hidden(model, features)
    return expit(h @ model.params['W'].T + model.params['b'])


def backward(model, features, upstream):
    """Chain-rule gradients of a scalar loss.

    :param array upstream:  derivative of the loss with respect to the
                            predictions, shape (batch, L)
    :returns:   dict of gradients keyed like ``model.params`` (summed over
                the batch), plus ``'input'``: derivative with respect to
                the features, shape (batch, input_dim)
    """
    features = _check_features(model, features)
    upstream = np.asarray(upstream, dtype=float)
    expected = (features.shape[0], model.num_classes)
    if upstream.shape != expected:
        raise DimensionError('upstream gradient has shape {}, expected {}'.format(
            upstream.shape, expected))
    h = _hidden(model, features)
    pred = expit(h @ model.params['W'].T + model.params['b'])
    dz = upstream * pred * (1. - pred)
    grads = {'W': dz.T @ h, 'b': dz.sum(axis=0)}
    dh = dz @ model.params['W']
    if model.arch == 'linear':
        grads['input'] = dh
        return grads
    da = dh * (1. - h**2)
    grads['W_hidden'] = da.T @ features
    grads['b_hidden'] = da.sum(axis=0)
    grads['input'] = da @ model.params['W_hidden']
    return grads


def momentum_increments(model, grads, lr, momentum=0., frozen=()):
    """Advance the momentum buffers of ``model`` and return the parameter
    increments ``-lr * velocity``. Parameters named in ``frozen`` get a
    zero increment and keep their buffers.

    :raises: :exc:`ValueError` for negative ``lr`` or ``momentum``
    """
    if lr < 0.:
        raise ValueError('learning rate must be non-negative, got {}'.format(lr))
    if momentum < 0.:
        raise ValueError('momentum must be non-negative, got {}'.format(momentum))
    increments = {}
    for name in model.param_names:
        if name in frozen:
            increments[name] = np.zeros_like(model.params[name])
            continue
        model.velocity[name] = momentum * model.velocity[name] + grads[name]
        increments[name] = -lr * model.velocity[name]
    return increments


def sgd_step(model, grads, lr, momentum=0., frozen=()):
    """One gradient step with momentum, in place:
    ``v <- momentum * v + grad``, ``theta <- theta - lr * v``.
    With ``momentum=0`` this is plain gradient descent.

    :returns:   the updated model
    """
    for name, inc in momentum_increments(model, grads, lr, momentum, frozen).items():
        model.params[name] += inc
    return model


def save_model(model, path):
    """Write a JSON checkpoint. Floats are written with ``repr`` precision,
    so :func:`load_model` restores the parameters bit for bit."""
    doc = {'format': const.model_format,
           'version': const.model_format_version,
           'arch': model.arch,
           'input_dim': model.input_dim,
           'num_classes': model.num_classes,
           'hidden_dim': model.hidden_dim,
           'params': {name: model.params[name].tolist() for name in model.param_names}}
    with open(path, 'w') as f:
        json.dump(doc, f)


def load_model(path):
    """Read a checkpoint written by :func:`save_model`.

    :raises: :exc:`~gamepl.utils.exceptions.DatasetFormatError` for a file
             that is not a gamepl model checkpoint
    """
    with open(path) as f:
        try:
            doc = json.load(f)
        except ValueError as err:
            raise DatasetFormatError('not a JSON model checkpoint: {}'.format(err))
    if not isinstance(doc, dict) or doc.get('format') != const.model_format:
        raise DatasetFormatError('not a gamepl model checkpoint')
    if doc.get('version') != const.model_format_version:
        raise DatasetFormatError('unsupported checkpoint version {!r}'.format(doc.get('version')))
    try:
        return ClassifierModel(doc['arch'], doc['input_dim'], doc['num_classes'],
                               doc['params'], hidden_dim=doc.get('hidden_dim'))
    except (KeyError, ValueError) as err:
        raise DatasetFormatError('invalid model checkpoint: {}'.format(err))


class NetworkPlayer(TimeDependentProcess):
    """The network player as an explicit process.

    Each step takes one momentum gradient step on the current mini-batch.
    The batch-averaged gradient of the configured objective is used; the
    learning rate decays geometrically per epoch,
    ``lr * lr_decay ** epochs_elapsed``.

    **Initialization parameters** \n

    :param model:           the classifier; its parameter arrays become the
                            state variables of this process (shared)
    :param array features:  features of the N training images
    :param array mask:      observation mask of the N training images
    :param str loss:        ``'g2netpl'`` or one of the baselines
    :param store:           pseudo labels (``'g2netpl'`` only)
    :param array xi:        scheduler weights, shape (N, L), read at every
                            step (``'g2netpl'`` only)
    :param float lr:        initial learning rate [default: 0.01]
    :param float lr_decay:  factor per epoch [default: 1.0]
    :param float momentum:  [default: 0.9]
    :param reg:             expected-positives regularizer
    :param float ls_epsilon: label smoothing of the ``-ls`` baselines

    **Diagnostics** \n

    :ivar float batch_loss: objective on the last mini-batch
    :ivar float learning_rate: learning rate used in the last step
    """
    dims = {'W': ('class', 'feature'), 'b': ('class',),
            'W_hidden': ('hidden', 'feature'), 'b_hidden': ('hidden',)}

    def __init__(self, model, features, mask, loss='g2netpl', store=None, xi=None,
                 lr=0.01, lr_decay=1.0, momentum=0.9, reg=Regularizer(),
                 ls_epsilon=0.1, **kwargs):
        super(NetworkPlayer, self).__init__(state=model.params, **kwargs)
        self.time_type = 'explicit'
        if loss == 'g2netpl' and (store is None or xi is None):
            raise ValueError("loss 'g2netpl' needs a pseudo-label store and scheduler weights")
        if model.arch == 'mlp':
            self.dims = dict(self.dims, W=('class', 'hidden'))
        self.param.update({'loss': loss, 'lr': lr, 'lr_decay': lr_decay,
                           'momentum': momentum, 'ls_epsilon': ls_epsilon})
        self.reg = reg
        self.frozen = ()
        self.model = model
        self.add_input('features', np.asarray(features, dtype=float))
        self.add_input('mask', np.asarray(mask))
        self.add_input('store', store)
        self.add_input('xi', xi)
        self.add_input('batch', None)
        self.add_diagnostic('batch_loss', 0.)
        self.add_diagnostic('learning_rate', lr)

    def freeze(self, names=()):
        """Keep the named parameters fixed (e.g. the hidden layer while only
        the final layer is trained)."""
        self.frozen = tuple(names)

    def objective(self, preds, rows):
        """:class:`~gamepl.losses.network_losses.LossReport` for predictions
        of the training images ``rows``."""
        p = self.param
        pseudo = xi = None
        if p['loss'] == 'g2netpl':
            pseudo = self.store.mapped[rows]
            xi = self.xi[rows]
        return evaluate_loss(p['loss'], preds, self.mask[rows], pseudo=pseudo,
                             xi_weights=xi, reg=self.reg, ls_epsilon=p['ls_epsilon'])

    def _compute(self):
        rows = np.arange(self.features.shape[0]) if self.batch is None else self.batch
        X = self.features[rows]
        preds = forward(self.model, X)
        report = self.objective(preds, rows)
        grads = backward(self.model, X, report.grad / len(rows))
        p = self.param
        self.learning_rate = p['lr'] * p['lr_decay'] ** self.time['epochs_elapsed']
        self.batch_loss = report.total
        return momentum_increments(self.model, grads, self.learning_rate,
                                   p['momentum'], self.frozen)
