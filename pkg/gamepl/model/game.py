r"""Ready-made partial-label training models.

``G2NetPL`` plays the two-player game on the training split of a
:class:`~gamepl.data.dataset.PartialDataset`:

- ``'scheduler'``: diagnostic process, recomputes the weight of every
  unobserved loss term from the pseudo labels once per epoch
- ``'network'``: explicit process, one momentum gradient step of the
  classifier on the game objective per mini-batch
- ``'pseudo'``: implicit process, evaluates the updated classifier on the
  same mini-batch and moves the pseudo labels of its images

One step of the model is one mini-batch; at the end of every epoch a
:class:`~gamepl.evaluation.traces.TraceRecord` is appended to
``model.traces`` and the batches are reshuffled.

``BaselineModel`` trains the same classifier with one of the baseline
losses and has only the ``'network'`` subprocess.

:Example:

    ::

        >>> import gamepl
        >>> data = gamepl.gen_synthetic(gamepl.SyntheticSpec(num_train=200, num_test=100), seed=7)
        >>> data = gamepl.apply_setting(data, 'fspl', seed=7)
        >>> game = gamepl.G2NetPL(data, gamepl.TrainConfig(epochs=5))
        >>> print(game)
        gamepl Process of type <class 'gamepl.model.game.G2NetPL'>.
        State variables and shapes:
          W: (8, 16)
          b: (8,)
          latent: (200, 8)
        The subprocess tree:
        G2NetPL: <class 'gamepl.model.game.G2NetPL'>
           scheduler: <class 'gamepl.player.scheduler.ConfidenceScheduler'>
           network: <class 'gamepl.player.classifier.NetworkPlayer'>
           pseudo: <class 'gamepl.player.pseudo_label.PseudoLabelPlayer'>

        >>> game.run()
"""
import math
import warnings
import numpy as np
from gamepl.utils import constants as const
from gamepl.utils.attrdict import AttrDict
from gamepl.utils.numerics import MappingSpec, MAPPING_KINDS, rms
from gamepl.utils.exceptions import DivergenceError, UndefinedMetricError
from gamepl.process.time_dependent_process import TimeDependentProcess
from gamepl.player.classifier import init_model, forward, NetworkPlayer, ARCHS
from gamepl.player.pseudo_label import (PseudoLabelStore, PseudoLabelPlayer,
                                        LambdaSchedule, ACE_VARIANTS)
from gamepl.player.scheduler import ConfidenceScheduler, SchedulerParams
from gamepl.losses.network_losses import evaluate_loss, Regularizer, LOSSES
from gamepl.evaluation.metrics import map_score, pseudo_label_quality
from gamepl.evaluation.traces import TraceRecord


_DEFAULTS = [
    ('loss', 'g2netpl'),
    ('mapping', 'gaussian_cdf'),
    ('sigma', 0.3),
    ('lambda_max', 1.0),
    ('lambda_width', 0.2),
    ('beta', 0.7),
    ('gamma', 1.0),
    ('ace_variant', 'additive'),
    ('use_scheduler', True),
    ('lr', 0.01),
    ('lr_decay', 0.8),
    ('momentum', 0.9),
    ('eta_u', 0.1),
    ('pseudo_steps', 1),
    ('pseudo_mode', 'step'),
    ('full_solve_steps', 500),
    ('end_of_epoch_pass', False),
    ('epochs', 10),
    ('batch_size', 16),
    ('expected_positives', 1.0),
    ('reg_weight', 0.1),
    ('ls_epsilon', 0.1),
    ('arch', 'linear'),
    ('hidden_dim', 32),
    ('training_mode', 'end_to_end'),
    ('phase1_epochs', 5),
    ('tol', 1e-4),
    ('patience', 2),
    ('stop_on_convergence', True),
    ('divergence_factor', 10.0),
    ('seed', 0),
]
CONFIG_KEYS = tuple(key for key, value in _DEFAULTS)

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def _coerce(key, value, default):
    """Convert ``value`` (possibly a string from a file or the command line)
    to the type of the default."""
    if isinstance(default, bool):
        if isinstance(value, str):
            if value.strip().lower() in _TRUE:
                return True
            if value.strip().lower() in _FALSE:
                return False
            raise ValueError('{}: expected a boolean, got {!r}'.format(key, value))
        return bool(value)
    if isinstance(default, int):
        try:
            return int(str(value).strip())
        except ValueError:
            pass
        number = float(value)
        if number != int(number):
            raise ValueError('{}: expected an integer, got {!r}'.format(key, value))
        return int(number)
    if isinstance(default, float):
        return float(value)
    return str(value).strip()


class TrainConfig(AttrDict):
    """All hyperparameters of a training run, defaults materialized.

    Keys are reachable as attributes (``config.sigma``). Construct with
    keyword overrides; values given as strings are converted to the type
    of the default, so config-file and command-line values can be passed
    straight in.

    :raises: :exc:`ValueError` for unknown keys or invalid values

    ``gamma > 1`` is accepted with a warning.
    """
    def __init__(self, **overrides):
        unknown = sorted(set(overrides) - set(CONFIG_KEYS))
        if unknown:
            raise ValueError('unknown configuration key(s): {}'.format(', '.join(unknown)))
        super(TrainConfig, self).__init__()
        for key, default in _DEFAULTS:
            self[key] = _coerce(key, overrides.get(key, default), default)
        self._validate()

    @classmethod
    def from_dict(cls, values):
        return cls(**dict(values))

    def as_dict(self):
        """Plain dict in canonical key order."""
        return {key: self[key] for key in CONFIG_KEYS}

    def replace(self, **changes):
        """New config with some values changed."""
        return TrainConfig(**dict(self.as_dict(), **changes))

    def _validate(self):
        def require(ok, message):
            if not ok:
                raise ValueError(message)

        require(self.loss in LOSSES, 'loss must be one of {}'.format(LOSSES))
        require(self.mapping in MAPPING_KINDS, 'mapping must be one of {}'.format(MAPPING_KINDS))
        require(self.ace_variant in ACE_VARIANTS, 'ace_variant must be one of {}'.format(ACE_VARIANTS))
        require(self.pseudo_mode in ('step', 'full'), "pseudo_mode must be 'step' or 'full'")
        require(self.arch in ARCHS, 'arch must be one of {}'.format(ARCHS))
        require(self.training_mode in ('end_to_end', 'linear_init'),
                "training_mode must be 'end_to_end' or 'linear_init'")
        for key in ('sigma', 'lambda_max', 'lambda_width', 'gamma', 'lr_decay',
                    'divergence_factor'):
            require(self[key] > 0., '{} must be positive'.format(key))
        for key in ('lr', 'eta_u', 'expected_positives', 'reg_weight', 'tol'):
            require(self[key] >= 0., '{} must be non-negative'.format(key))
        for key in ('pseudo_steps', 'full_solve_steps', 'epochs', 'batch_size',
                    'hidden_dim', 'patience'):
            require(self[key] >= 1, '{} must be at least 1'.format(key))
        require(0. <= self.beta <= 1., 'beta must lie in [0, 1]')
        require(0. <= self.momentum < 1., 'momentum must lie in [0, 1)')
        require(0. <= self.ls_epsilon < 0.5, 'ls_epsilon must lie in [0, 0.5)')
        require(self.phase1_epochs >= 0, 'phase1_epochs must be non-negative')
        require(self.seed >= 0, 'seed must be non-negative')
        if self.gamma > 1.:
            warnings.warn('gamma = {} > 1 gives negative scheduler weights for '
                          'uncertain pseudo labels.'.format(self.gamma))

    def mapping_spec(self):
        return MappingSpec(self.mapping, self.sigma)

    def lambda_schedule(self):
        return LambdaSchedule(self.lambda_max, self.lambda_width)

    def scheduler_params(self):
        with warnings.catch_warnings():
            #  already warned about gamma at construction
            warnings.simplefilter('ignore')
            return SchedulerParams(self.beta, self.gamma, self.epochs)

    def regularizer(self):
        return Regularizer(self.expected_positives, self.reg_weight)


def nash_residual(current, previous=None):
    """Largest change of either player over the epoch of ``current``:
    ``max(pseudo_delta_norm, theta_delta_norm)``.

    :param current:     trace record of epoch t
    :param previous:    trace record of epoch t-1 (optional; used to check
                        that the two are consecutive)
    :raises: :exc:`ValueError` if the records are not consecutive epochs
    """
    if previous is not None and current.epoch != previous.epoch + 1:
        raise ValueError('trace records of epochs {} and {} are not consecutive'.format(
            previous.epoch, current.epoch))
    return float(max(current.pseudo_delta_norm, current.theta_delta_norm))


class _PartialLabelModel(TimeDependentProcess):
    """Common machinery of the ready-made models: classifier, batching,
    per-epoch traces, divergence and convergence checks."""
    def __init__(self, dataset, config=None, name=None, verbose=False, **kwargs):
        self.config = TrainConfig() if config is None else config
        c = self.config
        self.dataset = dataset
        train = dataset.train
        if train.num_images == 0:
            raise ValueError('the training split is empty')
        self._train = train
        self._test = dataset.test
        self.rng = np.random.default_rng(c.seed)
        self.model = init_model(c.arch, train.input_dim, train.num_classes,
                                seed=c.seed, hidden_dim=c.hidden_dim)
        self.store = self._make_store()
        state = dict(self.model.params)
        if self.store is not None:
            state['latent'] = self.store.latent
        steps = int(math.ceil(train.num_images / c.batch_size))
        super(_PartialLabelModel, self).__init__(name=name or type(self).__name__,
                                                 state=state, steps_per_epoch=steps,
                                                 verbose=verbose, **kwargs)
        self._add_players(steps)
        self.dims = dict(self.subprocess['network'].dims, latent=('image', 'class'),
                         xi=('image', 'class'))
        self.traces = []
        for diag in ('loss_total', 'loss_obs', 'loss_unobs', 'nash_residual',
                     'map_test', 'pseudo_map'):
            self.add_diagnostic(diag, float('nan'))
        self.add_diagnostic('converged_epoch', None)
        self._below_tol = 0
        if c.training_mode == 'linear_init' and c.phase1_epochs > 0 and c.arch == 'mlp':
            self.subprocess['network'].freeze(['W_hidden', 'b_hidden'])
        self._order = self.rng.permutation(train.num_images)
        self._snapshot()
        self.reference_loss = self._reference_loss()

    def _make_store(self):
        return None

    def _add_players(self, steps):
        raise NotImplementedError

    def _network(self, steps, **extra):
        c = self.config
        return NetworkPlayer(self.model, self._train.features, self._train.mask,
                             loss=c.loss, lr=c.lr, lr_decay=c.lr_decay,
                             momentum=c.momentum, reg=c.regularizer(),
                             ls_epsilon=c.ls_epsilon, steps_per_epoch=steps,
                             name='network', **extra)

    def _snapshot(self):
        self._prev_theta = self.model.flat_params()
        self._prev_pseudo = None if self.store is None else self.store.mapped

    def _reference_loss(self):
        """Loss of the untrained state with unit weight on every
        unobserved term; the divergence guard compares against it."""
        preds = forward(self.model, self._train.features)
        network = self.subprocess['network']
        pseudo = xi = None
        if self.store is not None:
            pseudo = self.store.mapped
            xi = np.ones(self.store.shape)
        return evaluate_loss(self.config.loss, preds, self._train.mask, pseudo=pseudo,
                             xi_weights=xi, reg=network.reg,
                             ls_epsilon=self.config.ls_epsilon).total

    def _set_batch(self):
        bs = self.config.batch_size
        b = self.time['batch_index']
        rows = self._order[b * bs:(b + 1) * bs]
        for proc in self.subprocess.values():
            if 'batch' in proc._input_vars:
                proc.batch = rows

    def compute(self):
        self._set_batch()
        return super(_PartialLabelModel, self).compute()

    def predict(self, features):
        """Classifier probabilities for ``features``."""
        return forward(self.model, features)

    def _map_test(self):
        if self._test.num_images == 0:
            return float('nan')
        try:
            return map_score(self.predict(self._test.features), self._test.ground_truth).map
        except UndefinedMetricError:
            return float('nan')

    def _pseudo_stats(self):
        """(confidence, delta norm, pseudo mAP) of the current pseudo labels."""
        return float('nan'), 0., float('nan')

    def _record(self, epoch):
        preds = self.predict(self._train.features)
        report = self.subprocess['network'].objective(preds, np.arange(self._train.num_images))
        confidence, pseudo_delta, pseudo_map = self._pseudo_stats()
        theta = self.model.flat_params()
        return TraceRecord(epoch=epoch,
                           loss_total=float(report.total),
                           loss_obs=float(report.obs_part),
                           loss_unobs=float(report.unobs_part),
                           pseudo_confidence_mean=confidence,
                           pseudo_delta_norm=pseudo_delta,
                           theta_delta_norm=rms(theta - self._prev_theta),
                           map_test=self._map_test(),
                           pseudo_map=pseudo_map)

    def _end_of_epoch_pass(self):
        pass

    def _do_new_epoch(self):
        super(_PartialLabelModel, self)._do_new_epoch()
        c = self.config
        epoch = self.time['epochs_elapsed']
        self._end_of_epoch_pass()
        record = self._record(epoch)
        previous = self.traces[-1] if self.traces else None
        self.traces.append(record)
        self._snapshot()
        self.loss_total = record.loss_total
        self.loss_obs = record.loss_obs
        self.loss_unobs = record.loss_unobs
        self.map_test = record.map_test
        self.pseudo_map = record.pseudo_map
        self.nash_residual = nash_residual(record, previous)
        if self.verbose:
            print('epoch {}: loss {:.6g} (obs {:.6g}, unobs {:.6g}), residual {:.3g}, '
                  'test mAP {:.4f}'.format(epoch, record.loss_total, record.loss_obs,
                                           record.loss_unobs, self.nash_residual,
                                           record.map_test))
        if (not np.isfinite(record.loss_total) or
                (self.reference_loss > 0. and
                 record.loss_total > c.divergence_factor * self.reference_loss)):
            raise DivergenceError(epoch, record.loss_total, self.reference_loss)
        if self.nash_residual < c.tol:
            self._below_tol += 1
        else:
            self._below_tol = 0
        if self._below_tol >= c.patience and self.converged_epoch is None:
            self.converged_epoch = epoch
        if c.training_mode == 'linear_init' and epoch == c.phase1_epochs:
            self.subprocess['network'].freeze(())
        self._order = self.rng.permutation(self._train.num_images)

    def _convergence_residual(self, old_state):
        return self.nash_residual

    def run(self):
        """Train for ``config.epochs`` epochs, stopping early at convergence
        if ``config.stop_on_convergence``.

        :returns:   the trace records of all epochs
        """
        c = self.config
        if c.stop_on_convergence:
            self.integrate_converge(crit=c.tol, patience=c.patience,
                                    max_epochs=c.epochs, verbose=self.verbose)
        else:
            self.integrate_epochs(c.epochs, verbose=self.verbose)
        return self.traces

    def integrate_epochs(self, epochs=1, verbose=None):
        super(_PartialLabelModel, self).integrate_epochs(
            epochs, verbose=self.verbose if verbose is None else verbose)


class G2NetPL(_PartialLabelModel):
    """The two-player partial-label game.

    **Initialization parameters** \n

    :param dataset:     masked data; only the training split is used for
                        learning, the test split for ``map_test``
    :type dataset:      :class:`~gamepl.data.dataset.PartialDataset`
    :param config:      hyperparameters [default: ``TrainConfig()``]
    :type config:       :class:`TrainConfig`
    :param bool verbose: print a line per epoch [default: False]

    **Object attributes** \n

    :ivar model:        the classifier (network player's strategy)
    :ivar store:        the pseudo labels (pseudo-label player's strategy)
    :ivar list traces:  one :class:`~gamepl.evaluation.traces.TraceRecord` per epoch
    :ivar float nash_residual: residual of the last epoch
    :ivar converged_epoch: first epoch at which the residual had stayed below
                        ``tol`` for ``patience`` epochs, or ``None``

    The pseudo labels start at 1 (0) for observed positive (negative)
    entries, which stay frozen, and at 0.5 everywhere else.
    """
    def __init__(self, dataset, config=None, **kwargs):
        config = TrainConfig() if config is None else config
        if config.loss != 'g2netpl':
            config = config.replace(loss='g2netpl')
        super(G2NetPL, self).__init__(dataset, config, **kwargs)

    def _make_store(self):
        return PseudoLabelStore.from_mask(self._train.mask, self.config.mapping_spec(),
                                          image_ids=self._train.image_ids)

    def _add_players(self, steps):
        c = self.config
        scheduler = ConfidenceScheduler(self.store, c.scheduler_params(),
                                        use_scheduler=c.use_scheduler,
                                        steps_per_epoch=steps, name='scheduler')
        network = self._network(steps, store=self.store, xi=scheduler.xi)
        pseudo = PseudoLabelPlayer(self.store, self.model, self._train.features,
                                   c.lambda_schedule(), eta_u=c.eta_u,
                                   pseudo_steps=c.pseudo_steps,
                                   ace_variant=c.ace_variant, mode=c.pseudo_mode,
                                   full_solve_steps=c.full_solve_steps,
                                   steps_per_epoch=steps, name='pseudo')
        self.add_subprocesses({'scheduler': scheduler, 'network': network, 'pseudo': pseudo})

    def _pseudo_stats(self):
        free = self.store.unobserved
        if not free.any():
            return float('nan'), 0., float('nan')
        mapped = self.store.mapped
        try:
            pseudo_map = pseudo_label_quality(self.store, self._train.ground_truth,
                                              self._train.mask).map
        except UndefinedMetricError:
            pseudo_map = float('nan')
        return (self.store.confidence(), rms(mapped[free] - self._prev_pseudo[free]),
                pseudo_map)

    def _end_of_epoch_pass(self):
        if self.config.end_of_epoch_pass:
            new = self.subprocess['pseudo'].solve(None)
            self.store.latent[...] = new.latent


class BaselineModel(_PartialLabelModel):
    """The classifier trained alone with a baseline loss
    (``config.loss`` one of ``'bce'``, ``'bce-ls'``, ``'an'``, ``'an-ls'``,
    ``'wan'``, ``'epr'``).

    :raises: :exc:`ValueError` for ``'g2netpl'``, or a full-label loss on a
             partially observed training split
    """
    def __init__(self, dataset, config=None, **kwargs):
        config = TrainConfig(loss='an') if config is None else config
        if config.loss == 'g2netpl':
            raise ValueError("use G2NetPL for loss 'g2netpl'")
        if (config.loss in ('bce', 'bce-ls') and
                np.any(dataset.train.mask == const.UNOBSERVED)):
            raise ValueError("loss '{}' needs a fully observed training split".format(config.loss))
        super(BaselineModel, self).__init__(dataset, config, **kwargs)

    def _add_players(self, steps):
        self.add_subprocess('network', self._network(steps))


def build_model(dataset, config=None, **kwargs):
    """:class:`G2NetPL` or :class:`BaselineModel`, whichever ``config.loss`` asks for."""
    config = TrainConfig() if config is None else config
    if config.loss == 'g2netpl':
        return G2NetPL(dataset, config, **kwargs)
    return BaselineModel(dataset, config, **kwargs)


def train(dataset, config=None, verbose=False):
    """Train on ``dataset`` with ``config``.

    :returns:   (classifier, pseudo-label store or ``None`` for baselines,
                list of trace records)
    :raises: :exc:`ValueError` for an empty training split,
             :exc:`~gamepl.utils.exceptions.DivergenceError` if the loss
             blows up
    """
    game = build_model(dataset, config, verbose=verbose)
    game.run()
    return game.model, game.store, game.traces
