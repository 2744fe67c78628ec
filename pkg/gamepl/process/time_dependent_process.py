import numpy as np
from .process import Process
from gamepl.utils import walk
from gamepl.utils.numerics import rms


class TimeDependentProcess(Process):
    """A generic parent class for all processes that are stepped forward.

    ``TimeDependentProcess`` is a child of the
    :class:`~gamepl.process.process.Process` class and therefore inherits
    all those attributes.

    Time is counted in mini-batch steps. A fixed number of steps makes one
    epoch; at every epoch boundary :func:`_do_new_epoch` is called, which is
    the natural hook for once-per-epoch work in daughter classes.

    **Initialization parameters** \n

    :param str time_type:   how the process is computed within a step of
                            its parent: ``'diagnostic'``, ``'explicit'``
                            or ``'implicit'`` [default: 'explicit']
    :param int steps_per_epoch:
                            number of steps per epoch [default: 1]
    :param bool topdown:    whether a parent is visited before its
                            subprocesses when walking the tree [default: True]

    **Object attributes** \n

    :ivar dict tendencies:  increment of every state variable computed for
                            the current step. See :func:`compute`.
    :ivar str time_type:    see initialization parameter
    :ivar dict time:        a collection of all time-related attributes of the process.
                            The dictionary contains following items:

        * ``'steps_per_epoch'``: see initialization parameter
        * ``'batch_index'``: how many steps have been taken in the current epoch
        * ``'steps'``: how many steps have been taken in total
        * ``'epochs_elapsed'``: how many epochs have been completed
    """
    def __init__(self, time_type='explicit', steps_per_epoch=1, topdown=True, **kwargs):
        self.tendencies = {}
        super(TimeDependentProcess, self).__init__(**kwargs)
        for name, var in self.state.items():
            self.tendencies[name] = np.zeros_like(var)
        self.set_steps_per_epoch(steps_per_epoch)
        self.time_type = time_type
        self.topdown = topdown
        self.has_process_type_list = False

    def set_steps_per_epoch(self, steps_per_epoch):
        """Resets the clock with a new number of steps per epoch.

        :raises: :exc:`ValueError` if ``steps_per_epoch < 1``
        """
        steps_per_epoch = int(steps_per_epoch)
        if steps_per_epoch < 1:
            raise ValueError('steps_per_epoch must be at least 1.')
        self.time = {'steps_per_epoch': steps_per_epoch,
                     'batch_index': 0,
                     'steps': 0,
                     'epochs_elapsed': 0}

    def set_state(self, name, value):
        super(TimeDependentProcess, self).set_state(name, value)
        self.tendencies[name] = np.zeros_like(self.state[name])

    def compute(self):
        """Computes the increments for all state variables given current
        state and input.

        The function first computes all diagnostic subprocesses. They don't
        produce any increments but they may affect the other processes (for
        example the weights of each loss term). Then all explicit
        subprocesses are computed.

        Increments due to implicit subprocesses are computed from a state
        that already includes the explicit increments, so these are applied
        to the states temporarily and the states restored afterwards.

        Finally, all increments are summed per state variable and stored in
        ``self.tendencies``. Nothing is applied to the state.

        :returns:   dictionary of increments, keyed like ``self.state``
        """
        for varname in self.tendencies:
            self.tendencies[varname] = np.zeros_like(self.state[varname])
        if not self.has_process_type_list:
            self._build_process_type_list()
        tendencies = {}
        self._compute_type('diagnostic')
        tendencies['explicit'] = self._compute_type('explicit')
        saved = {name: var.copy() for name, var in self.state.items()}
        for name, var in self.state.items():
            var += tendencies['explicit'][name]
        tendencies['implicit'] = self._compute_type('implicit')
        #  Restore exactly rather than subtracting the increments again
        for name, var in self.state.items():
            var[...] = saved[name]
        for proctype in ['explicit', 'implicit']:
            for varname, tend in tendencies[proctype].items():
                self.tendencies[varname] += tend
        self_tend = self._compute()
        for varname, tend in self_tend.items():
            self.tendencies[varname] += tend
        return self.tendencies

    def _compute_type(self, proctype):
        """Computes increments due to all subprocesses of given type
        ``proctype``. Also passes all diagnostics up to the parent process."""
        tendencies = {}
        for varname in self.state:
            tendencies[varname] = np.zeros_like(self.state[varname])
        for proc in self.process_types[proctype]:
            tenddict = proc.compute()
            for name, tend in tenddict.items():
                tendencies[name] += tend
            for diagname, value in proc.diagnostics.items():
                self.__setattr__(diagname, value)
        return tendencies

    def _compute(self):
        """Where the increments are actually computed...

        Needs to be implemented for each daughter class

        Returns a dictionary with same keys as self.state"""
        return {name: np.zeros_like(value) for name, value in self.state.items()}

    def _build_process_type_list(self):
        """Generates lists of the direct subprocesses, organized by
        ``time_type`` (in insertion order)."""
        self.process_types = {'diagnostic': [], 'explicit': [], 'implicit': []}
        for name, proc in self.subprocess.items():
            self.process_types[proc.time_type].append(proc)
        self.has_process_type_list = True

    def step_forward(self):
        """Updates state variables with computed increments.

        Calls :func:`compute`, adds the increments to the state variables in
        place (so every subprocess sharing a state array sees the update),
        then advances the clocks of the whole process tree.
        """
        tenddict = self.compute()
        for varname, tend in tenddict.items():
            self.state[varname] += tend
        for name, proc, level in walk.walk_processes(self, ignoreFlag=True):
            proc._update_time()

    def _update_time(self):
        """Increments the step counter by one and calls
        :func:`_do_new_epoch` at the end of every epoch."""
        self.time['steps'] += 1
        if self.time['batch_index'] >= self.time['steps_per_epoch'] - 1:
            self._do_new_epoch()
        else:
            self.time['batch_index'] += 1

    def _do_new_epoch(self):
        """This function is called once at the end of every epoch.

        It updates ``self.time['epochs_elapsed']`` and
        ``self.time['batch_index']``.
        """
        self.time['batch_index'] = 0
        self.time['epochs_elapsed'] += 1

    def integrate_epochs(self, epochs=1, verbose=True):
        """Integrates the process by a given number of whole epochs.

        :param int epochs:      number of epochs [default: 1]
        :param bool verbose:    print the number of steps taken [default: True]
        """
        numsteps = int(self.time['steps_per_epoch'] * epochs)
        if verbose:
            print("Integrating for {} steps, {} epochs.".format(numsteps, epochs))
        for count in range(numsteps):
            self.step_forward()
        if verbose:
            print("Total elapsed epochs is {}.".format(self.time['epochs_elapsed']))

    def _convergence_residual(self, old_state):
        """Largest root-mean-square change of any state variable since
        ``old_state``. Daughter classes may define their own measure."""
        return max([rms(self.state[name] - old) for name, old in old_state.items()] or [0.])

    def integrate_converge(self, crit=1e-4, patience=2, max_epochs=100, verbose=True):
        """Integrates epoch by epoch until the process stops changing.

        Convergence is declared once :func:`_convergence_residual` has stayed
        below ``crit`` for ``patience`` consecutive epochs.

        :param float crit:      convergence tolerance [default: 1e-4]
        :param int patience:    consecutive epochs below tolerance [default: 2]
        :param int max_epochs:  stop after this many epochs regardless
                                [default: 100]
        :param bool verbose:    print the total elapsed epochs [default: True]
        :returns:               ``True`` if converged within ``max_epochs``
        """
        below = 0
        for n in range(int(max_epochs)):
            old_state = {name: var.copy() for name, var in self.state.items()}
            self.integrate_epochs(1, verbose=False)
            if self._convergence_residual(old_state) < crit:
                below += 1
            else:
                below = 0
            if below >= patience:
                break
        if verbose:
            print("Total elapsed epochs is {}.".format(self.time['epochs_elapsed']))
        return below >= patience
