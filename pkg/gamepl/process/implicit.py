from gamepl.process.time_dependent_process import TimeDependentProcess


class ImplicitProcess(TimeDependentProcess):
    """A parent class for processes that solve for their new state directly
    instead of returning an increment.

    During initialization following attributes are initialized:

    :ivar time_type:        is set to ``'implicit'``
    :vartype time_type:     str

    :ivar adjustment:       the state adjustments due to this implicit
                            process in the last step
    :vartype adjustment:    dict
    """
    def __init__(self, **kwargs):
        super(ImplicitProcess, self).__init__(**kwargs)
        self.time_type = 'implicit'
        self.adjustment = {}

    def _compute(self):
        """Computes the state increments for implicit processes.

        Daughter classes implement :func:`_implicit_solver`, which returns
        the new state of the variables. The increment is the difference
        between the new and the old state; it is stored in ``adjustment``
        and returned so the parent can apply it along with all others.
        """
        newstate = self._implicit_solver()
        adjustment = {}
        for name, var in self.state.items():
            adjustment[name] = newstate[name] - var
        self.adjustment = adjustment
        self._update_diagnostics(newstate)
        return dict(adjustment)

    def _implicit_solver(self):
        raise NotImplementedError

    def _update_diagnostics(self, newstate):
        """Called each step after the new state is computed. Daughter classes
        can implement this method to compute diagnostics of the new state."""
        pass
