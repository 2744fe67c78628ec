from gamepl.process.time_dependent_process import TimeDependentProcess


class DiagnosticProcess(TimeDependentProcess):
    """A parent class for all processes that are strictly diagnostic,
    namely that do **not** contribute increments to any state variable.

    Daughter classes implement :func:`_update_diagnostics`, which is called
    at every step, or only at the first step of every epoch when
    ``per_epoch`` is set. Diagnostics that stay fixed for a whole epoch
    (like the weights of the unobserved loss terms) use the latter.

    :param bool per_epoch:  refresh once per epoch instead of every step
                            [default: False]

    During initialization following attribute is set:

    :ivar time_type:        is set to ``'diagnostic'``
    :vartype time_type:     str
    """
    def __init__(self, per_epoch=False, **kwargs):
        super(DiagnosticProcess, self).__init__(**kwargs)
        self.time_type = 'diagnostic'
        self.per_epoch = per_epoch

    def _compute(self):
        """Refreshes the diagnostics; returns no increments."""
        if not self.per_epoch or self.time['batch_index'] == 0:
            self._update_diagnostics()
        return {}

    def _update_diagnostics(self):
        pass
