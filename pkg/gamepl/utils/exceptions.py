"""Exception types raised by gamepl.

All argument problems are ``ValueError`` (or a subclass), so callers that
only care about "bad input" can catch that alone.
"""


class DimensionError(ValueError):
    """Array shapes that must agree do not."""


class UndefinedMetricError(ValueError):
    """Average precision requested for a class without any positive sample."""


class DatasetFormatError(ValueError):
    """Malformed dataset or checkpoint file.

    :ivar int lineno:   1-based line number of the offending line
                        (``None`` if the problem is not tied to one line)
    """
    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = 'line {}: {}'.format(lineno, message)
        super(DatasetFormatError, self).__init__(message)
        self.lineno = lineno


class DivergenceError(FloatingPointError):
    """Training produced a non-finite or exploding loss.

    :ivar int epoch:    epoch at which the problem was detected (1-based)
    :ivar float value:  offending total loss
    """
    def __init__(self, epoch, value, reference=None):
        msg = 'training diverged at epoch {}: total loss {!r}'.format(epoch, value)
        if reference is not None:
            msg += ' (reference {!r})'.format(reference)
        super(DivergenceError, self).__init__(msg)
        self.epoch = epoch
        self.value = value
        self.reference = reference


def check_same_shape(name_a, a, name_b, b):
    """Raise :exc:`DimensionError` unless ``a`` and ``b`` have equal shapes."""
    if a.shape != b.shape:
        raise DimensionError('{} has shape {} but {} has shape {}'.format(
            name_a, a.shape, name_b, b.shape))
