"""
A dict whose keys are also reachable as attributes, plus a right-favoring
merge of mappings.

Used for process ``state`` dictionaries (``proc.state.latent``) and for
layering configuration sources (defaults, config file, command line).
"""
from collections.abc import Mapping
import re


__all__ = ['AttrDict', 'merge']

_NAME = re.compile('^[A-Za-z][A-Za-z0-9_]*$')


class AttrDict(dict):
    """
    A dict that allows attribute-style access to its keys.

    A key may be used as an attribute if:
     * It is a string
     * It matches /^[A-Za-z][A-Za-z0-9_]*$/ (i.e., a public attribute)
     * The key doesn't overlap with any dict method (``items``, ``copy``, ...)

    Other keys remain reachable through normal item access.
    """
    def __getattr__(self, key):
        if key not in self or not self._valid_name(key):
            raise AttributeError(
                "'{cls}' instance has no attribute '{name}'".format(
                    cls=self.__class__.__name__, name=key))
        return self[key]

    def __setattr__(self, key, value):
        if self._valid_name(key):
            self[key] = value
        else:
            raise TypeError(
                "'{cls}' does not allow attribute creation for '{name}'.".format(
                    cls=self.__class__.__name__, name=key))

    def __delattr__(self, key):
        if self._valid_name(key) and key in self:
            del self[key]
        else:
            raise AttributeError(key)

    def __getstate__(self):
        return dict(self)

    def __setstate__(self, state):
        self.update(state)

    def __dir__(self):
        return list(super(AttrDict, self).__dir__()) + [
            key for key in self if self._valid_name(key)]

    def __repr__(self):
        return 'AttrDict({contents})'.format(
            contents=super(AttrDict, self).__repr__())

    def __add__(self, other):
        """New AttrDict merging ``other`` into this one (``other`` wins).

        NOTE: Addition is not commutative. a + b != b + a.
        """
        if not isinstance(other, Mapping):
            return NotImplemented
        return AttrDict(merge(self, other))

    def copy(self):
        return AttrDict(self)

    @classmethod
    def _valid_name(cls, key):
        return (isinstance(key, str) and _NAME.match(key) is not None
                and not hasattr(cls, key))


def merge(left, right):
    """
    Merge two mappings objects together, combining overlapping Mappings,
    and favoring right-values.

    NOTE: This is not commutative (merge(a,b) != merge(b,a)).
    """
    merged = {}
    for key in left:
        if key not in right:
            merged[key] = left[key]
    for key in right:
        if (key in left and isinstance(left[key], Mapping)
                and isinstance(right[key], Mapping)):
            merged[key] = merge(left[key], right[key])
        else:
            merged[key] = right[key]
    return merged
