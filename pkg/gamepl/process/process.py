#==============================================================================
# Principles of the `gamepl` process design:
#
#  - A `gamepl.Process` object has several dictionaries of named arrays:
#      - `process.state`: the quantities a player controls and updates
#        (classifier weights, latent pseudo labels)
#      - `process.input`: quantities owned by somebody else that the process
#        reads (the dataset, the scheduler weights, the current mini-batch).
#        Inputs are shared by reference, so a parent can update them in place.
#      - `process.param`: scalar hyperparameters, given through **kwargs
#      - `process.diagnostics`: anything derived from the current state
#  - There is a dictionary of named subprocesses `process.subprocess`, each
#    itself a `gamepl.Process`; a whole game is a small tree of players.
#  - `process.compute()` gathers increments ("tendencies") for every state
#    variable without applying them, `process.step_forward()` applies them.
#  - Every subprocess should work on its own given appropriate input:
#      newproc = gamepl.process_like(game.subprocess['pseudo'])
#==============================================================================
import copy
import time
import numpy as np
import xarray as xr
from gamepl.utils import walk
from gamepl.utils.attrdict import AttrDict
from gamepl.utils.exceptions import DimensionError


def process_like(proc):
    """Make an exact clone of a process, including state and all subprocesses.

    The creation date is updated.

    :param proc:    process
    :type proc:     :class:`~gamepl.process.process.Process`
    :return:        new process identical to the given process
    :rtype:         :class:`~gamepl.process.process.Process`
    """
    newproc = copy.deepcopy(proc)
    newproc.creation_date = time.strftime("%a, %d %b %Y %H:%M:%S %z",
                                          time.localtime())
    return newproc


def get_axes(proc):
    """Names of the dimensions of every state variable of ``proc``."""
    return {name: proc._dims_of(name) for name in proc.state}


class Process(object):
    """A generic parent class for all gamepl process objects.

    **Initialization parameters** \n

    :param dict state:      named state arrays for the process (optional).
                            Arrays are converted to float but *not* copied,
                            so a parent and its subprocesses can share them.
    :param subprocess:      subprocess(es) of the process
    :type subprocess:       :class:`~gamepl.process.process.Process` or dict of
                            :class:`~gamepl.process.process.Process`
    :param dict input:      collection of input quantities
    :param str name:        name of the process [default: 'Untitled']
    :param bool verbose:    flag to control text output [default: True]

    **Object attributes** \n

    :ivar dict state:       dictionary of process states (numpy arrays)
    :ivar dict param:       dictionary of model parameters given through ``**kwargs``
    :ivar dict diagnostics: a dictionary with all diagnostic variables
    :ivar dict input:       a dictionary with all input quantities
    :ivar str creation_date:
                            date and time when process was created
    :ivar subprocess:       dictionary of subprocesses of the process
    :vartype subprocess:    :class:`~gamepl.utils.attrdict.AttrDict`
    """
    #  Dimension names of well-known state and diagnostic variables,
    #  used by to_xarray(). Unknown names get generic dimension names.
    dims = {}

    def __str__(self):
        str1 = 'gamepl Process of type {0}. \n'.format(type(self))
        str1 += 'State variables and shapes: \n'
        for varname, value in self.state.items():
            str1 += '  {0}: {1} \n'.format(varname, np.shape(value))
        str1 += 'The subprocess tree: \n'
        str1 += walk.process_tree(self, name=self.name)
        return str1

    def __init__(self, name='Untitled', state=None, subprocess=None,
                 input=None, verbose=True, **kwargs):
        self.verbose = verbose
        self.name = name
        self.state = AttrDict()
        if state is not None:
            for varname, value in state.items():
                self.set_state(varname, value)
        self.param = kwargs
        self._diag_vars = []
        self._input_vars = []
        if input is not None:
            for varname, value in input.items():
                self.add_input(varname, value)
        self.creation_date = time.strftime("%a, %d %b %Y %H:%M:%S %z",
                                           time.localtime())
        self.subprocess = AttrDict()
        if subprocess is not None:
            self.add_subprocesses(subprocess)

    def add_subprocesses(self, procdict):
        """Adds a dictionary of subprocesses to this process.

        Calls :func:`add_subprocess` for every process in the dictionary.
        A single process is added under its own ``name``.
        """
        if isinstance(procdict, Process):
            self.add_subprocess(procdict.name, procdict)
        else:
            for name, proc in procdict.items():
                self.add_subprocess(name, proc)

    def add_subprocess(self, name, proc):
        """Adds a single subprocess to this process.

        Diagnostics of the subprocess are copied up to the parent.
        Adding a subprocess under an existing name replaces it.

        :param string name:     name of the subprocess
        :param proc:            a Process object
        :raises: :exc:`ValueError` if ``proc`` is not a process
        """
        if isinstance(proc, Process):
            self.subprocess.update({name: proc})
            self.has_process_type_list = False
            for diagname, value in proc.diagnostics.items():
                self.add_diagnostic(diagname, value)
        else:
            raise ValueError('subprocess must be Process object')

    def remove_subprocess(self, name, verbose=True):
        """Removes a single subprocess from this process.

        :param string name:     name of the subprocess
        :param bool verbose:    print a warning if ``name`` is not found
        """
        try:
            self.subprocess.pop(name)
        except KeyError:
            if verbose:
                print('WARNING: {} not found in subprocess dictionary.'.format(name))
        self.has_process_type_list = False

    def set_state(self, name, value):
        """Sets the state variable ``name`` to ``value``.

        Integer arrays are converted to float. Replacing an existing state
        variable requires the same shape.

        :raises: :exc:`~gamepl.utils.exceptions.DimensionError`
                                if the shape differs from the existing state
        """
        value = np.asarray(value)
        if not np.issubdtype(value.dtype, np.floating):
            value = value.astype(float)
        if name in self.state and np.shape(self.state[name]) != value.shape:
            raise DimensionError(
                'Shape mismatch between existing state {} {} and new value {}.'.format(
                    name, np.shape(self.state[name]), value.shape))
        self.state[name] = value
        self.__setattr__(name, value)

    def add_diagnostic(self, name, value=None):
        """Create a new diagnostic variable called ``name`` for this process
        and initialize it with the given ``value``.

        Quantity is accessible in two ways:

            * as a process attribute, i.e. ``proc.name``
            * as a member of the diagnostics dictionary,
              i.e. ``proc.diagnostics['name']``
        """
        if name not in self._diag_vars:
            self._diag_vars.append(name)
        self.__setattr__(name, value)

    def add_input(self, name, value=None):
        """Create a new input variable called ``name`` for this process
        and initialize it with the given ``value``."""
        if name not in self._input_vars:
            self._input_vars.append(name)
        self.__setattr__(name, value)

    @property
    def diagnostics(self):
        """Dictionary access to all diagnostic variables

        :type:      dict
        """
        diag_dict = {}
        for key in self._diag_vars:
            #  self.__dict__ skips diagnostics defined as properties
            if key in self.__dict__:
                diag_dict[key] = self.__dict__[key]
        return diag_dict

    @property
    def input(self):
        """Dictionary access to all input variables

        :type:      dict
        """
        input_dict = {}
        for key in self._input_vars:
            try:
                input_dict[key] = getattr(self, key)
            except AttributeError:
                pass
        return input_dict

    def _dims_of(self, name):
        value = np.asarray(self.state.get(name, self.diagnostics.get(name)))
        dims = self.dims.get(name)
        if dims is None or len(dims) != value.ndim:
            dims = tuple('{}_dim{}'.format(name, n) for n in range(value.ndim))
        return dims

    def to_xarray(self, diagnostics=False):
        """Convert process variables to ``xarray.Dataset`` format.

        With ``diagnostics=True``, both state and array-valued diagnostic
        variables are included. Otherwise just the state variables.
        """
        dic = dict(self.state)
        if diagnostics:
            for key, value in self.diagnostics.items():
                if value is not None and np.asarray(value).dtype.kind in 'biuf':
                    dic[key] = value
        data_vars = {}
        for name, value in dic.items():
            data_vars[name] = xr.DataArray(np.asarray(value),
                                           dims=self._dims_of(name), name=name)
        ds = xr.Dataset(data_vars)
        ds.attrs['process'] = self.name
        return ds
