'''
``gamepl`` trains multi-label classifiers from partial labels as a
two-player game between the classifier and a set of soft pseudo labels
for the unobserved entries.

The package is built from processes in the same way throughout: every
player is a :class:`~gamepl.process.process.Process` with named state
arrays, and a game is a small tree of players stepped forward one
mini-batch at a time.
'''
# Version number is declared in setup.py
try:
    from importlib import metadata
    __version__ = metadata.version(__name__)
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = '0.1.0.dev0'

from .utils import constants
from .utils.numerics import MappingSpec
from .utils.exceptions import (DimensionError, DatasetFormatError,
                               UndefinedMetricError, DivergenceError)
from .process import Process, TimeDependentProcess, ImplicitProcess, DiagnosticProcess
from .process import process_like, get_axes
from .player import (ClassifierModel, init_model, forward, PseudoLabelStore,
                     LambdaSchedule, SchedulerParams, update_pseudo)
from .losses import LOSSES, BASELINES, Regularizer
from .data import (PartialDataset, SyntheticSpec, gen_synthetic, load_dataset,
                   save_dataset, apply_setting)
from .evaluation import map_score, pseudo_label_quality, TraceRecord, traces_to_xarray
from .model import G2NetPL, BaselineModel, TrainConfig, train, nash_residual
