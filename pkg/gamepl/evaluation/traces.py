"""Per-epoch training records and their CSV / xarray forms."""
from collections import namedtuple
import csv
import numpy as np
import xarray as xr


TRACE_COLUMNS = ('epoch', 'loss_total', 'loss_obs', 'loss_unobs',
                 'pseudo_confidence_mean', 'pseudo_delta_norm',
                 'theta_delta_norm', 'map_test', 'pseudo_map')

TraceRecord = namedtuple('TraceRecord', TRACE_COLUMNS)
TraceRecord.__doc__ = """Diagnostics of one training epoch.

Losses are sums over the training set. ``pseudo_confidence_mean`` is the
mean of |2u - 1| over unobserved entries; the two change norms are
root-mean-square changes since the previous epoch (pseudo labels over
unobserved entries, classifier parameters over all parameters).
``map_test`` and ``pseudo_map`` are NaN when undefined."""


def _format(name, value):
    if name == 'epoch':
        return str(int(value))
    return '%.9g' % value


def export_traces(traces, path):
    """Write one CSV row per epoch, columns in ``TRACE_COLUMNS`` order,
    9 significant digits.

    :raises: :exc:`ValueError` for an empty trace list
    """
    traces = list(traces)
    if not traces:
        raise ValueError('no trace records to export')
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for rec in traces:
            writer.writerow([_format(name, value) for name, value in zip(TRACE_COLUMNS, rec)])


def load_traces(path):
    """Read a file written by :func:`export_traces`."""
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_COLUMNS:
            raise ValueError('unexpected trace header {!r}'.format(header))
        records = []
        for row in reader:
            values = [int(row[0])] + [float(v) for v in row[1:]]
            records.append(TraceRecord(*values))
    return records


def traces_to_xarray(traces):
    """The trace history as an ``xarray.Dataset`` along dimension ``epoch``."""
    traces = list(traces)
    epochs = np.array([rec.epoch for rec in traces], dtype=int)
    data_vars = {}
    for name in TRACE_COLUMNS[1:]:
        data_vars[name] = ('epoch', np.array([getattr(rec, name) for rec in traces], dtype=float))
    return xr.Dataset(data_vars, coords={'epoch': epochs})
