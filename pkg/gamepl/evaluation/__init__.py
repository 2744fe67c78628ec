from .metrics import average_precision, map_score, pseudo_label_quality, ApResult
from .traces import (TraceRecord, TRACE_COLUMNS, export_traces, load_traces,
                     traces_to_xarray)
