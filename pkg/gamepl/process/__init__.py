from .process import Process, process_like, get_axes
from .time_dependent_process import TimeDependentProcess
from .implicit import ImplicitProcess
from .diagnostic import DiagnosticProcess
