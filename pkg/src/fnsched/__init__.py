"""Online flow-network scheduling (fn-EDF) of implicit-deadline periodic tasks."""
from .tasks import CONTINUOUS, DISCRETE, Task, TaskSet, load_taskset, parse_taskset
from .sim import SimReport, make_scheduler, run

__all__ = ["CONTINUOUS", "DISCRETE", "Task", "TaskSet", "load_taskset", "parse_taskset",
           "SimReport", "make_scheduler", "run"]
__version__ = "0.1.0"
