"""Built-in manufactured-solution examples, convergence studies and the CLI."""

from .examples import EXAMPLES, ExampleDef, build_problem, get_example, manufacture_source
from .golden import GOLDEN, compare, golden_for
from .study import ConvergenceReport, StudyFailure, emit, l_inf_error, run_study

__all__ = [
    "EXAMPLES",
    "ExampleDef",
    "build_problem",
    "get_example",
    "manufacture_source",
    "GOLDEN",
    "compare",
    "golden_for",
    "ConvergenceReport",
    "StudyFailure",
    "emit",
    "l_inf_error",
    "run_study",
]
