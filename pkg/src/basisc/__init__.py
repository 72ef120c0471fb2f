"""A compiler and statevector simulator for basis-oriented quantum programs."""

from .drivers import DriverConfig, Kernel, corpus_source, run_driver
from .errors import BasiscError, RuntimeFault, TypeCheckError
from .parser import parse_expression, parse_file, parse_source
from .simulator import Histogram, final_state, lower_function, run_kernel
from .typecheck import check_program, monomorphize

__version__ = "0.1.0"

__all__ = [
    "BasiscError", "DriverConfig", "Histogram", "Kernel", "RuntimeFault", "TypeCheckError",
    "check_program", "corpus_source", "final_state", "lower_function", "monomorphize",
    "parse_expression", "parse_file", "parse_source", "run_driver", "run_kernel",
]
