"""How a basis translation becomes a unitary.

A translation ``b1 >> b2`` sends the i-th vector of b1 to the i-th vector
of b2 and leaves the orthogonal complement alone. Below we lower a few
of them and look at the matrices.
"""

import numpy as np

from basisc.parser import parse_expression
from basisc.simulator import lower_function
from basisc.syntax import Program


def show(src):
    u = lower_function(Program(()), parse_expression(src))
    print(f"{src}")
    with np.printoptions(precision=3, suppress=True):
        print(u, "\n")


# the bit flip is a swap of the two std vectors
show("std >> {'1','0'}")

# Hadamard: the std basis goes to the pm basis
show("std >> pm")

# only the span of {'1'} on the left is touched, so this is a CNOT
show("{'1'} + std >> {'1'} + {'1','0'}")

# a relative phase on a single vector
show("{'1'} >> {phase(pi/2)*'1'}")

# the two-qubit Fourier transform
show("std[2] >> fourier[2]")

# rotate about the pm axis, then undo it
u = lower_function(Program(()), parse_expression("pm.rotate(0.7) | ~pm.rotate(0.7)"))
print("rotate then reverse is identity:", np.allclose(u, np.eye(2)))
