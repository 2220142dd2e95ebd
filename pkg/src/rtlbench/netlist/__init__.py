"""Bit-level netlists: AND-inverter nodes plus clocked registers."""

from .aig import Netlist, Register, lit_inv, lit_is_const, lit_node  # noqa: F401
from .elaborate import elaborate  # noqa: F401
from .simulate import simulate, simulate_step  # noqa: F401
from .refsim import RefSim  # noqa: F401
