"""Brickwork lattice model: circuits, cuts, states and locality checks."""
from .circuit import (CircuitError, Gate, GateCircuit, InvalidCut, LatticeCut, greatest_valid_below,
                      hop_matrix, is_valid_cut, pair_matrix)
from .locality import (PreconditionError, check_IL, check_PL, extract_V, grown_sites, lightcone_relation,
                       shrunk_sites)
from .state import Basis, StateVector, apply_projector, evolution_operator, evolve, factorize

__all__ = [
    "Basis", "CircuitError", "Gate", "GateCircuit", "InvalidCut", "LatticeCut", "PreconditionError",
    "StateVector", "apply_projector", "check_IL", "check_PL", "evolution_operator", "evolve", "extract_V",
    "factorize", "greatest_valid_below", "grown_sites", "hop_matrix", "is_valid_cut", "lightcone_relation",
    "pair_matrix", "shrunk_sites",
]
