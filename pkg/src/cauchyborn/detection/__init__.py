"""Detection processes on piecewise-flat cuts and the squeeze bounds."""
from .plan import DetectionPlan, FlatPiece, PlanError, flat_pieces, hyperplane_extension, random_plan
from .processes import (NonCommutingError, OutcomeDistribution, SequentialSampler, chi_square_test,
                        curved_born, flat_measure, parallel_process, post_measurement_ensembles,
                        sequential_process)
from .squeeze import (ConvergenceResult, SqueezeRow, SqueezeViolation, convergence_experiment,
                      rising_sequence, squeeze_bounds)

__all__ = [
    "ConvergenceResult", "DetectionPlan", "FlatPiece", "NonCommutingError", "OutcomeDistribution", "PlanError",
    "SequentialSampler", "SqueezeRow", "SqueezeViolation", "chi_square_test", "convergence_experiment",
    "curved_born", "flat_measure", "flat_pieces", "hyperplane_extension", "parallel_process",
    "post_measurement_ensembles", "random_plan", "rising_sequence", "sequential_process", "squeeze_bounds",
]
