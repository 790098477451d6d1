"""Finite-horizon shrinking-target constructions with checkable certificates."""
from .invisible import (AlmostInvariantCert, InfeasibleScheduleError, InvisibleTargetCert,
                        SweepCert, SweepSchedule, almost_invariant_set, invisible_target,
                        slow_sweep_complement, sweep_schedule)
from .rearrange import MeasureMismatchError, Piece, Rearrangement, conjugated_hits, rearrangement_map
from .small_sweep import BudgetError, SmallSweepCert, generic_small_sweep
from .verify import VerifyResult, verify_certificate
from .visible import BlockSumError, VisibleTargetCert, block_visibility, visible_target_dyadic

__all__ = [
    "AlmostInvariantCert", "BlockSumError", "BudgetError", "InfeasibleScheduleError",
    "InvisibleTargetCert", "MeasureMismatchError", "Piece", "Rearrangement", "SmallSweepCert",
    "SweepCert", "SweepSchedule", "VerifyResult", "VisibleTargetCert", "almost_invariant_set",
    "block_visibility", "conjugated_hits", "generic_small_sweep", "invisible_target",
    "rearrangement_map", "slow_sweep_complement", "sweep_schedule", "verify_certificate",
    "visible_target_dyadic",
]
