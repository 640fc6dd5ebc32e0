"""Monte Carlo simulation of classical protocols reproducing projective-measurement statistics."""

from .p1 import (ABORT, MatchTable, P1Params, TrialRecord, match_table, p1_weight, run_ent_trial,
                 run_pm_trial, simulate_ent, simulate_pm)
from .qmath import (Basis, JointDistribution, PureState, born_entangled, born_pm, computational_basis,
                    conjugate_basis, fourier_basis, overlap)
from .sampling import RngStream, random_basis, random_pure_state, random_unitaries, random_unitary
from .scenarios import (PROTOCOLS, ProtocolHandle, StudyReport, cglmp_setup, cglmp_study, cglmp_value,
                        delta_sweep, phi_setup, phi_study, randomized_study, register_protocol, tvd_ent,
                        tvd_pm)

__version__ = "0.1.0"
