"""Randomness quantification for sequential quantum measurements.

The package simulates one-Alice / n-Bob sequential CGLMP scenarios, evaluates
adversarial guessing probabilities under trusted assumptions, and certifies
device-independent randomness through a sequential moment-matrix semidefinite
relaxation solved by the built-in interior-point solver.
"""

from . import cglmp, cli, guessing, npa, qcore, sdp, seqsim
from .cglmp import CglmpSettings, JointDistribution, canonical_state, cglmp_value, measurement_basis
from .guessing import (
    EnsembleDecomposition,
    GuessReport,
    cglmp_attack,
    classical_guess,
    eve_optimal_pvm,
    guess_cglmp,
    min_entropy,
    naimark_dilation,
    quantum_guess_eval,
)
from .npa import build_problem, compile_problem, di_guess_bound
from .qcore import (
    DEFAULT_TOL,
    DensityOperator,
    Povm,
    StateVector,
    Tolerances,
    partial_trace,
    psd_sqrt,
    purify,
    validate_povm,
)
from .sdp import SdpConfig, SdpProblem, export_sdpa, import_sdpa, solve
from .seqsim import (
    Instrument,
    PvmMixture,
    SequentialScenario,
    WeakPovmSpec,
    build_cglmp_scenario,
    double_violation_window,
    extremal_decomposition,
    instrument,
    sequential_distribution,
    violation_curves,
    weak_povm,
)

__version__ = "0.1.0"
