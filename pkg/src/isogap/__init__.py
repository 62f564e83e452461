"""Isoperimetric constants and spectral-gap bounds for finite Markov chains."""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    GapCertificate,
    MixingProfile,
    bound_report,
    cubic_gap_estimate,
    ergodicity_bound_checks,
    flow_vs_adjoint_check,
    gap_certificate,
    lawler_sokal_check,
    mixing_profile,
    norm_lower_bound_check,
    propagation_check,
)
from .errors import *  # noqa: F401,F403
from .isoperimetry import (
    IsoProfile,
    StateSet,
    cut_table,
    iso_profile,
    k_adj_of_set,
    k_n_of_set,
    optimize_cut,
    spectral_measure_of_cut,
)
from .kernel import (
    ChainClass,
    ConvergenceRateReport,
    StationaryMeasure,
    StochasticKernel,
    adjoint,
    build_kernel,
    classify,
    orgc_estimate,
    read_kernel,
    stationary,
    tv_decay,
)
from .models import (
    Model,
    ModelConfig,
    dump_model,
    load_from_file,
    lump_two_state,
    make_cycle,
    make_hypercube,
    make_mm1,
    make_star,
    star_weights,
)
from .spectral import (
    SpectralReport,
    gelfand_sequence,
    iso_gap_estimator,
    spectral_report,
)
