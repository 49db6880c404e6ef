"""spreadmi: large-system mutual information of randomly spread CDMA
channels, and numerical certificates that Welch-bound-equality spectra
maximize it."""

from .channel import (BINARY, DISCRETE, GAUSSIAN, InputPrior, binary_prior,
                      discrete_prior, gaussian_prior, mmse,
                      normalized_discrete_prior, output_density, output_entropy,
                      posterior_mean, scalar_mutual_information)
from .errors import ConstraintViolation, EnumerationLimitError, NumericsError
from .montecarlo import (MiEstimate, SpreadingMatrix, empirical_spectrum,
                         exact_mutual_information, gaussian_exact_mi,
                         gen_iid_spreading, gen_wbe_spreading, ks_distance,
                         read_matrix, write_matrix)
from .optimality import (DOMINANCE_TOL, DominanceReport, hilbert_dominance,
                         r_dominance, report_to_csv, sample_candidate_spectrum,
                         tangent_gap)
from .replica import (SaddleSolution, SolveOptions, SystemSpec, free_energy,
                      mutual_information, solve_saddle)
from .spectra import (GENERIC, MP, WBE, EigenDistribution, TabulatedDensity,
                      as_generic, g_integral, hilbert, make_discrete_law,
                      make_mp_law, make_wbe_law, r_transform, z_min)

__version__ = "0.1.0"

__all__ = [
    "BINARY", "DISCRETE", "GAUSSIAN", "GENERIC", "MP", "WBE",
    "DOMINANCE_TOL",
    "ConstraintViolation", "DominanceReport", "EigenDistribution",
    "EnumerationLimitError", "InputPrior", "MiEstimate", "NumericsError",
    "SaddleSolution", "SolveOptions", "SpreadingMatrix", "SystemSpec",
    "TabulatedDensity",
    "as_generic", "binary_prior", "discrete_prior", "empirical_spectrum",
    "exact_mutual_information", "free_energy", "g_integral",
    "gaussian_exact_mi", "gaussian_prior", "gen_iid_spreading",
    "gen_wbe_spreading", "hilbert", "hilbert_dominance", "ks_distance",
    "make_discrete_law", "make_mp_law", "make_wbe_law", "mmse",
    "mutual_information", "normalized_discrete_prior", "output_density",
    "output_entropy", "posterior_mean", "r_dominance", "r_transform",
    "read_matrix", "report_to_csv", "sample_candidate_spectrum",
    "scalar_mutual_information", "solve_saddle", "tangent_gap",
    "write_matrix", "z_min",
]
