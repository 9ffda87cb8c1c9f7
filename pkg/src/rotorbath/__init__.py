"""Kicked rotor coupled to an ohmic heat bath.

Exact quantum (reduced density matrix) and coarse-grained classical
(Liouville) evolution, entropy production in both pictures, and fits of
the asymptotic growth law S = A + B ln n.
"""

__version__ = "0.1.0"

from .analysis import (EntropySeries, GrowthFit, convergence_metric,
                       fit_energy_slope, fit_growth, predict_A,
                       regress_A_vs_lnK)
from .bath import (BathKernels, decay_coefficient, dephasing_decay,
                   dephasing_phase, drift_coefficient, spread_variance)
from .errors import (BasisError, ConfigError, ConvergenceError, FitWindowError,
                     GridError, PositivityError, RotorBathError)
from .params import (BathParams, NumericsParams, RotorParams, ValidatedConfig,
                     config_from_mapping, config_to_mapping, load_config_file,
                     validate, with_updates)
from .phase_space import (GridSpec, PhaseSpaceGrid, auto_p_extent,
                          bath_drift_smear, classical_energy,
                          classical_entropy, husimi_init, kick_shift,
                          load_grid, marginals, run_classical, save_grid,
                          wrapped_gaussian_kernel)
from .quantum import (DensityMatrix, KickMatrix, WavePacket, auto_l_max,
                      bath_step, bessel_j_array, kick_matrix, kick_step,
                      make_wavepacket, pure_density, quantum_energy,
                      run_quantum, von_neumann_entropy)
from .standard_map import MapState, diffusion_coefficient, lyapunov, step

__all__ = [
    "__version__",
    "BathKernels", "BathParams", "BasisError", "ConfigError",
    "ConvergenceError", "DensityMatrix", "EntropySeries", "FitWindowError",
    "GridSpec", "GrowthFit", "GridError", "KickMatrix", "MapState",
    "NumericsParams", "PhaseSpaceGrid", "PositivityError", "RotorBathError",
    "RotorParams", "ValidatedConfig", "WavePacket",
    "auto_l_max", "auto_p_extent", "bath_drift_smear", "bath_step",
    "bessel_j_array", "classical_energy", "classical_entropy",
    "config_from_mapping", "config_to_mapping", "convergence_metric",
    "decay_coefficient", "dephasing_decay", "dephasing_phase",
    "diffusion_coefficient", "drift_coefficient", "fit_energy_slope",
    "fit_growth", "husimi_init", "kick_matrix", "kick_shift",
    "load_config_file", "load_grid", "lyapunov", "make_wavepacket",
    "marginals", "predict_A", "pure_density", "quantum_energy",
    "regress_A_vs_lnK", "run_classical", "run_quantum", "save_grid",
    "spread_variance", "step", "validate", "von_neumann_entropy",
    "with_updates", "wrapped_gaussian_kernel",
]
