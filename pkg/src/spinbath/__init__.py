"""Spatial error correlations of qubits sharing a bosonic bath."""
from .bath_kernel import (BathSpec, KernelQuery, KernelResult, bitflip_kernel, dephasing_kernel,
                          effective_zz_coupling, evaluate_bitflip, evaluate_dephasing,
                          thermal_factor)
from .correlation import (BITFLIP_Y, BITFLIP_Z, CHANNELS, DEPHASING_Z, ContractionMatrix,
                          QubitLayout, build_contraction_matrix, classify_regime,
                          correlation_ratio)
from .dfs import (RegisterState, collective_z_residual, dfs_basis, dfs_decoupling_check)
from .threshold import (ThresholdQuery, breakdown_point, correlated_pfail, independent_pfail)
from .wick import (AmplitudeReport, ErrorPattern, gaussian_moment, independence_deviation)

__version__ = "0.1.0"
