"""Rydberg-excitation dephasing: many-body echo simulation and three-level EIT."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    DephasingPoint,
    DephasingSource,
    dephasing_point,
    dephasing_rate,
    fit_eit_spectrum,
    fit_power_law,
    fit_visibility,
)
from .blockade import BlockadeBasis, basis_dimension, build_blockade_basis  # noqa: E402
from .cloud import AtomCloud, CloudGeometry, sample_positions  # noqa: E402
from .lindblad import ScanAxis, Spectrum, ThreeLevelParams, evolve_rho, scan_spectrum, steady_state  # noqa: E402
from .manybody import EchoCurve, EchoProtocol, echo_curve, echo_study, run_echo  # noqa: E402
from .units import parse_frequency  # noqa: E402

__all__ = [
    "AtomCloud",
    "BlockadeBasis",
    "CloudGeometry",
    "DephasingPoint",
    "DephasingSource",
    "EchoCurve",
    "EchoProtocol",
    "ScanAxis",
    "Spectrum",
    "ThreeLevelParams",
    "basis_dimension",
    "build_blockade_basis",
    "dephasing_point",
    "dephasing_rate",
    "echo_curve",
    "echo_study",
    "evolve_rho",
    "fit_eit_spectrum",
    "fit_power_law",
    "fit_visibility",
    "parse_frequency",
    "run_echo",
    "sample_positions",
    "scan_spectrum",
    "steady_state",
]
