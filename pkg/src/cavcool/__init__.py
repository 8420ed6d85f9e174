"""Simulation and mean-field analysis of cavity-mediated cooling of particles."""

from .config import ConfigError, ExperimentConfig, config_from_dict
from .core import ParameterError, RegimeReport, SystemParams, UnitSystem, coupling_strength, regime_check
from .dynamics import (CavityField, IntegratorConfig, IntegratorError, ParticleEnsemble, Schedule,
                       run_protocol, sample_thermal_state)
from .ensemble import (BudgetExceeded, SweepConfig, run_ensemble, sweep, two_stage_config,
                       two_stage_protocol)
from .kernels import BACKEND
from .meanfield import (demag_ratio, ferro_kinetic_energy, magnetization_fixpoint,
                        min_kinetic_energy, optimal_coupling, theta_of_alpha)
from .observables import RunRecord

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BudgetExceeded", "CavityField", "ConfigError", "ExperimentConfig",
    "IntegratorConfig", "IntegratorError", "ParameterError", "ParticleEnsemble", "RegimeReport",
    "RunRecord", "Schedule", "SweepConfig", "SystemParams", "UnitSystem", "config_from_dict",
    "coupling_strength", "demag_ratio", "ferro_kinetic_energy", "magnetization_fixpoint",
    "min_kinetic_energy", "optimal_coupling", "regime_check", "run_ensemble", "run_protocol",
    "sample_thermal_state", "sweep", "theta_of_alpha", "two_stage_config", "two_stage_protocol",
]
