"""Piezo-optomechanical transducer modelling toolkit."""

__version__ = "0.1.0"

from .core import (ConfigError, ConfigParseError, ConfigValidationError, DeviceConfig,
                   PulseParams, RateSet, dump_config, load_config, paper_config_path,
                   parse_config)
from .dynamics import HilbertSpace, SwapResult, swap_efficiency
from .heating import HeatingModel, added_noise, calibrate_heating
from .hybridization import (BareMode, CoupledModeSystem, hybridize, jacobi_eigh,
                            sweep_anticrossing)
from .readout import (ExternalEfficiencies, efficiency_budget, evaluate_readout,
                      optimize_pulse, readout_efficiency, scattering_rate)

__all__ = [
    "BareMode", "ConfigError", "ConfigParseError", "ConfigValidationError", "CoupledModeSystem",
    "DeviceConfig", "ExternalEfficiencies", "HeatingModel", "HilbertSpace", "PulseParams",
    "RateSet", "SwapResult", "added_noise", "calibrate_heating", "dump_config",
    "efficiency_budget", "evaluate_readout", "hybridize", "jacobi_eigh", "load_config",
    "optimize_pulse", "paper_config_path", "parse_config", "readout_efficiency",
    "scattering_rate", "swap_efficiency", "sweep_anticrossing",
]
