"""Security analysis and simulation of an improved four-state CV-QKD protocol."""
from .channel import ChannelParams, apply_to_covariance, chi, distance_to_eta, transmit_sample
from .covariance import Structure, TwoModeCovariance
from .fock import TruncationConfig
from .montecarlo import RunConfig, Records, empirical_ber, run_beamsplitter_scheme, run_trng_scheme
from .security import KeyRateReport, ReconciliationConfig, Scheme, holevo_bE, key_rate
from .states import ModulationParams, conditional_coefficients, four_state_spectrum, phi_l_covariance

__version__ = "0.1.0"
