"""Three-level atom driven by a non-equilibrium polarized radiation field."""
from .atom import ThreeLevelAtom, bohr_frequencies, diagnose, validate
from .errors import (InvalidAtomError, ModelError, NonPositiveBetaError,
                     NotApplicableError, ReducibleSystemError,
                     UndefinedFrequencyError, UnstableStepError, ValidationError)
from .kinetics import (FluxRecord, Trajectory, fluxes, generator, integrate, rhs,
                       stationarity_reached)
from .spectral import (OccupationSpectrum, RateSet, Spectra, gibbs, occupation,
                       per_frequency, rates, tabulated)
from .stationary import (StationaryReport, double_einstein_limit,
                         emission_condition, emission_condition_beta,
                         stationary_closed_form, stationary_null_space,
                         stationary_report)

__version__ = "0.1.0"
