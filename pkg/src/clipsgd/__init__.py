"""Numerical laboratory for clipped SGD on high-dimensional streaming least squares."""

from .factors import ReductionPair, reduction
from .noise import Gaussian, RademacherLike, SymmetricExponential, Uniform, noise_from_sigma
from .schedules import Schedule, compensated_eta, max_ccc_schedule, scale_to_steps
from .spectra import ProblemInstance, Spectrum, identity_spectrum, power_law_spectrum

__all__ = [
    "Gaussian",
    "ProblemInstance",
    "RademacherLike",
    "ReductionPair",
    "Schedule",
    "Spectrum",
    "SymmetricExponential",
    "Uniform",
    "compensated_eta",
    "identity_spectrum",
    "max_ccc_schedule",
    "noise_from_sigma",
    "power_law_spectrum",
    "reduction",
    "scale_to_steps",
]
