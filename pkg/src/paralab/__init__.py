"""Numerical lab for Fourier decay, energies, incidences and sumsets of measures on the parabola."""

from .exponents import gamma_exponent, iterate_gamma, sharp_exponent, sumset_exponent, zeta_exponent
from .measures import (
    AtomicMeasure,
    arc_measure,
    cantor_parabola_measure,
    lattice_parabola_measure,
    planar_cantor_measure,
    sum_measure,
)
from .pipelines import ExperimentRecord, list_pipelines, run

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "ExperimentRecord",
    "arc_measure",
    "cantor_parabola_measure",
    "gamma_exponent",
    "iterate_gamma",
    "lattice_parabola_measure",
    "list_pipelines",
    "planar_cantor_measure",
    "run",
    "sharp_exponent",
    "sum_measure",
    "sumset_exponent",
    "zeta_exponent",
]
