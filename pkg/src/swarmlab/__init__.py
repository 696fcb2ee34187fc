"""swarmlab: aggregation on a bounded interval with and without nonlinear diffusion.

Modules
-------
potentials   interaction kernels (c0 and c2)
measures     grids, densities, particle ensembles, mixed measures, CSV I/O
transport    exact 1-D Wasserstein distances
energy       interaction and diffusive energies
particles    particle method for the plain model
fv           upwind finite-volume scheme for the diffusive model
equilibria   diffusive minimizers and first-variation profiles
experiments  batch drivers behind the ``swarmlab`` command
plotting     PNG figures written next to the CSVs
cli          the ``swarmlab`` command line
"""
from .measures import DensityField, Grid1D, MixedMeasure, ParticleEnsemble
from .potentials import PotentialSpec
from .transport import w2_mixed

__all__ = ["DensityField", "Grid1D", "MixedMeasure", "ParticleEnsemble", "PotentialSpec",
           "w2_mixed"]
__version__ = "0.1.0"
