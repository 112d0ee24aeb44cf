"""randtime: simulation and validation of stochastic processes observed up to
random times (times of overall maximum, last-exit and last-passage times).

Submodules
----------
core            shared grids, paths, RNG streams, MC configuration
discrete        exact finite-tree engine for canonical pairs (ground truth)
levy            spectrally negative Levy models, Esscher tilt, two-step maximum
diffusion       scale functions, tilted diffusions, last-exit constructions
finite_horizon  Brownian motion on [0, T): F/f/h/G family and Q-dynamics
oracles         closed-form densities used as validation ground truth
stats           KS / L1 goodness-of-fit machinery and the parallel MC driver
cli             the ``randtime`` command-line entry point
"""

__version__ = "0.1.0"

from . import core, diffusion, discrete, finite_horizon, levy, oracles, stats  # noqa: F401
