"""Differentiable force-closure scoring and MCMC grasp synthesis.

Subpackages:

* ``sdf``     — signed-distance-field object shapes with derivatives
* ``fcest``   — differentiable force-closure estimator and its gradient
* ``oracle``  — classic LP-based force-closure test and minimum-friction search
* ``hand``    — config-defined articulated hands (FK, Jacobians, energies)
* ``sampler`` — grasp energy, Langevin MCMC chains, filtering, refinement
* ``cli``     — command-line experiment drivers
"""

__version__ = "0.1.0"
