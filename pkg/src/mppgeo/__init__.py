"""Most probable paths of developed diffusion processes on manifolds.

Numerical solvers for the first-order MPP systems on general charts, Lie
groups, homogeneous spaces and landmark manifolds, plus development /
anti-development machinery, singular-curve certificates, a two-point
boundary-value shooting solver and a Stratonovich path sampler.
"""

from .geometry import (AntiDevelopmentPath, CovarianceSchedule, CurvePath,
                       DriftModel, ManifoldModel, antidevelop, develop,
                       parallel_transport, transport_frame)
from .engine import (MPPProblem, MPPState, Trajectory, integrate_forward,
                     mpp_rhs, om_energy, singularity_certificate)
from .shooting import ShootingConfig, ShootingProblem, ShootingResult, solve

__version__ = "0.1.0"
