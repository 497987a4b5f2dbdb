"""Wave-front tracking for the damped isothermal p-system on a torus.

The solver works in mass (Lagrangian) coordinates on ``[0, M)`` with
``u_t - v_y = 0`` and ``v_t + (alpha^2 / u)_y = -M v``; the damping is
applied by operator splitting at multiples of ``dt``.  Submodules:

``riemann``       exact Riemann solver and wave curves
``engine``        tapes of fronts, collisions, time steps and the event loop
``diagnostics``   functionals, traces, admissibility and a-priori bounds
``transform``     Eulerian / Lagrangian change of variables
``reference_fv``  finite-volume reference solver and L1 distances
``cli``           scenario files and the ``eulerflock`` command
"""

from .engine import (Front, RunParams, Tape, advance, apply_time_step, build_initial_tape,
                     next_event, resolve_interaction)
from .errors import *  # noqa: F401,F403
from .profiles import LagrangianProfile, constant_profile, uniform_profile
from .riemann import PressureLaw, RiemannFan, State, WaveFamily, solve_riemann

__all__ = [
    "Front", "RunParams", "Tape", "advance", "apply_time_step", "build_initial_tape",
    "next_event", "resolve_interaction", "LagrangianProfile", "constant_profile",
    "uniform_profile", "PressureLaw", "RiemannFan", "State", "WaveFamily", "solve_riemann",
]
