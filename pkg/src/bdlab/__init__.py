"""Boundary diffusion laboratory.

Solvers for harmonic fields whose boundary trace evolves by a dynamic
(Steklov type) condition, together with norm evaluators and checks of the
local and global regularity estimates on the computed trajectories.
"""
from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
