"""Coupled-dipole simulations of bilayer atomic-lattice metasurfaces."""

__version__ = "0.1.0"

from . import dipole_core, huygens, lattice, model, multipole, optics, shifts  # noqa: F401
