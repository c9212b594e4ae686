"""Bilayer lattice geometry and per-atom, per-sublevel detunings.

Positions are in units of the probe wavelength, detunings in units of the
probe half linewidth.  The bilayer consists of a rectangular lattice in the
yz plane with a four-atom square unit cell in the xy plane at every site
(corner order within a cell: (-x,-y), (+x,-y), (+x,+y), (-x,+y)).  Arrays
are centered on the origin so beam axes and azimuthal profiles need no
offsets.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

#: sublevel column order of AtomArray.detunings
SUBLEVELS = (-1, 0, +1)

#: in-cell corner displacements in units of (a_x/2, a_y/2); fixed convention
CORNER_SIGNS = np.array([(-1, -1), (+1, -1), (+1, +1), (-1, +1)], dtype=float)

CSV_HEADER = "id,x,y,z,delta_m,delta_0,delta_p"


@dataclass(frozen=True)
class LatticeSpec:
    """Bilayer geometry: cell side lengths, lattice constants, cell counts."""

    a_x: float = 0.08
    a_y: float = 0.08
    d_y: float = 8 * 0.08
    d_z: float = 0.82
    n_y: int = 21
    n_z: int = 21

    def __post_init__(self):
        if min(self.a_x, self.a_y, self.d_y, self.d_z) <= 0:
            raise ValueError("all spacings must be positive")
        if self.n_y < 1 or self.n_z < 1:
            raise ValueError("cell counts must be >= 1")

    @property
    def n_atoms(self) -> int:
        return 4 * self.n_y * self.n_z

    @property
    def half_width_y(self) -> float:
        return ((self.n_y - 1) * self.d_y + self.a_y) / 2.0

    @property
    def half_width_z(self) -> float:
        return (self.n_z - 1) * self.d_z / 2.0


@dataclass(frozen=True)
class AtomArray:
    """Atom positions plus per-atom, per-sublevel relative detunings.

    ``detunings[j, s]`` is the shift of sublevel ``SUBLEVELS[s]`` on atom j
    in units of gamma (the overall laser detuning is added separately when
    the coupling matrix is assembled).  ``cell_index[j]`` is (cell id,
    corner id) for bilayer builds and (j, 0) for free-form position lists.
    """

    positions: np.ndarray
    detunings: np.ndarray
    cell_index: np.ndarray
    spec: LatticeSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        det = np.asarray(self.detunings, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must be (N, 3)")
        if det.shape != (pos.shape[0], 3):
            raise ValueError("detunings must be (N, 3)")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(det)):
            raise ValueError("positions and detunings must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "cell_index", np.asarray(self.cell_index, dtype=int))
        self.positions.setflags(write=False)
        self.detunings.setflags(write=False)
        self.cell_index.setflags(write=False)

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    def with_detunings(self, detunings: np.ndarray) -> "AtomArray":
        return replace(self, detunings=np.array(detunings, dtype=float))


def from_positions(positions) -> AtomArray:
    """Wrap a free-form list of positions with zero detunings."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = pos.shape[0]
    cells = np.stack([np.arange(n), np.zeros(n, dtype=int)], axis=1)
    return AtomArray(pos, np.zeros((n, 3)), cells)


def build_bilayer(spec: LatticeSpec) -> AtomArray:
    """Construct the centered bilayer array of 4 * n_y * n_z atoms."""
    y_centers = (np.arange(spec.n_y) - (spec.n_y - 1) / 2.0) * spec.d_y
    z_centers = (np.arange(spec.n_z) - (spec.n_z - 1) / 2.0) * spec.d_z

    positions = np.empty((spec.n_atoms, 3))
    cell_index = np.empty((spec.n_atoms, 2), dtype=int)
    i = 0
    cell = 0
    for z in z_centers:
        for y in y_centers:
            for corner, (sx, sy) in enumerate(CORNER_SIGNS):
                positions[i] = (sx * spec.a_x / 2.0, y + sy * spec.a_y / 2.0, z)
                cell_index[i] = (cell, corner)
                i += 1
            cell += 1
    return AtomArray(positions, np.zeros((spec.n_atoms, 3)), cell_index, spec=spec)


def assign_detunings(array: AtomArray, pattern) -> AtomArray:
    """Give every unit cell the same 4 x 3 (corner, sublevel) shift pattern.

    Stores the relative part delta_sigma^(j); the overall laser detuning is
    composed in the coupling matrix.  Overwrites existing detunings
    (idempotent for a fixed pattern).
    """
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != (4, 3):
        raise ValueError("pattern must be (4 corners, 3 sublevels)")
    if not np.all(np.isfinite(pattern)):
        raise ValueError("pattern must be finite")
    return array.with_detunings(pattern[array.cell_index[:, 1] % 4])


def add_gradient(array: AtomArray, gradient: float, axis: str = "y", sublevels=(-1, 0, 1)) -> AtomArray:
    """Add ``gradient * coordinate`` to the masked sublevel detunings."""
    if axis not in ("y", "z"):
        raise ValueError("gradient axis must be 'y' or 'z'")
    if not np.isfinite(gradient):
        raise ValueError("gradient must be finite")
    coord = array.positions[:, 1 if axis == "y" else 2]
    det = array.detunings.copy()
    for s in sublevels:
        det[:, SUBLEVELS.index(s)] += gradient * coord
    return array.with_detunings(det)


def add_offsets(array: AtomArray, offsets: np.ndarray) -> AtomArray:
    """Add one scalar shift per atom to all three sublevels."""
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (array.n_atoms,):
        raise ValueError("offsets must be one scalar per atom")
    return array.with_detunings(array.detunings + offsets[:, None])


def azimuthal_angles(array: AtomArray, branch_cut_angle: float = 0.0) -> np.ndarray:
    """atan2(z, y) per atom, mapped to [branch_cut, branch_cut + 2 pi)."""
    phi = np.arctan2(array.positions[:, 2], array.positions[:, 1])
    return np.mod(phi - branch_cut_angle, 2.0 * np.pi) + branch_cut_angle


def add_azimuthal_phase_shifts(array: AtomArray, shift_scale: float, branch_cut_angle: float = 0.0) -> AtomArray:
    """Add a detuning offset proportional to the azimuthal angle in the yz plane.

    Composed with the Huygens phase-detuning map this imprints a transmission
    phase winding by 2 pi around the beam axis.
    """
    if not 0.0 <= branch_cut_angle < 2.0 * np.pi:
        raise ValueError("branch cut angle must lie in [0, 2 pi)")
    phi = azimuthal_angles(array, branch_cut_angle) - branch_cut_angle
    return add_offsets(array, shift_scale * phi)


def to_csv(array: AtomArray) -> str:
    """Positions/detunings as CSV with the fixed column schema."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for j in range(array.n_atoms):
        x, y, z = (float(v) for v in array.positions[j])
        dm, d0, dp = (float(v) for v in array.detunings[j])
        buf.write(f"{j},{x!r},{y!r},{z!r},{dm!r},{d0!r},{dp!r}\n")
    return buf.getvalue()
