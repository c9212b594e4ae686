"""ac Stark shifts of Zeeman sublevels and control-beam shift maps.

The direct light shift of a level coupled off-resonantly to a set of
transitions is evaluated from the standard second-order sum (intensity in
W/cm^2, frequencies angular).  For arbitrary propagation direction and
polarization the shift is decomposed into scalar, vector and tensor
polarizabilities; the proportionality constants are fixed by requiring the
decomposition to reproduce the direct sum exactly for every (m, q) pair of
pure spherical polarization.

The quantization axis for the sigma = -1, 0, +1 sublevel labels is +z
throughout the package: the four-atom unit cells lie in the xy plane, so the
m = +-1 sublevels span exactly the in-plane dipole components that build the
circulating and radial cell modes, and a constant Zeeman splitting acts on
them directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import CONSTANTS, UNITS, TransitionRecord, UnitSystem, clebsch_gordan
from .lattice import AtomArray

#: quantization axis for the sigma = -1, 0, +1 sublevel labels
QUANTIZATION_AXIS = np.array([0.0, 0.0, 1.0])

#: reference wavelength of the control laser (the middle 636-nm line)
CONTROL_REFERENCE_WAVELENGTH = 636.39e-9

_INTENSITY_SI = 1e4  # W/m^2 per W/cm^2


class PoleError(ValueError):
    """Light frequency too close to a transition pole for a meaningful shift."""


def spherical_frame(axis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed real triad (e1, e2, axis) completing a quantization axis.

    For the default +x axis this returns (y, z, x).
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    zhat = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(axis, zhat)) > 0.9:
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 = np.cross(zhat, axis)
        e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2, axis


def spherical_components(vector, axis=QUANTIZATION_AXIS) -> np.ndarray:
    """Spherical components (e_-1, e_0, e_+1) of a complex 3-vector."""
    e1, e2, e3 = spherical_frame(axis)
    v = np.asarray(vector, dtype=complex)
    u1, u2, u0 = e1 @ v, e2 @ v, e3 @ v
    return np.array([(u1 + 1j * u2) / math.sqrt(2.0), u0, -(u1 - 1j * u2) / math.sqrt(2.0)])


def sublevel_projectors(axis=QUANTIZATION_AXIS) -> np.ndarray:
    """3x3 Hermitian projectors onto the sigma = -1, 0, +1 sublevels.

    Returned in sublevel order (-1, 0, +1), expressed in lab Cartesian
    components.
    """
    e1, e2, e3 = spherical_frame(axis)
    plus = -(e1 + 1j * e2) / math.sqrt(2.0)
    minus = (e1 - 1j * e2) / math.sqrt(2.0)
    zero = e3.astype(complex)
    return np.stack([np.outer(v, v.conj()) for v in (minus, zero, plus)])


@dataclass(frozen=True)
class PolarizationGeometry:
    """Degree-of-circularity C and alignment D of a polarization vector."""

    C: float
    D: float

    @classmethod
    def from_polarization(cls, polarization, axis=QUANTIZATION_AXIS) -> "PolarizationGeometry":
        e = np.asarray(polarization, dtype=complex)
        norm = np.linalg.norm(e)
        if norm == 0:
            raise ValueError("polarization vector must be nonzero")
        em, e0, ep = spherical_components(e / norm, axis)
        return cls(C=float(abs(em) ** 2 - abs(ep) ** 2), D=float(1.0 - 3.0 * abs(e0) ** 2))


@dataclass(frozen=True)
class PolarizabilityTriple:
    """Scalar/vector/tensor shift-per-intensity coefficients (rad/s per W/cm^2).

    The level shift of sublevel mu in a field of local intensity I and
    polarization geometry (C, D) is
    ``I * (scalar + C * mu/2 * vector - D * (3 mu^2 - 2)/2 * tensor)``.
    """

    scalar: float
    vector: float
    tensor: float

    def shift(self, mu: int, geometry: PolarizationGeometry, intensity: float) -> float:
        bracket = (
            self.scalar
            + geometry.C * (mu / 2.0) * self.vector
            - geometry.D * ((3.0 * mu * mu - 2.0) / 2.0) * self.tensor
        )
        return intensity * bracket


def light_shift_direct(
    level: tuple[int, int],
    polarization_component: int,
    intensity: float,
    frequency: float,
    transitions: list[TransitionRecord],
) -> float:
    """Direct second-order light shift of level (J_i, m_i), in rad/s.

    ``polarization_component`` is the spherical index q of the light,
    ``intensity`` is in W/cm^2 and ``frequency`` is the angular light
    frequency.  Each transition couples the shifted level (its j_lower) to a
    partner with j_upper; the Clebsch-Gordan weight is
    <J_i m_i | J_k (m_i - q); 1 q>^2.
    """
    j_i, m_i = level
    q = polarization_component
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    if q not in (-1, 0, 1):
        raise ValueError("polarization component must be -1, 0 or +1")
    if abs(m_i) > j_i:
        raise ValueError("|m_i| must not exceed J_i")

    total = 0.0
    for tr in transitions:
        if tr.j_lower != j_i:
            raise ValueError(
                f"transition {tr.label}: shifted level J={j_i} must match j_lower={tr.j_lower}"
            )
        w_ik = tr.angular_frequency
        if abs(w_ik - frequency) < 1e-8 * w_ik:
            raise PoleError(f"frequency within 1e-8 of the {tr.label} pole")
        cg = clebsch_gordan(tr.j_upper, m_i - q, 1, q, j_i, m_i)
        if cg == 0.0:
            continue
        total += tr.linewidth * w_ik * (2 * tr.j_upper + 1) * cg * cg / (w_ik**2 - frequency**2)

    prefactor = -6.0 * CONSTANTS.c**2 * intensity * _INTENSITY_SI / (
        CONSTANTS.hbar * frequency**3 * (2 * j_i + 1)
    )
    return prefactor * total


def polarizability_triple(frequency: float, transitions: list[TransitionRecord]) -> PolarizabilityTriple:
    """Scalar/vector/tensor decomposition for a J=1 level, per unit intensity.

    Solved from the three m=1 shifts under pure q = -1, 0, +1 light so that
    the decomposition reproduces ``light_shift_direct`` for every (m, q)
    pair.
    """
    if any(tr.j_lower != 1 for tr in transitions):
        raise ValueError("triple decomposition implemented for J=1 levels")
    b = {q: light_shift_direct((1, 1), q, 1.0, frequency, transitions) for q in (-1, 0, 1)}
    scalar = (b[-1] + b[0] + b[1]) / 3.0
    vector = b[-1] - b[1]
    tensor = (2.0 * b[0] - b[-1] - b[1]) / 3.0
    return PolarizabilityTriple(scalar=scalar, vector=vector, tensor=tensor)


@dataclass(frozen=True)
class ControlBeam:
    """Off-resonant standing-wave control beam imposing level shifts.

    ``intensity`` in W/cm^2 refers to a traveling wave of the antinode
    amplitude; ``detuning`` is the angular offset (rad/s) of the control
    frequency from the reference control line; ``phase`` shifts the standing
    wave pattern cos(k_c . r + phase).
    """

    intensity: float
    detuning: float
    wavevector_direction: np.ndarray
    phase: float
    polarization: np.ndarray
    reference_wavelength: float = CONTROL_REFERENCE_WAVELENGTH

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")
        direction = np.asarray(self.wavevector_direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        pol = np.asarray(self.polarization, dtype=complex)
        norm = np.linalg.norm(pol)
        if norm == 0:
            raise ValueError("polarization must be nonzero")
        object.__setattr__(self, "wavevector_direction", direction)
        object.__setattr__(self, "polarization", pol / norm)

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * CONSTANTS.c / self.reference_wavelength + self.detuning

    @property
    def wavenumber_si(self) -> float:
        return self.angular_frequency / CONSTANTS.c


def wavevector_for_cell_periodicity(
    d_y: float,
    wavelength_c: float = CONTROL_REFERENCE_WAVELENGTH,
    detuning: float = 0.0,
    units: UnitSystem = UNITS,
) -> np.ndarray:
    """In-plane tilted unit wavevector giving field periodicity d_y/2 along y.

    ``d_y`` is in probe wavelengths.  The y component is fixed by
    k_y = 4 pi / d_y (so the shift pattern repeats identically on every
    unit cell); the x component makes up the magnitude and z is zero.
    """
    k_c = (2.0 * math.pi * CONSTANTS.c / wavelength_c + detuning) / CONSTANTS.c
    k_y = 4.0 * math.pi / (d_y * units.length_unit)
    ratio = k_y / k_c
    if ratio > 1.0:
        raise ValueError(f"required k_y exceeds k_c (d_y = {d_y} too small for {wavelength_c})")
    return np.array([math.sqrt(1.0 - ratio**2), ratio, 0.0])


def control_shift_map(
    beam: ControlBeam,
    array: AtomArray,
    zeeman_splitting: float = 0.0,
    transitions: list[TransitionRecord] | None = None,
    quantization_axis=QUANTIZATION_AXIS,
    units: UnitSystem = UNITS,
) -> np.ndarray:
    """Per-atom, per-sublevel control shifts delta_sigma^(j) in units of gamma.

    Evaluates the standing-wave intensity at every atom, applies the
    scalar/vector/tensor decomposition with C and D from the beam
    polarization in the quantization frame, and adds -/+ the Zeeman
    splitting (gamma units) to the m = -/+ 1 sublevels.
    """
    if transitions is None:
        from .model import control_transitions

        transitions = control_transitions()
    triple = polarizability_triple(beam.angular_frequency, transitions)
    geom = PolarizationGeometry.from_polarization(beam.polarization, quantization_axis)

    k_vec = beam.wavenumber_si * units.length_unit * beam.wavevector_direction
    local = np.cos(array.positions @ k_vec + beam.phase) ** 2
    intensity = beam.intensity * local

    shifts = np.empty((array.n_atoms, 3))
    for col, mu in enumerate((-1, 0, 1)):
        bracket = triple.shift(mu, geom, 1.0)
        shifts[:, col] = intensity * bracket / units.rate_unit + mu * zeeman_splitting
    return shifts


def scalar_polarizability(
    frequency: float, transitions: list[TransitionRecord], j_level: int | None = None
) -> float:
    """m-averaged polarizability in Hz per (W/cm^2), trap-attractive positive."""
    if j_level is None:
        levels = {tr.j_lower for tr in transitions}
        if len(levels) != 1:
            raise ValueError("transitions must share a common shifted level")
        (j_level,) = levels
    shifts = [
        light_shift_direct((j_level, m), 0, 1.0, frequency, transitions)
        for m in range(-j_level, j_level + 1)
    ]
    return -np.mean(shifts) / (2.0 * math.pi)


def polarizability_curve(
    state_transitions: list[TransitionRecord], wavelengths: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Scalar polarizability sampled over wavelength (m).

    Returns (values, valid_mask); samples within 1e-6 of a pole are skipped
    and flagged invalid (NaN).
    """
    wavelengths = np.asarray(wavelengths, dtype=float)
    values = np.full(wavelengths.shape, np.nan)
    valid = np.zeros(wavelengths.shape, dtype=bool)
    for i, lam in enumerate(wavelengths):
        omega = 2.0 * math.pi * CONSTANTS.c / lam
        try:
            values[i] = scalar_polarizability(omega, state_transitions)
            valid[i] = True
        except PoleError:
            continue
    return values, valid


def find_polarizability_crossing(
    transitions_a: list[TransitionRecord],
    transitions_b: list[TransitionRecord],
    wavelengths: np.ndarray,
) -> list[float]:
    """Wavelengths where two states' scalar polarizabilities cross (magic points)."""
    va, ma = polarizability_curve(transitions_a, wavelengths)
    vb, mb = polarizability_curve(transitions_b, wavelengths)
    diff = va - vb
    crossings = []
    for i in range(len(wavelengths) - 1):
        if not (ma[i] and ma[i + 1] and mb[i] and mb[i + 1]):
            continue
        if diff[i] == 0.0 or diff[i] * diff[i + 1] < 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            crossings.append(float(wavelengths[i] + t * (wavelengths[i + 1] - wavelengths[i])))
    return crossings


@dataclass(frozen=True)
class TrapField:
    """The three magic-wavelength standing waves evaluated at one point."""

    x_wave: np.ndarray
    y_wave: np.ndarray
    z_wave: np.ndarray
    e1: np.ndarray = field(compare=False, default=None)
    e2: np.ndarray = field(compare=False, default=None)


def trap_field(position_m, magic_wavelength: float, k_z_fraction: float = 0.6, amplitude: float = 1.0) -> TrapField:
    """Trap standing waves at a position (meters): x and y cosine waves plus
    the tilted z pair with polarizations e1, e2 transverse to each beam."""
    if not 0.0 < k_z_fraction < 1.0:
        raise ValueError("k_z fraction must lie in (0, 1)")
    x, y, z = np.asarray(position_m, dtype=float)
    k_m = 2.0 * math.pi / magic_wavelength
    x_wave = amplitude * math.cos(k_m * x) * np.array([0, 1, 0], dtype=complex)
    y_wave = amplitude * math.cos(k_m * y) * np.array([0, 0, 1], dtype=complex)

    k_z = k_z_fraction * k_m
    k_y = math.sqrt(k_m**2 - k_z**2)
    e1 = np.array([0.0, -k_z, k_y]) / k_m
    e2 = np.array([0.0, k_z, k_y]) / k_m
    z_wave = amplitude * (
        e1.astype(complex) * np.exp(1j * (k_y * y + k_z * z))
        + e2.astype(complex) * np.exp(1j * (k_y * y - k_z * z))
    )
    return TrapField(x_wave=x_wave, y_wave=y_wave, z_wave=z_wave, e1=e1, e2=e2)
