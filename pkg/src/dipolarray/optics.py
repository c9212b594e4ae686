"""Incident beams, field evaluation, transmission/reflection, Stokes, Skyrmion.

Beams propagate along +x with the focal plane at x = 0.  Gaussian and
Laguerre-Gauss envelopes are paraxial (sub-percent corrections at the waists
used here); plane waves are exact.  Transmission and reflection are
mode-overlap projections of the total/scattered field onto the incident
mode (and its x -> -x mirror image) over a transverse plane behind/in front
of the array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import genlaguerre

from .dipole_core import K_PROBE, PolarizationVector, kernel_coefficients
from .lattice import AtomArray

_CHUNK = 262_144  # kernel evaluations per chunk when summing dipole fields


@dataclass(frozen=True)
class BeamSpec:
    """Incident beam along +x: plane wave, Gaussian, or Laguerre-Gauss."""

    kind: str = "gaussian"
    polarization: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0], dtype=complex))
    amplitude: complex = 1.0 + 0.0j
    waist: float = 6.0
    l: int = 0
    p: int = 0
    focus_x: float = 0.0

    def __post_init__(self):
        if self.kind not in ("plane_wave", "gaussian", "laguerre_gauss"):
            raise ValueError(f"unknown beam kind {self.kind!r}")
        if self.kind != "plane_wave" and self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.p < 0:
            raise ValueError("radial index p must be >= 0")
        pol = np.asarray(self.polarization, dtype=complex)
        norm = np.linalg.norm(pol)
        if norm == 0:
            raise ValueError("polarization must be nonzero")
        object.__setattr__(self, "polarization", pol / norm)

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist**2  # k = 2 pi, lengths in lambda

    def mirrored(self) -> "BeamSpec":
        pol = self.polarization.copy()
        pol[0] = -pol[0]
        if np.linalg.norm(pol) == 0:
            raise ValueError("polarization parallel to x cannot be mirrored")
        return replace(self, polarization=pol)


def _scalar_envelope(beam: BeamSpec, x, y, z):
    """Paraxial scalar beam amplitude, including e^{ikx} and Gouy phases."""
    x = np.asarray(x, dtype=float) - beam.focus_x
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if beam.kind == "plane_wave":
        return np.exp(1j * K_PROBE * x) * np.ones(np.broadcast(x, y, z).shape, dtype=complex)

    w0 = beam.waist
    xr = beam.rayleigh_range
    rho2 = y * y + z * z
    w = w0 * np.sqrt(1.0 + (x / xr) ** 2)
    gouy = np.arctan(x / xr)
    curvature = np.where(x == 0.0, 0.0, x / (x * x + xr * xr))  # 1 / R(x)

    envelope = (w0 / w) * np.exp(-rho2 / w**2)
    phase = K_PROBE * x + 0.5 * K_PROBE * rho2 * curvature

    if beam.kind == "gaussian":
        return envelope * np.exp(1j * (phase - gouy))

    labs = abs(beam.l)
    radial = (np.sqrt(2.0 * rho2) / w) ** labs * genlaguerre(beam.p, labs)(2.0 * rho2 / w**2)
    azimuth = beam.l * np.arctan2(z, y)
    total_gouy = (2 * beam.p + labs + 1) * gouy
    return envelope * radial * np.exp(1j * (phase + azimuth - total_gouy))


def incident_field(beam: BeamSpec, positions) -> np.ndarray:
    """Complex incident field at one position (3,) or many (N, 3)."""
    pos = np.asarray(positions, dtype=float)
    single = pos.ndim == 1
    pos = pos.reshape(-1, 3)
    u = beam.amplitude * _scalar_envelope(beam, pos[:, 0], pos[:, 1], pos[:, 2])
    out = u[:, None] * beam.polarization[None, :]
    return out[0] if single else out


def scattered_field(array: AtomArray, state: PolarizationVector, positions) -> np.ndarray:
    """Sum of dipole fields eps0 E_s at one or many positions."""
    pos = np.asarray(positions, dtype=float)
    single = pos.ndim == 1
    pos = pos.reshape(-1, 3)
    dip = state.per_atom
    n_atoms = array.n_atoms
    out = np.zeros((pos.shape[0], 3), dtype=complex)
    rows = max(1, _CHUNK // max(n_atoms, 1))
    for start in range(0, pos.shape[0], rows):
        chunk = pos[start : start + rows]
        diff = chunk[:, None, :] - array.positions[None, :, :]
        dist = np.sqrt(np.einsum("mjc,mjc->mj", diff, diff))
        if np.any(dist == 0.0):
            raise ValueError("field evaluation point coincides with an atom")
        a, b = kernel_coefficients(K_PROBE * dist)
        rhat = diff / dist[:, :, None]
        radial = np.einsum("mjc,jc->mj", rhat, dip)
        out[start : start + rows] = np.einsum("mj,jc->mc", a, dip) + np.einsum(
            "mj,mjc->mc", b * radial, rhat
        )
    return out[0] if single else out


def total_field(array: AtomArray, state: PolarizationVector, beam: BeamSpec, positions) -> np.ndarray:
    return incident_field(beam, positions) + scattered_field(array, state, positions)


# ---------------------------------------------------------------------------
# transmission / reflection


def _array_extent(array: AtomArray):
    x = array.positions[:, 0]
    half = max(np.abs(array.positions[:, 1]).max(), np.abs(array.positions[:, 2]).max())
    return x.min(), x.max(), half


def _footprint_area(array: AtomArray) -> float:
    if array.spec is not None:
        return (array.spec.n_y * array.spec.d_y) * (array.spec.n_z * array.spec.d_z)
    widths = array.positions.max(axis=0) - array.positions.min(axis=0)
    return float(widths[1] * widths[2]) if widths[1] * widths[2] > 0 else 1.0


class OverlapProjector:
    """Precomputed linear maps from dipole amplitudes to t and r.

    For plane waves the transverse-plane overlap of a dipole field against
    e^{+-ikx} has the closed form (ik/2) u* . (1 - xx) d e^{-+ i k x_l} per
    unit area, normalized here by the array footprint area.  For Gaussian
    and LG beams the overlap integral is evaluated on a disk of
    ``radius_factor`` times the array half-width at planes ``plane_offset``
    outside the array, with grid spacing <= lambda/8.
    """

    def __init__(
        self,
        array: AtomArray,
        beam: BeamSpec,
        plane_offset: float = 5.0,
        radius_factor: float = 1.5,
        spacing: float = 0.125,
    ):
        if plane_offset <= 0:
            raise ValueError("projection planes must sit outside the array")
        x_min, x_max, half = _array_extent(array)
        self.array = array
        self.beam = beam
        self.x_plus = x_max + plane_offset
        self.x_minus = x_min - plane_offset
        if beam.kind == "plane_wave":
            self._init_plane_wave(array, beam)
        else:
            self._init_overlap(array, beam, half * radius_factor, spacing)

    def _init_plane_wave(self, array: AtomArray, beam: BeamSpec):
        area = _footprint_area(array)
        pol = beam.polarization
        mirror = beam.mirrored().polarization
        transverse = np.array([0.0, 1.0, 1.0])  # project out the x component
        prefactor = 0.5j * K_PROBE / (beam.amplitude * area)
        phase_t = np.exp(-1j * K_PROBE * array.positions[:, 0])
        phase_r = np.exp(+1j * K_PROBE * array.positions[:, 0])
        self.w_t = prefactor * (phase_t[:, None] * (pol.conj() * transverse)[None, :]).reshape(-1)
        self.w_r = prefactor * (phase_r[:, None] * (mirror.conj() * transverse)[None, :]).reshape(-1)

    def _init_overlap(self, array: AtomArray, beam: BeamSpec, radius: float, spacing: float):
        n = max(int(math.ceil(2.0 * radius / spacing)) + 1, 33)
        coords = np.linspace(-radius, radius, n)
        yy, zz = np.meshgrid(coords, coords, indexing="ij")
        mask = yy**2 + zz**2 <= radius**2
        y, z = yy[mask], zz[mask]

        def weights(x_plane: float, mirrored: bool):
            pts = np.stack([np.full_like(y, x_plane), y, z], axis=1)
            if mirrored:
                # mirror-image mode propagating toward -x: evaluate the
                # forward mode at (-x, y, z) and flip the x polarization
                eval_pts = pts * np.array([-1.0, 1.0, 1.0])
                mode = incident_field(beam.mirrored(), eval_pts)
            else:
                mode = incident_field(beam, pts)
            mode = mode / beam.amplitude  # unit-amplitude reference mode
            norm = np.einsum("mc,mc->", mode.conj(), mode)
            dip_w = np.zeros(3 * array.n_atoms, dtype=complex)
            rows = max(1, _CHUNK // max(len(y), 1))
            for start in range(0, array.n_atoms, rows):
                atoms = array.positions[start : start + rows]
                diff = pts[:, None, :] - atoms[None, :, :]
                dist = np.sqrt(np.einsum("mjc,mjc->mj", diff, diff))
                a, b = kernel_coefficients(K_PROBE * dist)
                rhat = diff / dist[:, :, None]
                # overlap of mode with the field of unit dipole e_c at each atom
                mc_a = np.einsum("mc,mj->jc", mode.conj(), a)
                mc_b = np.einsum("mc,mjc,mj->mj", mode.conj(), rhat, b)
                proj = mc_a + np.einsum("mj,mjc->jc", mc_b, rhat)
                dip_w[3 * start : 3 * (start + atoms.shape[0])] = proj.reshape(-1)
            return dip_w / (norm * self.beam.amplitude)

        self.w_t = weights(self.x_plus, mirrored=False)
        self.w_r = weights(self.x_minus, mirrored=True)

    def transmission_amplitude(self, state: PolarizationVector) -> complex:
        return 1.0 + complex(self.w_t @ state.amplitudes)

    def reflection_amplitude(self, state: PolarizationVector) -> complex:
        return complex(self.w_r @ state.amplitudes)


def transmission_reflection(
    array: AtomArray,
    state: PolarizationVector,
    beam: BeamSpec,
    plane_offset: float = 5.0,
    radius_factor: float = 1.5,
    projector: OverlapProjector | None = None,
) -> tuple[float, float, float]:
    """(T, R, transmitted phase) for a computed steady state.

    T = |t|^2 with t the overlap of the total field with the incident mode
    behind the array; R = |r|^2 with r the overlap of the scattered field
    with the mirrored mode in front.  Empty arrays give (1, 0, 0).
    """
    if array.n_atoms == 0:
        return 1.0, 0.0, 0.0
    if projector is None:
        projector = OverlapProjector(array, beam, plane_offset, radius_factor)
    t = projector.transmission_amplitude(state)
    r = projector.reflection_amplitude(state)
    return abs(t) ** 2, abs(r) ** 2, math.atan2(t.imag, t.real)


# ---------------------------------------------------------------------------
# field grids, Stokes parameters, Skyrmion number


@dataclass(frozen=True)
class FieldGrid:
    """Complex field samples on a plane x = x0 over a regular (y, z) grid."""

    x0: float
    y: np.ndarray
    z: np.ndarray
    values: np.ndarray  # (ny, nz, 3) complex

    def to_csv(self) -> str:
        lines = ["y,z,re_Ex,im_Ex,re_Ey,im_Ey,re_Ez,im_Ez"]
        for i, yv in enumerate(self.y):
            for j, zv in enumerate(self.z):
                ex, ey, ez = (complex(v) for v in self.values[i, j])
                lines.append(
                    f"{float(yv)!r},{float(zv)!r},{ex.real!r},{ex.imag!r},{ey.real!r},{ey.imag!r},{ez.real!r},{ez.imag!r}"
                )
        return "\n".join(lines) + "\n"


def evaluate_field_grid(
    array: AtomArray,
    state: PolarizationVector,
    beam: BeamSpec | None,
    x0: float,
    half_extent: float,
    n: int = 128,
) -> FieldGrid:
    """Total (or scattered, if beam is None) field on a square (y, z) grid."""
    y = np.linspace(-half_extent, half_extent, n)
    z = np.linspace(-half_extent, half_extent, n)
    yy, zz = np.meshgrid(y, z, indexing="ij")
    pts = np.stack([np.full(yy.size, x0), yy.ravel(), zz.ravel()], axis=1)
    values = scattered_field(array, state, pts)
    if beam is not None:
        values = values + incident_field(beam, pts)
    return FieldGrid(x0=x0, y=y, z=z, values=values.reshape(n, n, 3))


@dataclass(frozen=True)
class StokesGrid:
    """Per-point Stokes vector (s1, s2, s3), transverse intensity, validity."""

    y: np.ndarray
    z: np.ndarray
    s: np.ndarray          # (ny, nz, 3) real
    intensity: np.ndarray  # (ny, nz) real, |E_y|^2 + |E_z|^2
    valid: np.ndarray      # (ny, nz) bool

    def to_csv(self) -> str:
        lines = ["y,z,s1,s2,s3,intensity"]
        for i, yv in enumerate(self.y):
            for j, zv in enumerate(self.z):
                s1, s2, s3 = (float(v) for v in self.s[i, j])
                lines.append(f"{float(yv)!r},{float(zv)!r},{s1!r},{s2!r},{s3!r},{float(self.intensity[i, j])!r}")
        return "\n".join(lines) + "\n"


def stokes_grid(grid: FieldGrid, relative_floor: float = 1e-12) -> StokesGrid:
    """Stokes parameters in the rotated basis s1=(U-V)/sqrt2, s2=(U+V)/sqrt2, s3=-Q.

    Q, U, V are the standard normalized parameters built from E_y and E_z;
    points with (numerically) zero transverse intensity are flagged invalid.
    """
    ey = grid.values[:, :, 1]
    ez = grid.values[:, :, 2]
    intensity = np.abs(ey) ** 2 + np.abs(ez) ** 2
    valid = intensity > relative_floor * intensity.max() if intensity.max() > 0 else np.zeros_like(intensity, bool)

    with np.errstate(invalid="ignore", divide="ignore"):
        q = (np.abs(ey) ** 2 - np.abs(ez) ** 2) / intensity
        u = 2.0 * (ey * ez.conj()).real / intensity
        v = -2.0 * (ey * ez.conj()).imag / intensity
    s = np.stack([(u - v) / math.sqrt(2.0), (u + v) / math.sqrt(2.0), -q], axis=-1)
    s[~valid] = np.nan
    return StokesGrid(y=grid.y, z=grid.z, s=s, intensity=intensity, valid=valid)


def _fill_invalid(stokes: StokesGrid) -> np.ndarray:
    """Stokes field with invalid points replaced by their nearest valid value."""
    s = stokes.s.copy()
    if stokes.valid.all():
        return s
    if not stokes.valid.any():
        raise ValueError("Stokes vector undefined everywhere")
    from scipy.ndimage import distance_transform_edt

    _, (iy, iz) = distance_transform_edt(~stokes.valid, return_indices=True)
    return s[iy, iz]


def skyrmion_number(stokes: StokesGrid, require_valid: bool = False) -> float:
    """Topological charge of the Stokes texture by signed solid-angle summation.

    Each grid plaquette is split into two spherical triangles on the
    Poincare sphere; their oriented solid angles are accumulated and divided
    by 4 pi.  S is renormalized to unit length first; invalid points are
    extended from their nearest valid neighbor (or rejected when
    ``require_valid``).
    """
    if require_valid and not stokes.valid.all():
        raise ValueError("Stokes vector undefined inside the integration region")
    s = _fill_invalid(stokes)
    norms = np.linalg.norm(s, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero Stokes vector in integration region")
    s = s / norms

    a = s[:-1, :-1]
    b = s[1:, :-1]
    c = s[1:, 1:]
    d = s[:-1, 1:]
    total = _triangle_solid_angle(a, b, c) + _triangle_solid_angle(a, c, d)
    return float(total.sum() / (4.0 * math.pi))


def _triangle_solid_angle(a, b, c):
    """Oriented solid angle of spherical triangles (rows of unit vectors)."""
    numer = np.einsum("...c,...c->...", a, np.cross(b, c))
    denom = (
        1.0
        + np.einsum("...c,...c->...", a, b)
        + np.einsum("...c,...c->...", b, c)
        + np.einsum("...c,...c->...", c, a)
    )
    return 2.0 * np.arctan2(numer, denom)


# ---------------------------------------------------------------------------
# far field


def far_field_amplitude(array: AtomArray, state: PolarizationVector, directions) -> np.ndarray:
    """Leading 1/r far-field amplitude F with eps0 E -> F e^{ikr} / (kr)."""
    nhat = np.asarray(directions, dtype=float)
    single = nhat.ndim == 1
    nhat = nhat.reshape(-1, 3)
    nhat = nhat / np.linalg.norm(nhat, axis=1, keepdims=True)
    dip = state.per_atom
    phases = np.exp(-1j * K_PROBE * (nhat @ array.positions.T))  # (M, N)
    moments = phases @ dip  # (M, 3)
    radial = np.einsum("mc,mc->m", nhat, moments)
    f = (K_PROBE**3 / (4.0 * math.pi)) * (moments - nhat * radial[:, None])
    return f[0] if single else f


def beam_far_field(beam: BeamSpec, directions) -> np.ndarray:
    """Far-field amplitude of the incident Gaussian in the same normalization."""
    if beam.kind != "gaussian":
        raise ValueError("far-field beam term implemented for Gaussian beams")
    nhat = np.asarray(directions, dtype=float).reshape(-1, 3)
    nhat = nhat / np.linalg.norm(nhat, axis=1, keepdims=True)
    sin2 = 1.0 - nhat[:, 0] ** 2
    envelope = np.exp(-((K_PROBE * beam.waist / 2.0) ** 2) * sin2)
    forward = nhat[:, 0] > 0
    amp = -1j * K_PROBE * beam.rayleigh_range * beam.amplitude * envelope * forward
    pol = beam.polarization[None, :] - nhat * (nhat @ beam.polarization)[:, None]
    return amp[:, None] * pol


def far_field_intensity(
    array: AtomArray, state: PolarizationVector, directions, beam: BeamSpec | None = None
) -> np.ndarray:
    """|F|^2 per direction; optionally adds the incident beam's far field."""
    f = far_field_amplitude(array, state, directions)
    f = f.reshape(-1, 3)
    if beam is not None:
        f = f + beam_far_field(beam, directions)
    return np.einsum("mc,mc->m", f.conj(), f).real


def mode_fidelity(values_a: np.ndarray, values_b: np.ndarray) -> float:
    """Normalized overlap |<a, b>| / (|a| |b|) of two sampled complex fields."""
    a = np.asarray(values_a).ravel()
    b = np.asarray(values_b).ravel()
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
