"""Spectrum scans, the eight-parameter transmission optimization, parameter
compensation scans, and wavefront-shaping drivers (beam steering, Poincare
beam).

A parameter set fixes the control standing wave (phase, intensity, detuning,
polarization orientation/ellipticity), the in-cell lattice constants and a
constant Zeeman splitting; the resulting sublevel shift pattern repeats on
every unit cell and turns the bilayer into a surface whose transmitted phase
sweeps 2 pi across an isolated resonance while transmission stays high.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dipole_core, lattice, optics, shifts
from .lattice import AtomArray, LatticeSpec, build_bilayer
from .optics import BeamSpec, OverlapProjector


@dataclass(frozen=True)
class HuygensParams:
    """The eight control degrees of freedom of the atomic Huygens surface.

    ``intensity`` in W/cm^2, ``delta_omega`` the angular control-laser
    detuning (rad/s) from the reference control line, ``psi``/``chi`` the
    polarization orientation/ellipticity in the transverse plane of the
    control wavevector, lattice constants in probe wavelengths, ``zeeman``
    in gamma.
    """

    phi: float = 1.1
    intensity: float = 2.36e3
    delta_omega: float = 2.0 * math.pi * 2.7e10
    psi: float = 0.0297
    chi: float = -0.0091
    a_x: float = 0.08
    a_y: float = 0.08
    zeeman: float = -13.0

    NAMES = ("phi", "intensity", "delta_omega", "psi", "chi", "a_x", "a_y", "zeeman")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.NAMES], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "HuygensParams":
        return cls(**{name: float(v) for name, v in zip(cls.NAMES, vec)})


def transverse_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """In-plane and z unit vectors transverse to an in-plane wavevector."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    u1 = np.array([d[1], -d[0], 0.0])
    norm = np.linalg.norm(u1)
    if norm < 1e-12:
        u1 = np.array([1.0, 0.0, 0.0])
    else:
        u1 /= norm
    return u1, np.array([0.0, 0.0, 1.0])


def polarization_from_jones(psi: float, chi: float, direction) -> np.ndarray:
    """Unit polarization from orientation/ellipticity in the transverse plane."""
    u1, u2 = transverse_basis(direction)
    a1 = math.cos(psi) * math.cos(chi) - 1j * math.sin(psi) * math.sin(chi)
    a2 = math.sin(psi) * math.cos(chi) + 1j * math.cos(psi) * math.sin(chi)
    return a1 * u1 + a2 * u2


def jones_parameters(polarization, direction) -> tuple[float, float]:
    """Orientation/ellipticity of a polarization vector, transverse part only."""
    u1, u2 = transverse_basis(direction)
    e = np.asarray(polarization, dtype=complex)
    a1, a2 = u1 @ e, u2 @ e
    norm = math.sqrt(abs(a1) ** 2 + abs(a2) ** 2)
    a1, a2 = a1 / norm, a2 / norm
    s1 = abs(a1) ** 2 - abs(a2) ** 2
    s2 = 2.0 * (a1.conjugate() * a2).real
    s3 = 2.0 * (a1.conjugate() * a2).imag
    psi = 0.5 * math.atan2(s2, s1)
    chi = 0.5 * math.asin(max(-1.0, min(1.0, s3)))
    return psi, chi


def paper_polarization() -> np.ndarray:
    """The printed control polarization, normalized."""
    e = np.array([0.7 + 0.2j, -0.6 - 0.2j, 0.03])
    return e / np.linalg.norm(e)


def paper_params() -> HuygensParams:
    """Printed Huygens parameter set with (psi, chi) fitted to the printed
    polarization after projecting it transverse to the control wavevector."""
    delta_omega = 2.0 * math.pi * 2.7e10
    direction = shifts.wavevector_for_cell_periodicity(8 * 0.08, detuning=delta_omega)
    e = paper_polarization()
    e = e - (e @ direction) * direction
    psi, chi = jones_parameters(e, direction)
    return HuygensParams(psi=psi, chi=chi, delta_omega=delta_omega)


@dataclass(frozen=True)
class HuygensSetup:
    """Concrete array + control beam realized from a parameter set."""

    array: AtomArray
    beam_control: shifts.ControlBeam
    spec: LatticeSpec


def realize(params: HuygensParams, base_spec: LatticeSpec, zeeman_in_map: bool = True) -> HuygensSetup:
    """Build the shifted atom array for a parameter set.

    ``base_spec`` fixes the cell counts, d_z, and the d_y / a_y ratio; the
    in-cell constants come from the parameter set.
    """
    ratio = base_spec.d_y / base_spec.a_y
    spec = replace(base_spec, a_x=params.a_x, a_y=params.a_y, d_y=ratio * params.a_y)
    array = build_bilayer(spec)
    direction = shifts.wavevector_for_cell_periodicity(spec.d_y, detuning=params.delta_omega)
    control = shifts.ControlBeam(
        intensity=params.intensity,
        detuning=params.delta_omega,
        wavevector_direction=direction,
        phase=params.phi,
        polarization=polarization_from_jones(params.psi, params.chi, direction),
    )
    det = shifts.control_shift_map(control, array, zeeman_splitting=params.zeeman if zeeman_in_map else 0.0)
    return HuygensSetup(array=array.with_detunings(det), beam_control=control, spec=spec)


@dataclass(frozen=True)
class SpectrumResult:
    """T/R/phase versus overall detuning with continuously unwrapped phase."""

    detunings: np.ndarray
    transmission: np.ndarray
    reflection: np.ndarray
    phase: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def to_csv(self) -> str:
        lines = ["detuning,T,R,phase"]
        for d, t, r, p in zip(self.detunings, self.transmission, self.reflection, self.phase):
            lines.append(f"{float(d)!r},{float(t)!r},{float(r)!r},{float(p)!r}")
        return "\n".join(lines) + "\n"


class SpectrumEngine:
    """Reusable solver + projector for T/R spectra of one shifted array."""

    def __init__(self, array: AtomArray, beam: BeamSpec, plane_offset: float = 5.0, radius_factor: float = 1.5):
        matrix = dipole_core.assemble_coupling_matrix(array)
        self.array = array
        self.beam = beam
        self.solver = dipole_core.SpectrumSolver(matrix)
        del matrix
        self.projector = OverlapProjector(array, beam, plane_offset, radius_factor)
        self.drive = dipole_core.drive_from_field(optics.incident_field(beam, array.positions))

    def state(self, detuning: float) -> dipole_core.PolarizationVector:
        return self.solver.solve(detuning, self.drive)

    def point(self, detuning: float) -> tuple[float, float, float]:
        b = self.state(detuning)
        t = self.projector.transmission_amplitude(b)
        r = self.projector.reflection_amplitude(b)
        return abs(t) ** 2, abs(r) ** 2, math.atan2(t.imag, t.real)

    def scan(self, detunings) -> SpectrumResult:
        detunings = np.asarray(detunings, dtype=float)
        tt = np.empty(detunings.size)
        rr = np.empty(detunings.size)
        ph = np.empty(detunings.size)
        for i, d in enumerate(detunings):
            tt[i], rr[i], ph[i] = self.point(d)
        return SpectrumResult(detunings=detunings, transmission=tt, reflection=rr, phase=np.unwrap(ph))


def spectrum_scan(
    params: HuygensParams,
    base_spec: LatticeSpec,
    beam: BeamSpec,
    detuning_range: tuple[float, float],
    n_points: int = 60,
) -> SpectrumResult:
    """Full pipeline: realize the shift map, then scan T/R/phase vs detuning."""
    setup = realize(params, base_spec)
    engine = SpectrumEngine(setup.array, beam)
    detunings = np.linspace(detuning_range[0], detuning_range[1], n_points)
    result = engine.scan(detunings)
    result.metadata.update(
        params={name: getattr(params, name) for name in HuygensParams.NAMES},
        geometry_hash=dipole_core.array_content_hash(setup.array),
    )
    return result


def full_phase_window(spectrum: SpectrumResult, span: float = 2.0 * math.pi) -> tuple[int, int] | None:
    """Smallest index window over which the unwrapped phase spans ``span``.

    Among all candidate windows the one maximizing the minimum transmission
    is returned; None when no window exists.
    """
    phase = spectrum.phase
    n = phase.size
    best = None
    best_score = -1.0
    j = 0
    for i in range(n):
        j = max(j, i + 1)
        while j < n and abs(phase[j] - phase[i]) < span:
            j += 1
        if j == n:
            break
        score = float(spectrum.transmission[i : j + 1].min())
        if score > best_score:
            best_score = score
            best = (i, j)
    return best


def huygens_objective(
    params: HuygensParams,
    base_spec: LatticeSpec,
    beam: BeamSpec,
    detuning_range: tuple[float, float],
    n_points: int = 60,
) -> float:
    """Minimum transmission over a full 2-pi transmitted-phase window.

    Returns 0 when the scan contains no 2-pi span (e.g. a bare
    electric-dipole resonance).
    """
    try:
        spectrum = spectrum_scan(params, base_spec, beam, detuning_range, n_points)
    except (ValueError, dipole_core.NumericalError):
        return 0.0
    window = full_phase_window(spectrum)
    if window is None:
        return 0.0
    i, j = window
    return float(spectrum.transmission[i : j + 1].min())


_DEFAULT_STEPS = {
    "phi": 0.05,
    "intensity": 50.0,
    "delta_omega": 5e8,
    "psi": 0.01,
    "chi": 0.005,
    "a_x": 0.002,
    "a_y": 0.002,
    "zeeman": 0.5,
}


def optimize(
    initial: HuygensParams,
    frozen: tuple[str, ...],
    base_spec: LatticeSpec,
    beam: BeamSpec,
    detuning_range: tuple[float, float],
    budget: int = 200,
    seed: int = 0,
    n_points: int = 48,
    bounds_fraction: float | None = None,
) -> tuple[HuygensParams, float]:
    """Derivative-free local search (Nelder-Mead with seeded restarts).

    ``frozen`` names parameters held fixed; the returned objective is never
    worse than the initial one.  ``bounds_fraction`` restricts every free
    parameter to within that relative distance of its initial value.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    free = [name for name in HuygensParams.NAMES if name not in frozen]
    start = initial.as_vector()
    best_params = initial
    best_value = huygens_objective(initial, base_spec, beam, detuning_range, n_points)
    if not free:
        return best_params, best_value

    idx = [HuygensParams.NAMES.index(name) for name in free]
    steps = np.array([_DEFAULT_STEPS[name] for name in free])
    lo = hi = None
    if bounds_fraction is not None:
        center = start[idx]
        width = np.maximum(np.abs(center) * bounds_fraction, steps)
        lo, hi = center - width, center + width

    evaluations = 0

    def objective(x: np.ndarray) -> float:
        nonlocal evaluations, best_params, best_value
        if lo is not None:
            x = np.clip(x, lo, hi)
        vec = start.copy()
        vec[idx] = x
        params = HuygensParams.from_vector(vec)
        evaluations += 1
        value = huygens_objective(params, base_spec, beam, detuning_range, n_points)
        if value > best_value:
            best_value = value
            best_params = params
        return -value

    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    x0 = start[idx].astype(float)
    while evaluations < budget:
        remaining = budget - evaluations
        simplex = np.vstack([x0, x0 + np.diag(steps)])
        minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxfev": remaining, "initial_simplex": simplex, "xatol": 1e-6, "fatol": 1e-5},
        )
        if evaluations >= budget:
            break
        x0 = best_params.as_vector()[idx] + steps * rng.standard_normal(len(idx)) * 0.5
    return best_params, best_value


def pi_point(spectrum: SpectrumResult) -> tuple[float, float]:
    """(detuning, T) where the transmitted phase is pi away from the baseline.

    The baseline is the phase at the first scan point, so scans should start
    off-resonance where the array is transparent.  Raises when the phase
    never reaches baseline +- pi.
    """
    phase = spectrum.phase
    direction = 1.0 if phase[-1] >= phase[0] else -1.0
    target = phase[0] + direction * math.pi
    rel = direction * (phase - target)
    cross = np.nonzero(rel[:-1] * rel[1:] <= 0)[0]
    if cross.size == 0:
        raise ValueError("transmitted phase does not cross pi within the scan")
    k = int(cross[0])
    frac = (target - phase[k]) / (phase[k + 1] - phase[k])
    delta = spectrum.detunings[k] + frac * (spectrum.detunings[k + 1] - spectrum.detunings[k])
    t_here = spectrum.transmission[k] + frac * (spectrum.transmission[k + 1] - spectrum.transmission[k])
    return float(delta), float(t_here)


def resonance_point(spectrum: SpectrumResult) -> tuple[float, float, float]:
    """(detuning, T, phase deviation from the targeted pi) at minimum T."""
    k = int(np.argmin(spectrum.transmission))
    direction = 1.0 if spectrum.phase[-1] >= spectrum.phase[0] else -1.0
    target = spectrum.phase[0] + direction * math.pi
    dev = math.remainder(spectrum.phase[k] - target, 2.0 * math.pi)
    return float(spectrum.detunings[k]), float(spectrum.transmission[k]), float(dev)


def compensation_scan(
    base: HuygensParams,
    scan_param: str,
    scan_values,
    compensate_param: str,
    compensate_values,
    base_spec: LatticeSpec,
    beam: BeamSpec,
    detuning_range: tuple[float, float],
    n_points: int = 40,
) -> dict:
    """Grid map of transmission at the pi-phase point versus two parameters.

    For each scan value the compensated ridge entry is the compensation
    value maximizing T at the pi-phase point; cells without a pi crossing
    score zero.
    """
    if scan_param == compensate_param:
        raise ValueError("scan and compensation parameters must differ")
    t_map = np.zeros((len(scan_values), len(compensate_values)))
    dev_map = np.zeros_like(t_map)
    for i, sv in enumerate(scan_values):
        for j, cv in enumerate(compensate_values):
            params = replace(base, **{scan_param: float(sv), compensate_param: float(cv)})
            try:
                spectrum = spectrum_scan(params, base_spec, beam, detuning_range, n_points)
                _, t_here = pi_point(spectrum)
                _, _, dev = resonance_point(spectrum)
            except (ValueError, dipole_core.NumericalError):
                t_here, dev = 0.0, math.nan
            t_map[i, j] = t_here
            dev_map[i, j] = dev
    ridge = np.argmax(t_map, axis=1)
    return {
        "scan_values": np.asarray(scan_values, dtype=float),
        "compensate_values": np.asarray(compensate_values, dtype=float),
        "transmission": t_map,
        "phase_deviation": dev_map,
        "ridge_index": ridge,
        "ridge_transmission": t_map[np.arange(len(scan_values)), ridge],
    }


def steer_profile(angle: float, positions: np.ndarray) -> np.ndarray:
    """Target transmitted-phase profile alpha(y) = (2 pi / lambda) sin(theta) y."""
    if not abs(angle) < math.pi / 2:
        raise ValueError("steering angle must satisfy |theta| < pi/2")
    kappa_y = 2.0 * math.pi * math.sin(angle)
    return kappa_y * np.asarray(positions)[:, 1]


class PhaseMap:
    """Invertible map between transmitted phase and overall detuning.

    Built from the monotone unwrapped phase of a spectrum restricted to its
    full 2-pi window.
    """

    def __init__(self, spectrum: SpectrumResult):
        window = full_phase_window(spectrum)
        if window is None:
            raise ValueError("spectrum has no full 2-pi phase window")
        lo, hi = window
        phase = spectrum.phase[lo : hi + 1]
        det = spectrum.detunings[lo : hi + 1]
        steps = np.diff(phase)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            keep = np.concatenate([[True], steps * (phase[-1] - phase[0]) > 0])
            phase, det = phase[keep], det[keep]
        self.increasing = phase[-1] > phase[0]
        self.phase = phase if self.increasing else phase[::-1]
        self.detunings = det if self.increasing else det[::-1]
        self.span = float(abs(phase[-1] - phase[0]))

    def detuning_for_phase(self, target_phase: float) -> float:
        if not (self.phase[0] - 1e-9 <= target_phase <= self.phase[-1] + 1e-9):
            raise ValueError(
                f"target phase {target_phase:.3f} outside the spanned range "
                f"[{self.phase[0]:.3f}, {self.phase[-1]:.3f}]"
            )
        return float(np.interp(target_phase, self.phase, self.detunings))

    def wrap_into_span(self, phase_reference: float, offset: float) -> float:
        """phase_reference + offset folded into the covered phase interval."""
        lo = min(self.phase[0], self.phase[-1])
        return lo + math.fmod(math.fmod(phase_reference + offset - lo, 2.0 * math.pi) + 2.0 * math.pi, 2.0 * math.pi)


def phase_to_detuning(spectrum: SpectrumResult, target_phase: float) -> float:
    """Detuning at which the transmitted phase equals ``target_phase``."""
    return PhaseMap(spectrum).detuning_for_phase(target_phase)


def imprint_phase_profile(
    setup_array: AtomArray,
    spectrum: SpectrumResult,
    profile: np.ndarray,
    operating_detuning: float | None = None,
) -> tuple[AtomArray, float]:
    """Add per-atom shifts so each atom's transmitted phase gains ``profile``.

    Phase targets are folded into the spectrum's 2-pi window and inverted
    through the phase-detuning map; returns the shifted array and the
    operating (laser) detuning.
    """
    pmap = PhaseMap(spectrum)
    if operating_detuning is None:
        operating_detuning, _ = pi_point(spectrum)
    reference = float(np.interp(operating_detuning, spectrum.detunings, spectrum.phase))
    offsets = np.empty(setup_array.n_atoms)
    for j, alpha in enumerate(np.asarray(profile, dtype=float)):
        target = pmap.wrap_into_span(reference, alpha)
        offsets[j] = pmap.detuning_for_phase(target) - operating_detuning
    return lattice.add_offsets(setup_array, offsets), float(operating_detuning)


def poincare_drive(
    params: HuygensParams,
    base_spec: LatticeSpec,
    spectrum: SpectrumResult,
    waist: float = 2.0,
    branch_cut_angle: float = 0.0,
) -> tuple[BeamSpec, AtomArray, float]:
    """Incident beam and azimuthally phase-ramped array for a Poincare beam.

    The incident Gaussian carries polarization 0.8 y + 0.6 z; the azimuthal
    transmitted-phase profile alpha = phi_azimuth is imprinted through the
    phase-detuning map.  Returns (beam, shifted array, operating detuning).
    """
    setup = realize(params, base_spec)
    beam = BeamSpec(kind="gaussian", polarization=np.array([0.0, 0.8, 0.6], dtype=complex), waist=waist)
    azimuth = lattice.azimuthal_angles(setup.array, branch_cut_angle) - branch_cut_angle
    array, operating = imprint_phase_profile(setup.array, spectrum, azimuth)
    return beam, array, operating
