"""Dipole radiation kernel, coupling matrix, steady state and eigenmodes.

Simulation units: lengths in probe wavelengths (k = 2 pi), rates in units of
the single-atom half linewidth gamma, reduced dipole moment and eps0 set to
one.  State vectors hold the complex dipole amplitudes of every atom in lab
Cartesian components, atom-major: entry 3 j + c is component c in (x, y, z)
of atom j.  Sublevel-resolved detunings enter through per-atom 3x3 Hermitian
blocks built from the quantization-frame projectors, so with sublevel-uniform
detunings the full matrix is complex symmetric and eigenvectors are
transpose-orthogonal.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .lattice import AtomArray
from .shifts import QUANTIZATION_AXIS, sublevel_projectors

K_PROBE = 2.0 * np.pi                 # probe wavenumber, 1/lambda units
XI = 6.0 * np.pi / K_PROBE**3         # coupling strength 6 pi gamma / k^3
_KERNEL_PREFACTOR = K_PROBE**3 / (4.0 * np.pi)

CACHE_VERSION = 1


class NumericalError(RuntimeError):
    """Linear-algebra failure with diagnostic context."""


def kernel_coefficients(rho):
    """Scalar coefficients (a, b) of G = a I + b rhat rhat^T at rho = k r."""
    rho = np.asarray(rho, dtype=float)
    phase = np.exp(1j * rho) * _KERNEL_PREFACTOR
    inv = 1.0 / rho
    inv2 = inv * inv
    inv3 = inv2 * inv
    a = phase * (inv + 1j * inv2 - inv3)
    b = phase * (-inv - 3j * inv2 + 3.0 * inv3)
    return a, b


def dipole_kernel(separation, source_dipole):
    """Field eps0 E of a unit-frequency point dipole at finite separation.

    ``separation`` is in probe wavelengths; includes the 1/(kr), 1/(kr)^2 and
    1/(kr)^3 terms with the e^{i k r} phase.  Zero separation is a domain
    error (self-interaction is excluded from the coupled equations).
    """
    r = np.asarray(separation, dtype=float)
    d = np.asarray(source_dipole, dtype=complex)
    dist = np.linalg.norm(r)
    if dist == 0.0:
        raise ValueError("dipole kernel is undefined at zero separation")
    rho = K_PROBE * dist
    rhat = r / dist
    a, b = kernel_coefficients(rho)
    return a * d + b * rhat * (rhat @ d)


@dataclass(frozen=True)
class CouplingMatrix:
    """Dense 3N x 3N coupling matrix of the driven-dipole equations.

    Off-diagonal 3x3 blocks are xi G(r_j - r_k); per-atom diagonal blocks
    carry the sublevel shifts (eigenvalues Delta_sigma^(j) + i gamma in the
    quantization frame) and the overall detuning.
    """

    entries: np.ndarray
    array: AtomArray = field(compare=False)
    global_detuning: float = 0.0

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def assemble_coupling_matrix(
    array: AtomArray,
    global_detuning: float = 0.0,
    quantization_axis=QUANTIZATION_AXIS,
    dtype=np.complex128,
) -> CouplingMatrix:
    """Assemble the interaction matrix for an atom array (gamma units)."""
    pos = array.positions
    n = array.n_atoms
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("jkc,jkc->jk", diff, diff))
    if np.any((dist == 0.0) & ~np.eye(n, dtype=bool)):
        raise ValueError("coincident atoms: dipole kernel undefined")

    np.fill_diagonal(dist, 1.0)  # placeholder; self blocks zeroed below
    a, b = kernel_coefficients(K_PROBE * dist)
    a *= XI
    b *= XI
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(b, 0.0)
    rhat = diff / dist[:, :, None]
    del diff

    h = np.zeros((3 * n, 3 * n), dtype=dtype)
    for c in range(3):
        for cp in range(3):
            block = b * rhat[:, :, c] * rhat[:, :, cp]
            if c == cp:
                block = block + a
            h[c::3, cp::3] = block

    projectors = sublevel_projectors(quantization_axis)
    det = array.detunings
    uniform = np.all(det == det[:, :1], axis=1)
    idx = np.arange(n)
    base = np.full(n, global_detuning + 0.0j)
    base[uniform] += det[uniform, 0]
    for c in range(3):
        h[3 * idx + c, 3 * idx + c] += base + 1j
    rest = np.flatnonzero(~uniform)
    for j in rest:
        block = sum(det[j, s] * projectors[s] for s in range(3))
        h[3 * j : 3 * j + 3, 3 * j : 3 * j + 3] += block
    return CouplingMatrix(entries=h, array=array, global_detuning=global_detuning)


@dataclass(frozen=True)
class DriveVector:
    """Drive amplitudes i (xi / D) eps0 E(r_j), atom-major Cartesian."""

    entries: np.ndarray


def drive_from_field(field_values: np.ndarray) -> DriveVector:
    """Build the drive vector from incident-field samples at the atoms."""
    values = np.asarray(field_values, dtype=complex)
    if values.ndim != 2 or values.shape[1] != 3:
        raise ValueError("field samples must be (N, 3)")
    return DriveVector(entries=1j * XI * values.reshape(-1))


@dataclass(frozen=True)
class PolarizationVector:
    """Steady-state dipole amplitudes, atom-major Cartesian components."""

    amplitudes: np.ndarray

    @property
    def per_atom(self) -> np.ndarray:
        return self.amplitudes.reshape(-1, 3)

    def sublevel_amplitudes(self, quantization_axis=QUANTIZATION_AXIS) -> np.ndarray:
        """(N, 3) spherical components (sigma = -1, 0, +1) of each dipole."""
        from .shifts import spherical_frame

        e1, e2, e3 = spherical_frame(quantization_axis)
        plus = -(e1 + 1j * e2) / np.sqrt(2.0)
        minus = (e1 - 1j * e2) / np.sqrt(2.0)
        basis = np.stack([minus, e3.astype(complex), plus])
        return self.per_atom @ basis.conj().T


def steady_state(matrix: CouplingMatrix, drive: DriveVector, rtol: float = 1e-10) -> PolarizationVector:
    """Solve the steady state i H b + f = 0 by a dense LU solve.

    The relative residual ||i H b + f|| / ||f|| is checked against ``rtol``
    (one step of refinement is attempted first) and a NumericalError with a
    condition estimate is raised if it cannot be met.
    """
    h = matrix.entries
    f = drive.entries
    if np.all(f == 0):
        return PolarizationVector(np.zeros_like(f))
    b = scipy.linalg.solve(h, 1j * f, check_finite=False)
    fnorm = np.linalg.norm(f)
    res = np.linalg.norm(1j * (h @ b) + f) / fnorm
    if res > rtol:
        b += scipy.linalg.solve(h, 1j * f - (h @ b), check_finite=False)
        res = np.linalg.norm(1j * (h @ b) + f) / fnorm
    if res > rtol:
        cond = np.linalg.cond(h) if matrix.size <= 600 else np.nan
        raise NumericalError(f"steady-state residual {res:.3e} > {rtol} (cond ~ {cond:.3e})")
    return PolarizationVector(b)


class SpectrumSolver:
    """Shared factorization for steady states over many overall detunings.

    The detuning enters only on the diagonal, so after one Hessenberg
    reduction H0 = Q T Q^H every detuning costs O(n^2): a Givens elimination
    of (T + Delta I) plus two matrix-vector products.
    """

    def __init__(self, matrix: CouplingMatrix):
        h = np.array(matrix.entries, order="C")
        self.base_detuning = matrix.global_detuning
        self.t, self.q = scipy.linalg.hessenberg(h, calc_q=True, overwrite_a=True)
        self.size = self.t.shape[0]

    def solve(self, detuning: float, drive: DriveVector, refine: bool = False) -> PolarizationVector:
        """Steady state at an overall detuning (absolute, not relative to base)."""
        f = drive.entries
        shift = detuning - self.base_detuning
        # q^H x without materializing the conjugate of q
        rhs = np.conj(np.conj(1j * f) @ self.q)
        y = _solve_hessenberg(self.t, shift, rhs)
        if refine:
            r = rhs - (self.t @ y + shift * y)
            y += _solve_hessenberg(self.t, shift, r)
        return PolarizationVector(self.q @ y)


def _givens_sweep_numpy(r: np.ndarray, b: np.ndarray) -> None:
    n = r.shape[0]
    for k in range(n - 1):
        sub = r[k + 1, k]
        if sub == 0.0:
            continue
        piv = r[k, k]
        norm = np.hypot(abs(piv), abs(sub))
        c = piv / norm
        s = sub / norm
        top = r[k, k:]
        bot = r[k + 1, k:]
        new_top = c.conjugate() * top + s.conjugate() * bot
        bot *= c
        bot -= s * top
        r[k, k:] = new_top
        bk, bk1 = b[k], b[k + 1]
        b[k] = c.conjugate() * bk + s.conjugate() * bk1
        b[k + 1] = c * bk1 - s * bk


try:  # optional numba acceleration of the O(n^2) Givens sweep
    from numba import njit

    @njit(cache=True)
    def _givens_sweep_jit(r, b):  # pragma: no cover - exercised via wrapper
        n = r.shape[0]
        for k in range(n - 1):
            sub = r[k + 1, k]
            if sub == 0.0:
                continue
            piv = r[k, k]
            norm = np.hypot(abs(piv), abs(sub))
            c = piv / norm
            s = sub / norm
            cc = np.conjugate(c)
            sc = np.conjugate(s)
            for j in range(k, n):
                top = r[k, j]
                bot = r[k + 1, j]
                r[k, j] = cc * top + sc * bot
                r[k + 1, j] = c * bot - s * top
            bk = b[k]
            bk1 = b[k + 1]
            b[k] = cc * bk + sc * bk1
            b[k + 1] = c * bk1 - s * bk

    _givens_sweep = _givens_sweep_jit
except ImportError:  # pragma: no cover
    _givens_sweep = _givens_sweep_numpy


def _solve_hessenberg(t: np.ndarray, shift: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (T + shift I) y = rhs for upper-Hessenberg T by Givens QR."""
    n = t.shape[0]
    r = t.copy()
    r[np.diag_indices(n)] += shift
    b = rhs.astype(np.complex128).copy()
    _givens_sweep(r, b)
    return scipy.linalg.solve_triangular(r, b, check_finite=False)


@dataclass(frozen=True)
class EigenmodeSet:
    """Collective eigenvalues delta_n + i upsilon_n and eigenvectors.

    Eigenvalues are reported for zero overall detuning, sorted by (line
    shift, linewidth); eigenvectors are columns of ``modes`` normalized to
    v^T v = 1 (transpose, not conjugate, product) with a deterministic sign.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray

    @property
    def line_shifts(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def linewidths(self) -> np.ndarray:
        return self.eigenvalues.imag

    def to_csv(self) -> str:
        lines = ["n,delta_n,upsilon_n"]
        for i, ev in enumerate(self.eigenvalues):
            lines.append(f"{i},{float(ev.real)!r},{float(ev.imag)!r}")
        return "\n".join(lines) + "\n"


def eigenmodes(matrix: CouplingMatrix) -> EigenmodeSet:
    """Full non-Hermitian eigendecomposition of the coupling matrix."""
    h = matrix.entries
    if matrix.global_detuning != 0.0:
        h = h - matrix.global_detuning * np.eye(matrix.size)
    try:
        values, vectors = scipy.linalg.eig(h, check_finite=False)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]

    norms = np.einsum("ij,ij->j", vectors, vectors)
    degenerate = np.abs(norms) < 1e-12
    scale = np.ones_like(norms)
    scale[~degenerate] = 1.0 / np.sqrt(norms[~degenerate])
    vectors = vectors * scale
    lead = np.abs(vectors).argmax(axis=0)
    phases = vectors[lead, np.arange(vectors.shape[1])]
    vectors = np.where(phases.real < 0, -vectors, vectors)
    return EigenmodeSet(eigenvalues=values, modes=vectors)


def array_content_hash(array: AtomArray) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(array.positions).tobytes())
    digest.update(np.ascontiguousarray(array.detunings).tobytes())
    return digest.hexdigest()


def eigenmodes_cached(matrix: CouplingMatrix, cache_dir) -> EigenmodeSet:
    """Eigendecomposition backed by a versioned on-disk cache."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = array_content_hash(matrix.array)
    path = cache_dir / f"eig-v{CACHE_VERSION}-{key}.npz"
    if path.exists():
        data = np.load(path)
        if int(data["version"]) == CACHE_VERSION:
            return EigenmodeSet(eigenvalues=data["eigenvalues"], modes=data["modes"])
    modes = eigenmodes(matrix)
    np.savez(path, version=CACHE_VERSION, eigenvalues=modes.eigenvalues, modes=modes.modes)
    return modes


def mode_occupation(modes: EigenmodeSet, state: PolarizationVector) -> np.ndarray:
    """Occupations L_n = |v_n^T b|^2 / sum_m |v_m^T b|^2 (sum exactly 1)."""
    b = state.amplitudes
    if np.linalg.norm(b) == 0:
        raise ValueError("mode occupation undefined for a zero state")
    overlaps = np.abs(modes.modes.T @ b) ** 2
    return overlaps / overlaps.sum()


def degenerate_cluster(modes: EigenmodeSet, index: int, tol: float = 1e-6) -> np.ndarray:
    """Indices of all modes whose eigenvalue lies within tol of mode ``index``."""
    return np.flatnonzero(np.abs(modes.eigenvalues - modes.eigenvalues[index]) <= tol)


def cluster_occupation(modes: EigenmodeSet, state: PolarizationVector, index: int, tol: float = 1e-6) -> float:
    """Summed occupation of the degenerate cluster containing mode ``index``."""
    occ = mode_occupation(modes, state)
    return float(occ[degenerate_cluster(modes, index, tol)].sum())


class AmbiguousModeError(RuntimeError):
    """Two candidate modes overlap the trial pattern within 1%."""


def uniform_repetition(array: AtomArray, cell_pattern: np.ndarray) -> np.ndarray:
    """Tile a 12-component unit-cell pattern over every cell of a bilayer."""
    pattern = np.asarray(cell_pattern, dtype=complex).reshape(4, 3)
    if np.any(array.cell_index[:, 1] > 3):
        raise ValueError("uniform repetition requires a bilayer build")
    tiled = pattern[array.cell_index[:, 1]]
    vec = tiled.reshape(-1)
    return vec / np.linalg.norm(vec)


def classify_uniform_mode(modes: EigenmodeSet, array: AtomArray, cell_pattern) -> int:
    """Index of the collective mode best matching a tiled unit-cell pattern."""
    trial = uniform_repetition(array, cell_pattern)
    overlaps = np.abs(modes.modes.T @ trial)
    order = np.argsort(overlaps)[::-1]
    best, runner = order[0], order[1]
    if overlaps[runner] > 0.99 * overlaps[best]:
        raise AmbiguousModeError(
            f"modes {best} and {runner} overlap the pattern within 1% "
            f"({overlaps[best]:.4f} vs {overlaps[runner]:.4f})"
        )
    return int(best)


def isolated_cell(a_x: float = 0.08, a_y: float = 0.08) -> AtomArray:
    """A single four-atom unit cell centered at the origin."""
    corners = np.array(
        [(-a_x / 2, -a_y / 2, 0.0), (a_x / 2, -a_y / 2, 0.0), (a_x / 2, a_y / 2, 0.0), (-a_x / 2, a_y / 2, 0.0)]
    )
    cell_index = np.stack([np.zeros(4, dtype=int), np.arange(4)], axis=1)
    return AtomArray(corners, np.zeros((4, 3)), cell_index)


def circulating_pattern() -> np.ndarray:
    """Unit-cell dipoles tangential to the cell center: a current loop."""
    tangents = np.array([(1, -1, 0), (1, 1, 0), (-1, 1, 0), (-1, -1, 0)], dtype=complex)
    vec = (tangents / np.sqrt(2.0)).reshape(-1)
    return vec / np.linalg.norm(vec)


def radial_pattern() -> np.ndarray:
    """Unit-cell dipoles pointing away from the cell center."""
    radials = np.array([(-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0)], dtype=complex)
    vec = (radials / np.sqrt(2.0)).reshape(-1)
    return vec / np.linalg.norm(vec)


def cell_eigenmode_matching(pattern: np.ndarray, a_x: float = 0.08, a_y: float = 0.08) -> np.ndarray:
    """Eigenvector of the isolated cell closest to an ideal 12-dim pattern."""
    cell = isolated_cell(a_x, a_y)
    modes = eigenmodes(assemble_coupling_matrix(cell))
    overlaps = np.abs(modes.modes.conj().T @ np.asarray(pattern, dtype=complex))
    vec = modes.modes[:, int(np.argmax(overlaps))]
    return vec / np.linalg.norm(vec)


def benchmark_solve(matrix: CouplingMatrix, drive: DriveVector, detunings) -> dict:
    """Wall-clock comparison of one LU solve vs a shared-factorization scan."""
    t0 = time.perf_counter()
    steady_state(matrix, drive)
    single = time.perf_counter() - t0

    t0 = time.perf_counter()
    solver = SpectrumSolver(matrix)
    for delta in detunings:
        solver.solve(delta, drive)
    scan = time.perf_counter() - t0
    return {"single_solve_s": single, "scan_s": scan, "n_detunings": len(detunings)}
