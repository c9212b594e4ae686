"""Vector-spherical-harmonic decomposition of unit-cell far-field radiation.

The far field of a small cluster of point dipoles is projected onto the two
transverse VSH families (magnetic type X_lm = L Y_lm / sqrt(l(l+1)) and
electric type r x X_lm) by Gauss-Legendre x uniform-azimuth quadrature over
the unit sphere.  Weights are |coefficient|^2 fractions of the total
radiated power; the part beyond l_max is reported as an explicit remainder.
The expansion origin is the cell centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sph_harm_y

from .dipole_core import K_PROBE


def default_order(l_max: int) -> int:
    return 2 * l_max + 4


class SphereQuadrature:
    """Product quadrature: ``order`` Gauss-Legendre polar nodes x ``order``
    uniform azimuthal nodes (exact for spherical polynomials of degree <
    order in both indices)."""

    def __init__(self, order: int):
        if order < 2:
            raise ValueError("quadrature order must be >= 2")
        x, w = np.polynomial.legendre.leggauss(order)
        theta = np.arccos(x)
        phi = 2.0 * np.pi * np.arange(order) / order
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        self.theta = tt.ravel()
        self.phi = pp.ravel()
        ww = np.repeat(w, order) * (2.0 * np.pi / order)
        self.weights = ww
        st, ct = np.sin(self.theta), np.cos(self.theta)
        sp, cp = np.sin(self.phi), np.cos(self.phi)
        self.points = np.stack([st * cp, st * sp, ct], axis=1)

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * values))


def _ylm_table(l_max: int, theta: np.ndarray, phi: np.ndarray) -> dict:
    table = {}
    for l in range(0, l_max + 2):
        for m in range(-l, l + 1):
            table[(l, m)] = sph_harm_y(l, m, theta, phi)
    return table


def vector_harmonics(l_max: int, quad: SphereQuadrature):
    """Tables of X_lm and r x X_lm on the quadrature grid, keyed by (l, m)."""
    ylm = _ylm_table(l_max, quad.theta, quad.phi)
    nhat = quad.points
    x_table, psi_table = {}, {}
    for l in range(1, l_max + 1):
        for m in range(-l, l + 1):
            cp = math.sqrt((l - m) * (l + m + 1)) if abs(m + 1) <= l else 0.0
            cm = math.sqrt((l + m) * (l - m + 1)) if abs(m - 1) <= l else 0.0
            y_up = ylm[(l, m + 1)] if abs(m + 1) <= l else 0.0
            y_dn = ylm[(l, m - 1)] if abs(m - 1) <= l else 0.0
            lx = 0.5 * (cp * y_up + cm * y_dn)
            ly = -0.5j * (cp * y_up - cm * y_dn)
            lz = m * ylm[(l, m)]
            x = np.stack([lx, ly, lz], axis=1) / math.sqrt(l * (l + 1))
            x_table[(l, m)] = x
            psi_table[(l, m)] = np.cross(nhat, x)
    return x_table, psi_table


def quadrature_selfcheck(l_max: int = 3, order: int | None = None) -> float:
    """Max deviation of the VSH Gram matrix from delta-orthonormality."""
    order = default_order(l_max) if order is None else order
    quad = SphereQuadrature(order)
    x_table, psi_table = vector_harmonics(l_max, quad)
    keys = sorted(x_table)
    fields = [x_table[k] for k in keys] + [psi_table[k] for k in keys]
    defect = 0.0
    for i, fi in enumerate(fields):
        for j, fj in enumerate(fields):
            g = quad.integrate(np.einsum("mc,mc->m", fi.conj(), fj))
            defect = max(defect, abs(g - (1.0 if i == j else 0.0)))
    return defect


@dataclass(frozen=True)
class MultipoleSpectrum:
    """Complex multipole amplitudes and their normalized power weights.

    ``coefficients`` maps ('E' | 'B', l, m) to the projection of the
    far-field amplitude; ``weights`` maps ('E' | 'B', l) to its fraction of
    the total radiated power; ``residual_weight`` is the l > l_max part.
    """

    coefficients: dict
    weights: dict
    residual_weight: float
    l_max: int
    total_power: float

    def weight(self, kind: str, l: int) -> float:
        return self.weights.get((kind, l), 0.0)

    def to_csv(self) -> str:
        lines = ["type,l,m,re_alpha,im_alpha,weight"]
        total = self.total_power if self.total_power > 0 else 1.0
        for (kind, l, m), alpha in sorted(self.coefficients.items()):
            lines.append(f"{kind},{l},{m},{float(alpha.real)!r},{float(alpha.imag)!r},{float(abs(alpha) ** 2 / total)!r}")
        lines.append(f"remainder,{self.l_max + 1},0,0.0,0.0,{self.residual_weight!r}")
        return "\n".join(lines) + "\n"


def cell_far_field(
    positions: np.ndarray, amplitudes: np.ndarray, directions: np.ndarray, origin=None
) -> np.ndarray:
    """Far-field amplitude of point dipoles about the centroid (or a given origin)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    pos = pos - (pos.mean(axis=0) if origin is None else np.asarray(origin, dtype=float))
    dip = np.asarray(amplitudes, dtype=complex).reshape(-1, 3)
    phases = np.exp(-1j * K_PROBE * (directions @ pos.T))
    moments = phases @ dip
    radial = np.einsum("mc,mc->m", directions, moments)
    return (K_PROBE**3 / (4.0 * math.pi)) * (moments - directions * radial[:, None])


def decompose_cell(
    cell_positions, cell_state, l_max: int = 3, order: int | None = None, origin=None
) -> MultipoleSpectrum:
    """Multipole content of a unit-cell excitation's far-field radiation.

    ``cell_positions`` are the dipole locations (centroid-centered
    internally unless ``origin`` overrides the expansion point),
    ``cell_state`` their complex Cartesian amplitudes (e.g. a 12-component
    4-atom pattern); requires l_max >= 2.
    """
    if l_max < 2:
        raise ValueError("l_max must be >= 2")
    state = np.asarray(cell_state, dtype=complex)
    if np.linalg.norm(state) == 0:
        raise ValueError("multipole decomposition undefined for a zero state")
    order = default_order(l_max) if order is None else order
    quad = SphereQuadrature(order)
    farfield = cell_far_field(cell_positions, state, quad.points, origin=origin)

    x_table, psi_table = vector_harmonics(l_max, quad)
    total_power = quad.integrate(np.einsum("mc,mc->m", farfield.conj(), farfield)).real

    coefficients = {}
    weights = {}
    captured = 0.0
    for l in range(1, l_max + 1):
        pe = pb = 0.0
        for m in range(-l, l + 1):
            a_b = quad.integrate(np.einsum("mc,mc->m", x_table[(l, m)].conj(), farfield))
            a_e = quad.integrate(np.einsum("mc,mc->m", psi_table[(l, m)].conj(), farfield))
            coefficients[("B", l, m)] = a_b
            coefficients[("E", l, m)] = a_e
            pb += abs(a_b) ** 2
            pe += abs(a_e) ** 2
        weights[("B", l)] = pb / total_power
        weights[("E", l)] = pe / total_power
        captured += pb + pe
    residual = max(0.0, 1.0 - captured / total_power)
    return MultipoleSpectrum(
        coefficients=coefficients,
        weights=weights,
        residual_weight=residual,
        l_max=l_max,
        total_power=total_power,
    )
