"""Independent reference implementations used only by the test suite.

Everything here is deliberately written from scratch (ladder-operator
construction, sympy Clebsch-Gordan coefficients, literal textbook formulas)
so the production code is checked against a second route, not against
itself.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def ladder_clebsch_gordan(j1: int, j2: int) -> dict:
    """All <j m | j1 m1 j2 m2> via explicit ladder-operator construction.

    Returns a dict keyed by (m1, m2, j, m).  Highest-weight states are fixed
    by the Condon-Shortley convention (coefficient of m1 = j1 positive).
    """

    def lower_coeff(j, m):
        return math.sqrt(j * (j + 1) - m * (m - 1))

    dim1, dim2 = 2 * j1 + 1, 2 * j2 + 1
    m1s = [j1 - i for i in range(dim1)]
    m2s = [j2 - i for i in range(dim2)]
    index = {(m1, m2): m1s.index(m1) * dim2 + m2s.index(m2) for m1 in m1s for m2 in m2s}

    def lower_product(vec):
        out = np.zeros_like(vec)
        for (m1, m2), i in index.items():
            if vec[i] == 0:
                continue
            if m1 > -j1:
                out[index[(m1 - 1, m2)]] += vec[i] * lower_coeff(j1, m1)
            if m2 > -j2:
                out[index[(m1, m2 - 1)]] += vec[i] * lower_coeff(j2, m2)
        return out

    states: dict = {}
    for j in range(j1 + j2, abs(j1 - j2) - 1, -1):
        # top state |j j>: in the m = j subspace, orthogonal to lowered copies
        basis = [(m1, m2) for m1 in m1s for m2 in m2s if m1 + m2 == j]
        others = [states[(jp, j)] for jp in range(j + 1, j1 + j2 + 1)]
        vec = None
        for trial_dir in range(len(basis)):
            cand = np.zeros(dim1 * dim2)
            cand[index[basis[trial_dir]]] = 1.0
            for o in others:
                cand -= (o @ cand) * o
            if np.linalg.norm(cand) > 1e-9:
                vec = cand / np.linalg.norm(cand)
                break
        if vec is None:
            raise RuntimeError("ladder construction failed")
        top_m1 = max(m1 for (m1, m2) in basis)
        if vec[index[(top_m1, j - top_m1)]] < 0:
            vec = -vec
        states[(j, j)] = vec
        for m in range(j, -j, -1):
            states[(j, m - 1)] = lower_product(states[(j, m)]) / lower_coeff(j, m)

    table = {}
    for (j, m), vec in states.items():
        for (m1, m2), i in index.items():
            table[(m1, m2, j, m)] = vec[i]
    return table


@lru_cache(maxsize=None)
def sympy_cg(j1, m1, j2, m2, j, m) -> float:
    from sympy.physics.quantum.cg import CG

    return float(CG(j1, m1, j2, m2, j, m).doit())


# --- Eq.-style brute-force light shift ------------------------------------

_C = 299_792_458.0
_HBAR = 1.054_571_817e-34


def brute_force_light_shift(j_i, m_i, q, intensity_w_cm2, omega, lines):
    """Term-by-term second-order shift sum with sympy CG coefficients.

    ``lines`` is a list of (wavelength_m, gamma, j_upper) tuples; the shifted
    level has angular momentum ``j_i``.  Returns rad/s.
    """
    intensity = intensity_w_cm2 * 1e4
    total = 0.0
    for wavelength, gamma, j_k in lines:
        w_ik = 2 * math.pi * _C / wavelength
        m_k = m_i - q
        if abs(m_k) > j_k:
            continue
        cg = sympy_cg(j_k, m_k, 1, q, j_i, m_i)
        total += gamma * w_ik * (2 * j_k + 1) * cg**2 / (w_ik**2 - omega**2)
    return -6.0 * _C**2 * intensity / (_HBAR * omega**3 * (2 * j_i + 1)) * total


def brute_force_triple(omega, lines):
    """(scalar, vector, tensor) per W/cm^2 by solving the three m=1 equations
    with an explicit 3x3 linear system."""
    rows, rhs = [], []
    geometry = {-1: (1.0, 1.0), 0: (0.0, -2.0), 1: (-1.0, 1.0)}  # q -> (C, D)
    for q in (-1, 0, 1):
        c, d = geometry[q]
        rows.append([1.0, c * 0.5, -d * 0.5])  # mu = 1: (3 mu^2 - 2)/2 = 1/2
        rhs.append(brute_force_light_shift(1, 1, q, 1.0, omega, lines))
    return np.linalg.solve(np.array(rows), np.array(rhs))


def shift_map_reference(position, k_vec, phase, intensity, polarization, axis, omega, lines, zeeman):
    """Independent evaluation of the standing-wave shift triplet at one atom."""
    pol = np.asarray(polarization, dtype=complex)
    pol = pol / np.linalg.norm(pol)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    # explicit frame construction (Gram-Schmidt, independent of production)
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(helper, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    eplus = -(e1 + 1j * e2) / math.sqrt(2)
    eminus = (e1 - 1j * e2) / math.sqrt(2)
    c = abs(np.vdot(eminus, pol)) ** 2 - abs(np.vdot(eplus, pol)) ** 2
    d = 1.0 - 3.0 * abs(np.vdot(axis.astype(complex), pol)) ** 2

    scalar, vector, tensor = brute_force_triple(omega, lines)
    local = intensity * math.cos(float(np.dot(k_vec, position)) + phase) ** 2
    out = []
    for mu in (-1, 0, 1):
        bracket = scalar + c * mu / 2.0 * vector - d * (3 * mu * mu - 2) / 2.0 * tensor
        out.append(local * bracket + mu * zeeman * 1.45e5)
    return np.array(out)  # rad/s


# --- dipole field, textbook form -------------------------------------------


def textbook_dipole_field(k, r_vec, d_vec):
    """eps0 E of an oscillating dipole, literal Jackson 9.18 layout."""
    r_vec = np.asarray(r_vec, dtype=float)
    d_vec = np.asarray(d_vec, dtype=complex)
    r = np.linalg.norm(r_vec)
    n = r_vec / r
    term_far = k**2 * np.cross(np.cross(n, d_vec), n) / r
    term_near = (3.0 * n * np.dot(n, d_vec) - d_vec) * (1.0 / r**3 - 1j * k / r**2)
    return (term_far + term_near) * np.exp(1j * k * r) / (4.0 * math.pi)


def two_atom_steady_state(separation, coupling_xx, detuning, f1, f2):
    """Closed-form 2x2 inversion for two identical x-polarized atoms."""
    h = np.array([[detuning + 1j, coupling_xx], [coupling_xx, detuning + 1j]])
    return np.linalg.solve(h, 1j * np.array([f1, f2]))


# --- analytic Skyrmion fountain --------------------------------------------


def fountain_stokes(y, z, r0=1.0):
    """Unit Stokes texture with theta(r) = 2 atan(r / r0): winding number 1."""
    r = np.hypot(y, z)
    theta = 2.0 * np.arctan(r / r0)
    phi = np.arctan2(z, y)
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    )
