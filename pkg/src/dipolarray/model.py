"""Physical constants, unit conventions, and the atomic transition database.

Internal simulation units everywhere else in the package: lengths in units of
the probe wavelength ``lambda``, rates and detunings in units of the probe
half linewidth ``gamma``.  SI enters only where ac Stark shifts are computed
from laser intensities (module :mod:`dipolarray.shifts`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants used by the SI-facing parts of the package."""

    c: float = 299_792_458.0            # m/s
    hbar: float = 1.054_571_817e-34     # J s
    h: float = 6.626_070_15e-34         # J s
    eps0: float = 8.854_187_8128e-12    # F/m
    mass_sr88: float = 87.9056 * 1.660_539_066_60e-27  # kg

    def __post_init__(self):
        for name in ("c", "hbar", "h", "eps0", "mass_sr88"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between simulation units and SI.

    ``length_unit`` is meters per simulation length unit (the probe
    wavelength), ``rate_unit`` is 1/s per simulation rate unit (the probe
    half linewidth).
    """

    length_unit: float = 2.6e-6     # m,  lambda of the 2.6 um probe line
    rate_unit: float = 1.45e5      # 1/s, gamma of the 2.6 um probe line

    def __post_init__(self):
        if self.length_unit <= 0 or self.rate_unit <= 0:
            raise ValueError("unit scales must be positive")

    @property
    def wavenumber(self) -> float:
        """Probe wavenumber in rad/m."""
        return 2.0 * math.pi / self.length_unit


UNITS = UnitSystem()


@dataclass(frozen=True)
class TransitionRecord:
    """One atomic transition: label, wavelength (m), linewidth (1/s), J's.

    ``j_lower``/``j_upper`` are the angular momenta of the energetically
    lower/upper level.  The shifted level in a light-shift sum is always the
    lower one here.
    """

    label: str
    wavelength: float
    linewidth: float
    j_lower: int
    j_upper: int

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"{self.label}: wavelength must be positive")
        if self.linewidth < 0:
            raise ValueError(f"{self.label}: linewidth must be non-negative")
        if abs(self.j_upper - self.j_lower) > 1:
            raise ValueError(f"{self.label}: |j_upper - j_lower| must be <= 1")

    @property
    def angular_frequency(self) -> float:
        """Transition angular frequency in rad/s."""
        return 2.0 * math.pi * CONSTANTS.c / self.wavelength


def recoil_frequency(mass: float, wavelength: float) -> float:
    """Photon recoil frequency h / (2 m lambda^2) in Hz."""
    if mass <= 0 or wavelength <= 0:
        raise ValueError("mass and wavelength must be positive")
    return CONSTANTS.h / (2.0 * mass * wavelength**2)


def linewidth_from_dipole(reduced_dipole: float, k: float) -> float:
    """Wigner-Weisskopf half linewidth D^2 k^3 / (6 pi eps0 hbar) in 1/s."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    return reduced_dipole**2 * k**3 / (6.0 * math.pi * CONSTANTS.eps0 * CONSTANTS.hbar)


def dipole_from_linewidth(linewidth: float, k: float) -> float:
    """Reduced dipole moment (C m) recovered from a half linewidth and k."""
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    if linewidth < 0:
        raise ValueError("linewidth must be non-negative")
    return math.sqrt(6.0 * math.pi * CONSTANTS.eps0 * CONSTANTS.hbar * linewidth / k**3)


def _triangle_ok(j1: float, j2: float, j: float) -> bool:
    return abs(j1 - j2) <= j <= j1 + j2 and (j1 + j2 - j) == int(j1 + j2 - j)


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j: float, m: float) -> float:
    """Condon-Shortley Clebsch-Gordan coefficient <j m | j1 m1 j2 m2>.

    Evaluated with the closed-form Racah sum using exact integer factorials;
    invalid quantum numbers return 0 instead of raising.
    """
    if m1 + m2 != m:
        return 0.0
    for jj, mm in ((j1, m1), (j2, m2), (j, m)):
        if jj < 0 or abs(mm) > jj or (jj - mm) != int(jj - mm):
            return 0.0
    if not _triangle_ok(j1, j2, j):
        return 0.0

    # All 2j's are integers; work with doubled quantum numbers to stay exact.
    f = math.factorial

    def fact(x: float) -> int:
        n = int(round(x))
        if abs(x - n) > 1e-9 or n < 0:
            raise ValueError("non-integer factorial argument in CG sum")
        return f(n)

    pref = (2 * j + 1) * fact(j1 + j2 - j) * fact(j1 - j2 + j) * fact(-j1 + j2 + j) / fact(j1 + j2 + j + 1)
    pref *= fact(j + m) * fact(j - m) * fact(j1 - m1) * fact(j1 + m1) * fact(j2 - m2) * fact(j2 + m2)

    total = 0.0
    kmin = int(round(max(0.0, j2 - j - m1, j1 + m2 - j)))
    kmax = int(round(min(j1 + j2 - j, j1 - m1, j2 + m2)))
    for k in range(kmin, kmax + 1):
        denom = (
            f(k)
            * fact(j1 + j2 - j - k)
            * fact(j1 - m1 - k)
            * fact(j2 + m2 - k)
            * fact(j - j2 + m1 + k)
            * fact(j - j1 - m2 + k)
        )
        total += (-1.0) ** k / denom
    return math.sqrt(pref) * total


# Default transition data.  Trapping table: transitions used for the magic
# wavelength of the lower level of the probe line; control table: the
# 636-nm triplet used to impose level shifts on that same level.  The weak
# third control transition is listed but excluded from shift sums by default.
_DEFAULT_TABLE = """
[[transition]]
label = "3F2(5s5f)-3D1"
wavelength_nm = 430.9
linewidth_per_s = 2.0e7
j_lower = 1
j_upper = 2

[[transition]]
label = "3F2(5s6f)-3D1"
wavelength_nm = 406.2
linewidth_per_s = 5.0e6
j_lower = 1
j_upper = 2

[[transition]]
label = "3D1-3P0(5s6p)"
wavelength_nm = 636.99
linewidth_per_s = 9.0e6
j_lower = 1
j_upper = 0

[[transition]]
label = "3D1-3P1(5s6p)"
wavelength_nm = 636.39
linewidth_per_s = 1.85e6
j_lower = 1
j_upper = 1

[[transition]]
label = "3D1-3P2(5s6p)"
wavelength_nm = 636.12
linewidth_per_s = 4.0e4
j_lower = 1
j_upper = 2
"""


class TransitionTableError(ValueError):
    """Raised when a transition table fails to parse or validate."""


def load_transition_table(source: str) -> list[TransitionRecord]:
    """Parse TOML ``[[transition]]`` records into validated TransitionRecords.

    Required fields per record: ``label``, ``wavelength_nm``,
    ``linewidth_per_s``, ``j_lower``, ``j_upper``.  An empty source yields an
    empty list.
    """
    try:
        data = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise TransitionTableError(f"transition table does not parse: {exc}") from exc

    records = []
    for i, entry in enumerate(data.get("transition", [])):
        missing = [k for k in ("label", "wavelength_nm", "linewidth_per_s", "j_lower", "j_upper") if k not in entry]
        if missing:
            raise TransitionTableError(f"transition entry {i}: missing fields {missing}")
        unknown = set(entry) - {"label", "wavelength_nm", "linewidth_per_s", "j_lower", "j_upper"}
        if unknown:
            raise TransitionTableError(f"transition entry {i}: unknown fields {sorted(unknown)}")
        try:
            records.append(
                TransitionRecord(
                    label=str(entry["label"]),
                    wavelength=float(entry["wavelength_nm"]) * 1e-9,
                    linewidth=float(entry["linewidth_per_s"]),
                    j_lower=int(entry["j_lower"]),
                    j_upper=int(entry["j_upper"]),
                )
            )
        except ValueError as exc:
            raise TransitionTableError(f"transition entry {i}: {exc}") from exc
    return records


def dump_transition_table(records: list[TransitionRecord]) -> str:
    """Serialize records back to the TOML table format (round-trip safe)."""
    blocks = []
    for r in records:
        blocks.append(
            "[[transition]]\n"
            f'label = "{r.label}"\n'
            f"wavelength_nm = {r.wavelength / 1e-9!r}\n"
            f"linewidth_per_s = {r.linewidth!r}\n"
            f"j_lower = {r.j_lower}\n"
            f"j_upper = {r.j_upper}\n"
        )
    return "\n".join(blocks)


def default_transitions() -> list[TransitionRecord]:
    """The five shipped transitions (two trapping, three control)."""
    return load_transition_table(_DEFAULT_TABLE)


def trapping_transitions() -> list[TransitionRecord]:
    """Transitions used for the lower-level polarizability around 415 nm."""
    return [r for r in default_transitions() if r.wavelength > 4.0e-7]


def control_transitions(include_weak: bool = False) -> list[TransitionRecord]:
    """The 636-nm control transitions; the weak J'=2 line is optional."""
    recs = [r for r in default_transitions() if 6.3e-7 < r.wavelength < 6.4e-7]
    if not include_weak:
        recs = [r for r in recs if r.linewidth > 1e5]
    return recs


def load_transition_file(path) -> list[TransitionRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_transition_table(fh.read())
