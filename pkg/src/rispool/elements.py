"""Varactor-tuned reflecting element model.

Each reflecting element is a parallel resonant circuit whose impedance is set
by the varactor's effective capacitance C and effective resistance R:

    Z(C, R) = jwL1 * (jwL2 + 1/(jwC) + R) / (jwL1 + jwL2 + 1/(jwC) + R)

and the reflection coefficient against the air impedance Z0 is

    v = (Z - Z0) / (Z + Z0)

For R >= 0 the network is passive, so |v| <= 1, with equality when R = 0.
The coefficient depends on the angular frequency of the incident carrier, so
the same capacitance setting reflects differently inside different UE bands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Varactor tuning range of the element model.
CAPACITANCE_MIN_F = 0.47e-12
CAPACITANCE_MAX_F = 2.35e-12
# Neutral mid-range setting used for initialisation and lease reset.
CAPACITANCE_RESET_F = (CAPACITANCE_MIN_F + CAPACITANCE_MAX_F) / 2.0

DEFAULT_RESISTANCE_OHM = 1.0
DEFAULT_OMEGA_RAD_S = 2.0 * np.pi * 2.4e9


@dataclass(frozen=True)
class CircuitConstants:
    """Fixed per-panel circuit constants: layer inductances and air impedance."""

    l1_h: float = 2.5e-9
    l2_h: float = 0.7e-9
    z0_ohm: float = 377.0

    def __post_init__(self) -> None:
        if self.l1_h <= 0 or self.l2_h <= 0 or self.z0_ohm <= 0:
            raise ValueError(
                f"circuit constants must be positive: "
                f"l1_h={self.l1_h}, l2_h={self.l2_h}, z0_ohm={self.z0_ohm}"
            )


@dataclass(frozen=True)
class ElementTuning:
    """One element's control state: varactor capacitance and loss resistance."""

    capacitance_f: float
    resistance_ohm: float = DEFAULT_RESISTANCE_OHM

    def __post_init__(self) -> None:
        if not (CAPACITANCE_MIN_F <= self.capacitance_f <= CAPACITANCE_MAX_F):
            raise ValueError(
                f"capacitance_f={self.capacitance_f} outside tunable range "
                f"[{CAPACITANCE_MIN_F}, {CAPACITANCE_MAX_F}]"
            )
        if self.resistance_ohm < 0:
            raise ValueError(f"resistance_ohm={self.resistance_ohm} must be >= 0")


def element_impedance(
    tuning: ElementTuning,
    constants: CircuitConstants = CircuitConstants(),
    omega: float = DEFAULT_OMEGA_RAD_S,
) -> complex:
    """Impedance of the parallel resonant element circuit at carrier ``omega``.

    Raises ValueError for non-positive capacitance or frequency, where the
    1/(jwC) branch is undefined.
    """
    z = impedance_array(
        np.asarray(tuning.capacitance_f), tuning.resistance_ohm, constants, omega
    )
    return complex(z)


def reflection_coefficient(
    tuning: ElementTuning,
    constants: CircuitConstants = CircuitConstants(),
    omega: float = DEFAULT_OMEGA_RAD_S,
) -> complex:
    """Complex reflection coefficient v = (Z - Z0) / (Z + Z0); |v| <= 1 for R >= 0."""
    v = reflection_array(
        np.asarray(tuning.capacitance_f), tuning.resistance_ohm, constants, omega
    )
    return complex(v)


def impedance_array(
    capacitance_f: np.ndarray,
    resistance_ohm: float | np.ndarray,
    constants: CircuitConstants = CircuitConstants(),
    omega: float = DEFAULT_OMEGA_RAD_S,
) -> np.ndarray:
    """Vectorised element impedance over arrays of capacitance / resistance.

    Evaluates the circuit formula with numerator and denominator both scaled
    by jwC, which removes the explicit 1/(jwC) division:

        Z = jwL1 * (1 - w^2*L2*C + jwCR) / (1 - w^2*C*(L1+L2) + jwCR)
    """
    c = np.asarray(capacitance_f, dtype=float)
    r = np.asarray(resistance_ohm, dtype=float)
    if omega <= 0:
        raise ValueError(f"omega={omega} must be > 0")
    if np.any(c <= 0):
        raise ValueError("capacitance must be > 0")
    if np.any(r < 0):
        raise ValueError("resistance must be >= 0")
    w = float(omega)
    jwcr = 1j * w * c * r
    num = (1j * w * constants.l1_h) * (1.0 - w * w * constants.l2_h * c + jwcr)
    den = 1.0 - w * w * c * (constants.l1_h + constants.l2_h) + jwcr
    return num / den


def reflection_array(
    capacitance_f: np.ndarray,
    resistance_ohm: float | np.ndarray,
    constants: CircuitConstants = CircuitConstants(),
    omega: float = DEFAULT_OMEGA_RAD_S,
) -> np.ndarray:
    """Vectorised reflection coefficient over arrays of capacitance / resistance."""
    z = impedance_array(capacitance_f, resistance_ohm, constants, omega)
    return (z - constants.z0_ohm) / (z + constants.z0_ohm)


@dataclass
class RisPanel:
    """Live element state of one registered panel.

    ``capacitance_f`` is the mutable per-element control vector; everything
    else is fixed at registration time.
    """

    ris_id: str
    n_elements: int
    constants: CircuitConstants = CircuitConstants()
    resistance_ohm: float = DEFAULT_RESISTANCE_OHM
    quantization_levels: int = 0
    capacitance_f: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.n_elements < 1:
            raise ValueError(f"panel needs >= 1 elements, got {self.n_elements}")
        if self.capacitance_f is None:
            self.capacitance_f = np.full(self.n_elements, CAPACITANCE_RESET_F)
        self.capacitance_f = np.asarray(self.capacitance_f, dtype=float)
        if self.capacitance_f.shape != (self.n_elements,):
            raise ValueError(
                f"capacitance vector shape {self.capacitance_f.shape} != "
                f"({self.n_elements},)"
            )

    def reset(self, indices=None) -> None:
        """Return elements (all, or the given indices) to the reset capacitance."""
        if indices is None:
            self.capacitance_f[:] = CAPACITANCE_RESET_F
        else:
            self.capacitance_f[np.asarray(list(indices), dtype=int)] = CAPACITANCE_RESET_F

    def state_digest(self) -> tuple:
        """Hashable snapshot of the live tuning state, for mutation checks."""
        return (self.ris_id, self.resistance_ohm, tuple(self.capacitance_f.tolist()))


def reflection_vector(panel: RisPanel, omega: float = DEFAULT_OMEGA_RAD_S) -> np.ndarray:
    """Per-element reflection coefficients of a panel at carrier ``omega``."""
    if panel.n_elements < 1:
        raise ValueError("panel has no elements")
    try:
        return reflection_array(
            panel.capacitance_f, panel.resistance_ohm, panel.constants, omega
        )
    except ValueError:
        # Re-raise with the first offending element named.
        bad = np.flatnonzero(panel.capacitance_f <= 0)
        if bad.size:
            raise ValueError(
                f"panel {panel.ris_id!r} element {int(bad[0])} has invalid "
                f"capacitance {panel.capacitance_f[bad[0]]}"
            ) from None
        raise


def capacitance_grid(levels: int) -> np.ndarray:
    """Uniform ``levels``-point capacitance grid spanning the tunable range."""
    if levels < 2:
        raise ValueError(f"grid needs levels >= 2, got {levels}")
    return np.linspace(CAPACITANCE_MIN_F, CAPACITANCE_MAX_F, levels)


def quantize_capacitance(capacitance_f: np.ndarray, levels: int) -> np.ndarray:
    """Snap capacitances to the nearest grid point; ties go to the lower point.

    ``levels == 0`` means continuous control and returns the input unchanged.
    """
    if levels == 0:
        return np.asarray(capacitance_f, dtype=float)
    grid = capacitance_grid(levels)
    c = np.asarray(capacitance_f, dtype=float)
    step = grid[1] - grid[0]
    lower = np.clip(np.floor((c - CAPACITANCE_MIN_F) / step), 0, levels - 1).astype(int)
    upper = np.minimum(lower + 1, levels - 1)
    # Move up only when strictly closer, so exact ties land on the lower point.
    idx = np.where(grid[upper] - c < c - grid[lower], upper, lower)
    return grid[idx]


def quantize_tuning(target: ElementTuning, levels: int) -> ElementTuning:
    """Quantized copy of ``target``; resistance is untouched. Idempotent."""
    if levels != 0 and levels < 2:
        raise ValueError(f"levels must be 0 (continuous) or >= 2, got {levels}")
    if levels == 0:
        return target
    c = float(quantize_capacitance(np.asarray(target.capacitance_f), levels))
    return ElementTuning(capacitance_f=c, resistance_ohm=target.resistance_ohm)
