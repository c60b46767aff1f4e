"""Model-free tuning of leased elements by simultaneous perturbation.

The tuner never sees channel matrices. Each iteration it asks the network to
measure two candidate tuning vectors (a plus/minus probe pair around the
current point) and moves along the resulting two-point gradient estimate.
The cost per iteration is two feedback measurements regardless of how many
elements are leased, which is what makes probe-and-feedback control viable
for a 128-element panel.

Tunings are optimized in an unconstrained coordinate per element and squashed
into the capacitance range by a logistic map, so probes are always feasible
and no projection kinks appear at the box edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elements import CAPACITANCE_MAX_F, CAPACITANCE_MIN_F, CAPACITANCE_RESET_F
from .rng import make_rng

# Effective width of the logistic coordinate: x in [-4, 4] covers ~96% of the
# capacitance box, so 8 plays the role of "the box" when sizing steps.
COORD_SPAN = 8.0


def squash_to_capacitance(x: np.ndarray) -> np.ndarray:
    """Map unconstrained coordinates into the tunable capacitance range."""
    z = np.clip(x, -60.0, 60.0)
    s = 1.0 / (1.0 + np.exp(-z))
    return CAPACITANCE_MIN_F + (CAPACITANCE_MAX_F - CAPACITANCE_MIN_F) * s


def unsquash_capacitance(c: np.ndarray) -> np.ndarray:
    """Inverse of squash_to_capacitance (clipped away from the box edges)."""
    frac = (np.asarray(c, dtype=float) - CAPACITANCE_MIN_F) / (
        CAPACITANCE_MAX_F - CAPACITANCE_MIN_F
    )
    frac = np.clip(frac, 1e-9, 1.0 - 1e-9)
    return np.log(frac / (1.0 - frac))


@dataclass(frozen=True)
class GainSchedule:
    """Decaying step/probe sizes: a_k = a/(A+k+1)^alpha, c_k = c/(k+1)^gamma."""

    step_scale: float
    probe_scale: float
    stability: float
    step_exponent: float = 0.602
    probe_exponent: float = 0.101

    def step(self, k: int) -> float:
        return self.step_scale / (self.stability + k + 1.0) ** self.step_exponent

    def probe(self, k: int) -> float:
        return self.probe_scale / (k + 1.0) ** self.probe_exponent


@dataclass
class TrajectoryPoint:
    iteration: int
    objective_plus: float
    objective_minus: float
    best_objective: float


@dataclass
class SpsaTuner:
    """State of one lease's tuner; pure-deterministic given its fields.

    ``position_bound`` clips the unconstrained coordinates to the responsive
    part of the logistic map; without it a large step can park a coordinate
    deep in a saturated flat where probes stop changing the capacitance.
    """

    n_elements: int
    schedule: GainSchedule
    rng_key: int
    position: np.ndarray = field(default=None)  # type: ignore[assignment]
    iteration: int = 0
    best_capacitance_f: np.ndarray = field(default=None)  # type: ignore[assignment]
    best_objective: float = -math.inf
    position_bound: float = COORD_SPAN / 2.0

    def __post_init__(self) -> None:
        if self.position is None:
            # Mid-range start: squash(0) is exactly the reset capacitance.
            self.position = np.zeros(self.n_elements)
        if self.best_capacitance_f is None:
            self.best_capacitance_f = np.full(self.n_elements, CAPACITANCE_RESET_F)

    @property
    def current_capacitance_f(self) -> np.ndarray:
        return squash_to_capacitance(self.position)

    def _delta(self) -> np.ndarray:
        rng = make_rng(self.rng_key, "delta", self.iteration)
        return rng.integers(0, 2, self.n_elements) * 2.0 - 1.0

    def propose_probe(self) -> tuple:
        """Plus/minus capacitance probes for the current iteration."""
        c_k = self.schedule.probe(self.iteration)
        delta = self._delta()
        plus = squash_to_capacitance(self.position + c_k * delta)
        minus = squash_to_capacitance(self.position - c_k * delta)
        return plus, minus

    def apply_feedback(self, objective_plus: float, objective_minus: float) -> None:
        """Ascend the two-point gradient estimate and track the best probe."""
        if not (math.isfinite(objective_plus) and math.isfinite(objective_minus)):
            raise ValueError(
                f"non-finite objectives: {objective_plus}, {objective_minus}"
            )
        k = self.iteration
        c_k = self.schedule.probe(k)
        a_k = self.schedule.step(k)
        plus, minus = self.propose_probe()
        if c_k > 0.0:
            delta = self._delta()
            gradient = (objective_plus - objective_minus) / (2.0 * c_k) * delta
            self.position = np.clip(
                self.position + a_k * gradient, -self.position_bound, self.position_bound
            )
        best_now = max(objective_plus, objective_minus)
        if best_now > self.best_objective:
            self.best_objective = best_now
            self.best_capacitance_f = plus if objective_plus >= objective_minus else minus
        self.iteration = k + 1


def optimize(tuner: SpsaTuner, measure, budget: int) -> list:
    """Run the propose/measure/apply loop against a measurement callable.

    ``measure(capacitance_vector) -> objective`` is the only window onto the
    system. Returns the trajectory; the tuner ends holding the best-so-far
    tunings in ``best_capacitance_f``.
    """
    trajectory = []
    for _ in range(budget):
        plus, minus = tuner.propose_probe()
        y_plus = measure(plus)
        y_minus = measure(minus)
        tuner.apply_feedback(y_plus, y_minus)
        trajectory.append(
            TrajectoryPoint(tuner.iteration - 1, y_plus, y_minus, tuner.best_objective)
        )
    return trajectory


def calibrate_gains(
    pilot_values,
    pilot_probe_diffs,
    budget: int,
    step_exponent: float = 0.602,
    probe_exponent: float = 0.101,
    stability_fraction: float = 0.1,
    step_scale: float | None = None,
    probe_scale: float | None = None,
) -> GainSchedule:
    """Pilot heuristic for the gain schedule.

    probe scale: the feedback noise observed in the pilot, as a fraction of
    the mean objective, scaled onto the coordinate span (clipped to keep the
    probe meaningful but inside the box).

    step scale: sized so the first update moves each coordinate by at most 5%
    of the coordinate span for a typical probe difference.

    Explicit ``step_scale`` / ``probe_scale`` values bypass the pilot.
    """
    stability = stability_fraction * budget
    if probe_scale is None:
        values = np.asarray(list(pilot_values), dtype=float)
        mean = float(np.mean(values))
        noise = float(np.std(values))
        rel_noise = noise / abs(mean) if mean else 1.0
        probe_scale = float(np.clip(COORD_SPAN / 2.0 * rel_noise, 0.1, 1.0))
    if step_scale is None:
        diffs = np.asarray(list(pilot_probe_diffs), dtype=float)
        typical = float(np.median(np.abs(diffs)))
        if typical <= 0.0:
            typical = 1.0
        target_step = 0.05 * COORD_SPAN
        gradient = typical / (2.0 * probe_scale)
        step_scale = target_step / gradient * (stability + 1.0) ** step_exponent
    return GainSchedule(
        step_scale=step_scale,
        probe_scale=probe_scale,
        stability=stability,
        step_exponent=step_exponent,
        probe_exponent=probe_exponent,
    )
