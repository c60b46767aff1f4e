"""Panel registry: descriptors, live element state, and lease bookkeeping.

The registry is the single source of truth shared by the configuration
service (which grants leases) and the panel agent (which applies coefficient
updates). Mutations can be journaled to an append-only JSON-lines file and
replayed at startup; live tunings are not journaled, so a replayed registry
comes back with every panel at the reset tuning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .allocation import AllocationLease, AllocationPolicy, LeaseState, PoolExhausted, allocate
from .elements import CAPACITANCE_RESET_F, CircuitConstants, RisPanel


class RegistryError(ValueError):
    """Descriptor or lease operation rejected; message names the field."""


class DuplicateRisError(RegistryError):
    pass


class UnknownEntityError(KeyError):
    pass


@dataclass(frozen=True)
class RisDescriptor:
    """Registration record for one panel."""

    ris_id: str
    location: tuple
    orientation: tuple
    array_size: tuple           # (rows, cols)
    phase_quantization_level: int = 0
    owner_tag: str = ""
    constants: CircuitConstants = CircuitConstants()

    def __post_init__(self) -> None:
        if not self.ris_id:
            raise RegistryError("ris_id: must be non-empty")
        if len(self.location) != 3:
            raise RegistryError(f"location: expected 3-vector, got {self.location!r}")
        if len(self.orientation) != 3:
            raise RegistryError(f"orientation: expected 3-vector, got {self.orientation!r}")
        norm = math.sqrt(sum(x * x for x in self.orientation))
        if abs(norm - 1.0) > 1e-9:
            raise RegistryError(f"orientation: norm {norm} is not 1 within 1e-9")
        rows, cols = self.array_size
        if rows < 1 or cols < 1 or rows * cols < 1:
            raise RegistryError(f"array_size: needs rows*cols >= 1, got {self.array_size!r}")
        if self.phase_quantization_level != 0 and self.phase_quantization_level < 2:
            raise RegistryError(
                f"phase_quantization_level: must be 0 or >= 2, "
                f"got {self.phase_quantization_level}"
            )

    @property
    def n_elements(self) -> int:
        return self.array_size[0] * self.array_size[1]


class Registry:
    """Descriptors, panels, free/leased element sets, and the lease table."""

    def __init__(self, journal_path: str | Path | None = None):
        self._descriptors: dict = {}
        self._panels: dict = {}
        self._free: dict = {}
        self._leases: dict = {}
        self._journal_path = Path(journal_path) if journal_path else None
        self._replaying = False
        if self._journal_path and self._journal_path.exists():
            self._replay()

    # -- registration -------------------------------------------------------

    def register(self, descriptor: RisDescriptor, resistance_ohm: float = 1.0) -> str:
        if descriptor.ris_id in self._descriptors:
            raise DuplicateRisError(f"ris_id {descriptor.ris_id!r} already registered")
        panel = RisPanel(
            ris_id=descriptor.ris_id,
            n_elements=descriptor.n_elements,
            constants=descriptor.constants,
            resistance_ohm=resistance_ohm,
            quantization_levels=descriptor.phase_quantization_level,
        )
        self._descriptors[descriptor.ris_id] = descriptor
        self._panels[descriptor.ris_id] = panel
        self._free[descriptor.ris_id] = set(range(descriptor.n_elements))
        self._journal(
            {
                "event": "register",
                "ris_id": descriptor.ris_id,
                "location": list(descriptor.location),
                "orientation": list(descriptor.orientation),
                "array_size": list(descriptor.array_size),
                "phase_quantization_level": descriptor.phase_quantization_level,
                "owner_tag": descriptor.owner_tag,
                "constants": [
                    descriptor.constants.l1_h,
                    descriptor.constants.l2_h,
                    descriptor.constants.z0_ohm,
                ],
                "resistance_ohm": resistance_ohm,
            }
        )
        return descriptor.ris_id

    def descriptor(self, ris_id: str) -> RisDescriptor:
        try:
            return self._descriptors[ris_id]
        except KeyError:
            raise UnknownEntityError(f"unknown ris_id {ris_id!r}") from None

    def panel(self, ris_id: str) -> RisPanel:
        try:
            return self._panels[ris_id]
        except KeyError:
            raise UnknownEntityError(f"unknown ris_id {ris_id!r}") from None

    def ris_ids(self) -> list:
        return sorted(self._descriptors)

    # -- leases ---------------------------------------------------------------

    def free_elements(self) -> dict:
        return {ris_id: tuple(sorted(free)) for ris_id, free in self._free.items()}

    def lease(self, lease_id: str) -> AllocationLease:
        try:
            return self._leases[lease_id]
        except KeyError:
            raise UnknownEntityError(f"unknown lease {lease_id!r}") from None

    def active_leases(self) -> list:
        return [l for l in self._leases.values() if l.state is LeaseState.ACTIVE]

    def grant(self, request: set, policy: AllocationPolicy, lease_ids=None) -> list:
        """Allocate the free pool to the requesting UEs; records the leases."""
        free = {r: idx for r, idx in self.free_elements().items() if idx}
        if not free:
            raise PoolExhausted("no free elements in any registered panel")
        leases = allocate(free, request, policy, lease_ids=lease_ids)
        for lease in leases:
            if lease.lease_id in self._leases:
                raise RegistryError(f"lease id {lease.lease_id!r} already used")
        for lease in leases:
            self._leases[lease.lease_id] = lease
            self._free[lease.ris_id] -= set(lease.element_indices)
            self._journal(
                {
                    "event": "lease",
                    "lease_id": lease.lease_id,
                    "ris_id": lease.ris_id,
                    "element_indices": list(lease.element_indices),
                    "beneficiary_ues": sorted(lease.beneficiary_ues),
                    "policy": lease.policy.value,
                }
            )
        return leases

    def release(self, lease_id: str) -> AllocationLease:
        """Release a lease: elements return to the pool at the reset tuning.

        Releasing an already-released lease is a no-op.
        """
        lease = self.lease(lease_id)
        if lease.state is LeaseState.RELEASED:
            return lease
        lease.state = LeaseState.RELEASED
        self._panels[lease.ris_id].reset(lease.element_indices)
        self._free[lease.ris_id] |= set(lease.element_indices)
        self._journal({"event": "release", "lease_id": lease_id})
        return lease

    def audit(self) -> None:
        """Assert pool consistency: active leases disjoint, counts add up."""
        for ris_id, descriptor in self._descriptors.items():
            leased: set = set()
            for lease in self.active_leases():
                if lease.ris_id != ris_id:
                    continue
                overlap = leased & set(lease.element_indices)
                if overlap:
                    raise RegistryError(
                        f"{ris_id}: elements {sorted(overlap)} in two active leases"
                    )
                leased |= set(lease.element_indices)
            free = self._free[ris_id]
            if leased & free:
                raise RegistryError(f"{ris_id}: elements both free and leased")
            if len(leased) + len(free) != descriptor.n_elements:
                raise RegistryError(
                    f"{ris_id}: leased {len(leased)} + free {len(free)} != "
                    f"{descriptor.n_elements}"
                )

    def all_reset_and_free(self) -> bool:
        """True when every element is free and at the reset tuning."""
        for ris_id, descriptor in self._descriptors.items():
            if len(self._free[ris_id]) != descriptor.n_elements:
                return False
            if not np.all(self._panels[ris_id].capacitance_f == CAPACITANCE_RESET_F):
                return False
        return True

    # -- journal ---------------------------------------------------------------

    def _journal(self, record: dict) -> None:
        if self._journal_path is None or self._replaying:
            return
        record = {"v": 1, **record}
        with self._journal_path.open("a") as fh:
            fh.write(json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n")

    def _replay(self) -> None:
        self._replaying = True
        try:
            for line_no, line in enumerate(self._journal_path.read_text().splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RegistryError(f"journal line {line_no}: {exc}") from None
                event = record.get("event")
                if event == "register":
                    self.register(
                        RisDescriptor(
                            ris_id=record["ris_id"],
                            location=tuple(record["location"]),
                            orientation=tuple(record["orientation"]),
                            array_size=tuple(record["array_size"]),
                            phase_quantization_level=record["phase_quantization_level"],
                            owner_tag=record["owner_tag"],
                            constants=CircuitConstants(*record["constants"]),
                        ),
                        resistance_ohm=record["resistance_ohm"],
                    )
                elif event == "lease":
                    lease = AllocationLease(
                        lease_id=record["lease_id"],
                        ris_id=record["ris_id"],
                        element_indices=tuple(record["element_indices"]),
                        beneficiary_ues=frozenset(record["beneficiary_ues"]),
                        policy=AllocationPolicy(record["policy"]),
                    )
                    self._leases[lease.lease_id] = lease
                    self._free[lease.ris_id] -= set(lease.element_indices)
                elif event == "release":
                    self.release(record["lease_id"])
                else:
                    raise RegistryError(f"journal line {line_no}: unknown event {event!r}")
        finally:
            self._replaying = False
        self.audit()
