"""Pool allocation policies and the lease record.

Two ways to hand a panel to subscribers: PARTITIONED slices the free elements
into equal contiguous blocks, one dedicated block per subscribing UE, each
tuned for that UE alone; JOINT leases everything as one block whose tuning
target is the summed performance of all subscribers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .channel import MetricsSample


class AllocationPolicy(str, enum.Enum):
    PARTITIONED = "partitioned"
    JOINT = "joint"


class LeaseState(str, enum.Enum):
    ACTIVE = "active"
    RELEASED = "released"


class PoolExhausted(RuntimeError):
    """No free elements to lease; service is best-effort, callers may retry."""


@dataclass
class AllocationLease:
    lease_id: str
    ris_id: str
    element_indices: tuple
    beneficiary_ues: frozenset
    policy: AllocationPolicy
    state: LeaseState = LeaseState.ACTIVE

    def __post_init__(self) -> None:
        if self.state is LeaseState.ACTIVE and not self.beneficiary_ues:
            raise ValueError(f"lease {self.lease_id}: empty beneficiary set")
        if len(set(self.element_indices)) != len(self.element_indices):
            raise ValueError(f"lease {self.lease_id}: duplicate element indices")


def split_evenly(items: tuple, parts: int) -> list:
    """Contiguous near-equal blocks; earlier blocks take the remainder."""
    base, extra = divmod(len(items), parts)
    out = []
    start = 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(items[start : start + size])
        start += size
    return out


def allocate(
    free_elements: dict,
    request: set,
    policy: AllocationPolicy,
    lease_ids=None,
) -> list:
    """Lease the free pool to the requesting UEs under the given policy.

    ``free_elements`` maps ris_id to its currently free element indices.
    Deterministic: panels are taken in ris_id order and elements in index
    order; under PARTITIONED the lower block goes to the lower UE id.
    ``lease_ids`` optionally supplies identifiers (one per created lease).
    """
    if not request:
        raise ValueError("allocation request with no subscribed UEs")
    pool = [
        (ris_id, idx)
        for ris_id in sorted(free_elements)
        for idx in sorted(free_elements[ris_id])
    ]
    if not pool:
        raise PoolExhausted("no free elements in the pool")

    ues = sorted(request)
    leases = []

    def next_lease_id() -> str:
        if lease_ids is not None:
            return lease_ids[len(leases)]
        return f"lease-{len(leases)}"

    if policy is AllocationPolicy.JOINT:
        beneficiaries = frozenset(ues)
        for ris_id in sorted({r for r, _ in pool}):
            indices = tuple(i for r, i in pool if r == ris_id)
            leases.append(
                AllocationLease(
                    lease_id=next_lease_id(),
                    ris_id=ris_id,
                    element_indices=indices,
                    beneficiary_ues=beneficiaries,
                    policy=policy,
                )
            )
        return leases

    if policy is AllocationPolicy.PARTITIONED:
        if len(pool) < len(ues):
            raise PoolExhausted(
                f"{len(pool)} free elements cannot serve {len(ues)} subscribers"
            )
        for ue, block in zip(ues, split_evenly(tuple(pool), len(ues))):
            # A block may straddle panels; emit one lease per panel segment.
            for ris_id in sorted({r for r, _ in block}):
                indices = tuple(i for r, i in block if r == ris_id)
                leases.append(
                    AllocationLease(
                        lease_id=next_lease_id(),
                        ris_id=ris_id,
                        element_indices=indices,
                        beneficiary_ues=frozenset({ue}),
                        policy=policy,
                    )
                )
        return leases

    raise ValueError(f"unknown policy {policy!r}")


def objective(metrics: MetricsSample, beneficiaries) -> float:
    """Summed throughput of the beneficiary UEs (1-based ids), bits/second."""
    if not beneficiaries:
        raise ValueError("objective over an empty beneficiary set")
    total = 0.0
    for ue_id in beneficiaries:
        idx = ue_id - 1
        if not (0 <= idx < len(metrics.throughput_bps)):
            raise ValueError(f"UE {ue_id} missing from metrics sample")
        total += metrics.throughput_bps[idx]
    return total
