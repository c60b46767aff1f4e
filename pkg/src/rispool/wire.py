"""Line-oriented JSON wire records for the two stream interfaces.

Coefficient updates flow from the configuration service to the panel agent;
environment feedback flows from the radio network back to the service. Both
are newline-delimited JSON with a top-level schema version ``v``; unknown
versions are rejected. Updates carry a CRC32 checksum over their payload and
a per-lease monotonic sequence number so stale or corrupted updates can never
mutate panel state. The panel agent answers each update with a one-line ack
echoing the sequence number.

Record shapes (v1):

    update:   {"v":1,"ris_id":s,"seq":n,"indices":[...],
               "capacitance_pf":[...],"resistance_ohm":[...],"checksum":n}
    feedback: {"v":1,"epoch":n,"probe_tag":s?,
               "ues":[{"ue_id":n,"throughput_bps":x,"sinr_db":x,
                       "band_center_hz":x}, ...]}
    ack:      {"v":1,"ris_id":s,"seq":n,"status":"applied"|"stale"}
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass

SCHEMA_VERSION = 1

_JSON_OPTS = {"separators": (",", ":"), "sort_keys": True}


class WireError(ValueError):
    """Malformed or unsupported wire record."""


@dataclass(frozen=True)
class UeReport:
    ue_id: int
    throughput_bps: float
    sinr_db: float
    band_center_hz: float


@dataclass(frozen=True)
class CoefficientUpdate:
    """One In1 record: new tunings for a set of leased element indices."""

    ris_id: str
    sequence_number: int
    element_indices: tuple
    capacitance_pf: tuple
    resistance_ohm: tuple
    checksum: int

    def __post_init__(self) -> None:
        n = len(self.element_indices)
        if n == 0:
            raise WireError("update with no element indices")
        if len(self.capacitance_pf) != n or len(self.resistance_ohm) != n:
            raise WireError(
                f"index/tuning length mismatch: {n} indices, "
                f"{len(self.capacitance_pf)} capacitances, "
                f"{len(self.resistance_ohm)} resistances"
            )
        if any((not isinstance(i, int)) or i < 0 for i in self.element_indices):
            raise WireError("element indices must be non-negative integers")
        if len(set(self.element_indices)) != n:
            raise WireError("duplicate element indices in update")

    def payload_checksum(self) -> int:
        return update_checksum(
            self.ris_id, self.sequence_number, self.element_indices,
            self.capacitance_pf, self.resistance_ohm,
        )

    def checksum_ok(self) -> bool:
        return self.checksum == self.payload_checksum()


@dataclass(frozen=True)
class EnvironmentFeedback:
    """One In2 record: per-UE link quality for one reporting epoch."""

    reporting_epoch: int
    ue_reports: tuple
    probe_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.ue_reports:
            raise WireError("feedback with no UE records")
        for rec in self.ue_reports:
            for name in ("throughput_bps", "sinr_db", "band_center_hz"):
                if not math.isfinite(getattr(rec, name)):
                    raise WireError(f"UE {rec.ue_id}: non-finite {name}")

    def throughput_of(self, ue_id: int) -> float:
        for rec in self.ue_reports:
            if rec.ue_id == ue_id:
                return rec.throughput_bps
        raise KeyError(f"UE {ue_id} missing from feedback")


@dataclass(frozen=True)
class UpdateAck:
    ris_id: str
    sequence_number: int
    status: str  # "applied" | "stale"


def update_checksum(ris_id, sequence_number, indices, capacitance_pf, resistance_ohm) -> int:
    payload = json.dumps(
        [ris_id, sequence_number, list(indices), list(capacitance_pf), list(resistance_ohm)],
        **_JSON_OPTS,
    )
    return zlib.crc32(payload.encode("utf-8"))


def make_update(ris_id, sequence_number, indices, capacitance_pf, resistance_ohm) -> CoefficientUpdate:
    """Build a checksummed update record."""
    indices = tuple(int(i) for i in indices)
    capacitance_pf = tuple(float(c) for c in capacitance_pf)
    resistance_ohm = tuple(float(r) for r in resistance_ohm)
    return CoefficientUpdate(
        ris_id=ris_id,
        sequence_number=sequence_number,
        element_indices=indices,
        capacitance_pf=capacitance_pf,
        resistance_ohm=resistance_ohm,
        checksum=update_checksum(
            ris_id, sequence_number, indices, capacitance_pf, resistance_ohm
        ),
    )


def encode_update(msg: CoefficientUpdate) -> str:
    return json.dumps(
        {
            "v": SCHEMA_VERSION,
            "ris_id": msg.ris_id,
            "seq": msg.sequence_number,
            "indices": list(msg.element_indices),
            "capacitance_pf": list(msg.capacitance_pf),
            "resistance_ohm": list(msg.resistance_ohm),
            "checksum": msg.checksum,
        },
        **_JSON_OPTS,
    )


def encode_feedback(msg: EnvironmentFeedback) -> str:
    doc = {
        "v": SCHEMA_VERSION,
        "epoch": msg.reporting_epoch,
        "ues": [
            {
                "ue_id": r.ue_id,
                "throughput_bps": r.throughput_bps,
                "sinr_db": r.sinr_db,
                "band_center_hz": r.band_center_hz,
            }
            for r in msg.ue_reports
        ],
    }
    if msg.probe_tag is not None:
        doc["probe_tag"] = msg.probe_tag
    return json.dumps(doc, **_JSON_OPTS)


def encode_ack(ack: UpdateAck) -> str:
    return json.dumps(
        {
            "v": SCHEMA_VERSION,
            "ris_id": ack.ris_id,
            "seq": ack.sequence_number,
            "status": ack.status,
        },
        **_JSON_OPTS,
    )


def _parse(line: str) -> dict:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise WireError(f"expected a JSON object, got {type(doc).__name__}")
    version = doc.get("v")
    if version != SCHEMA_VERSION:
        raise WireError(f"unsupported schema version {version!r}")
    return doc


def _require(doc: dict, key: str, types, context: str):
    if key not in doc:
        raise WireError(f"{context}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise WireError(f"{context}: field {key!r} has wrong type {type(value).__name__}")
    return value


def decode_update(line: str) -> CoefficientUpdate:
    doc = _parse(line)
    ctx = "update"
    ris_id = _require(doc, "ris_id", str, ctx)
    seq = _require(doc, "seq", int, ctx)
    indices = _require(doc, "indices", list, ctx)
    caps = _require(doc, "capacitance_pf", list, ctx)
    ohms = _require(doc, "resistance_ohm", list, ctx)
    checksum = _require(doc, "checksum", int, ctx)
    extra = set(doc) - {"v", "ris_id", "seq", "indices", "capacitance_pf", "resistance_ohm", "checksum"}
    if extra:
        raise WireError(f"{ctx}: unknown fields {sorted(extra)}")
    try:
        return CoefficientUpdate(
            ris_id=ris_id,
            sequence_number=seq,
            element_indices=tuple(
                i if isinstance(i, int) and not isinstance(i, bool) else _bad(ctx, i)
                for i in indices
            ),
            capacitance_pf=tuple(float(c) for c in caps),
            resistance_ohm=tuple(float(r) for r in ohms),
            checksum=checksum,
        )
    except (TypeError, ValueError) as exc:
        raise WireError(f"{ctx}: {exc}") from None


def _bad(ctx, value):
    raise WireError(f"{ctx}: bad element index {value!r}")


def decode_feedback(line: str) -> EnvironmentFeedback:
    doc = _parse(line)
    ctx = "feedback"
    epoch = _require(doc, "epoch", int, ctx)
    ues = _require(doc, "ues", list, ctx)
    probe_tag = doc.get("probe_tag")
    if probe_tag is not None and not isinstance(probe_tag, str):
        raise WireError(f"{ctx}: probe_tag must be a string")
    extra = set(doc) - {"v", "epoch", "ues", "probe_tag"}
    if extra:
        raise WireError(f"{ctx}: unknown fields {sorted(extra)}")
    reports = []
    for entry in ues:
        if not isinstance(entry, dict):
            raise WireError(f"{ctx}: UE record must be an object")
        reports.append(
            UeReport(
                ue_id=_require(entry, "ue_id", int, ctx),
                throughput_bps=float(_require(entry, "throughput_bps", (int, float), ctx)),
                sinr_db=float(_require(entry, "sinr_db", (int, float), ctx)),
                band_center_hz=float(_require(entry, "band_center_hz", (int, float), ctx)),
            )
        )
    try:
        return EnvironmentFeedback(
            reporting_epoch=epoch, ue_reports=tuple(reports), probe_tag=probe_tag
        )
    except WireError:
        raise
    except (TypeError, ValueError) as exc:
        raise WireError(f"{ctx}: {exc}") from None


def decode_ack(line: str) -> UpdateAck:
    doc = _parse(line)
    ctx = "ack"
    status = _require(doc, "status", str, ctx)
    if status not in ("applied", "stale"):
        raise WireError(f"{ctx}: unknown status {status!r}")
    return UpdateAck(
        ris_id=_require(doc, "ris_id", str, ctx),
        sequence_number=_require(doc, "seq", int, ctx),
        status=status,
    )


def decode_any(line: str):
    """Decode a stream line into whichever record type its fields declare."""
    doc = _parse(line)
    if "ues" in doc:
        return decode_feedback(line)
    if "status" in doc:
        return decode_ack(line)
    if "seq" in doc:
        return decode_update(line)
    raise WireError("line matches no known record shape")
