"""Geometric multi-user MIMO channel simulator with link blockage.

The cell is a single BS, one wall-mounted reflecting panel, and a handful of
UEs on a semicircle around the origin. Each directed link (BS-UE, BS-RIS,
RIS-UE) is a sum of one deterministic line-of-sight path and a few random
scattered paths; a per-epoch Bernoulli draw can block a link, attenuating the
whole link matrix. The RIS-cascaded effective channel and the per-UE Shannon
throughput close the loop for the configuration service, which only ever sees
the throughput feedback, never these matrices.

All sampling is a pure function of (scenario, link, epoch) via keyed counter
streams, so repeated evaluation is bitwise identical and A/B comparisons can
replay the exact same fading and blockage.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .elements import CircuitConstants, RisPanel, reflection_vector
from .rng import make_rng

SPEED_OF_LIGHT_M_S = 299792458.0

LINK_KINDS = ("bs_ue", "bs_ris", "ris_ue")

# Link identifier: (kind, ue_index) with ue_index None for the BS-RIS hop.
Link = tuple


class ScenarioError(ValueError):
    """Scenario construction rejected; message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    """Immutable cell description; hashable so simulators can be cached."""

    bs_position: tuple
    ris_position: tuple
    ue_positions: tuple          # ((x, y, z), ...) one per UE
    bs_antennas: int
    ue_antennas: int
    ris_rows: int
    ris_cols: int
    frequency_plan: tuple        # ((center_hz, bandwidth_hz), ...) one per UE
    p_block_bs_ue: float
    p_block_ris_ue: float
    p_block_bs_ris: float
    blockage_attenuation_db: float
    los_paths: int
    nlos_paths: int
    reference_distance_m: float
    los_exponent: float
    nlos_exponent: float
    nlos_total_offset_db: float
    tx_power_w: float
    noise_power_w: float
    circuit: CircuitConstants
    element_resistance_ohm: float
    quantization_levels: int
    seed: int

    @property
    def n_ues(self) -> int:
        return len(self.ue_positions)

    @property
    def ris_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    def band_center_hz(self, ue_index: int) -> float:
        return self.frequency_plan[ue_index][0]

    def band_omega(self, ue_index: int) -> float:
        return 2.0 * math.pi * self.frequency_plan[ue_index][0]

    def links(self) -> list:
        out = [("bs_ris", None)]
        for u in range(self.n_ues):
            out.append(("bs_ue", u))
            out.append(("ris_ue", u))
        return out


@dataclass(frozen=True)
class PathSet:
    """Multipath structure of one link at one epoch (LoS entry first)."""

    link: Link
    gains: np.ndarray          # (P,) complex, delay-free
    departure_az: np.ndarray   # (P,) radians
    departure_el: np.ndarray
    arrival_az: np.ndarray
    arrival_el: np.ndarray
    is_los: np.ndarray         # (P,) bool
    blocked: bool


@dataclass(frozen=True)
class LinkMatrix:
    """Complex channel matrix (rows = receive ports, cols = transmit ports)."""

    matrix: np.ndarray
    link_kind: str
    omega: float


@dataclass(frozen=True)
class MetricsSample:
    """Per-UE performance feedback for one epoch."""

    epoch: int
    throughput_bps: tuple
    sinr_db: tuple


def ue_angles_deg(n_ues: int) -> list:
    """Even interior placement of n points on the 180-degree semicircle."""
    return [180.0 * (i + 0.5) / n_ues for i in range(n_ues)]


def build_scenario(config: dict | None = None, seed: int = 0) -> Scenario:
    """Construct a Scenario from a normalized configuration document.

    UEs sit at evenly spaced interior angles on a semicircle centered at the
    origin. Deterministic: the same (config, seed) always yields the same
    Scenario value.
    """
    from .config import normalize_config

    cfg = normalize_config(config)["scenario"]
    geo, arr, freq = cfg["geometry"], cfg["arrays"], cfg["frequency"]
    pl, blk, pwr, elem = cfg["pathloss"], cfg["blockage"], cfg["power"], cfg["element"]

    radius = geo["ue_radius_m"]
    n_ues = geo["ue_count"]
    ue_positions = tuple(
        (
            radius * math.cos(math.radians(a)),
            radius * math.sin(math.radians(a)),
            geo["ue_height_m"],
        )
        for a in ue_angles_deg(n_ues)
    )
    spacing = freq["bandwidth_hz"] + freq["guard_hz"]
    plan = tuple(
        (freq["first_center_hz"] + u * spacing, freq["bandwidth_hz"]) for u in range(n_ues)
    )
    noise_w = 10.0 ** (
        (pwr["noise_psd_dbm_hz"] + pwr["noise_figure_db"] - 30.0) / 10.0
    ) * freq["bandwidth_hz"]
    return Scenario(
        bs_position=tuple(geo["bs_position"]),
        ris_position=tuple(geo["ris_position"]),
        ue_positions=ue_positions,
        bs_antennas=arr["bs_antennas"],
        ue_antennas=arr["ue_antennas"],
        ris_rows=arr["ris_rows"],
        ris_cols=arr["ris_cols"],
        frequency_plan=plan,
        p_block_bs_ue=blk["bs_ue"],
        p_block_ris_ue=blk["ris_ue"],
        p_block_bs_ris=blk["bs_ris"],
        blockage_attenuation_db=blk["attenuation_db"],
        los_paths=pl["los_paths"],
        nlos_paths=pl["nlos_paths"],
        reference_distance_m=pl["reference_distance_m"],
        los_exponent=pl["los_exponent"],
        nlos_exponent=pl["nlos_exponent"],
        nlos_total_offset_db=pl["nlos_total_offset_db"],
        tx_power_w=10.0 ** ((pwr["tx_power_dbm"] - 30.0) / 10.0),
        noise_power_w=noise_w,
        circuit=CircuitConstants(elem["l1_h"], elem["l2_h"], elem["z0_ohm"]),
        element_resistance_ohm=elem["resistance_ohm"],
        quantization_levels=elem["quantization_levels"],
        seed=seed,
    )


def _unit(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def _angles_of(direction: np.ndarray) -> tuple:
    az = math.atan2(direction[1], direction[0])
    el = math.asin(max(-1.0, min(1.0, direction[2])))
    return az, el


def _directions(az: np.ndarray, el: np.ndarray) -> np.ndarray:
    cos_el = np.cos(el)
    return np.stack([cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)], axis=1)


def _ula_offsets(n: int, spacing: float) -> np.ndarray:
    idx = np.arange(n) - (n - 1) / 2.0
    out = np.zeros((n, 3))
    out[:, 0] = idx * spacing
    return out


def _upa_offsets(rows: int, cols: int, spacing: float) -> np.ndarray:
    r = np.arange(rows) - (rows - 1) / 2.0
    c = np.arange(cols) - (cols - 1) / 2.0
    zz, xx = np.meshgrid(r * spacing, c * spacing, indexing="ij")
    out = np.zeros((rows * cols, 3))
    out[:, 0] = xx.ravel()
    out[:, 2] = zz.ravel()
    return out


class ChannelSimulator:
    """Precomputed geometry plus per-epoch sampling for one Scenario.

    Array spacing is half a wavelength at the plan's first band center, fixed
    in meters; steering phases use the actual evaluation frequency.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        lam_ref = SPEED_OF_LIGHT_M_S / scenario.frequency_plan[0][0]
        half = lam_ref / 2.0
        self._lam_ref = lam_ref
        self._bs = np.asarray(scenario.bs_position)
        self._ris = np.asarray(scenario.ris_position)
        self._ues = [np.asarray(p) for p in scenario.ue_positions]
        self._offsets = {
            "bs": _ula_offsets(scenario.bs_antennas, half),
            "ue": _ula_offsets(scenario.ue_antennas, half),
            "ris": _upa_offsets(scenario.ris_rows, scenario.ris_cols, half),
        }
        self._pl0 = (lam_ref / (4.0 * math.pi * scenario.reference_distance_m)) ** 2
        self._los_geom = {link: self._link_geometry(link) for link in scenario.links()}
        self._p_block = {
            "bs_ue": scenario.p_block_bs_ue,
            "ris_ue": scenario.p_block_ris_ue,
            "bs_ris": scenario.p_block_bs_ris,
        }

    # -- geometry ---------------------------------------------------------

    def _endpoints(self, link: Link) -> tuple:
        kind, ue = link
        if kind == "bs_ue":
            return self._bs, self._ues[ue]
        if kind == "bs_ris":
            return self._bs, self._ris
        if kind == "ris_ue":
            return self._ris, self._ues[ue]
        raise ScenarioError(f"unknown link kind {kind!r}")

    def _link_geometry(self, link: Link) -> tuple:
        tx, rx = self._endpoints(link)
        delta = rx - tx
        distance = float(np.linalg.norm(delta))
        u_dep = _unit(delta)              # seen from the transmit array
        u_arr = -u_dep                    # seen from the receive array
        return distance, _angles_of(u_dep), _angles_of(u_arr)

    def _port_offsets(self, kind: str) -> tuple:
        # Returns (rx_offsets, tx_offsets) for the link kind.
        if kind == "bs_ue":
            return self._offsets["ue"], self._offsets["bs"]
        if kind == "bs_ris":
            return self._offsets["ris"], self._offsets["bs"]
        if kind == "ris_ue":
            return self._offsets["ue"], self._offsets["ris"]
        raise ScenarioError(f"unknown link kind {kind!r}")

    # -- sampling ---------------------------------------------------------

    def sample_paths(self, link: Link, epoch: int) -> PathSet:
        """Multipath realization of a link at one epoch; pure in its keys."""
        kind, ue = link
        if kind not in LINK_KINDS or (kind == "bs_ris") != (ue is None):
            raise ScenarioError(f"unknown link {link!r}")
        if ue is not None and not (0 <= ue < self.scenario.n_ues):
            raise ScenarioError(f"link {link!r}: no such UE")
        sc = self.scenario
        distance, (az_d, el_d), (az_a, el_a) = self._los_geom[link]
        d_norm = max(distance / sc.reference_distance_m, 1.0)

        n_los, n_nlos = sc.los_paths, sc.nlos_paths
        n_paths = n_los + n_nlos
        gains = np.zeros(n_paths, dtype=complex)
        dep_az = np.empty(n_paths)
        dep_el = np.empty(n_paths)
        arr_az = np.empty(n_paths)
        arr_el = np.empty(n_paths)
        is_los = np.zeros(n_paths, dtype=bool)

        if n_los:
            los_power = self._pl0 * d_norm ** (-sc.los_exponent)
            phase = -2.0 * math.pi * distance / self._lam_ref
            gains[0] = math.sqrt(los_power) * complex(math.cos(phase), math.sin(phase))
            dep_az[0], dep_el[0] = az_d, el_d
            arr_az[0], arr_el[0] = az_a, el_a
            is_los[0] = True

        if n_nlos:
            rng = make_rng(sc.seed, "paths", kind, ue, epoch)
            total = (
                self._pl0
                * d_norm ** (-sc.nlos_exponent)
                * 10.0 ** (sc.nlos_total_offset_db / 10.0)
            )
            scale = math.sqrt(total / n_nlos / 2.0)
            re = rng.standard_normal(n_nlos)
            im = rng.standard_normal(n_nlos)
            gains[n_los:] = scale * (re + 1j * im)
            dep_az[n_los:] = rng.uniform(-math.pi, math.pi, n_nlos)
            dep_el[n_los:] = rng.uniform(-math.pi / 2, math.pi / 2, n_nlos)
            arr_az[n_los:] = rng.uniform(-math.pi, math.pi, n_nlos)
            arr_el[n_los:] = rng.uniform(-math.pi / 2, math.pi / 2, n_nlos)

        p_block = self._p_block[kind]
        blocked = bool(
            p_block > 0.0
            and make_rng(sc.seed, "blockage", kind, ue, epoch).random() < p_block
        )
        return PathSet(
            link=link,
            gains=gains,
            departure_az=dep_az,
            departure_el=dep_el,
            arrival_az=arr_az,
            arrival_el=arr_el,
            is_los=is_los,
            blocked=blocked,
        )

    def link_matrix(self, paths: PathSet, omega: float) -> LinkMatrix:
        """Synthesize the channel matrix from paths at carrier ``omega``."""
        kind = paths.link[0]
        rx_off, tx_off = self._port_offsets(kind)
        k = omega / SPEED_OF_LIGHT_M_S
        u_arr = _directions(paths.arrival_az, paths.arrival_el)    # (P, 3)
        u_dep = _directions(paths.departure_az, paths.departure_el)
        phase_rx = np.exp(-1j * k * (rx_off @ u_arr.T))            # (Nr, P)
        phase_tx = np.exp(-1j * k * (tx_off @ u_dep.T))            # (Nt, P)
        h = (phase_rx * paths.gains) @ phase_tx.T
        if paths.blocked:
            h = h * 10.0 ** (-self.scenario.blockage_attenuation_db / 20.0)
        if not np.all(np.isfinite(h)):
            raise ScenarioError(f"link {paths.link!r}: non-finite channel entries")
        return LinkMatrix(matrix=h, link_kind=kind, omega=omega)

    def channel_triplet(self, ue_index: int, epoch: int, omega: float) -> tuple:
        """(H_direct, H_bs_ris, H_ris_ue) raw matrices for one UE at one epoch."""
        hd = self.link_matrix(self.sample_paths(("bs_ue", ue_index), epoch), omega)
        hbr = self.link_matrix(self.sample_paths(("bs_ris", None), epoch), omega)
        hru = self.link_matrix(self.sample_paths(("ris_ue", ue_index), epoch), omega)
        return hd.matrix, hbr.matrix, hru.matrix

    # -- metrics ----------------------------------------------------------

    def network_metrics(self, panel: RisPanel | None, epoch: int) -> MetricsSample:
        """Per-UE throughput/SINR feedback at one epoch.

        Every UE's channel includes the cascade through the live panel state,
        subscriber or not; ``panel=None`` means no panel is deployed at all.
        """
        sc = self.scenario
        throughput = []
        sinr = []
        for u in range(sc.n_ues):
            omega = sc.band_omega(u)
            hd, hbr, hru = self.channel_triplet(u, epoch, omega)
            if panel is None:
                h_eff = hd
            else:
                v = reflection_vector(panel, omega)
                h_eff = cascade_matrix(hd, hbr, hru, v)
            bw = sc.frequency_plan[u][1]
            throughput.append(
                throughput_bps(h_eff, sc.tx_power_w, sc.noise_power_w, bw)
            )
            sinr.append(sinr_proxy_db(h_eff, sc.tx_power_w, sc.noise_power_w))
        return MetricsSample(
            epoch=epoch, throughput_bps=tuple(throughput), sinr_db=tuple(sinr)
        )


@functools.lru_cache(maxsize=16)
def simulator_for(scenario: Scenario) -> ChannelSimulator:
    return ChannelSimulator(scenario)


def sample_paths(scenario: Scenario, link: Link, epoch: int) -> PathSet:
    return simulator_for(scenario).sample_paths(link, epoch)


def link_matrix(scenario: Scenario, paths: PathSet, omega: float) -> LinkMatrix:
    return simulator_for(scenario).link_matrix(paths, omega)


def network_metrics(scenario: Scenario, panel: RisPanel | None, epoch: int) -> MetricsSample:
    return simulator_for(scenario).network_metrics(panel, epoch)


def cascade_matrix(
    h_direct: np.ndarray, h_bs_ris: np.ndarray, h_ris_ue: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """H_direct + H_ris_ue @ diag(v) @ H_bs_ris on raw arrays (hot path)."""
    return h_direct + (h_ris_ue * v) @ h_bs_ris


def effective_channel(
    h_direct: LinkMatrix, h_bs_ris: LinkMatrix, h_ris_ue: LinkMatrix, v: np.ndarray
) -> LinkMatrix:
    """Cascade the panel into the direct link: H_direct + H_ris_ue diag(v) H_bs_ris.

    All three inputs must be evaluated at the same carrier, and the
    reflection vector must be passive (|v_i| <= 1).
    """
    if not (h_direct.omega == h_bs_ris.omega == h_ris_ue.omega):
        raise ValueError(
            f"carrier mismatch: {h_direct.omega}, {h_bs_ris.omega}, {h_ris_ue.omega}"
        )
    v = np.asarray(v)
    n_rx, n_tx = h_direct.matrix.shape
    n_ris = v.shape[0]
    if h_bs_ris.matrix.shape != (n_ris, n_tx) or h_ris_ue.matrix.shape != (n_rx, n_ris):
        raise ValueError(
            f"dimension mismatch: direct {h_direct.matrix.shape}, "
            f"bs_ris {h_bs_ris.matrix.shape}, ris_ue {h_ris_ue.matrix.shape}, "
            f"v length {n_ris}"
        )
    if np.any(np.abs(v) > 1.0 + 1e-9):
        raise ValueError("reflection vector is not passive (|v| > 1)")
    return LinkMatrix(
        matrix=cascade_matrix(h_direct.matrix, h_bs_ris.matrix, h_ris_ue.matrix, v),
        link_kind="effective",
        omega=h_direct.omega,
    )


def throughput_bps(
    h: np.ndarray | LinkMatrix,
    tx_power_w: float,
    noise_power_w: float,
    bandwidth_hz: float,
) -> float:
    """MIMO Shannon throughput with equal power allocation across tx ports:

        bandwidth * log2 det(I + tx_power/(n_tx*noise) * H H*)
    """
    if isinstance(h, LinkMatrix):
        h = h.matrix
    if tx_power_w <= 0 or noise_power_w <= 0 or bandwidth_hz <= 0:
        raise ValueError("tx power, noise power, and bandwidth must be positive")
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    n_tx = h.shape[1]
    gram = h @ h.conj().T
    gram *= tx_power_w / (n_tx * noise_power_w)
    gram += np.eye(gram.shape[0])
    sign, logdet = np.linalg.slogdet(gram)
    return float(bandwidth_hz * logdet / math.log(2.0))


def sinr_proxy_db(h: np.ndarray, tx_power_w: float, noise_power_w: float) -> float:
    """Average per-receive-port SNR in dB, a cheap scalar link-quality proxy."""
    n_rx, n_tx = h.shape
    mean_gain = float(np.sum(np.abs(h) ** 2)) / (n_rx * n_tx)
    snr = tx_power_w * mean_gain / noise_power_w
    # Floor instead of -inf so feedback records stay finite on a dead link.
    return max(10.0 * math.log10(snr), -300.0) if snr > 0 else -300.0
