"""Receiver noise, achievable bit resolution and laser power budget of a VDPC.

All loss bookkeeping is done in the dB domain. For a VDPC of N wavelengths
split over M waveguide arms the required per-laser power is

    P_laser[dBm] = P_pd[dBm] + IL_EC + IL_SMF + IL_OSM + IL_MRR + IL_penalty
                   + IL_WG[dB/mm] * N * d_OSM[mm]
                   + 10 log10(M) + EL_splitter * log2(M)
                   + (OBL_OSM + OBL_MRR) * (N - 1)
                   [ - 10 log10(eta_WPE)   electrical view only ]
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from scipy.optimize import brentq

Q_ELECTRON = 1.602176634e-19
K_BOLTZMANN = 1.380649e-23

DR_INTERPRETATIONS = ("br_times_2powB", "br_only")


def dbm_to_w(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


def w_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_w / 1e-3)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class OpticalLinkParams:
    P_laser_dbm: float = 10.0
    R_pd: float = 1.2
    R_L: float = 50.0
    I_d: float = 35e-9
    T: float = 300.0
    RIN_db_per_hz: float = -140.0
    eta_wpe: float = 0.1
    il_smf_db: float = 0.0
    il_ec_db: float = 1.6
    il_wg_db_per_mm: float = 0.3
    el_splitter_db: float = 0.01
    il_osm_db: float = 4.0
    obl_osm_db: float = 0.01
    il_mrr_db: float = 0.01
    obl_mrr_db: float = 0.01
    il_penalty_db: float = 7.3
    d_osm_mm: float = 0.02
    q: float = Q_ELECTRON
    k: float = K_BOLTZMANN

    _LOSSES = ("il_smf_db", "il_ec_db", "il_wg_db_per_mm", "el_splitter_db", "il_osm_db",
               "obl_osm_db", "il_mrr_db", "obl_mrr_db", "il_penalty_db")

    def __post_init__(self):
        bad = [f for f in self._LOSSES if getattr(self, f) < 0]
        if bad:
            raise ValueError(f"loss terms must be >= 0: {bad}")
        if self.R_pd <= 0 or self.R_L <= 0 or self.T <= 0 or self.d_osm_mm < 0:
            raise ValueError("responsivity, load, temperature must be > 0 and pitch >= 0")
        if not 0 < self.eta_wpe <= 1:
            raise ValueError("wall-plug efficiency must lie in (0, 1]")
        if self.I_d < 0:
            raise ValueError("dark current must be >= 0")

    @property
    def rin_linear(self) -> float:
        return 10.0 ** (self.RIN_db_per_hz / 10.0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalLinkParams":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown optical parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


def load_params(path) -> OpticalLinkParams:
    return OpticalLinkParams.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class SolveConfig:
    B: int = 8
    BR: float = 30e9
    B_res_target: float = 1.0
    dr_interpretation: str = "br_times_2powB"
    M_equals_N: bool = True

    def __post_init__(self):
        if not self.BR > 0:
            raise ValueError(f"bitrate must be > 0, got {self.BR}")
        if self.B < 1:
            raise ValueError("precision B must be >= 1")
        if self.B_res_target < 1:
            raise ValueError("target bit resolution must be >= 1")
        if self.dr_interpretation not in DR_INTERPRETATIONS:
            raise ValueError(f"dr_interpretation must be one of {DR_INTERPRETATIONS}")

    @property
    def DR(self) -> float:
        if self.dr_interpretation == "br_only":
            return self.BR
        return self.BR * 2 ** self.B


class NoSolutionError(ValueError):
    def __init__(self, msg, bracket):
        super().__init__(msg)
        self.bracket = bracket


def noise_terms(p_pd_w: float, params: OpticalLinkParams) -> dict:
    """Shot, thermal and RIN current-noise densities (A^2/Hz)."""
    if p_pd_w <= 0:
        raise ValueError("photodetector power must be positive")
    R = params.R_pd
    return {
        "shot": 2 * params.q * (R * p_pd_w + params.I_d),
        "thermal": 4 * params.k * params.T / params.R_L,
        "rin": (R * p_pd_w) ** 2 * params.rin_linear,
    }


def noise_beta(p_pd_w: float, params: OpticalLinkParams) -> float:
    return math.sqrt(sum(noise_terms(p_pd_w, params).values()))


def bit_resolution(p_pd_w: float, dr: float, params: OpticalLinkParams) -> float:
    if p_pd_w <= 0 or dr <= 0:
        raise ValueError("photodetector power and data rate must be positive")
    arg = params.R_pd * p_pd_w / (noise_beta(p_pd_w, params) * math.sqrt(dr / math.sqrt(2)))
    if arg <= 0:
        return -math.inf
    return (20 * math.log10(arg) - 1.76) / 6.02


def solve_pd_sensitivity(cfg: SolveConfig, params: OpticalLinkParams,
                         bracket=(-60.0, 0.0), xtol_db: float = 1e-9) -> float:
    """Smallest photodetector power (dBm) giving cfg.B_res_target bits."""
    dr = cfg.DR
    lo, hi = bracket

    def f(p_dbm):
        return bit_resolution(dbm_to_w(p_dbm), dr, params) - cfg.B_res_target

    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise NoSolutionError(
            f"no sign change of B_res - {cfg.B_res_target} in [{lo}, {hi}] dBm "
            f"(B_res: {f_lo + cfg.B_res_target:.3f} .. {f_hi + cfg.B_res_target:.3f})",
            (lo, hi))
    return float(brentq(f, lo, hi, xtol=xtol_db))


def link_budget_ledger(N: int, M: int, params: OpticalLinkParams,
                       wall_plug: bool = False) -> dict:
    """Every dB term between the laser and the photodetector, in order."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    p = params
    ledger = {
        "fiber_coupling": p.il_ec_db,
        "single_mode_fiber": p.il_smf_db,
        "waveguide": p.il_wg_db_per_mm * N * p.d_osm_mm,
        "splitter_fanout": 10 * math.log10(M),
        "splitter_excess": p.el_splitter_db * math.log2(M),
        "osm_insertion": p.il_osm_db,
        "osm_out_of_band": p.obl_osm_db * (N - 1),
        "mrr_insertion": p.il_mrr_db,
        "mrr_out_of_band": p.obl_mrr_db * (N - 1),
        "network_penalty": p.il_penalty_db,
    }
    if wall_plug:
        ledger["wall_plug"] = -10 * math.log10(p.eta_wpe)
    return ledger


def laser_power_required(N: int, M: int, p_pd_w: float, params: OpticalLinkParams,
                         wall_plug: bool = False) -> float:
    """Per-laser power (dBm) that delivers p_pd_w at every photodetector."""
    return w_to_dbm(p_pd_w) + sum(link_budget_ledger(N, M, params, wall_plug).values())


def max_supported_n(cfg: SolveConfig, params: OpticalLinkParams, p_pd_w: float,
                    wall_plug: bool = False, n_cap: int = 1 << 20, M: int | None = None) -> int:
    """Largest N whose budget fits P_laser_dbm; 0 if even N = 1 does not fit.

    M follows N when cfg.M_equals_N, otherwise the fixed ``M`` (default 1).
    """
    def fits(n):
        m = n if cfg.M_equals_N else (M or 1)
        return laser_power_required(n, m, p_pd_w, params, wall_plug) <= params.P_laser_dbm

    if not fits(1):
        return 0
    hi = 2
    while hi <= n_cap and fits(hi):
        hi *= 2
    hi = min(hi, n_cap + 1)
    # first N in [1, hi) that no longer fits; the budget grows with N
    return bisect.bisect_left(range(1, hi), True, key=lambda n: not fits(n))


@dataclass(frozen=True)
class ScalabilityReport:
    B: int
    BR: float
    DR: float
    dr_interpretation: str
    p_pd_dbm: float
    pinned: bool
    n_max: int
    p_laser_required_dbm: float
    n_max_electrical: int
    ledger: dict

    def row(self) -> dict:
        return {"B": self.B, "BR": self.BR, "DR": self.DR, "P_pd_dbm": self.p_pd_dbm,
                "N_max": self.n_max, "P_laser_required_dbm": self.p_laser_required_dbm}


SWEEP_COLUMNS = ("B", "BR", "DR", "P_pd_dbm", "N_max", "P_laser_required_dbm")


def scalability(cfg: SolveConfig, params: OpticalLinkParams,
                pin_ppd_dbm: float | None = None) -> ScalabilityReport:
    """Solve (or take pinned) P_pd, then the largest N; ledger reported at that N."""
    p_dbm = pin_ppd_dbm if pin_ppd_dbm is not None else solve_pd_sensitivity(cfg, params)
    p_w = dbm_to_w(p_dbm)
    n = max_supported_n(cfg, params, p_w)
    n_el = max_supported_n(cfg, params, p_w, wall_plug=True)
    n_ledger = max(n, 1)
    m = n_ledger if cfg.M_equals_N else 1
    return ScalabilityReport(
        B=cfg.B, BR=cfg.BR, DR=cfg.DR, dr_interpretation=cfg.dr_interpretation,
        p_pd_dbm=p_dbm, pinned=pin_ppd_dbm is not None, n_max=n,
        p_laser_required_dbm=laser_power_required(n_ledger, m, p_w, params),
        n_max_electrical=n_el, ledger=link_budget_ledger(n_ledger, m, params))


def sweep(Bs, BRs, params: OpticalLinkParams, dr_interpretation="br_times_2powB",
          pin_ppd_dbm: float | None = None) -> list[ScalabilityReport]:
    out = []
    for B in Bs:
        for BR in BRs:
            cfg = SolveConfig(B=B, BR=BR, dr_interpretation=dr_interpretation)
            out.append(scalability(cfg, params, pin_ppd_dbm))
    return out
