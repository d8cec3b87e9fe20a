"""Simulation parameters in user-facing units and their linear-scale views.

Values in dB/dBm live only here; every accessor returns watts or linear
ratios, so the optimizers never see a logarithmic unit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .beamforming import PenaltySchedule
from .channels import ChannelParams, Geometry, db_to_linear, dbm_to_watt
from .system import NoiseParams, PowerModelParams, RateConstraints, SystemSetup

__all__ = ["SimulationParams"]


@dataclass(frozen=True)
class SimulationParams:
    # geometry (meters)
    bs_pos: tuple = (5.0, 45.0)
    ris_pos: tuple = (0.0, 50.0)
    ul_pos: tuple = (0.0, 35.0)
    dl_pos: tuple = (0.0, 100.0)
    # propagation
    pl0_db: float = -30.0
    exponent: float = 2.2
    rician_k_db: float = 3.0
    sigma_si_db: float = -100.0
    num_elements: int = 50
    # link budget
    noise_dbm: float = -90.0
    r_u_th: float = 1.0
    r_d_th: float = 3.0
    p_u_max_dbm: float = 20.0
    p_d_max_dbm: float = 30.0
    # power model
    p_c_dbm: float = 30.0
    p_s_dbm: float = 6.0
    p_c0_w: float = 0.05
    xi: float = 0.1
    rho: float = 0.8
    # algorithm
    mu: float = 100.0
    c: float = 0.7
    eps1: float = 1e-5
    eps2: float = 1e-5
    eps3: float = 1e-7
    max_dinkelbach: int = 50
    max_inner_sca: int = 30
    max_outer_penalty: int = 40
    ao_tolerance: float = 1e-4
    max_ao_iterations: int = 30
    init_restarts: int = 20

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **kw) -> "SimulationParams":
        return replace(self, **kw)

    def geometry(self) -> Geometry:
        return Geometry(self.bs_pos, self.ris_pos, self.ul_pos, self.dl_pos)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            pl0_db=self.pl0_db,
            exponent=self.exponent,
            rician_k=float(db_to_linear(self.rician_k_db)),
            num_elements=self.num_elements,
            sigma_si_sq=float(db_to_linear(self.sigma_si_db)),
        )

    def setup(self, half_duplex: bool = False) -> SystemSetup:
        noise = float(dbm_to_watt(self.noise_dbm))
        return SystemSetup(
            noise=NoiseParams(noise, noise),
            limits=RateConstraints(
                self.r_u_th, self.r_d_th,
                float(dbm_to_watt(self.p_u_max_dbm)), float(dbm_to_watt(self.p_d_max_dbm)),
            ),
            power=PowerModelParams(
                p_c=float(dbm_to_watt(self.p_c_dbm)),
                p_s=float(dbm_to_watt(self.p_s_dbm)),
                p_c0=self.p_c0_w,
                xi=self.xi,
                rho=self.rho,
            ),
            num_elements=self.num_elements,
            half_duplex=half_duplex,
        )

    def schedule(self) -> PenaltySchedule:
        return PenaltySchedule(self.mu, self.c, self.eps2, self.eps3,
                               self.max_inner_sca, self.max_outer_penalty)
