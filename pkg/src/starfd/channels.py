"""Channel realizations for the STAR-RIS assisted full-duplex link.

All RIS-side links use Rician fading on top of a log-distance path loss.  The
surface is a uniform linear array along the x axis with half-wavelength
spacing, so the line-of-sight component is a phase ramp set by the direction
from the surface to each terminal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Geometry",
    "ChannelParams",
    "ChannelSet",
    "CompositeChannels",
    "path_loss_gain",
    "draw_channel_set",
    "composite_channels",
    "db_to_linear",
    "dbm_to_watt",
]


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watt(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class Geometry:
    bs_pos: tuple = (5.0, 45.0)
    ris_pos: tuple = (0.0, 50.0)
    ul_pos: tuple = (0.0, 35.0)
    dl_pos: tuple = (0.0, 100.0)

    def distance(self, a: str, b: str) -> float:
        pa = np.asarray(getattr(self, a + "_pos"), dtype=float)
        pb = np.asarray(getattr(self, b + "_pos"), dtype=float)
        return float(np.hypot(*(pa - pb)))


@dataclass(frozen=True)
class ChannelParams:
    """Large- and small-scale fading parameters.

    Attributes
    ----------
    pl0_db : float
        Path loss at the 1 m reference distance in dB (negative).
    exponent : float
        Path-loss exponent.
    rician_k : float
        Linear Rician factor; ``math.inf`` gives a pure line-of-sight link.
    num_elements : int
        Number of surface elements M.
    sigma_si_sq : float
        Variance of the residual self-interference channel (linear).
    """

    pl0_db: float = -30.0
    exponent: float = 2.2
    rician_k: float = float(db_to_linear(3.0))
    num_elements: int = 50
    sigma_si_sq: float = float(db_to_linear(-100.0))

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.rician_k < 0:
            raise ValueError("Rician factor must be non-negative")
        if self.num_elements < 1:
            raise ValueError("need at least one element")
        if self.sigma_si_sq < 0:
            raise ValueError("RSI variance must be non-negative")


@dataclass(frozen=True)
class ChannelSet:
    """One draw of every link.

    ``h_ib`` and ``h_id`` are stored as column vectors whose conjugate
    transpose is the row channel seen by the receiver.
    """

    h_ui: np.ndarray
    h_ib: np.ndarray
    h_bi: np.ndarray
    h_id: np.ndarray
    h_bb: complex

    @property
    def num_elements(self) -> int:
        return self.h_ui.shape[0]


@dataclass(frozen=True)
class CompositeChannels:
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    h_bb: complex

    @property
    def num_elements(self) -> int:
        return self.h1.shape[0]


def path_loss_gain(d, params: ChannelParams):
    """Linear power gain ``PL0 * d**(-exponent)`` for a distance in meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = db_to_linear(params.pl0_db) * d ** (-params.exponent)
    return float(out) if out.ndim == 0 else out


def _los(geometry: Geometry, other: str, m: int) -> np.ndarray:
    ris = np.asarray(geometry.ris_pos, dtype=float)
    pos = np.asarray(getattr(geometry, other + "_pos"), dtype=float)
    d = np.hypot(*(pos - ris))
    cos_angle = (pos[0] - ris[0]) / d
    return np.exp(1j * math.pi * np.arange(m) * cos_angle)


def _cn(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def _rician(rng, los, k):
    nlos = _cn(rng, los.shape)
    if math.isinf(k):
        return los
    return math.sqrt(k / (k + 1.0)) * los + math.sqrt(1.0 / (k + 1.0)) * nlos


def draw_channel_set(geometry: Geometry, params: ChannelParams, seed) -> ChannelSet:
    """Draw all links from ``seed`` (an int or a ``numpy.random.Generator``).

    The random stream is consumed in a fixed order that does not depend on
    ``sigma_si_sq``, so changing the RSI variance only rescales ``h_bb``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = params.num_elements
    k = params.rician_k

    def link(other, dist_key):
        gain = path_loss_gain(geometry.distance(*dist_key), params)
        return math.sqrt(gain) * _rician(rng, _los(geometry, other, m), k)

    h_ui = link("ul", ("ul", "ris"))
    h_ib = link("bs", ("bs", "ris"))
    h_bi = link("bs", ("bs", "ris"))
    h_id = link("dl", ("dl", "ris"))
    z = complex(_cn(rng, 1)[0])
    return ChannelSet(h_ui, h_ib, h_bi, h_id, math.sqrt(params.sigma_si_sq) * z)


def composite_channels(cs: ChannelSet) -> CompositeChannels:
    """Cascade the two hops so that ``q^H h1 = h_ib^H Diag(conj(q)) h_ui``."""
    n = {v.shape for v in (cs.h_ui, cs.h_ib, cs.h_bi, cs.h_id)}
    if len(n) != 1:
        raise ValueError("channel vectors must share one length")
    return CompositeChannels(
        h1=np.conj(cs.h_ib) * cs.h_ui,
        h2=np.conj(cs.h_id) * cs.h_bi,
        h3=np.conj(cs.h_id) * cs.h_ui,
        h_bb=complex(cs.h_bb),
    )
