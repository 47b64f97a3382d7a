"""Closed-form pre-distortion and offset correction for a finite-extinction-ratio
IQ Mach-Zehnder modulator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def er_to_imbalance(er_db: float) -> float:
    """Imbalance factor g for an extinction ratio ER = ((1+g)/(1-g))**2.

    ``er_db = inf`` gives the ideal g = 1; 0 dB gives g = 0.
    """
    if math.isinf(er_db) and er_db > 0:
        return 1.0
    if not er_db >= 0:
        raise ValueError(f"extinction ratio must be >= 0 dB, got {er_db}")
    r = math.sqrt(10 ** (er_db / 10))
    return (r - 1) / (r + 1)


def imbalance_to_er_db(g: float) -> float:
    if g >= 1:
        return math.inf
    return 10 * math.log10(((1 + g) / (1 - g)) ** 2)


@dataclass(frozen=True)
class ImbalanceSet:
    g_I: float = 1.0
    g_Q: float = 1.0
    g_P: float = 1.0

    def __post_init__(self):
        for name in ("g_I", "g_Q", "g_P"):
            g = getattr(self, name)
            if not 0 < g <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {g}")

    @classmethod
    def from_er(cls, er_i_db: float, er_o_db: float) -> "ImbalanceSet":
        """Inner ER on both I and Q MZIs, outer ER on the parent MZI."""
        gi = er_to_imbalance(er_i_db)
        return cls(gi, gi, er_to_imbalance(er_o_db))


@dataclass(frozen=True)
class DpdCoefficients:
    a_I: float
    b_I: float
    c_I: float
    d_I: float
    a_Q: float
    b_Q: float
    c_Q: float
    d_Q: float


def compute_dpd_coefficients(g: ImbalanceSet) -> DpdCoefficients:
    gI, gQ, gP = g.g_I, g.g_Q, g.g_P
    # inverse gain of each rail
    inv_i = math.sqrt((1 + gP) * (1 + gI)) / (math.sqrt(gP) * (1 + math.sqrt(gI)))
    inv_q = math.sqrt((1 + gP) * (1 + gQ)) / (1 + math.sqrt(gQ))
    # carrier leaked into the other rail by the imbalanced child MZI
    leak_q = (math.sqrt(gQ) - 1) / math.sqrt((1 + gP) * (1 + gQ))
    leak_i = math.sqrt(gP) * (1 - math.sqrt(gI)) / math.sqrt((1 + gP) * (1 + gI))

    a_I = inv_i
    a_Q = inv_q
    c_Q = -inv_q * leak_i
    c_I = -inv_i * leak_q
    b_I = 0.5 * inv_i * leak_q * a_Q ** 2
    d_I = inv_i * leak_q * a_Q * c_Q
    b_Q = 0.5 * inv_q * leak_i * a_I ** 2
    d_Q = inv_q * leak_i * a_I * c_I
    return DpdCoefficients(a_I, b_I, c_I, d_I, a_Q, b_Q, c_Q, d_Q)


@dataclass(frozen=True, eq=False)
class PredistortResult:
    v_I: np.ndarray
    v_Q: np.ndarray
    theta_I: np.ndarray
    theta_Q: np.ndarray

    @property
    def saturation_fraction(self) -> float:
        """Share of (I and Q) samples whose arcsin argument was hard-limited."""
        sat = np.count_nonzero(np.abs(self.theta_I) > 1) + np.count_nonzero(np.abs(self.theta_Q) > 1)
        return sat / (self.theta_I.size + self.theta_Q.size)

    def __iter__(self):
        return iter((self.v_I, self.v_Q))


def _arcsin_drive(theta, v_pi, v_bias):
    x = np.sign(theta) * np.minimum(np.abs(theta), 1.0)
    return (v_pi / np.pi) * (np.arcsin(x) - np.pi / 2) - v_bias


def predistort(s_I, s_Q, coeffs: DpdCoefficients, v_pi_I: float, v_pi_Q: float,
               v_bias_I: float, v_bias_Q: float) -> PredistortResult:
    """Polynomial cross-rail correction followed by the arcsin inverse.

    Unpacks as ``v_I, v_Q``; the arcsin arguments are kept for the
    saturation statistic.
    """
    s_I = np.asarray(s_I, dtype=float)
    s_Q = np.asarray(s_Q, dtype=float)
    if s_I.shape != s_Q.shape:
        raise ValueError("s_I and s_Q must have the same length")
    k = coeffs
    theta_I = k.a_I * s_I + k.b_I * s_Q ** 2 + k.d_I * s_Q + k.c_I
    theta_Q = k.a_Q * s_Q + k.b_Q * s_I ** 2 + k.d_Q * s_I + k.c_Q
    return PredistortResult(
        _arcsin_drive(theta_I, v_pi_I, v_bias_I),
        _arcsin_drive(theta_Q, v_pi_Q, v_bias_Q),
        theta_I,
        theta_Q,
    )


def offset_correct(v, alpha: float, literal: bool = True) -> np.ndarray:
    """Shift the drive mean to tune the residual-carrier power.

    ``literal=True`` subtracts ``alpha * sign(mean) * mean`` (that is,
    ``alpha * |mean|``); ``literal=False`` subtracts ``alpha * mean``.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    v = np.asarray(v, dtype=float)
    m = float(np.mean(v))
    shift = alpha * np.sign(m) * m if literal else alpha * m
    return v - shift
