"""Trellis-coded MQAM power requirements.

Functions accept scalars or numpy arrays and broadcast. Constellation sizes
may be non-integer; the hop constellation is ``2 ** (rate / code_rate)``.
"""
from __future__ import annotations

import numpy as np

from .core_model import DomainError, SystemParams

# ber_mqam saturates at this value for gamma = 0
BER_CEILING = 0.2


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check_pe(pe):
    pe = np.asarray(pe, dtype=float)
    if np.any(~(pe > 0)) or np.any(pe > BER_CEILING):
        raise DomainError(f"target BER must lie in (0, {BER_CEILING}]")
    return pe


def _check_gain(h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise DomainError("channel gain must be > 0")
    return h


def constellation_size(rate, params: SystemParams):
    """M = 2^(rate / eta_c) for a hop carrying ``rate`` bits/s/Hz."""
    rate = np.asarray(rate, dtype=float)
    if np.any(~(rate > 0)):
        raise DomainError("spectral efficiency must be > 0")
    return _out(2.0 ** (rate / params.code_rate_etac))


def ber_mqam(gamma, m):
    """Approximate BER of Gray-mapped MQAM at linear SNR ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(~(m > 1)):
        raise DomainError("constellation size must be > 1")
    if np.any(gamma < 0):
        raise DomainError("SNR must be >= 0")
    return _out(BER_CEILING * np.exp(-1.5 * gamma / (m - 1.0)))


def required_snr(pe, m):
    """Inverse of :func:`ber_mqam` in ``gamma``."""
    pe = _check_pe(pe)
    m = np.asarray(m, dtype=float)
    if np.any(~(m > 1)):
        raise DomainError("constellation size must be > 1")
    return _out(-(m - 1.0) * np.log(5.0 * pe) / 1.5)


def required_power_uncoded(pe, m, h, params: SystemParams):
    """Transmit power (W) reaching BER ``pe`` over gain ``h`` without coding."""
    pe = _check_pe(pe)
    h = _check_gain(h)
    m = np.asarray(m, dtype=float)
    if np.any(~(m > 1)):
        raise DomainError("constellation size must be > 1")
    return _out(2.0 * np.log(5.0 * pe) * params.noise_power / (3.0 * h) * (1.0 - m))


def coded_power(rate_r, pe, h, params: SystemParams):
    """Transmit power (W) of trellis-coded MQAM at ``rate_r`` bits/s/Hz.

    This is the uncoded requirement scaled by ``eta_c / G_c``.
    """
    pe = _check_pe(pe)
    h = _check_gain(h)
    m = np.asarray(constellation_size(rate_r, params))
    eta, gc = params.code_rate_etac, params.coding_gain_gc
    return _out(2.0 * eta * np.log(5.0 * pe) * params.noise_power / (3.0 * h * gc) * (1.0 - m))


def df_end_to_end_ber(pe1, pe2):
    """BER after two decode-and-forward hops."""
    pe1 = np.asarray(pe1, dtype=float)
    pe2 = np.asarray(pe2, dtype=float)
    return _out(1.0 - (1.0 - pe1) * (1.0 - pe2))


def per_hop_ber_target(pe):
    """Equal per-hop BER giving end-to-end BER ``pe``."""
    pe = np.asarray(pe, dtype=float)
    if np.any(pe < 0) or np.any(pe > 1):
        raise DomainError("BER must lie in [0, 1]")
    return _out(1.0 - np.sqrt(1.0 - pe))


def rate_factor_f(rate, params: SystemParams):
    """Power-gain product (W) a hop at ``rate`` needs to meet the per-hop BER.

    Dividing by a channel gain gives the hop transmit power. Written in the
    ``log((1 + sqrt(1 - Pe)) / (5 Pe))`` form, which avoids the cancellation
    in ``1 - sqrt(1 - Pe)`` for small ``Pe``.
    """
    pe = params.target_ber_pe
    m = np.asarray(constellation_size(rate, params))
    scale = 2.0 * params.code_rate_etac * params.noise_power / (3.0 * params.coding_gain_gc)
    return _out(scale * (m - 1.0) * np.log((1.0 + np.sqrt(1.0 - pe)) / (5.0 * pe)))
