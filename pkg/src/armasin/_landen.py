"""Jacobi elliptic functions and complete elliptic integrals by descending
Landen transformations.

Functions take the modulus ``k`` (not the parameter m = k^2).  Arguments to
``sne``/``cde`` are normalised: ``sne(u, k) = sn(u*K(k), k)``.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = np.finfo(float).eps


def landen(k: float, kp: float | None = None) -> list[float]:
    """Descending Landen moduli k_1, k_2, ... until they fall below eps.

    ``kp`` is the complementary modulus; passing it keeps precision when k is
    within rounding of 1.
    """
    if kp is None:
        kp = math.sqrt((1.0 - k) * (1.0 + k))
    out = []
    while k > _EPS:
        # 1 - k_next = 2 kp / (1 + kp) exactly, which avoids cancellation
        k_next = (k / (1.0 + kp)) ** 2
        one_minus = 2.0 * kp / (1.0 + kp)
        kp = math.sqrt(one_minus * (1.0 + k_next))
        k = k_next
        out.append(k)
        if len(out) > 64:
            break
    return out


def ellipk(k: float, kp: float | None = None) -> float:
    """Complete elliptic integral of the first kind K(k)."""
    if k >= 1.0 and (kp is None or kp <= 0.0):
        return math.inf
    v = landen(k, kp)
    return math.pi / 2.0 * float(np.prod([1.0 + x for x in v]))


def _ascend(w, v):
    for vn in reversed(v):
        w = (1.0 + vn) * w / (1.0 + vn * w * w)
    return w


def cde(u, k: float):
    """cd(u*K, k) for real or complex u."""
    return _ascend(np.cos(np.asarray(u) * np.pi / 2.0), landen(k))


def sne(u, k: float):
    """sn(u*K, k) for real or complex u."""
    return _ascend(np.sin(np.asarray(u) * np.pi / 2.0), landen(k))


def _srem(x, y):
    return x - y * np.round(x / y)


def acde(w, k: float):
    """Inverse of ``cde``: u with cd(u*K, k) = w, reduced to the fundamental cell."""
    w = np.asarray(w, dtype=np.complex128)
    v = landen(k)
    prev = k
    for vn in v:
        w = w / (1.0 + np.sqrt(1.0 - w * w * prev * prev)) * 2.0 / (1.0 + vn)
        prev = vn
    u = 2.0 / np.pi * np.arccos(w)
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    ratio = ellipk(kp, k) / ellipk(k, kp)
    return _srem(u.real, 4.0) + 1j * _srem(u.imag, 2.0 * ratio)


def asne(w, k: float):
    """Inverse of ``sne``."""
    return 1.0 - acde(w, k)


def ellipdeg(n: int, k1: float) -> float:
    """Selectivity modulus k solving the degree equation for order n and
    discrimination modulus k1."""
    k1p = math.sqrt((1.0 - k1) * (1.0 + k1))
    half = n // 2
    ui = (2.0 * np.arange(1, half + 1) - 1.0) / n
    kp = k1p ** n * float(np.prod(sne(ui, k1p))) ** 4
    return math.sqrt((1.0 - kp) * (1.0 + kp))


def degree_ratio(k: float, k1: float) -> float:
    """K(k) K'(k1) / (K'(k) K(k1)): the real-valued order needed."""
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    k1p = math.sqrt((1.0 - k1) * (1.0 + k1))
    return ellipk(k, kp) * ellipk(k1p, k1) / (ellipk(kp, k) * ellipk(k1, k1p))


def elliptic_prototype(n: int, rp: float, rs: float):
    """Analog lowpass elliptic prototype with passband edge at 1 rad/s.

    Returns ``(zeros, poles, gain)``; the DC gain is 1 for odd ``n`` and the
    passband floor ``10**(-rp/20)`` for even ``n``.
    """
    ep = math.sqrt(10.0 ** (rp / 10.0) - 1.0)
    es = math.sqrt(10.0 ** (rs / 10.0) - 1.0)
    k1 = ep / es
    k = ellipdeg(n, k1)
    half, odd = n // 2, n % 2
    ui = (2.0 * np.arange(1, half + 1) - 1.0) / n
    zeta = cde(ui, k)
    z_half = 1j / (k * zeta)
    v0 = -1j * asne(1j / ep, k1) / n
    p_half = 1j * cde(ui - 1j * v0, k)
    zeros = np.concatenate([z_half, np.conj(z_half)])
    poles = np.concatenate([p_half, np.conj(p_half)])
    if odd:
        # real pole; the imaginary part is rounding residue
        p0 = complex(1j * sne(1j * v0, k))
        poles = np.concatenate([poles, [complex(p0.real, 0.0)]])
    dc = 1.0 if odd else 10.0 ** (-rp / 20.0)
    gain = dc * np.prod(-poles) / np.prod(-zeros)
    return zeros, poles, float(np.real(gain))
