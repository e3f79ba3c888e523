"""Independent reference values: closed-form Gaussians and scipy quadrature.

Nothing here imports the package under test.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

ENTANGLED = {"kind": "superposition", "terms": [
    {"weight": 1, "state": {"kind": "gaussian", "packets": [
        {"center": [-2.0], "width": 1.0, "momentum": [2.0]},
        {"center": [2.0], "width": 1.0, "momentum": [-2.0]}]}},
    {"weight": 1, "state": {"kind": "gaussian", "packets": [
        {"center": [1.0], "width": 1.0, "momentum": [0.0]},
        {"center": [-3.0], "width": 1.0, "momentum": [1.0]}]}}]}


def packet(x, c, s, k, t=0.0):
    """Free evolution (hbar = m = 1) of a normalised packet with std ``s`` and phase ``exp(ikx)``."""
    x = np.asarray(x, dtype=float)
    z = 1.0 + 1j * t / (2.0 * s * s)
    pref = (2.0 * math.pi * s * s) ** -0.25 / np.sqrt(z)
    return pref * np.exp(-((x - c - k * t) ** 2) / (4.0 * s * s * z) + 1j * k * x - 0.5j * k * k * t)


def packet_dx(x, c, s, k, t=0.0):
    z = 1.0 + 1j * t / (2.0 * s * s)
    return packet(x, c, s, k, t) * (-(np.asarray(x) - c - k * t) / (2.0 * s * s * z) + 1j * k)


def free_width(t, s0=1.0, hbar=1.0, m=1.0):
    return s0 * math.sqrt(1.0 + (hbar * t / (2.0 * m * s0 * s0)) ** 2)


def free_velocity(q, t, s0=1.0):
    """Velocity field of a centred free packet: ``q * d/dt log sigma(t)``."""
    return q * (t / (4.0 * s0 ** 4)) / (1.0 + t * t / (4.0 * s0 ** 4))


def _cquad(f, a, b):
    re = integrate.quad(lambda x: f(x).real, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    im = integrate.quad(lambda x: f(x).imag, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    return re + 1j * im


class TwoParticleSuperposition:
    """``psi = C * sum_j w_j a_j(x1) b_j(x2)`` with analytic packet factors (d = 1)."""

    def __init__(self, recipe=ENTANGLED, t=0.0, lim=20.0):
        self.t = t
        self.lim = lim
        self.terms = []
        for term in recipe["terms"]:
            p1, p2 = term["state"]["packets"]
            self.terms.append((complex(term.get("weight", 1.0)),
                               (p1["center"][0], p1["width"], p1["momentum"][0]),
                               (p2["center"][0], p2["width"], p2["momentum"][0])))
        n2 = 0.0
        for wi, ai, bi in self.terms:
            for wj, aj, bj in self.terms:
                n2 += (np.conj(wi) * wj * self.overlap(ai, aj) * self.overlap(bi, bj)).real
        self.c = 1.0 / math.sqrt(n2)

    def f(self, x, p):
        return packet(x, *p, t=self.t)

    def df(self, x, p):
        return packet_dx(x, *p, t=self.t)

    def overlap(self, p, q, a=None, b=None):
        a = -self.lim if a is None else a
        b = self.lim if b is None else b
        return _cquad(lambda x: np.conj(self.f(x, p)) * self.f(x, q), a, b)

    def psi(self, x1, x2):
        return self.c * sum(w * self.f(x1, a) * self.f(x2, b) for w, a, b in self.terms)

    def d1psi(self, x1, x2):
        return self.c * sum(w * self.df(x1, a) * self.f(x2, b) for w, a, b in self.terms)

    def d2psi(self, x1, x2):
        return self.c * sum(w * self.f(x1, a) * self.df(x2, b) for w, a, b in self.terms)

    # marginal over particle 2 on [a, b]
    def _partial2(self, x1, kernel, a, b):
        tot = 0.0
        for wi, ai, bi in self.terms:
            for wj, aj, bj in self.terms:
                tot += np.conj(wi) * wj * kernel(x1, ai, aj) * self.overlap(bi, bj, a, b)
        return self.c ** 2 * tot

    def rho1(self, x1, a=None, b=None):
        k = lambda x, p, q: np.conj(self.f(x, p)) * self.f(x, q)
        return self._partial2(x1, k, a, b).real

    def j1(self, x1, a=None, b=None):
        k = lambda x, p, q: np.conj(self.f(x, p)) * self.df(x, q)
        return self._partial2(x1, k, a, b).imag

    def rho2_partial1(self, x2, a, b):
        """``int_a^b |psi(x1, x2)|^2 dx1``."""
        return _cquad(lambda x1: np.abs(self.psi(x1, x2)) ** 2 + 0j, a, b).real

    def j2_partial1(self, x2, a, b):
        return _cquad(lambda x1: np.conj(self.psi(x1, x2)) * self.d2psi(x1, x2), a, b).imag
