"""Two-sample Kolmogorov-Smirnov and Pearson chi-square tests."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import chi2

from ..errors import ValidationError

MIN_KS_SIZE = 25
MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p: float
    dof: int | None = None

    def passed(self, alpha: float) -> bool:
        return self.p > alpha

    def to_dict(self, alpha: float | None = None) -> dict:
        d = asdict(self)
        if alpha is not None:
            d["pass"] = self.passed(alpha)
        return d


def ks_two_sample(a, b, name: str = "ks") -> TestResult:
    """Two-sided KS test with the asymptotic Kolmogorov distribution.

    The p-value uses the effective size ``na*nb/(na+nb)``.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    na, nb = a.size, b.size
    if min(na, nb) < MIN_KS_SIZE:
        raise ValidationError(f"KS needs at least {MIN_KS_SIZE} samples per side, got {na}, {nb}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValidationError("KS samples must be finite")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / na
    fb = np.searchsorted(b, grid, side="right") / nb
    d = float(np.max(np.abs(fa - fb)))
    ne = na * nb / (na + nb)
    p = float(kolmogorov(math.sqrt(ne) * d))
    return TestResult(name, d, min(max(p, 0.0), 1.0))


def merge_small_bins(expected: np.ndarray, minimum: float = MIN_EXPECTED) -> np.ndarray:
    """Group labels merging consecutive bins until each group expects ``minimum``."""
    groups = np.zeros(expected.size, dtype=np.int64)
    g, acc = 0, 0.0
    for i, e in enumerate(expected):
        groups[i] = g
        acc += e
        if acc >= minimum:
            g += 1
            acc = 0.0
    if acc < minimum and g > 0:
        # fold a short tail into the previous group
        groups[groups == g] = g - 1
    return groups


def chi_square_binned(observed, expected_mass, name: str = "chi2") -> TestResult:
    """Pearson goodness of fit of bin counts against expected bin masses.

    ``expected_mass`` is rescaled to the observed total; consecutive bins are
    merged until each expects at least five counts; ``dof = bins - 1``.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    mass = np.asarray(expected_mass, dtype=float).ravel()
    if obs.shape != mass.shape:
        raise ValidationError("observed and expected have different bin counts")
    if np.any(mass < 0) or not mass.sum() > 0:
        raise ValidationError("expected masses must be nonnegative with positive total")
    n = obs.sum()
    exp = mass / mass.sum() * n
    groups = merge_small_bins(exp)
    o = np.bincount(groups, weights=obs)
    e = np.bincount(groups, weights=exp)
    if o.size < 2:
        raise ValidationError("all expected mass falls in a single bin")
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return TestResult(name, stat, float(chi2.sf(stat, dof)), dof)


def chi_square_two_sample(counts_a, counts_b, name: str = "chi2_2samp") -> TestResult:
    """Homogeneity test of two binned samples (2 x K contingency table)."""
    a = np.asarray(counts_a, dtype=float).ravel()
    b = np.asarray(counts_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValidationError("count vectors differ in length")
    na, nb = a.sum(), b.sum()
    pooled = a + b
    exp_min = pooled * min(na, nb) / (na + nb)
    groups = merge_small_bins(exp_min)
    a = np.bincount(groups, weights=a)
    b = np.bincount(groups, weights=b)
    tot = a + b
    keep = tot > 0
    a, b, tot = a[keep], b[keep], tot[keep]
    if a.size < 2:
        raise ValidationError("all counts fall in a single bin")
    ea = tot * na / (na + nb)
    eb = tot * nb / (na + nb)
    stat = float(np.sum((a - ea) ** 2 / ea + (b - eb) ** 2 / eb))
    dof = a.size - 1
    return TestResult(name, stat, float(chi2.sf(stat, dof)), dof)
