"""Singular value analytics.

Everything in this module works on the plain nonincreasing sequence
``mu(0) >= mu(1) >= ...`` of singular values of a finite matrix: Schatten
norms, weak quasinorms, decay-profile diagnostics for the separable part of a
weak ideal, and a logarithmic-mean approximant of a normalised trace.

A finite matrix only ever carries finitely many singular values, so the
supremum in the weak quasinorm is a maximum over the available indices and is
a lower approximant of the quantity it models.  Callers that need a sharp
statement pair the value with a refinement sweep instead of trusting a single
number.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

# Singular values below CLAMP_RATIO * mu(0) are rounding noise of the dense
# solver; they are clamped to zero so log-log slope fits do not chase them.
CLAMP_RATIO = 1e-13


@dataclass(frozen=True)
class SingularSpectrum:
    """Nonincreasing sequence of nonnegative singular values.

    The length always equals ``min(rows, cols)`` of the originating matrix;
    zeros are kept, not trimmed, so the dimension stays visible.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("a singular spectrum is a nonempty 1-d sequence")
        if not np.all(np.isfinite(vals)):
            raise ValueError("singular values must be finite")
        if vals[-1] < 0.0:
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(vals) > 0.0):
            raise ValueError("singular values must be nonincreasing")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class WeakFit:
    """Weak quasinorm together with the fitted log-log decay exponent.

    ``quasinorm`` is the maximum of ``(k+1)**(1/p) * mu(k)`` over the fit
    window, ``slope`` the least squares slope of ``log mu(k)`` against
    ``log (k+1)`` on that window, and ``fit_range`` the half-open index
    interval that was used.
    """

    quasinorm: float
    slope: float
    fit_range: tuple[int, int]


def singular_values(a) -> SingularSpectrum:
    """Singular values of a finite rectangular complex matrix.

    Returns all ``min(rows, cols)`` values sorted nonincreasing.  Values below
    ``CLAMP_RATIO`` times the largest one are clamped to zero.
    """
    mat = np.asarray(a)
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError("expected a nonempty 2-d matrix")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix entries must be finite")
    vals = np.linalg.svd(mat, compute_uv=False)
    if vals[0] > 0.0:
        vals = np.where(vals < CLAMP_RATIO * vals[0], 0.0, vals)
    return SingularSpectrum(vals)


def weak_quasinorm(spectrum: SingularSpectrum, p: float) -> float:
    """max of (k+1)**(1/p) * mu(k) over the available indices.

    Truncation makes this a lower approximant of the weak quasinorm of the
    operator the spectrum came from.
    """
    if p <= 0.0:
        raise ValueError("weak quasinorm exponent must be positive")
    mu = spectrum.values
    k = np.arange(1.0, mu.size + 1.0)
    return float(np.max(k ** (1.0 / p) * mu))


def schatten_norm(spectrum: SingularSpectrum, p: float) -> float:
    """The ell_p norm of the singular value sequence, p >= 1."""
    if p < 1.0:
        raise ValueError("Schatten exponent must be >= 1 (quasinorm range not supported)")
    mu = spectrum.values
    return float(np.sum(mu**p) ** (1.0 / p))


def separable_profile(spectrum: SingularSpectrum, p: float) -> np.ndarray:
    """The sequence k * mu(k)**p.

    A tail of this profile that decreases to zero is the numerical signature
    of membership in the separable part of the weak-p ideal; a profile that
    levels off (the harmonic sequence at p = 1, for instance) signals a
    genuinely weak-type spectrum.
    """
    mu = spectrum.values
    k = np.arange(float(mu.size))
    return k * mu**p


def dixmier_approximant(spectrum: SingularSpectrum, n_terms: int) -> float:
    """Partial-sum-over-log approximant for a normalised trace.

    Returns ``sum(mu(k), k < n_terms) / log(n_terms + 2)``.  On the harmonic
    sequence ``mu(k) = 1/(k+1)`` this tends to 1 as the window grows, which is
    the normalisation every calibration test anchors to.  Convergence is
    logarithmically slow; callers surface a window-sensitivity band rather
    than hiding it.
    """
    if n_terms < 1:
        raise ValueError("approximant window must contain at least one term")
    if n_terms > len(spectrum):
        raise ValueError("approximant window exceeds the spectrum length")
    partial = float(np.sum(spectrum.values[:n_terms]))
    return partial / math.log(n_terms + 2.0)


def default_fit_range(spectrum: SingularSpectrum) -> tuple[int, int]:
    """The middle decade of the strictly positive part of the spectrum.

    Geometric middle on the log index axis: roughly
    ``[sqrt(m/10), sqrt(10 m)]`` for ``m`` positive values.  Guarantees at
    least five points whenever the spectrum has ten or more positive entries.
    """
    m = int(np.count_nonzero(spectrum.values))
    if m < 10:
        return (1, max(2, m))
    lo = max(1, int(round(math.sqrt(m / 10.0))))
    hi = min(m, int(round(math.sqrt(m * 10.0))))
    if hi - lo < 5:
        lo, hi = 1, m
    return (lo, hi)


def shadow_fit_range(spectrum: SingularSpectrum, p: float) -> tuple[int, int]:
    """The decade centred on the index attaining the weak quasinorm.

    A finite spectrum only carries the weak-l_p decay law near the peak of
    the compensated profile ``(k+1)^{1/p} mu(k)``; outside that decade the
    head is flat and the far tail collapses at the resolution floor.  The
    window is the geometric decade around the attaining index, clipped to
    the positive part and padded to at least five points.
    """
    if p <= 0.0:
        raise ValueError("weak quasinorm exponent must be positive")
    m = int(np.count_nonzero(spectrum.values))
    if m < 2:
        raise ValueError("cannot place a fit window on a spectrum of rank < 2")
    ranks = np.arange(1.0, m + 1.0)
    compensated = ranks ** (1.0 / p) * spectrum.values[:m]
    attained = int(ranks[int(np.argmax(compensated))])
    half = math.sqrt(10.0)
    lo = max(1, int(round(attained / half)))
    hi = min(m, max(lo + 5, int(round(attained * half))))
    return (lo - 1, hi)


def fit_weak_decay(
    spectrum: SingularSpectrum, p: float, fit_range: tuple[int, int] | None = None
) -> WeakFit:
    """Least squares decay fit of ``log mu`` against ``log (k+1)``.

    Zero values inside the window (possible after clamping) are excluded from
    the regression but not from the quasinorm maximum.
    """
    if p <= 0.0:
        raise ValueError("weak quasinorm exponent must be positive")
    lo, hi = fit_range if fit_range is not None else default_fit_range(spectrum)
    if not 0 <= lo < hi <= len(spectrum):
        raise ValueError(f"fit range {(lo, hi)} outside spectrum of length {len(spectrum)}")
    mu = spectrum.values[lo:hi]
    k = np.arange(lo + 1.0, hi + 1.0)
    quasinorm = float(np.max(k ** (1.0 / p) * mu))
    positive = mu > 0.0
    if np.count_nonzero(positive) < 2:
        raise ValueError("fit window contains fewer than two positive values")
    slope = float(np.polyfit(np.log(k[positive]), np.log(mu[positive]), 1)[0])
    return WeakFit(quasinorm=quasinorm, slope=slope, fit_range=(lo, hi))


def write_csv(spectrum: SingularSpectrum, p: float, path) -> None:
    """Export columns (k, mu, k_mu_p) as RFC 4180 CSV."""
    profile = separable_profile(spectrum, p)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mu", "k_mu_p"])
        for k, (mu, kmu) in enumerate(zip(spectrum.values, profile)):
            writer.writerow([k, repr(float(mu)), repr(float(kmu))])
