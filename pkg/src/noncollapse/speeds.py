"""Curvature speed functions and their calculus.

A speed is a symmetric, monotone, degree-one homogeneous function of the
principal curvatures, defined on a cone (the open positive cone or all of
R^n).  Evaluation and gradients are taken in the principal frame, where the
derivative matrix of the speed with respect to the second fundamental form
is diagonal with entries dF/dkappa_i.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConeViolation, SpeedParseError

POSITIVE_CONE = "positive"
ALL_CONE = "all"


class SpeedEvaluation(NamedTuple):
    value: float
    gradient: np.ndarray


class SpeedFunction:
    """Base class; subclasses implement value()/gradient() on (..., n) arrays."""

    name = "abstract"

    def __init__(self, cone=POSITIVE_CONE):
        if cone not in (POSITIVE_CONE, ALL_CONE):
            raise ValueError(f"unknown cone kind: {cone!r}")
        self.cone = cone

    def in_cone(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        ok = np.isfinite(kappa).all(axis=-1)
        if self.cone == POSITIVE_CONE:
            ok = ok & (kappa > 0.0).all(axis=-1)
        return ok

    def require_cone(self, kappa):
        if not np.all(self.in_cone(kappa)):
            raise ConeViolation(f"curvatures outside cone {self.cone!r} of {self.name}")

    def value(self, kappa):
        raise NotImplementedError

    def gradient(self, kappa):
        raise NotImplementedError

    def __call__(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        self.require_cone(kappa)
        return self.value(kappa)

    def __repr__(self):
        return f"{type(self).__name__}(cone={self.cone!r})"


class SumSpeed(SpeedFunction):
    """F = sum of principal curvatures (the mean curvature H); linear."""

    name = "sum"

    def __init__(self, cone=ALL_CONE):
        super().__init__(cone)

    def value(self, kappa):
        return np.asarray(kappa, float).sum(axis=-1)

    def gradient(self, kappa):
        return np.ones_like(np.asarray(kappa, float))


class EuclideanNormSpeed(SpeedFunction):
    """F = sqrt(sum kappa_i^2) (the norm |A| of the second fundamental form)."""

    name = "norm"

    def value(self, kappa):
        kappa = np.asarray(kappa, float)
        return np.sqrt((kappa ** 2).sum(axis=-1))

    def gradient(self, kappa):
        kappa = np.asarray(kappa, float)
        v = self.value(kappa)
        return kappa / v[..., None]


class PowerMeanSpeed(SpeedFunction):
    """F = (mean of kappa_i^p)^(1/p); p = -1 is the harmonic mean."""

    name = "pmean"

    def __init__(self, p, cone=POSITIVE_CONE):
        if p == 0:
            raise ValueError("power mean exponent must be nonzero")
        super().__init__(cone)
        self.p = float(p)

    def value(self, kappa):
        kappa = np.asarray(kappa, float)
        n = kappa.shape[-1]
        return ((kappa ** self.p).sum(axis=-1) / n) ** (1.0 / self.p)

    def gradient(self, kappa):
        kappa = np.asarray(kappa, float)
        n = kappa.shape[-1]
        v = self.value(kappa)
        return (kappa ** (self.p - 1.0)) * (v ** (1.0 - self.p))[..., None] / n

    def __repr__(self):
        return f"PowerMeanSpeed(p={self.p}, cone={self.cone!r})"


def parse_speed(token):
    """Parse a selection string: "sum", "norm", or "pmean:<p>"."""
    token = token.strip()
    if token == "sum":
        return SumSpeed()
    if token == "norm":
        return EuclideanNormSpeed()
    if token.startswith("pmean:"):
        ptok = token[len("pmean:"):]
        try:
            p = float(ptok)
        except ValueError:
            raise SpeedParseError(f"bad power-mean exponent {ptok!r} in {token!r}") from None
        if p == 0:
            raise SpeedParseError(f"power-mean exponent must be nonzero in {token!r}")
        return PowerMeanSpeed(p)
    raise SpeedParseError(f"unknown speed selection {token!r}")


BUILTIN_TOKENS = ("sum", "norm", "pmean:-1")


def eval_speed(F, kappa):
    """F(kappa) for a single curvature tuple."""
    return float(F(kappa))


def eval_gradient(F, kappa):
    """Analytic gradient (dF/dkappa_i) at kappa, in the principal frame."""
    kappa = np.asarray(kappa, float)
    F.require_cone(kappa)
    return F.gradient(kappa)


def evaluate(F, kappa):
    kappa = np.asarray(kappa, float)
    F.require_cone(kappa)
    return SpeedEvaluation(float(F.value(kappa)), F.gradient(kappa))


def check_euler_homogeneity(F, kappa, lam):
    """Residuals (|F(lam k) - lam F(k)|, |grad(k).k - F(k)|)."""
    kappa = np.asarray(kappa, float)
    F.require_cone(kappa)
    F.require_cone(lam * kappa)
    fk = float(F.value(kappa))
    hom = abs(float(F.value(lam * kappa)) - lam * fk)
    euler = abs(float(np.dot(F.gradient(kappa), kappa)) - fk)
    return hom, euler


def support_inequality_residual(F, A, B):
    """grad F(A) . B - F(B), with A and B in a common principal frame.

    Non-negative for concave F, non-positive for convex F, zero for the sum.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    F.require_cone(A)
    F.require_cone(B)
    return float(np.dot(F.gradient(A), B) - F.value(B))


def check_monotonicity(F, kappa):
    """True iff every gradient component is strictly positive at kappa."""
    grad = eval_gradient(F, kappa)
    return bool(np.all(grad > 0.0))


CONCAVE = "Concave"
CONVEX = "Convex"
BOTH = "Both"
NEITHER = "Neither"


def classify_convexity(F, samples=1000, seed=0, n=2, tol=1e-10):
    """Midpoint-sampling convexity certificate, deterministic given seed."""
    if samples < 100:
        raise ValueError("need at least 100 samples")
    rng = np.random.default_rng(seed)
    count = 0
    diffs = []
    while count < samples:
        if F.cone == POSITIVE_CONE:
            pair = rng.uniform(0.1, 10.0, size=(2, n))
        else:
            pair = rng.uniform(-10.0, 10.0, size=(2, n))
        if not np.all(F.in_cone(pair)):
            continue
        a, b = pair
        mid = 0.5 * (a + b)
        if not F.in_cone(mid):
            continue
        fa, fb, fm = F.value(a), F.value(b), F.value(mid)
        scale = 1.0 + abs(fa) + abs(fb)
        diffs.append((fm - 0.5 * (fa + fb)) / scale)
        count += 1
    diffs = np.array(diffs)
    if np.all(np.abs(diffs) <= tol):
        return BOTH
    if np.all(diffs >= -tol):
        return CONCAVE
    if np.all(diffs <= tol):
        return CONVEX
    return NEITHER
