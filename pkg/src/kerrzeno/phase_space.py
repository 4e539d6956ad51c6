"""
Exact 2x2 phase-space algebra for the rotating Kerr model.

Conventions
-----------
A phase-space point is z = (q, p); its complex amplitude is
alpha = (q + i p) / sqrt(2).  The linearized evolution over a step of
duration tau rotates z clockwise by theta = Omega * tau, with
Omega = 2 * chi * n_bar:

    M(theta) = [[ cos(theta), sin(theta)],
                [-sin(theta), cos(theta)]]

Measurement seed states are zero-mean phase-space Gaussians with
covariance

    C(r) = diag(exp(2r), exp(-2r)) / 2

so the q-variance grows with the squeezing parameter r and r = 0 is the
vacuum.  One observed step composes the seed noise with its rotated image,

    C_1(r, theta) = C(r) + M(theta)^-1 C(r) M(theta)^-T,

and N steps accumulate

    C_N = sum_{j=0}^{N-1} M^-j C_1 (M^-j)^T.

All operations are pure functions of floats and (2, 2) float64 arrays and
never mutate their inputs.  M is orthogonal, so its inverse is always
taken as the transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "PhaseVector",
    "GaussianState2D",
    "EvolutionParams",
    "ValidityReport",
    "UncertaintyCheck",
    "rotation_matrix",
    "classical_evolve",
    "seed_covariance",
    "step_covariance",
    "accumulate_covariance",
    "det_cn_asymptotic",
    "rs_uncertainty_check",
    "validity_report",
    "is_covariance",
]

# Leading-principal-minor floor for declaring a 2x2 matrix positive definite.
_MINOR_FLOOR = 1e-14
# Symmetry tolerance (absolute, relative to the largest entry).
_SYMMETRY_RTOL = 1e-9
# Saturating pure states may round det to just below 1/4.
_RS_SLACK = 1e-12


def _require_finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _as_matrix(c: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(c, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must have shape (2, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries")
    return arr


def _is_symmetric(c: np.ndarray) -> bool:
    scale = max(1.0, float(np.max(np.abs(c))))
    return abs(c[0, 1] - c[1, 0]) <= _SYMMETRY_RTOL * scale


def is_covariance(c: np.ndarray) -> bool:
    """True when c is a symmetric positive-definite (2, 2) matrix."""
    arr = _as_matrix(c, "c")
    if not _is_symmetric(arr):
        return False
    return arr[0, 0] > _MINOR_FLOOR and float(np.linalg.det(arr)) > _MINOR_FLOOR


def _require_covariance(c: np.ndarray, name: str) -> np.ndarray:
    arr = _as_matrix(c, name)
    if not is_covariance(arr):
        raise ValueError(f"{name} must be symmetric positive-definite")
    return arr


@dataclass(frozen=True)
class PhaseVector:
    """Point z = (q, p) in phase space; alpha = (q + i p)/sqrt(2)."""

    q: float
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _require_finite(self.q, "q"))
        object.__setattr__(self, "p", _require_finite(self.p, "p"))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> PhaseVector:
        return cls(float(arr[0]), float(arr[1]))

    @classmethod
    def from_alpha(cls, alpha: complex) -> PhaseVector:
        return cls(math.sqrt(2.0) * alpha.real, math.sqrt(2.0) * alpha.imag)

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p], dtype=float)

    def to_alpha(self) -> complex:
        return complex(self.q, self.p) / math.sqrt(2.0)

    def modulus(self) -> float:
        return math.hypot(self.q, self.p)


@dataclass(frozen=True)
class GaussianState2D:
    """Normalized phase-space Gaussian: mean point plus SPD covariance."""

    mean: PhaseVector
    cov: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "cov", _require_covariance(self.cov, "cov"))

    def density(self, points: np.ndarray) -> np.ndarray | float:
        """Probability density at points with trailing axis (q, p)."""
        pts = np.asarray(points, dtype=float)
        scalar = pts.shape == (2,)
        d = pts - self.mean.as_array()
        inv = np.linalg.inv(self.cov)
        quad = (
            inv[0, 0] * d[..., 0] ** 2
            + 2.0 * inv[0, 1] * d[..., 0] * d[..., 1]
            + inv[1, 1] * d[..., 1] ** 2
        )
        norm = 2.0 * math.pi * math.sqrt(float(np.linalg.det(self.cov)))
        out = np.exp(-0.5 * quad) / norm
        return float(out) if scalar else out


@dataclass(frozen=True)
class EvolutionParams:
    """Kerr-evolution step parameters; omega = 2 * chi * n_bar."""

    chi: float
    n_bar: float
    tau: float
    n_steps: int

    def __post_init__(self) -> None:
        _require_finite(self.chi, "chi")
        _require_finite(self.n_bar, "n_bar")
        _require_finite(self.tau, "tau")
        if self.n_bar < 0:
            raise ValueError(f"n_bar must be >= 0, got {self.n_bar}")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def omega(self) -> float:
        return 2.0 * self.chi * self.n_bar

    @property
    def theta(self) -> float:
        """Rotation angle per step, omega * tau."""
        return self.omega * self.tau

    @property
    def total_time(self) -> float:
        return self.n_steps * self.tau

    @property
    def total_angle(self) -> float:
        return self.omega * self.total_time


def rotation_matrix(theta: float) -> np.ndarray:
    """Clockwise phase-space rotation [[c, s], [-s, c]] by angle theta."""
    theta = _require_finite(theta, "theta")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def classical_evolve(z0: PhaseVector, omega: float, t: float) -> PhaseVector:
    """Drift of the mean-field amplitude: alpha -> alpha * exp(-i omega t).

    The modulus |z| is preserved exactly; in (q, p) components the map is
    the rotation M(omega * t).
    """
    omega = _require_finite(omega, "omega")
    t = _require_finite(t, "t")
    return PhaseVector.from_array(rotation_matrix(omega * t) @ z0.as_array())


def seed_covariance(r: float) -> np.ndarray:
    """Covariance diag(e^2r, e^-2r)/2 of the measurement seed; det = 1/4."""
    r = _require_finite(r, "r")
    return 0.5 * np.diag([math.exp(2.0 * r), math.exp(-2.0 * r)])


def step_covariance(r: float, theta: float) -> np.ndarray:
    """Covariance C_1 of one observed step.

    Entries are evaluated literally:

        [[cosh(2r) + cos^2(theta) sinh(2r),  sin(2 theta) sinh(2r) / 2],
         [sin(2 theta) sinh(2r) / 2,         cosh(2r) - cos^2(theta) sinh(2r)]]

    which coincides with seed + rotated-seed composition
    C + M^-1 C M^-T (an identity the test-suite re-derives numerically).
    """
    r = _require_finite(r, "r")
    theta = _require_finite(theta, "theta")
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    c2 = math.cos(theta) ** 2
    off = 0.5 * math.sin(2.0 * theta) * sh
    return np.array([[ch + c2 * sh, off], [off, ch - c2 * sh]])


def accumulate_covariance(c1: np.ndarray, theta: float, n: int) -> np.ndarray:
    """Covariance after n steps: sum_{j=0}^{n-1} M^-j C_1 (M^-j)^T."""
    c1 = _require_covariance(c1, "c1")
    theta = _require_finite(theta, "theta")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    angles = -theta * np.arange(n)
    c, s = np.cos(angles), np.sin(angles)
    rots = np.empty((n, 2, 2))
    rots[:, 0, 0] = c
    rots[:, 0, 1] = s
    rots[:, 1, 0] = -s
    rots[:, 1, 1] = c
    return np.einsum("jab,bc,jdc->ad", rots, c1, rots)


def det_cn_asymptotic(r: float, n: int) -> float:
    """Leading large-n value of sqrt(det C_N): n * cosh(2r).

    Valid when the per-step angle is small while the accumulated angle is
    large (many steps); the exact accumulated sum is the reference it is
    compared against.
    """
    r = _require_finite(r, "r")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return float(n) * math.cosh(2.0 * r)


class UncertaintyCheck(NamedTuple):
    ok: bool
    margin: float


def rs_uncertainty_check(c: np.ndarray) -> UncertaintyCheck:
    """Robertson-Schrodinger test det(c) >= 1/4 with the signed margin.

    Pure seed states saturate the bound, so the boolean tolerates rounding
    of the determinant by 1e-12 below 1/4.
    """
    arr = _as_matrix(c, "c")
    if not _is_symmetric(arr):
        raise ValueError("c must be symmetric")
    margin = float(np.linalg.det(arr)) - 0.25
    return UncertaintyCheck(ok=margin >= -_RS_SLACK, margin=margin)


@dataclass(frozen=True)
class ValidityReport:
    """Advisory linear-regime flags; nothing here is enforced."""

    omega_tau: float
    n_bar: float
    relative_spread: float
    omega_tau_small: bool
    nbar_large: bool
    relative_spread_small: bool
    thresholds: dict[str, float] = field(
        default_factory=lambda: dict(_DEFAULT_THRESHOLDS)
    )

    @property
    def ok(self) -> bool:
        return self.omega_tau_small and self.nbar_large and self.relative_spread_small


_DEFAULT_THRESHOLDS = {
    "omega_tau_max": 0.1,
    "n_bar_min": 10.0,
    "relative_spread_max": 0.3,
}


def validity_report(
    params: EvolutionParams,
    delta_n_over_nbar: float,
    *,
    omega_tau_max: float = _DEFAULT_THRESHOLDS["omega_tau_max"],
    n_bar_min: float = _DEFAULT_THRESHOLDS["n_bar_min"],
    relative_spread_max: float = _DEFAULT_THRESHOLDS["relative_spread_max"],
) -> ValidityReport:
    """Flag how far the parameters are inside the linearized regime.

    The regime wants a small per-step angle, a large mean photon number
    and a small relative number spread; the default thresholds are
    conventional choices and can be overridden per call.
    """
    spread = _require_finite(delta_n_over_nbar, "delta_n_over_nbar")
    theta = abs(params.theta)
    return ValidityReport(
        omega_tau=theta,
        n_bar=params.n_bar,
        relative_spread=spread,
        omega_tau_small=theta < omega_tau_max,
        nbar_large=params.n_bar > n_bar_min,
        relative_spread_small=spread < relative_spread_max,
        thresholds={
            "omega_tau_max": omega_tau_max,
            "n_bar_min": n_bar_min,
            "relative_spread_max": relative_spread_max,
        },
    )
