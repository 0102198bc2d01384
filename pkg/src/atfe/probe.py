"""Dimensionless two-level probe model.

Everything here is expressed in the dimensionless convention

    t_tilde = t * delta_omega / (2*pi),   omega_tilde = (omega - omega_0) / delta_omega,

so the unknown frequency lives on the interval [-1, 1).  A probe prepared
with Bloch vector ``a`` picks up a rotation by ``2*pi*t_tilde*omega_tilde``
about the unit axis ``n``; the locally optimal binary measurement centred at
the guess ``g_tilde`` then yields outcome 0 with probability

    p(0) = (1 + sin(2*pi*f*t_tilde*(omega_tilde - g_tilde))) / 2,

where the phase multiplier ``f`` is 1 for a single qubit and for each qubit
of a parallel product probe, and ``n_qubits`` for a GHZ probe (the entangled
register accrues phase ``n_qubits`` times faster and is read out through a
single binary outcome).

GHZ probes are therefore simulated as one effective binary measurement per
shot instead of an explicit 2**N-dimensional state; this keeps every
measurement O(1) while reproducing the exact outcome statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * math.pi

# Largest representable frequency strictly below the open right edge of the
# domain [-1, 1).
OMEGA_MAX = float(np.nextafter(1.0, -1.0))

_UNIT_TOL = 1e-12


class ProbeMode(str, Enum):
    """How the qubit register is prepared and read out."""

    SINGLE = "single"
    PRODUCT = "product"
    GHZ = "ghz"


def _as_mode(mode) -> ProbeMode:
    try:
        return ProbeMode(mode)
    except ValueError:
        raise ConfigurationError(f"unknown probe mode: {mode!r}") from None


def validate_mode_qubits(mode, n_qubits: int) -> ProbeMode:
    """Check a (mode, n_qubits) pair, returning the normalized mode."""
    mode = _as_mode(mode)
    if int(n_qubits) != n_qubits or n_qubits < 1:
        raise ConfigurationError(f"n_qubits must be a positive integer, got {n_qubits}")
    if mode is ProbeMode.SINGLE and n_qubits != 1:
        raise ConfigurationError("single mode requires n_qubits = 1")
    return mode


def phase_multiplier(mode, n_qubits: int) -> int:
    """Speed-up factor of the encoded phase: n_qubits for GHZ, else 1."""
    mode = validate_mode_qubits(mode, n_qubits)
    return int(n_qubits) if mode is ProbeMode.GHZ else 1


def validate_bloch_vector(a) -> np.ndarray:
    """Return ``a`` as a float array, requiring |a| <= 1 within tolerance."""
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise ConfigurationError("Bloch vector must be a real 3-vector")
    if np.linalg.norm(a) > 1.0 + _UNIT_TOL:
        raise ConfigurationError(f"Bloch vector norm {np.linalg.norm(a)} exceeds 1")
    return a


def validate_rotation_axis(n) -> np.ndarray:
    """Return ``n`` as a float array, requiring |n| = 1 within tolerance."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise ConfigurationError("rotation axis must be a real 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > _UNIT_TOL:
        raise ConfigurationError(f"rotation axis norm {np.linalg.norm(n)} is not 1")
    return n


@dataclass(frozen=True)
class ProbeConfig:
    """Probe preparation and frequency-encoding description.

    The default fiducial state points along x, ``a = (1, 0, 0)``, and the
    encoding rotates about y, ``n = (0, 1, 0)``; this satisfies the optimal
    condition a . n = 0 under which the binary measurement extracts the
    maximum Fisher information for every guess.
    """

    mode: ProbeMode = ProbeMode.SINGLE
    n_qubits: int = 1
    a: tuple = (1.0, 0.0, 0.0)
    n: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        mode = validate_mode_qubits(self.mode, self.n_qubits)
        a = validate_bloch_vector(self.a)
        n = validate_rotation_axis(self.n)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        object.__setattr__(self, "a", tuple(float(x) for x in a))
        object.__setattr__(self, "n", tuple(float(x) for x in n))

    @property
    def a_vec(self) -> np.ndarray:
        return np.array(self.a)

    @property
    def n_vec(self) -> np.ndarray:
        return np.array(self.n)

    @property
    def is_optimal(self) -> bool:
        """True when |a| = 1 and a . n = 0, the regime the sampler models."""
        a, n = self.a_vec, self.n_vec
        return (
            abs(np.linalg.norm(a) - 1.0) <= 1e-9
            and abs(float(a @ n)) <= 1e-9
        )

    @property
    def phase_multiplier(self) -> int:
        return self.n_qubits if self.mode is ProbeMode.GHZ else 1


@dataclass(frozen=True)
class LocalOptimalPovm:
    """Binary measurement centred at guess ``g_tilde`` for sensing time ``t_tilde``."""

    g_tilde: float
    t_tilde: float

    def __post_init__(self):
        if not (-1.0 <= self.g_tilde < 1.0):
            raise ConfigurationError(f"g_tilde {self.g_tilde} outside [-1, 1)")
        if not self.t_tilde > 0.0:
            raise ConfigurationError(f"t_tilde must be positive, got {self.t_tilde}")


@dataclass(frozen=True)
class MeasurementRecord:
    """One binary outcome together with the measurement settings that produced it."""

    outcome: int
    g_tilde: float
    t_tilde: float
    qubit_index: int = 0

    def __post_init__(self):
        if self.outcome not in (0, 1):
            raise ConfigurationError(f"outcome must be 0 or 1, got {self.outcome}")
        if not self.t_tilde > 0.0:
            raise ConfigurationError(f"t_tilde must be positive, got {self.t_tilde}")


def rotate_about_axis(v, axis, angle: float) -> np.ndarray:
    """Rotate vector ``v`` by ``angle`` about the unit vector ``axis`` (Rodrigues)."""
    v = np.asarray(v, dtype=float)
    k = validate_rotation_axis(axis)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(k, v) * s + k * (k @ v) * (1.0 - c)


def povm_effect_vector(probe: ProbeConfig, g_tilde: float, t_tilde: float) -> np.ndarray:
    """Bloch vector of the outcome-0 effect, n x a(g).

    The two measurement operators are (I +/- m . sigma)/2 with m the returned
    vector; both are positive semidefinite iff |m| <= 1, which holds for every
    guess because rotations preserve |a|.
    """
    angle = TWO_PI * probe.phase_multiplier * t_tilde * g_tilde
    a_g = rotate_about_axis(probe.a_vec, probe.n_vec, angle)
    return np.cross(probe.n_vec, a_g)


def outcome_probability(g_tilde, t_tilde, omega_tilde, mode=ProbeMode.SINGLE, n_qubits: int = 1):
    """Probability of outcome 0 for a measurement centred at ``g_tilde``.

    Parameters
    ----------
    g_tilde : float
        Frequency guess at which the measurement is centred.
    t_tilde : float
        Dimensionless sensing time, > 0.
    omega_tilde : float or ndarray
        True dimensionless frequency (vectorized).
    mode, n_qubits :
        Probe preparation; GHZ probes see an ``n_qubits``-fold phase speed-up.

    Returns
    -------
    float or ndarray
        p(0) = (1 + sin(2*pi*f*t_tilde*(omega_tilde - g_tilde))) / 2, clamped
        to [0, 1] against floating-point rounding.
    """
    f = phase_multiplier(mode, n_qubits)
    if not t_tilde > 0.0:
        raise ConfigurationError(f"t_tilde must be positive, got {t_tilde}")
    omega = np.asarray(omega_tilde, dtype=float)
    p = 0.5 * (1.0 + np.sin(TWO_PI * f * t_tilde * (omega - g_tilde)))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.isscalar(omega_tilde) or p.ndim == 0 else p


def sample_outcome(g_tilde, t_tilde, omega_tilde, mode, n_qubits, rng) -> int:
    """Draw one outcome: 0 with probability ``outcome_probability(...)``, else 1.

    ``rng`` is a seeded ``numpy.random.Generator``; identical streams give
    identical outcome sequences.
    """
    p0 = outcome_probability(g_tilde, t_tilde, omega_tilde, mode, n_qubits)
    return 0 if rng.random() < p0 else 1


def quantum_fisher_information(a, n, t: float) -> float:
    """Information ceiling t**2 * (1 - (a . n)**2) of the encoded probe.

    This is the pure-state expression: it peaks at t**2 when the Bloch vector
    is perpendicular to the rotation axis, the regime every protocol here
    operates in.
    """
    a = validate_bloch_vector(a)
    n = validate_rotation_axis(n)
    return float(t * t * (1.0 - float(a @ n) ** 2))


def fisher_information_per_measurement(t_tilde: float, mode=ProbeMode.SINGLE, n_qubits: int = 1) -> float:
    """Fisher information one measurement step contributes under optimal preparation.

    single: (2*pi*t)**2; product of N qubits: N*(2*pi*t)**2 (one binary outcome
    per qubit, information adds); GHZ of N qubits: N**2*(2*pi*t)**2.
    """
    mode = validate_mode_qubits(mode, n_qubits)
    base = (TWO_PI * t_tilde) ** 2
    if mode is ProbeMode.GHZ:
        return n_qubits * n_qubits * base
    if mode is ProbeMode.PRODUCT:
        return n_qubits * base
    return base
