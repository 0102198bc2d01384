"""Closed-form error bounds and resource formulas, plus overlay curves.

All bounds are dimensionless (variance of the scaled frequency on [-1, 1))
unless a ``delta_omega`` argument appears, in which case the stated formula
carries its own frequency scale.  Multiplying any dimensionless bound by
delta_omega**2 converts it to physical frequency variance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .adaptive import schedule_nu_min, schedule_s1
from .errors import DomainError, UsageError
from .inference import normal_quantile
from .probe import ProbeMode

_PI2 = math.pi**2

# Exact value of sum_{i>=1} 1/(i+1)**2 = pi**2/6 - 1.
SECOND_TERM_SERIES_CONSTANT = _PI2 / 6.0 - 1.0


def _positive(name: str, value) -> float:
    value = float(value)
    if not value > 0.0:
        raise UsageError(f"{name} must be strictly positive, got {value}")
    return value


def _confidence(value) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise UsageError(f"confidence_level must lie in (0, 1), got {value}")
    return value


def qcrb_product(nu, n_qubits, t) -> float:
    """Variance floor 1/(nu * N * t**2) for product probes."""
    return 1.0 / (_positive("nu", nu) * _positive("n_qubits", n_qubits) * _positive("t", t) ** 2)


def qcrb_ghz(nu, n_qubits, t) -> float:
    """Variance floor 1/(nu * N**2 * t**2) for GHZ probes (1/N**2 scaling)."""
    return 1.0 / (_positive("nu", nu) * _positive("n_qubits", n_qubits) ** 2 * _positive("t", t) ** 2)


def qcrb_max_ramsey(nu, n_qubits, delta_omega) -> float:
    """Variance floor 4*dW**2/(pi**2*nu*N) at the longest identifiable time pi/(2*dW)."""
    return (
        4.0 * _positive("delta_omega", delta_omega) ** 2
        / (_PI2 * _positive("nu", nu) * _positive("n_qubits", n_qubits))
    )


def ghz_fixed_time_bound(nu, delta_omega, n_ghz=None) -> float:
    """Variance floor 4*dW**2/(pi**2*nu) for GHZ probes at their longest time.

    Independent of the register size: the N-fold phase speed-up is exactly
    cancelled by the N-fold shorter identifiable sensing time (``n_ghz`` is
    accepted only to make that explicit).
    """
    if n_ghz is not None:
        _positive("n_ghz", n_ghz)
    return 4.0 * _positive("delta_omega", delta_omega) ** 2 / (_PI2 * _positive("nu", nu))


def qcrb_total_time(total_time, n_qubits, delta_omega) -> float:
    """Variance floor 2*dW/(pi*T*N) when the total sensing time T is the resource.

    The same expression holds for product probes with N qubits and GHZ probes
    with N_GHZ = N qubits.
    """
    return (
        2.0 * _positive("delta_omega", delta_omega)
        / (math.pi * _positive("total_time", total_time) * _positive("n_qubits", n_qubits))
    )


def second_term_partial_sum(confidence_level: float, n_strategies: int) -> float:
    """(1 - C) * sum_{i=1}^{S} C**(i-1) / (i+1)**2 — the out-of-interval error floor."""
    c = _confidence(confidence_level)
    total = 0.0
    for i in range(1, int(n_strategies) + 1):
        total += c ** (i - 1) / (i + 1.0) ** 2
    return (1.0 - c) * total


class SecondTermBound(NamedTuple):
    rough: float
    series_constant: float


def second_term_upper_bound(confidence_level: float) -> SecondTermBound:
    """Ceiling of the error floor: 0.64*(1-C), with the exact series constant.

    The rough factor 0.64 rounds the exact sum_{i>=1} 1/(i+1)**2 = pi**2/6 - 1
    (~0.6449), which is returned alongside.
    """
    c = _confidence(confidence_level)
    return SecondTermBound(rough=0.64 * (1.0 - c), series_constant=SECOND_TERM_SERIES_CONSTANT)


def atfe_step_bound(n_strategies: int, confidence_level: float, n_qubits: int = 1) -> float:
    """Error bound after S strategies on the minimal-count schedule.

    C**S over the accumulated Fisher information of the schedule, plus the
    confidence-weighted sum of squared marginal errors E_i = 1/(i+1) for the
    runs whose interval missed the true value.  ``n_qubits`` counts parallel
    product qubits; GHZ registers of any size evaluate at n_qubits = 1 (their
    phase speed-up cancels against the shorter base time).
    """
    if n_strategies < 1:
        raise UsageError(f"n_strategies must be >= 1, got {n_strategies}")
    c = _confidence(confidence_level)
    fisher = 0.0
    for i in range(1, int(n_strategies) + 1):
        nu_i = schedule_nu_min(i, confidence_level, n_qubits)
        fisher += nu_i * n_qubits * _PI2 * i * i / 4.0
    return c**n_strategies / fisher + second_term_partial_sum(confidence_level, n_strategies)


def atfe_ideal_bound(nu, confidence_level: float, n_qubits: int = 1, n_strategies: int = 1) -> float:
    """Closed-form large-S error bound; the first term decays as 1/nu**3.

    Uses the exact single-probe saturation index S1 (scaled by the qubit count
    for parallel product probes) rather than its analytic approximation.
    GHZ registers of any size evaluate at n_qubits = 1.
    """
    nu = _positive("nu", nu)
    c = _confidence(confidence_level)
    if n_strategies < 1:
        raise UsageError(f"n_strategies must be >= 1, got {n_strategies}")
    s1 = schedule_s1(confidence_level, 1).exact
    m = s1 / _positive("n_qubits", n_qubits)
    if n_strategies <= s1 / n_qubits:
        warnings.warn(
            "ideal bound assumes n_strategies beyond the saturation index; "
            "result is outside its regime of validity",
            stacklevel=2,
        )
    bracket = m * (m * m - 3.0 * m - 1.0) + 2.0 * (nu - m * math.log(m)) ** 3
    if bracket <= 0.0:
        raise DomainError(
            f"ideal bound undefined: nu={nu} too small for saturation index {s1}"
        )
    first = 24.0 * c**n_strategies / (n_qubits * _PI2 * bracket)
    return first + second_term_partial_sum(confidence_level, n_strategies)


class TotalTimeResult(NamedTuple):
    exact: float
    approx: float


def total_time(
    n_strategies: int,
    confidence_level: float,
    n_qubits: int = 1,
    mode=ProbeMode.GHZ,
) -> TotalTimeResult:
    """Cumulative sensing time of S strategies on the minimal-count schedule.

    ``exact`` sums nu_i_min * t_i directly; ``approx`` is the closed form
    (2*S1*(S1 + ln S1 - 1) + S*(S+1)) / (8*N) for GHZ probes and the same
    expression with S1 -> S1/N and an overall 1/8 for parallel product
    probes.  The closed form uses the analytic saturation index, which is the
    value its derivation substitutes for the schedule prefactor.
    """
    if n_strategies < 1:
        raise UsageError(f"n_strategies must be >= 1, got {n_strategies}")
    mode = ProbeMode(mode)
    c = _confidence(confidence_level)
    n = int(_positive("n_qubits", n_qubits))
    s = int(n_strategies)
    s1 = schedule_s1(confidence_level, 1).analytic

    if mode is ProbeMode.PRODUCT:
        exact = sum(schedule_nu_min(i, c, n) * i / 4.0 for i in range(1, s + 1))
        m = s1 / n
        approx = (2.0 * m * (m + math.log(m) - 1.0) + s * (s + 1.0)) / 8.0
    else:
        exact = sum(schedule_nu_min(i, c, 1) * i / (4.0 * n) for i in range(1, s + 1))
        approx = (2.0 * s1 * (s1 + math.log(s1) - 1.0) + s * (s + 1.0)) / (8.0 * n)
    return TotalTimeResult(exact=exact, approx=approx)


class NuTotalResult(NamedTuple):
    exact: int
    approx: float


def nu_total_approx(
    n_strategies: int,
    confidence_level: float,
    n_qubits: int = 1,
    s1: float | None = None,
) -> NuTotalResult:
    """Measurement count of S strategies: exact schedule sum and S1*ln(S1) + S.

    ``s1`` overrides the saturation index used in the approximation (defaults
    to the exact single-probe value, scaled by the qubit count).
    """
    if n_strategies < 1:
        raise UsageError(f"n_strategies must be >= 1, got {n_strategies}")
    c = _confidence(confidence_level)
    n = int(_positive("n_qubits", n_qubits))
    exact = sum(schedule_nu_min(i, c, n) for i in range(1, int(n_strategies) + 1))
    m = (s1 if s1 is not None else schedule_s1(c, 1).exact) / n
    approx = m * math.log(m) + float(n_strategies)
    return NuTotalResult(exact=int(exact), approx=approx)


@dataclass(frozen=True)
class ScheduleCurve:
    """Per-measurement overlay arrays from the deterministic gate recursion."""

    nu: np.ndarray
    strategy: np.ndarray
    fisher: np.ndarray
    cum_time: np.ndarray
    bound_fixed: np.ndarray
    bound_ideal: np.ndarray
    bound_eq31: np.ndarray


def schedule_curve(
    nu_total: int,
    confidence_level: float,
    nu_initial: int,
    n_qubits: int = 1,
    mode=ProbeMode.SINGLE,
    t1_scale: float = 1.0,
) -> ScheduleCurve:
    """Noise-free schedule a run follows when every estimate is perfect.

    Replays the time-escalation gate deterministically: the strategy index
    rises as soon as z/sqrt(F) <= 1/(i+1) and at least ``nu_initial``
    measurements were taken.  Returns, per measurement, the strategy in
    effect, accumulated Fisher information, cumulative sensing time, the
    fixed-time reference bound, the best-case bound 1/F, and the step bound
    including the out-of-interval floor.
    """
    mode = ProbeMode(mode)
    c = _confidence(confidence_level)
    n = int(_positive("n_qubits", n_qubits))
    per_step = n if mode is ProbeMode.PRODUCT else 1
    tau1 = _positive("t1_scale", t1_scale) / 4.0
    t1_wall = t1_scale / (4.0 * n) if mode is ProbeMode.GHZ else tau1
    z = normal_quantile(0.5 * (1.0 - c))

    nu_total = int(nu_total)
    strategy = np.empty(nu_total, dtype=np.int64)
    fisher = np.empty(nu_total)
    cum_time = np.empty(nu_total)
    eq31 = np.empty(nu_total)

    i = 1
    f_acc = 0.0
    t_acc = 0.0
    second = 1.0 / 4.0  # term for strategy 1
    for j in range(1, nu_total + 1):
        f_acc += per_step * (math.tau * i * tau1) ** 2
        t_acc += i * t1_wall
        strategy[j - 1] = i
        fisher[j - 1] = f_acc
        cum_time[j - 1] = t_acc
        eq31[j - 1] = c**i / f_acc + (1.0 - c) * second
        if j >= nu_initial and z / math.sqrt(f_acc) <= 1.0 / (i + 1.0):
            i += 1
            second += c ** (i - 1) / (i + 1.0) ** 2
    nu = np.arange(1, nu_total + 1)
    fixed_step = per_step * (math.tau * tau1) ** 2
    return ScheduleCurve(
        nu=nu,
        strategy=strategy,
        fisher=fisher,
        cum_time=cum_time,
        bound_fixed=1.0 / (nu * fixed_step),
        bound_ideal=1.0 / fisher,
        bound_eq31=eq31,
    )


@dataclass(frozen=True)
class BoundQuery:
    """A named bound with its parameter map (CLI and sweep entry point)."""

    kind: str
    params: Mapping

    def __post_init__(self):
        if self.kind not in _BOUND_KINDS:
            raise UsageError(
                f"unknown bound kind {self.kind!r}; choose from {sorted(_BOUND_KINDS)}"
            )


def _param(params, key, cast=float):
    if key not in params:
        raise UsageError(f"bound query missing parameter: {key}")
    return cast(params[key])


def evaluate_bound_query(query: BoundQuery) -> dict:
    """Evaluate a bound query; returns {'value': main result, ...extras}."""
    kind, p = query.kind, query.params
    if kind == "qcrb_product":
        return {"value": qcrb_product(_param(p, "nu"), _param(p, "n"), _param(p, "t"))}
    if kind == "qcrb_ghz":
        return {"value": qcrb_ghz(_param(p, "nu"), _param(p, "n"), _param(p, "t"))}
    if kind == "qcrb_max_ramsey":
        return {"value": qcrb_max_ramsey(_param(p, "nu"), _param(p, "n"), _param(p, "delta_omega"))}
    if kind in ("qcrb_total_time_product", "qcrb_total_time_ghz"):
        return {
            "value": qcrb_total_time(
                _param(p, "total_time"), _param(p, "n"), _param(p, "delta_omega")
            )
        }
    if kind == "ghz_fixed_time":
        return {"value": ghz_fixed_time_bound(_param(p, "nu"), _param(p, "delta_omega"), p.get("n"))}
    if kind == "atfe_step_bound":
        return {
            "value": atfe_step_bound(
                _param(p, "s", int), _param(p, "confidence"), int(p.get("n", 1))
            )
        }
    if kind == "atfe_ideal_bound":
        return {
            "value": atfe_ideal_bound(
                _param(p, "nu"), _param(p, "confidence"), int(p.get("n", 1)), _param(p, "s", int)
            )
        }
    if kind == "second_term_bound":
        result = second_term_upper_bound(_param(p, "confidence"))
        return {"value": result.rough, "series_constant": result.series_constant}
    if kind in ("total_time_ghz", "total_time_product"):
        mode = ProbeMode.GHZ if kind.endswith("ghz") else ProbeMode.PRODUCT
        result = total_time(_param(p, "s", int), _param(p, "confidence"), int(p.get("n", 1)), mode)
        return {"value": result.exact, "approx": result.approx}
    if kind == "nu_total_approx":
        result = nu_total_approx(
            _param(p, "s", int), _param(p, "confidence"), int(p.get("n", 1)), p.get("s1")
        )
        return {"value": result.exact, "approx": result.approx}
    raise UsageError(f"unknown bound kind {kind!r}")


_BOUND_KINDS = {
    "qcrb_product",
    "qcrb_ghz",
    "qcrb_max_ramsey",
    "qcrb_total_time_product",
    "qcrb_total_time_ghz",
    "ghz_fixed_time",
    "atfe_step_bound",
    "atfe_ideal_bound",
    "second_term_bound",
    "total_time_ghz",
    "total_time_product",
    "nu_total_approx",
}
