"""Independent oracles used by the test suite.

Everything here is written from first principles (matrix algebra, bisection,
finite differences, brute-force sums) so that tests never validate library
code against itself.
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def normal_upper_tail(z: float) -> float:
    """P(Z >= z) through the complementary error function (double precision)."""
    return 0.5 * math.erfc(z / SQRT2)


def quantile_by_bisection(alpha_half: float, tol: float = 1e-12) -> float:
    """Invert the upper tail by bisection on [-12, 12]."""
    lo, hi = -12.0, 12.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if normal_upper_tail(mid) > alpha_half:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pauli_dot(vec) -> np.ndarray:
    vx, vy, vz = vec
    return vx * SIGMA_X + vy * SIGMA_Y + vz * SIGMA_Z


def density_matrix(bloch) -> np.ndarray:
    return 0.5 * (IDENTITY + pauli_dot(bloch))


def rotation_unitary(axis, angle: float) -> np.ndarray:
    """exp(-i * angle * (axis . sigma) / 2)."""
    return math.cos(angle / 2.0) * IDENTITY - 1j * math.sin(angle / 2.0) * pauli_dot(axis)


def born_probability_matrix(a, n, g_tilde, t_tilde, omega_tilde, phase_multiplier=1):
    """Tr[P(0; g) rho(omega)] on explicit 2x2 matrices.

    The outcome-0 operator is (I + (n x a(g)) . sigma)/2 with
    a(g) = cos(2*pi*f*t*g) a + sin(2*pi*f*t*g) (n x a); the state is the
    fiducial a rotated by 2*pi*f*t*omega about n.
    """
    a = np.asarray(a, float)
    n = np.asarray(n, float)
    f = phase_multiplier
    angle_g = 2.0 * math.pi * f * t_tilde * g_tilde
    a_g = math.cos(angle_g) * a + math.sin(angle_g) * np.cross(n, a)
    effect = 0.5 * (IDENTITY + pauli_dot(np.cross(n, a_g)))
    u = rotation_unitary(n, 2.0 * math.pi * f * t_tilde * omega_tilde)
    rho = u @ density_matrix(a) @ u.conj().T
    return float(np.trace(effect @ rho).real)


def povm_matrices(a, n, g_tilde, t_tilde, phase_multiplier=1):
    a = np.asarray(a, float)
    n = np.asarray(n, float)
    angle_g = 2.0 * math.pi * phase_multiplier * t_tilde * g_tilde
    a_g = math.cos(angle_g) * a + math.sin(angle_g) * np.cross(n, a)
    p0 = 0.5 * (IDENTITY + pauli_dot(np.cross(n, a_g)))
    p1 = 0.5 * (IDENTITY - pauli_dot(np.cross(n, a_g)))
    return p0, p1


def qfi_by_sld(a, n, t, omega=0.37, h=1e-6):
    """Tr[rho lambda**2] with the symmetric logarithmic derivative solved
    numerically from (lambda rho + rho lambda)/2 = d rho / d omega."""

    def rho_at(w):
        u = rotation_unitary(n, w * t)
        return u @ density_matrix(a) @ u.conj().T

    rho = rho_at(omega)
    drho = (rho_at(omega + h) - rho_at(omega - h)) / (2.0 * h)
    # vec form: (I (x) rho + rho^T (x) I) / 2 . vec(lambda) = vec(drho)
    lhs = 0.5 * (np.kron(IDENTITY, rho) + np.kron(rho.T, IDENTITY))
    sld = np.linalg.lstsq(lhs, drho.reshape(-1, order="F"), rcond=None)[0].reshape(2, 2, order="F")
    return float(np.trace(rho @ sld @ sld).real)


def fisher_information_fd(g_tilde, t_tilde, omega_tilde, h=None):
    """E[(d log p / d omega)**2] by central differences on both outcomes."""
    scale = 2.0 * math.pi * t_tilde
    h = h if h is not None else 1e-5 / max(scale, 1.0)

    def p0(w):
        return 0.5 * (1.0 + math.sin(scale * (w - g_tilde)))

    total = 0.0
    for outcome in (0, 1):
        def prob(w):
            p = p0(w)
            return p if outcome == 0 else 1.0 - p

        d = (math.log(prob(omega_tilde + h)) - math.log(prob(omega_tilde - h))) / (2.0 * h)
        total += prob(omega_tilde) * d * d
    return total


def grid_argmax(records, domain, n_points=1_000_000, phase_multiplier=1, chunk=200_000):
    """Exhaustive scan of the log-likelihood; ties resolve to the smallest value."""
    lo, hi = domain
    best_val = -math.inf
    best_x = lo
    edges = np.linspace(lo, hi, n_points)
    for start in range(0, n_points, chunk):
        xs = edges[start:start + chunk]
        total = np.zeros_like(xs)
        for rec in records:
            s = np.sin(2.0 * math.pi * phase_multiplier * rec.t_tilde * (xs - rec.g_tilde))
            p = 0.5 * (1.0 + s) if rec.outcome == 0 else 0.5 * (1.0 - s)
            total += np.log(np.maximum(p, 1e-300))
        k = int(np.argmax(total))
        if total[k] > best_val:
            best_val = float(total[k])
            best_x = float(xs[k])
    return best_x


def nu_min_schedule(n_strategies, confidence_level, n_qubits=1):
    """Integer minimal-measurement schedule from the bisection quantile."""
    z = quantile_by_bisection(0.5 * (1.0 - confidence_level))
    out = []
    for i in range(1, n_strategies + 1):
        value = 4.0 / math.pi**2 * z * z * (2.0 * i + 1.0) / (i * i) / n_qubits
        out.append(max(math.ceil(value), 1))
    return out


def s1_exact(confidence_level, n_qubits=1):
    z = quantile_by_bisection(0.5 * (1.0 - confidence_level))
    i = 1
    while 4.0 / math.pi**2 * z * z * (2.0 * i + 1.0) / (i * i) / n_qubits > 1.0:
        i += 1
    return i


def brute_force_step_bound(n_strategies, confidence_level, n_qubits=1):
    """Direct evaluation of the S-strategy error bound from its definition."""
    c = confidence_level
    nus = nu_min_schedule(n_strategies, c, n_qubits)
    fisher = sum(
        nu_i * n_qubits * math.pi**2 * i * i / 4.0
        for i, nu_i in enumerate(nus, start=1)
    )
    second = (1.0 - c) * sum(c ** (i - 1) / (i + 1.0) ** 2 for i in range(1, n_strategies + 1))
    return c**n_strategies / fisher + second


def brute_force_total_time(n_strategies, confidence_level, n_qubits=1, ghz=True):
    c = confidence_level
    if ghz:
        nus = nu_min_schedule(n_strategies, c, 1)
        return sum(nu_i * i / (4.0 * n_qubits) for i, nu_i in enumerate(nus, start=1))
    nus = nu_min_schedule(n_strategies, c, n_qubits)
    return sum(nu_i * i / 4.0 for i, nu_i in enumerate(nus, start=1))
