"""Scattering by a finite barrier region ``Gamma = {0, ..., n}``.

The interior matrix ``E_n`` is the walk restricted to ``Gamma`` in the
interleaved ordering ``[psi_R(0), psi_L(0), ..., psi_R(n), psi_L(n)]``.
Index ``2x`` (0-based) holds ``psi_R(x)`` and ``2x + 1`` holds ``psi_L(x)``.

Three routes to the scattering matrix are provided:

* ``smatrix_via_interior``: dense solve with ``1 - e^{-2 i theta} E_n^2``.
* ``smatrix_via_dynamics``: limit of the driven recurrence
  ``phi_{t+1} = E_n phi_t + e^{i theta t} source``.
* ``smatrix_double_barrier``: closed form when only sites ``0`` and ``n``
  carry non-trivial coins.

The scattering matrix is ``[[tau, rho_tilde], [rho, tau_tilde]]``.  ``tau``
and ``rho`` belong to a wave incident from the right (``alpha_L = 1``),
``tau_tilde`` and ``rho_tilde`` to a wave incident from the left
(``alpha_R = 1``)::

    x >= n + 1:  [e^{i theta x},       rho e^{-i theta x}]
    x <= -1:     [tau e^{i theta x},   0]
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    DenominatorVanishes,
    EigenSolverFailure,
    FormMismatch,
    GridTooCoarse,
    NoConvergence,
    NonPenetrable,
    SolveSingular,
    ValidationError,
    WindowTooSmall,
)
from .lattice import (
    CONSTRUCTION_TOL,
    PENETRABILITY_TOL,
    THETA_GUARD,
    TWO_PI,
    Coin,
    CoinField,
    HomogeneousParams,
    PlaneWaveTail,
    StateWindow,
    is_valid_theta,
    validate_theta,
)

DEFAULT_TOL = 1e-11
DEFAULT_T_MAX = 2**40
STEP_T_MAX = 10**6
ZERO_TOL = 1e-8
SOLVE_COND_LIMIT = 1e13
DENOMINATOR_TOL = 1e-12


@dataclass(frozen=True)
class InteriorMatrix:
    """``E_n`` as a dense ``2(n+1) x 2(n+1)`` array (interleaved ordering)."""

    n: int
    entries: np.ndarray

    @property
    def size(self) -> int:
        return 2 * (self.n + 1)


@dataclass(frozen=True)
class ScatteringMatrix:
    theta: float
    tau: complex
    rho: complex
    tau_tilde: complex
    rho_tilde: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.tau, self.rho_tilde], [self.rho, self.tau_tilde]], dtype=complex)

    @property
    def unitarity_defect(self) -> float:
        m = self.matrix
        return float(np.abs(m @ m.conj().T - np.eye(2)).max())

    def as_array(self) -> np.ndarray:
        return np.array([self.tau, self.rho, self.tau_tilde, self.rho_tilde], dtype=complex)

    def max_difference(self, other: "ScatteringMatrix") -> float:
        return float(np.abs(self.as_array() - other.as_array()).max())


@dataclass(frozen=True)
class BoundaryState:
    """Limit ``phi_inf`` of the driven interior recurrence.

    ``steps`` is the number of recurrence steps represented (0 for the
    closed form) and ``residual`` the last Cauchy difference.
    """

    phi: np.ndarray
    theta: float
    alpha_l: complex
    alpha_r: complex
    steps: int = 0
    residual: float = 0.0

    @property
    def n(self) -> int:
        return self.phi.shape[0] // 2 - 1

    def psi_l(self, x: int) -> complex:
        return complex(self.phi[2 * x + 1])

    def psi_r(self, x: int) -> complex:
        return complex(self.phi[2 * x])


def build_interior_matrix(field: CoinField) -> InteriorMatrix:
    """Block tridiagonal ``E_n`` with zero diagonal blocks.

    Above the diagonal sit ``P(x) = [[0, 0], [b(x), a(x)]]`` and below it
    ``Q(x) = [[d(x), c(x)], [0, 0]]``.
    """
    n = field.n
    E = np.zeros((2 * (n + 1), 2 * (n + 1)), dtype=complex)
    for x in range(n + 1):
        if x + 1 <= n:
            c = field.coins[x + 1]
            E[2 * x + 1, 2 * (x + 1)] = c.b
            E[2 * x + 1, 2 * (x + 1) + 1] = c.a
        if x >= 1:
            c = field.coins[x - 1]
            E[2 * x, 2 * (x - 1)] = c.d
            E[2 * x, 2 * (x - 1) + 1] = c.c
    E.setflags(write=False)
    return InteriorMatrix(n, E)


def spectral_check(M: InteriorMatrix) -> float:
    """Largest eigenvalue modulus of ``E_n``."""
    try:
        ev = np.linalg.eigvals(M.entries)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(f"eigenvalue solver failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise EigenSolverFailure("eigenvalue solver returned non-finite values")
    return float(np.abs(ev).max())


def source_vector(n: int, theta: float, alpha_l: complex, alpha_r: complex) -> np.ndarray:
    """``chi U Psi_0`` for incoming amplitudes ``alpha_l`` (from the right) and ``alpha_r``."""
    s = np.zeros(2 * (n + 1), dtype=complex)
    s[0] = alpha_r * cmath.exp(1j * theta)
    s[2 * n + 1] += alpha_l * cmath.exp(1j * theta * (n + 1))
    return s


def _checked_solve(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(A)
    if not cond < SOLVE_COND_LIMIT:
        raise SolveSingular(f"system matrix is numerically singular (cond = {cond:.3e})")
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolveSingular(str(exc)) from exc


def smatrix_via_interior(field: CoinField, theta: float) -> ScatteringMatrix:
    """Scattering matrix from resolvent entries of ``E_n``.

    With ``R = (1 - e^{-2 i theta} E^2)^{-1}``, ``M1 = E^n R`` and
    ``M2 = E^2 R`` (1-based indices)::

        tau       = a(0) (M1)_{2, 2n+2}
        rho       = e^{2 i n theta} (c(n) + d(n) e^{-2 i theta} (M2)_{2n+1, 2n+2})
        tau_tilde = d(n) (M1)_{2n+1, 1}
        rho_tilde = a(0) e^{-2 i theta} (M2)_{2, 1} + b(0)

    Only the two needed columns of ``R`` are formed, by one dense solve.
    """
    field.require_penetrable()
    theta = validate_theta(theta)
    n = field.n
    E = build_interior_matrix(field).entries
    size = 2 * (n + 1)
    A = np.eye(size, dtype=complex) - cmath.exp(-2j * theta) * (E @ E)
    rhs = np.zeros((size, 2), dtype=complex)
    rhs[0, 0] = 1.0
    rhs[size - 1, 1] = 1.0
    X = _checked_solve(A, rhs)
    M1 = X
    for _ in range(n):
        M1 = E @ M1
    M2 = E @ (E @ X)
    c0, cn = field.coins[0], field.coins[n]
    e2 = cmath.exp(-2j * theta)
    tau = c0.a * M1[1, 1]
    rho = cmath.exp(2j * n * theta) * (cn.c + cn.d * e2 * M2[2 * n, 1])
    tau_t = cn.d * M1[2 * n, 0]
    rho_t = c0.a * e2 * M2[1, 0] + c0.b
    return ScatteringMatrix(theta, complex(tau), complex(rho), complex(tau_t), complex(rho_t))


def evolve_boundary(field: CoinField, theta: float, alpha_l: complex = 1.0,
                    alpha_r: complex = 0.0, tol: float = DEFAULT_TOL,
                    t_max: Optional[int] = None, method: str = "iterate") -> BoundaryState:
    """Limit of ``e^{-i theta t} phi_t`` for ``phi_{t+1} = E phi_t + e^{i theta t} source``.

    Parameters
    ----------
    method : {"iterate", "step", "closed"}
        ``"step"`` runs the recurrence one step at a time and stops when
        consecutive rotating-frame iterates differ by less than ``tol``.
        ``"iterate"`` runs the same recurrence with time doubling: in the
        rotating frame ``g_t = e^{-i theta t} phi_t`` obeys
        ``g_{2t} = g_t + B^t g_t`` with ``B = e^{-i theta} E``, so ``t``
        doubles per pass and spectral radii within ``1e-9`` of 1 remain
        tractable.  It stops when ``||g_{2t} - g_t||_inf < tol``.
        ``"closed"`` solves ``(e^{i theta} - E) phi = source`` directly.
    t_max : int, optional
        Step budget; defaults to ``2**40`` for ``"iterate"`` and ``10**6``
        for ``"step"``.
    """
    field.require_penetrable()
    theta = validate_theta(theta)
    n = field.n
    E = build_interior_matrix(field).entries
    s = source_vector(n, theta, alpha_l, alpha_r)
    size = s.shape[0]
    if method == "closed":
        phi = _checked_solve(cmath.exp(1j * theta) * np.eye(size) - E, s)
        return BoundaryState(phi, theta, alpha_l, alpha_r)
    B = cmath.exp(-1j * theta) * E
    g = cmath.exp(-1j * theta) * s
    if method == "iterate":
        t_max = DEFAULT_T_MAX if t_max is None else t_max
        t, P = 1, B
        res = math.inf
        while t < t_max:
            delta = P @ g
            g = g + delta
            t *= 2
            res = float(np.abs(delta).max())
            if res < tol:
                return BoundaryState(g, theta, alpha_l, alpha_r, t, res)
            P = P @ P
            if not np.all(np.isfinite(P)):
                break
        raise NoConvergence(f"no convergence after {t} steps (residual {res:.3e})")
    if method == "step":
        t_max = STEP_T_MAX if t_max is None else t_max
        phi = np.zeros(size, dtype=complex)
        prev = phi
        res = math.inf
        for t in range(t_max):
            phi = E @ phi + cmath.exp(1j * theta * t) * s
            cur = cmath.exp(-1j * theta * (t + 1)) * phi
            res = float(np.abs(cur - prev).max())
            if t > 0 and res < tol:
                return BoundaryState(cur, theta, alpha_l, alpha_r, t + 1, res)
            prev = cur
        raise NoConvergence(f"no convergence after {t_max} steps (residual {res:.3e})")
    raise ValidationError(f"method must be 'iterate', 'step' or 'closed', got {method!r}")


def fixed_point_residual(field: CoinField, state: BoundaryState) -> float:
    """``||E phi + source - e^{i theta} phi||_inf``."""
    E = build_interior_matrix(field).entries
    s = source_vector(field.n, state.theta, state.alpha_l, state.alpha_r)
    return float(np.abs(E @ state.phi + s - cmath.exp(1j * state.theta) * state.phi).max())


def _outgoing(field: CoinField, state: BoundaryState) -> tuple:
    """Amplitudes leaving ``Gamma``: ``(U phi)_L(-1)`` and ``(U phi)_R(n+1)``."""
    n = field.n
    c0, cn = field.coins[0], field.coins[n]
    left = c0.a * state.psi_l(0) + c0.b * state.psi_r(0)
    right = cn.c * state.psi_l(n) + cn.d * state.psi_r(n)
    return left, right


def smatrix_via_dynamics(field: CoinField, theta: float, tol: float = DEFAULT_TOL,
                         method: str = "iterate", t_max: Optional[int] = None) -> ScatteringMatrix:
    """Scattering matrix read off the two boundary states for unit incoming waves."""
    n = field.n
    phase = cmath.exp(1j * theta * n)
    run1 = evolve_boundary(field, theta, 1.0, 0.0, tol, t_max, method)
    tau, right = _outgoing(field, run1)
    rho = phase * right
    run2 = evolve_boundary(field, theta, 0.0, 1.0, tol, t_max, method)
    rho_t, right = _outgoing(field, run2)
    tau_t = phase * right
    return ScatteringMatrix(run1.theta, complex(tau), complex(rho), complex(tau_t), complex(rho_t))


def eigenfunction_infinity(field: CoinField, theta: float, alpha_l: complex, alpha_r: complex,
                           x_min: int, x_max: int, tol: float = DEFAULT_TOL,
                           method: str = "closed") -> StateWindow:
    """Generalized eigenfunction ``Psi_inf`` with ``U Psi = e^{i theta} Psi`` on a window.

    The window must contain ``Gamma``; beyond it the returned state carries
    a plane-wave tail with the incoming amplitudes, so ``apply_walk``
    reproduces the eigenrelation at every window site.
    """
    n = field.n
    if not (x_min <= 0 and x_max >= n):
        raise WindowTooSmall(f"window [{x_min}, {x_max}] must contain [0, {n}]")
    st = evolve_boundary(field, theta, alpha_l, alpha_r, tol, None, method)
    theta = st.theta
    left, right = _outgoing(field, st)
    vals = np.zeros((x_max - x_min + 1, 2), dtype=complex)
    for x in range(x_min, x_max + 1):
        row = vals[x - x_min]
        if x < 0:
            row[0] = cmath.exp(1j * theta * x) * left
            row[1] = alpha_r * cmath.exp(-1j * theta * x)
        elif x > n:
            row[0] = alpha_l * cmath.exp(1j * theta * x)
            row[1] = cmath.exp(-1j * theta * (x - n)) * right
        else:
            row[0] = st.psi_l(x)
            row[1] = st.psi_r(x)
    return StateWindow(x_min, vals, PlaneWaveTail(theta, alpha_l, alpha_r))


def smatrix_double_barrier(coin0: Coin, coin1: Coin, n: int, theta: float) -> ScatteringMatrix:
    """Closed form for coins ``coin0`` at 0 and ``coin1`` at ``n``, identity elsewhere."""
    if n < 1:
        raise ValidationError("a double barrier needs n >= 1")
    theta = validate_theta(theta)
    e = cmath.exp(-2j * theta * n)
    D = 1.0 - coin1.b * coin0.c * e
    if abs(D) < DENOMINATOR_TOL:
        raise DenominatorVanishes(f"|1 - b1 c0 e^(-2 i theta n)| = {abs(D):.3e}")
    tau = coin0.a * coin1.a / D
    rho = (coin0.c * coin1.det + coin1.c / e) / D
    tau_t = coin0.d * coin1.d / D
    rho_t = (coin1.b * coin0.det * e + coin0.b) / D
    return ScatteringMatrix(theta, tau, rho, tau_t, rho_t)


@dataclass(frozen=True)
class ResonanceSet:
    """Resonance angles of a double barrier.

    ``all_theta`` marks the diagonal case ``q = 0`` where ``rho`` vanishes
    identically; ``angles`` is then empty.
    """

    n: int
    angles: List[float] = dc_field(default_factory=list)
    excluded_threshold_hits: List[float] = dc_field(default_factory=list)
    all_theta: bool = False

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "angles": "all" if self.all_theta else list(self.angles),
            "excluded_threshold_hits": list(self.excluded_threshold_hits),
        }


def _reduce_angle(phi: float) -> float:
    """Reduce into ``(0, 2 pi]``."""
    phi = math.fmod(phi, TWO_PI)
    return phi + TWO_PI if phi <= 0.0 else phi


def resonance_angles(params0: HomogeneousParams, params1: HomogeneousParams, n: int,
                     eps_theta: float = THETA_GUARD) -> ResonanceSet:
    """Angles where a double barrier of shared ``(p, q)`` becomes transparent.

    ``theta_m = (beta1 - beta0 + gamma0 + pi) / (2n) + pi m / n`` for
    ``m = 0, ..., 2n - 1``; angles within ``eps_theta`` of ``{0, pi, 2 pi}``
    are moved to ``excluded_threshold_hits``.
    """
    if n < 1:
        raise ValidationError("a double barrier needs n >= 1")
    if abs(params0.p - params1.p) > CONSTRUCTION_TOL or abs(params0.q - params1.q) > CONSTRUCTION_TOL:
        raise FormMismatch(
            f"coins must share (p, q); got ({params0.p}, {params0.q}) and ({params1.p}, {params1.q})")
    if params0.q < PENETRABILITY_TOL:
        return ResonanceSet(n, all_theta=True)
    base = (params1.beta - params0.beta + params0.gamma + math.pi) / (2 * n)
    raw = sorted(_reduce_angle(base + math.pi * m / n) for m in range(2 * n))
    valid = [t for t in raw if is_valid_theta(t, eps_theta)]
    excluded = [t for t in raw if not is_valid_theta(t, eps_theta)]
    return ResonanceSet(n, valid, excluded)


@dataclass(frozen=True)
class DistanceInference:
    """Outcome of counting reflection zeros.

    ``exact`` holds ``n`` with ``2n`` equal to the zero count;
    ``threshold_degenerate`` holds ``n`` with ``0 < 2n - count <= 3``, whose
    missing zeros could sit on a threshold and be invisible.
    """

    zeros: List[float]
    exact: List[int]
    threshold_degenerate: List[int]

    @property
    def count(self) -> int:
        return len(self.zeros)


def _polish_zero(rho: Callable[[float], complex], t: float, lo: float, hi: float,
                 steps: int = 8, h: float = 1e-7) -> tuple:
    """Gauss-Newton steps on the complex ``rho`` along the real axis; returns the best point."""
    best_t, best = t, abs(rho(t))
    for _ in range(steps):
        if best == 0.0:
            break
        r = rho(best_t)
        a, b = max(best_t - h, lo), min(best_t + h, hi)
        d = (rho(b) - rho(a)) / (b - a)
        if d == 0:
            break
        cand = best_t - (d.conjugate() * r).real / abs(d) ** 2
        cand = min(max(cand, lo), hi)
        val = abs(rho(cand))
        if not val < best:
            break
        best_t, best = cand, val
    return best_t, best


def infer_barrier_distance(rho: Callable[[float], complex], n_max: Optional[int] = None,
                           grid_size: int = 4096, guard: float = THETA_GUARD,
                           zero_tol: float = ZERO_TOL) -> DistanceInference:
    """Infer the barrier separation from the zeros of ``theta -> rho(theta)``.

    Scans ``|rho|`` on a uniform grid, refines every local minimum (bounded minimisation of ``|rho|^2`` followed by Gauss-Newton polishing
    of the complex ``rho``) and counts those reaching ``|rho| < zero_tol``.
    """
    if grid_size < 8:
        raise ValidationError("grid_size must be at least 8")
    step = TWO_PI / (grid_size + 1)
    grid = step * np.arange(1, grid_size + 1)
    ok = np.array([is_valid_theta(t, guard) for t in grid])
    vals = np.full(grid_size, np.inf)
    for j in np.flatnonzero(ok):
        vals[j] = abs(rho(float(grid[j])))
    zeros = []
    for j in range(1, grid_size - 1):
        if not (ok[j - 1] and ok[j] and ok[j + 1]):
            continue
        if not (vals[j] <= vals[j - 1] and vals[j] < vals[j + 1]):
            continue
        lo, hi = float(grid[j - 1]), float(grid[j + 1])
        for t in (math.pi, TWO_PI):
            if lo < t < hi:
                lo, hi = (lo, t - 2 * guard) if grid[j] < t else (t + 2 * guard, hi)
        res = minimize_scalar(lambda t: abs(rho(t)) ** 2, bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12, "maxiter": 200})
        t, val = _polish_zero(rho, float(res.x), lo, hi)
        if val < zero_tol:
            zeros.append(t)
    zeros.sort()
    for t0, t1 in zip(zeros[:-1], zeros[1:]):
        if t1 - t0 < 4 * step:
            raise GridTooCoarse(
                f"zeros at {t0:.6f} and {t1:.6f} are closer than 4 grid steps; refine the grid")
    count = len(zeros)
    top = n_max if n_max is not None else count // 2 + 2
    exact = [n for n in range(1, top + 1) if 2 * n == count]
    degenerate = [n for n in range(1, top + 1) if 0 < 2 * n - count <= 3]
    return DistanceInference(zeros, exact, degenerate)


def transfer_extend(u: Sequence[complex], field: CoinField, x: int, theta: float) -> np.ndarray:
    """Eigenfunction values at ``x + 1`` from those at ``x``.

    Solves ``[[a(x+1), b(x+1)], [0, e^{i theta}]] u(x+1) =
    [[e^{i theta}, 0], [c(x), d(x)]] u(x)``.
    """
    nxt, cur = field.coin_at(x + 1), field.coin_at(x)
    if abs(nxt.a) < PENETRABILITY_TOL:
        raise NonPenetrable(f"coin at x={x + 1} is anti-diagonal")
    e = cmath.exp(1j * theta)
    u0, u1 = complex(u[0]), complex(u[1])
    w1 = (cur.c * u0 + cur.d * u1) / e
    w0 = (e * u0 - nxt.b * w1) / nxt.a
    return np.array([w0, w1], dtype=complex)


def transmission_floor(field: CoinField, theta_grid: Iterable[float]) -> float:
    """Minimum of ``|tau|`` over the valid points of ``theta_grid``."""
    best = math.inf
    for t in theta_grid:
        if is_valid_theta(t):
            best = min(best, abs(smatrix_via_interior(field, t).tau))
    return best


def neumann_series_apply(M: InteriorMatrix, theta: float, rhs: np.ndarray, terms: int) -> np.ndarray:
    """Truncated ``sum_{m=0}^{terms} e^{-2 i theta m} E^{2m} rhs``."""
    E2 = cmath.exp(-2j * theta) * (M.entries @ M.entries)
    term = np.array(rhs, dtype=complex)
    acc = term.copy()
    for _ in range(terms):
        term = E2 @ term
        acc = acc + term
    return acc
