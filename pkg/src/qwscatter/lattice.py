"""Coins, coin fields, lattice states and one step of the walk ``U = S C``.

A state on Z is stored as a finite window of sites ``x_min..x_max`` with an
``(m, 2)`` complex array whose columns are the chirality components
``(psi_L, psi_R)``.  The shift moves ``psi_L`` one site to the left and
``psi_R`` one site to the right::

    (U psi)_L(x) = a(x+1) psi_L(x+1) + b(x+1) psi_R(x+1)
    (U psi)_R(x) = c(x-1) psi_L(x-1) + d(x-1) psi_R(x-1)
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from os import PathLike
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import (
    InvalidQuasiEnergy,
    NonPenetrable,
    NotOfForm,
    NotUnitary,
    ValidationError,
    WindowTooSmall,
)

TWO_PI = 2.0 * math.pi

# construction checks < conservation checks < route-equivalence checks
CONSTRUCTION_TOL = 1e-10
CONSERVATION_TOL = 1e-12
ROUTE_TOL = 1e-9
PENETRABILITY_TOL = 1e-12
THETA_GUARD = 1e-6


def _wrap_angle(phi: float) -> float:
    phi = math.fmod(phi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    # fmod can return TWO_PI - tiny after the shift
    return 0.0 if phi >= TWO_PI else phi


@dataclass(frozen=True)
class Coin:
    """A 2x2 unitary ``[[a, b], [c, d]]`` attached to one lattice site."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, complex(getattr(self, name)))
        m = self.matrix
        defect = np.abs(m @ m.conj().T - np.eye(2)).max()
        if not defect <= CONSTRUCTION_TOL:
            raise NotUnitary(f"coin is not unitary: ||C C^+ - 1||_max = {defect:.3e}")

    @classmethod
    def identity(cls) -> "Coin":
        return cls(1, 0, 0, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def is_antidiagonal(self) -> bool:
        # unitarity forces |a| == |d|
        return abs(self.a) < PENETRABILITY_TOL

    @property
    def penetrable(self) -> bool:
        return not self.is_antidiagonal

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in "abcd"}

    @classmethod
    def from_json(cls, doc: dict) -> "Coin":
        try:
            return cls(*(complex(doc[k][0], doc[k][1]) for k in "abcd"))
        except (KeyError, IndexError, TypeError) as exc:
            raise ValidationError(f"malformed coin entry {doc!r}") from exc


def make_coin(a: complex, b: complex, c: complex, d: complex) -> Coin:
    """Validate four amplitudes as a unitary coin; raises ``NotUnitary``."""
    return Coin(a, b, c, d)


@dataclass(frozen=True)
class HomogeneousParams:
    """Parameters ``(p, q, alpha, beta, gamma)`` of the coin

    ``e^{i gamma/2} [[p e^{i(alpha - gamma/2)},  q e^{i(beta - gamma/2)}],
                     [-q e^{-i(beta - gamma/2)}, p e^{-i(alpha - gamma/2)}]]``.
    """

    p: float
    q: float
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("p", "q", "alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")
        if not 0.0 <= self.q < 1.0:
            raise ValidationError(f"q must lie in [0, 1), got {self.q}")
        if abs(self.p**2 + self.q**2 - 1.0) > CONSERVATION_TOL:
            raise ValidationError(f"p^2 + q^2 = {self.p**2 + self.q**2!r} != 1")

    @classmethod
    def from_angles(cls, p: float, alpha: float = 0.0, beta: float = 0.0,
                    gamma: float = 0.0) -> "HomogeneousParams":
        return cls(p, math.sqrt(max(0.0, 1.0 - p * p)), alpha, beta, gamma)

    def coin(self) -> Coin:
        return coin_from_params(self)


FREE_PARAMS = HomogeneousParams(1.0, 0.0, 0.0, 0.0, 0.0)


def coin_from_params(params: HomogeneousParams) -> Coin:
    p, q = params.p, params.q
    al, be, ga = params.alpha, params.beta, params.gamma
    return Coin(
        p * cmath.exp(1j * al),
        q * cmath.exp(1j * be),
        -q * cmath.exp(1j * (ga - be)),
        p * cmath.exp(1j * (ga - al)),
    )


def coin_to_params(coin: Coin) -> HomogeneousParams:
    """Recover ``(p, q, alpha, beta, gamma)`` with ``coin_from_params(...) == coin``.

    Phase convention: ``alpha = arg a``, ``beta = arg b`` (0 when ``q == 0``),
    ``gamma = arg a + arg d``, all reduced to ``[0, 2 pi)``.
    """
    p, q = abs(coin.a), abs(coin.b)
    if abs(p * p + q * q - 1.0) > CONSTRUCTION_TOL:
        raise NotOfForm(f"|a|^2 + |b|^2 = {p * p + q * q!r} != 1")
    if p < PENETRABILITY_TOL:
        raise NotOfForm("anti-diagonal coin has p = 0; the parametrisation needs p != 0")
    s = math.hypot(p, q)
    p, q = p / s, q / s
    alpha = _wrap_angle(cmath.phase(coin.a))
    beta = _wrap_angle(cmath.phase(coin.b)) if q > 0.0 else 0.0
    gamma = _wrap_angle(cmath.phase(coin.a) + cmath.phase(coin.d))
    try:
        return HomogeneousParams(p, q, alpha, beta, gamma)
    except ValidationError as exc:
        raise NotOfForm(str(exc)) from exc


@dataclass(frozen=True)
class CoinField:
    """Coins on ``Gamma = {0, ..., n}``; the identity coin everywhere else."""

    coins: tuple

    def __post_init__(self):
        coins = tuple(self.coins)
        if not coins:
            raise ValidationError("a coin field needs at least one site (n >= 0)")
        if not all(isinstance(c, Coin) for c in coins):
            raise ValidationError("coin field entries must be Coin instances")
        object.__setattr__(self, "coins", coins)

    @property
    def n(self) -> int:
        return len(self.coins) - 1

    def coin_at(self, x: int) -> Coin:
        if 0 <= x <= self.n:
            return self.coins[x]
        return _IDENTITY

    @property
    def penetrable(self) -> bool:
        return all(c.penetrable for c in self.coins)

    def require_penetrable(self) -> None:
        for x, c in enumerate(self.coins):
            if not c.penetrable:
                raise NonPenetrable(f"coin at x={x} is anti-diagonal (|a| = {abs(c.a):.3e})")

    def entries(self, xs: np.ndarray) -> tuple:
        """Arrays ``a, b, c, d`` evaluated at the integer sites ``xs``."""
        xs = np.asarray(xs)
        out = [np.zeros(xs.shape, dtype=complex) for _ in range(4)]
        out[0][:] = 1.0
        out[3][:] = 1.0
        inside = (xs >= 0) & (xs <= self.n)
        if inside.any():
            table = np.array([[c.a, c.b, c.c, c.d] for c in self.coins])
            for k in range(4):
                out[k][inside] = table[xs[inside], k]
        return tuple(out)

    @classmethod
    def identity(cls, n: int) -> "CoinField":
        return cls(tuple(_IDENTITY for _ in range(n + 1)))

    @classmethod
    def double_barrier(cls, coin0: Coin, coin1: Coin, n: int) -> "CoinField":
        if n < 1:
            raise ValidationError("a double barrier needs n >= 1")
        return cls((coin0,) + (_IDENTITY,) * (n - 1) + (coin1,))

    def to_json(self) -> dict:
        return {"n": self.n, "coins": [c.to_json() for c in self.coins]}

    @classmethod
    def from_json(cls, doc: dict) -> "CoinField":
        try:
            n = int(doc["n"])
            coins = doc["coins"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("coin field JSON needs keys 'n' and 'coins'") from exc
        if len(coins) != n + 1:
            raise ValidationError(f"'n' = {n} but {len(coins)} coins were given")
        return cls(tuple(Coin.from_json(c) for c in coins))


_IDENTITY = Coin(1, 0, 0, 1)


def load_field(path: Union[str, PathLike]) -> CoinField:
    with open(path, encoding="utf-8") as fh:
        return CoinField.from_json(json.load(fh))


def save_field(field_: CoinField, path: Union[str, PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(field_.to_json(), fh, indent=2)
        fh.write("\n")


def is_valid_theta(theta: float, guard: float = THETA_GUARD) -> bool:
    """True when ``theta`` lies in (0, 2 pi) and stays ``guard`` away from 0, pi, 2 pi."""
    if not 0.0 < theta < TWO_PI:
        return False
    return min(theta, abs(theta - math.pi), TWO_PI - theta) > guard


def validate_theta(theta: float, guard: float = THETA_GUARD) -> float:
    theta = float(theta)
    if not is_valid_theta(theta, guard):
        raise InvalidQuasiEnergy(
            f"theta = {theta!r} is outside (0, 2pi) or within {guard:g} of {{0, pi, 2pi}}")
    return theta


@dataclass(frozen=True)
class PlaneWaveTail:
    """Incoming plane waves beyond a window.

    Stands for ``alpha_l e^{i theta x} [1, 0]`` at ``x > x_max`` and
    ``alpha_r e^{-i theta x} [0, 1]`` at ``x < x_min``.
    """

    theta: float
    alpha_l: complex = 0.0
    alpha_r: complex = 0.0


@dataclass(frozen=True)
class StateWindow:
    x_min: int
    values: np.ndarray
    tail: Optional[PlaneWaveTail] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim != 2 or vals.shape[1] != 2 or vals.shape[0] < 1:
            raise ValidationError(f"values must have shape (m, 2), got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "x_min", int(self.x_min))

    @property
    def x_max(self) -> int:
        return self.x_min + self.values.shape[0] - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)

    @property
    def psi_l(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def psi_r(self) -> np.ndarray:
        return self.values[:, 1]

    def at(self, x: int) -> np.ndarray:
        if self.x_min <= x <= self.x_max:
            return self.values[x - self.x_min].copy()
        out = np.zeros(2, dtype=complex)
        if self.tail is not None:
            t = self.tail
            if x > self.x_max:
                out[0] = t.alpha_l * cmath.exp(1j * t.theta * x)
            else:
                out[1] = t.alpha_r * cmath.exp(-1j * t.theta * x)
        return out

    def norm(self) -> float:
        """l2 norm of the stored window."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    @classmethod
    def zeros(cls, x_min: int, x_max: int) -> "StateWindow":
        return cls(x_min, np.zeros((x_max - x_min + 1, 2), dtype=complex))

    @classmethod
    def delta(cls, x0: int, vec: Sequence[complex], x_min: Optional[int] = None,
              x_max: Optional[int] = None) -> "StateWindow":
        x_min = x0 if x_min is None else x_min
        x_max = x0 if x_max is None else x_max
        vals = np.zeros((x_max - x_min + 1, 2), dtype=complex)
        vals[x0 - x_min] = vec
        return cls(x_min, vals)

    @classmethod
    def from_function(cls, fn: Callable[[int], Sequence[complex]], x_min: int, x_max: int,
                      tail: Optional[PlaneWaveTail] = None) -> "StateWindow":
        vals = np.array([fn(x) for x in range(x_min, x_max + 1)], dtype=complex)
        return cls(x_min, vals, tail)


CoinEntries = Callable[[np.ndarray], tuple]


def _step(padded: np.ndarray, x_lo: int, entries: CoinEntries) -> np.ndarray:
    """One walk step on sites ``x_lo+1 .. x_lo+len-2`` of a padded array."""
    xs = np.arange(x_lo, x_lo + padded.shape[0])
    a, b, c, d = entries(xs)
    L, R = padded[:, 0], padded[:, 1]
    out = np.empty((padded.shape[0] - 2, 2), dtype=complex)
    out[:, 0] = a[2:] * L[2:] + b[2:] * R[2:]
    out[:, 1] = c[:-2] * L[:-2] + d[:-2] * R[:-2]
    return out


def walk_with(entries: CoinEntries, state: StateWindow, outside: str = "zero",
              gamma_lo: Optional[int] = None, gamma_hi: Optional[int] = None) -> StateWindow:
    """Apply ``S C`` for the coin entries given by ``entries(xs) -> (a, b, c, d)``.

    ``outside`` selects how sites beyond an untailed window are treated:
    ``"zero"`` (compact support; the output window grows by one site per
    side) or ``"unknown"`` (only sites whose neighbours are stored are
    returned; the window shrinks by one site per side).  A tailed window
    keeps its extent and needs ``[gamma_lo, gamma_hi]`` inside it, since the
    tail assumes the identity coin beyond.
    """
    vals = state.values
    if state.tail is not None:
        t = state.tail
        if gamma_lo is not None and not (state.x_min <= gamma_lo and state.x_max >= gamma_hi):
            raise WindowTooSmall(
                f"window [{state.x_min}, {state.x_max}] must contain the scattering "
                f"region [{gamma_lo}, {gamma_hi}] when a plane-wave tail is used")
        padded = np.vstack([state.at(state.x_min - 1), vals, state.at(state.x_max + 1)])
        out = _step(padded, state.x_min - 1, entries)
        phase = cmath.exp(1j * t.theta)
        return StateWindow(state.x_min, out,
                           PlaneWaveTail(t.theta, t.alpha_l * phase, t.alpha_r * phase))
    if outside == "zero":
        z = np.zeros((2, 2), dtype=complex)
        padded = np.vstack([z, vals, z])
        return StateWindow(state.x_min - 1, _step(padded, state.x_min - 2, entries))
    if outside == "unknown":
        if vals.shape[0] < 3:
            raise WindowTooSmall("need at least three sites when outside values are unknown")
        return StateWindow(state.x_min + 1, _step(vals, state.x_min, entries))
    raise ValidationError(f"outside must be 'zero' or 'unknown', got {outside!r}")


def apply_walk(field_: CoinField, state: StateWindow, outside: str = "zero") -> StateWindow:
    """One step of ``U = S C`` for the coin field; see :func:`walk_with`."""
    return walk_with(field_.entries, state, outside, 0, field_.n)
