"""Physical model layer: wall laws, well parameters, grids, spectral states.

Everything is expressed in atomic units (hbar = 1, electron mass = 1,
light speed about 137.036). States are stored as coefficient vectors over a
declared basis; grid views are always derived from the coefficients, never
the other way around.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatchError, ModelError

HBAR = 1.0
LIGHT_SPEED_AU = 137.035999

#: Relative density threshold below which pointwise division by rho is refused.
NODE_GUARD_REL = 1e-12

#: Normalization band for coefficient vectors built by library operations.
NORM_TOL = 1e-10

# Cap on K*P for a single synthesis block; larger requests are chunked.
_SYNTH_BLOCK = 1 << 24


class WallKind(enum.Enum):
    STATIC = "static"
    LINEAR = "linear"
    SMOOTHED = "smoothed"


@dataclass(frozen=True)
class WallMotion:
    """Law of motion of the right wall.

    static:   L(t) = L0
    linear:   L(t) = L0 + q*t
    smoothed: L(t) = L0 + q*t*(1 - exp(-gamma*t)), a continuous ramp from
              rest into the linear regime.

    Only expansion (q > 0) is supported for the moving variants.
    """

    kind: WallKind
    L0: float
    q: float = 0.0
    gamma: float | None = None

    def __post_init__(self):
        if not (self.L0 > 0.0 and math.isfinite(self.L0)):
            raise ModelError(f"initial length must be positive, got {self.L0}")
        if self.kind is WallKind.STATIC:
            if self.q != 0.0:
                raise ModelError("static wall must have q = 0")
        else:
            if not (self.q > 0.0 and math.isfinite(self.q)):
                raise ModelError(f"wall speed must be positive, got {self.q}")
        if self.kind is WallKind.SMOOTHED:
            if self.gamma is None or not (self.gamma > 0.0 and math.isfinite(self.gamma)):
                raise ModelError(f"ramp rate must be positive, got {self.gamma}")
        elif self.gamma is not None:
            raise ModelError("gamma is only meaningful for the smoothed wall")

    @classmethod
    def static(cls, L0):
        return cls(WallKind.STATIC, float(L0))

    @classmethod
    def linear(cls, L0, q):
        return cls(WallKind.LINEAR, float(L0), float(q))

    @classmethod
    def smoothed(cls, L0, q, gamma):
        return cls(WallKind.SMOOTHED, float(L0), float(q), float(gamma))

    def length(self, t):
        """L(t); t may be a scalar or array, must be nonnegative."""
        t = _check_time(t)
        if self.kind is WallKind.STATIC:
            return self.L0 + 0.0 * t
        if self.kind is WallKind.LINEAR:
            return self.L0 + self.q * t
        return self.L0 + self.q * t * (-np.expm1(-self.gamma * t))

    def velocity(self, t):
        """dL/dt, evaluated analytically (never by finite differencing)."""
        t = _check_time(t)
        if self.kind is WallKind.STATIC:
            return 0.0 * t
        if self.kind is WallKind.LINEAR:
            return self.q + 0.0 * t
        e = np.exp(-self.gamma * t)
        return self.q * (-np.expm1(-self.gamma * t)) + self.q * self.gamma * t * e


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or not np.all(np.isfinite(t)):
        raise ModelError(f"time must be finite and nonnegative, got {t!r}")
    return t if t.ndim else float(t)


@dataclass(frozen=True)
class WellModel:
    """Infinite well with one moving wall; V = 0 on [0, L(t)], infinite outside.

    hbar is fixed to 1 (atomic units). The light speed only enters causal
    bookkeeping, never the dynamics, and is configurable.
    """

    mass: float = 1.0
    light_speed: float = LIGHT_SPEED_AU
    wall: WallMotion = field(default_factory=lambda: WallMotion.static(1.0))
    hbar: float = field(default=HBAR, init=False)

    def __post_init__(self):
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ModelError(f"mass must be positive, got {self.mass}")
        if not (self.light_speed > 0.0 and math.isfinite(self.light_speed)):
            raise ModelError(f"light speed must be positive, got {self.light_speed}")

    def length(self, t):
        return self.wall.length(t)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid spanning exactly [0, L]."""

    points: np.ndarray
    length: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 3:
            raise ModelError("grid needs at least 3 points")
        if not (pts[0] == 0.0 and np.all(np.diff(pts) > 0.0)):
            raise ModelError("grid points must increase strictly from 0")
        if not math.isclose(pts[-1], self.length, rel_tol=0.0, abs_tol=1e-12 * self.length):
            raise ModelError("last grid point must equal the domain length")

    @classmethod
    def uniform(cls, n, length):
        if n < 3:
            raise ModelError("grid needs at least 3 points")
        return cls(np.linspace(0.0, float(length), int(n)), float(length))

    @property
    def n(self):
        return self.points.size

    @property
    def spacing(self):
        return self.length / (self.n - 1)


class Basis(enum.Enum):
    #: eigenstates of the well with the wall frozen at its position at time t
    EIGEN = "eigen"
    #: exact modes of the linearly expanding well (quadratic-chirp phase)
    MOVING = "moving"


@dataclass(frozen=True)
class WaveState:
    """Quantum state at time t as coefficients over a declared basis.

    Coefficients are indexed from quantum number 1. The vector must be
    normalized within ``norm_tol``; library operations that truncate an
    expansion renormalize before constructing a state.
    """

    model: WellModel
    t: float
    basis: Basis
    coeffs: np.ndarray
    norm_tol: float = NORM_TOL

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "t", float(self.t))
        if self.t < 0.0:
            raise ModelError("state time must be nonnegative")
        if c.ndim != 1 or c.size < 1:
            raise ModelError("coefficient vector must be 1-D and nonempty")
        if not np.all(np.isfinite(c)):
            raise ModelError("coefficients must be finite")
        norm2 = float(np.sum(np.abs(c) ** 2))
        if abs(norm2 - 1.0) > self.norm_tol:
            raise ModelError(f"state norm^2 = {norm2!r} violates |norm^2 - 1| <= {self.norm_tol}")
        if self.basis is Basis.MOVING and self.model.wall.kind is not WallKind.LINEAR:
            raise ModelError("the moving basis is defined only for the linear wall law")

    @property
    def k(self):
        """Quantum numbers carried by the coefficient vector."""
        return np.arange(1, self.coeffs.size + 1)

    @property
    def length(self):
        return float(self.model.length(self.t))


def normalized(coeffs):
    """Return a unit-norm copy of a coefficient vector."""
    c = np.asarray(coeffs, dtype=complex)
    nrm = np.linalg.norm(c)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise ModelError("cannot normalize a zero or non-finite vector")
    return c / nrm


def _mode_arrays(model, basis, t, kvec, x, order):
    """Basis functions (and x-derivatives up to ``order``) as (K, P) arrays."""
    L = float(model.length(t))
    k = np.asarray(kvec, dtype=float)[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    amp = math.sqrt(2.0 / L)
    kpil = k * (math.pi / L)
    s = np.sin(kpil * x)
    u = amp * s
    out = [u]
    if order >= 1:
        du = amp * kpil * np.cos(kpil * x)
        out.append(du)
    if order >= 2:
        out.append(-(kpil**2) * u)
    if basis is Basis.EIGEN:
        return [o.astype(complex) for o in out]

    # moving basis: multiply by the quadratic chirp exp(i a x^2) and the
    # per-mode time phase exp(-i pi^2 hbar k^2 t / (2 m L0 L))
    m, hb = model.mass, model.hbar
    L0, q = model.wall.L0, model.wall.q
    a = m * q / (2.0 * hb * L)
    theta = -(math.pi**2) * hb * k**2 * t / (2.0 * m * L0 * L)
    phase = np.exp(1j * (a * x**2 + theta))
    val = out[0] * phase
    res = [val]
    if order >= 1:
        d1 = (out[1] + 2j * a * x * out[0]) * phase
        res.append(d1)
    if order >= 2:
        d2 = (out[2] + 2j * a * out[0] + 4j * a * x * out[1] - 4.0 * a**2 * x**2 * out[0]) * phase
        res.append(d2)
    return res


def synthesize_raw(model, basis, t, coeffs, x, order=0):
    """Evaluate a coefficient vector against the basis at points x.

    Unlike ``synthesize`` this accepts unnormalized vectors (for example a
    state hit by an operator matrix). Returns an array for order 0, else a
    tuple (f, df[, d2f]). Scalars in, scalars out.
    """
    if order not in (0, 1, 2):
        raise ModelError("order must be 0, 1 or 2")
    coeffs = np.asarray(coeffs, dtype=complex)
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    L = float(model.length(t))
    if np.any(x < 0.0) or np.any(x > L * (1.0 + 1e-12)):
        raise DomainMismatchError(f"sample points must lie in [0, {L}]")
    K = coeffs.size
    kvec = np.arange(1, K + 1)
    outs = [np.zeros(x.size, dtype=complex) for _ in range(order + 1)]
    step = max(1, _SYNTH_BLOCK // max(K, 1))
    for lo in range(0, x.size, step):
        hi = min(lo + step, x.size)
        arrs = _mode_arrays(model, basis, t, kvec, x[lo:hi], order)
        for o, arr in enumerate(arrs):
            outs[o][lo:hi] = coeffs @ arr
    if scalar:
        outs = [complex(o[0]) for o in outs]
    return outs[0] if order == 0 else tuple(outs)


def synthesize(state, x, order=0):
    """Evaluate psi (and spatial derivatives up to ``order``) at points x."""
    return synthesize_raw(state.model, state.basis, state.t, state.coeffs, x, order)


def state_to_grid(state, grid):
    """Grid view of a state; endpoints are exactly zero by construction.

    The grid must span the well domain [0, L(t)] at the state's time.
    """
    if not math.isclose(grid.length, state.length, rel_tol=1e-12, abs_tol=0.0):
        raise DomainMismatchError(
            f"grid length {grid.length!r} does not match the well length {state.length!r}"
        )
    psi = synthesize(state, grid.points)
    # every basis function vanishes at the walls; round-off residue is removed
    psi[0] = 0.0
    psi[-1] = 0.0
    return psi


def density_scale(state, n_ref=1024):
    """max |psi|^2 over a dense reference grid, used by node guards."""
    xs = np.linspace(0.0, state.length, int(n_ref))
    rho = np.abs(synthesize(state, xs)) ** 2
    return float(np.max(rho))


def node_guard_mask(rho, rho_max, rel=NODE_GUARD_REL):
    """True where the density is too small for pointwise division."""
    return np.asarray(rho) < rel * rho_max


@dataclass(frozen=True)
class ObservableField:
    """Sampled observable fields at one instant.

    ``guarded`` marks nodes where division by the density was refused;
    dependent entries (v, weak momentum, quantum potential) hold NaN there
    and are written out as absent values.
    """

    grid: SpatialGrid
    t: float
    rho: np.ndarray
    j: np.ndarray
    v: np.ndarray
    re_pw: np.ndarray
    im_pw: np.ndarray
    qpot: np.ndarray
    guarded: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        for name in ("rho", "j", "v", "re_pw", "im_pw", "qpot", "guarded"):
            arr = getattr(self, name)
            if np.asarray(arr).shape != (n,):
                raise ModelError(f"field {name} must have shape ({n},)")
        if np.any(self.rho < 0.0):
            raise ModelError("density must be nonnegative")
        total = float(np.trapezoid(self.rho, self.grid.points))
        if abs(total - 1.0) > self._quadrature_tol():
            raise ModelError(f"density integral {total!r} outside quadrature tolerance")

    def _quadrature_tol(self):
        # composite trapezoid error bound (L h^2 / 12) max|rho''| with a
        # crude second-difference estimate of rho''
        h = self.grid.spacing
        d2 = np.abs(np.diff(self.rho, 2)) / h**2
        bound = self.grid.length * h**2 / 12.0 * (np.max(d2) if d2.size else 0.0)
        return max(1e-9, 4.0 * bound)
