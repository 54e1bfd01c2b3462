"""Closed-form objects for the expanding well.

For the linear wall law L(t) = L0 + q t the Schroedinger equation has exact
modes carrying a quadratic chirp phase; any fixed-wall eigenstate can be
expanded over them with overlap coefficients that reduce to complex error
functions. This module owns those closed forms, the overlap tables, the
resulting exact time evolution, and the fixed-box operator matrix elements
used by the measurement layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cerf import erf_complex
from .errors import DomainMismatchError, ModelError, TruncationError
from .model import Basis, WallKind, WaveState, normalized

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class EigenstateSpec:
    """Quantum number of a fixed-wall eigenstate; energy decays as the well expands."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ModelError("quantum number must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    def energy(self, t, model):
        return eigen_energy(self.n, t, model)


def eigen_energy(n, t, model):
    """E_n(t) = n^2 hbar^2 pi^2 / (2 m L(t)^2)."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ModelError("quantum number must be >= 1")
    L = model.length(t)
    return (n * math.pi * model.hbar) ** 2 / (2.0 * model.mass * L**2)


def eigen_velocity(n, t, model):
    """Speed scale hbar pi n / (m L(t)) carried by eigenstate n; equals the
    wall speed q exactly when n = m q L / (pi hbar)."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ModelError("quantum number must be >= 1")
    return model.hbar * math.pi * n / (model.mass * model.length(t))


def phi(n, x, t, model):
    """Instantaneous eigenstate sqrt(2/L) sin(n pi x / L), embedded as complex."""
    if n < 1:
        raise ModelError("quantum number must be >= 1")
    L = float(model.length(t))
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > L * (1 + 1e-12)):
        raise DomainMismatchError(f"x must lie inside the well [0, {L}]")
    val = math.sqrt(2.0 / L) * np.sin(n * math.pi * x / L)
    return val.astype(complex) if val.ndim else complex(val)


def psi(n, x, t, model):
    """Exact mode of the linearly expanding well.

    psi_n = sqrt(2/L) sin(n pi x/L) exp(i [m q x^2 / (2 hbar L)
            - pi^2 hbar n^2 t / (2 m L0 L)]),  L = L0 + q t.
    """
    if n < 1:
        raise ModelError("quantum number must be >= 1")
    wall = model.wall
    if wall.kind is not WallKind.LINEAR:
        raise ModelError("the chirped modes exist only for the linear wall law")
    L = float(model.length(t))
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > L * (1 + 1e-12)):
        raise DomainMismatchError(f"x must lie inside the well [0, {L}]")
    m, hb = model.mass, model.hbar
    a = m * wall.q / (2.0 * hb * L)
    theta = -(math.pi**2) * hb * n**2 * t / (2.0 * m * wall.L0 * L)
    val = math.sqrt(2.0 / L) * np.sin(n * math.pi * x / L) * np.exp(1j * (a * x**2 + theta))
    return val if val.ndim else complex(val)


def _overlap_scale(model, t):
    wall = model.wall
    if wall.kind is not WallKind.LINEAR:
        raise ModelError("overlaps with the chirped modes require the linear wall law; "
                         "the static well evolves by pure phases instead")
    L = float(model.length(t))
    return model.mass * wall.q * L  # momentum-like scale m q L


def basis_overlap(k, n, t, model):
    """Overlap <chirped mode k | eigenstate n> at time t, in closed form.

    Equal to the integral of conj(psi_k) * phi_n over the well; the closed
    form is a combination of four complex error functions along the
    exp(i pi/4) ray. Validated against direct quadrature in the test suite.
    """
    if k < 1 or n < 1:
        raise ModelError("mode indices must be >= 1")
    return complex(overlap_matrix(model, t, k, n)[k - 1, n - 1])


def overlap_matrix(model, t, k_max, n_max):
    """Dense (k_max, n_max) table of overlaps at time t.

    The error functions depend on k and n only through k - n and k + n, so
    the table is assembled from one-dimensional scans, which keeps the cost
    linear in k_max + n_max rather than quadratic.
    """
    if k_max < 1 or n_max < 1:
        raise ModelError("mode indices must be >= 1")
    hb = model.hbar
    M = _overlap_scale(model, t)
    L0, q = model.wall.L0, model.wall.q
    root = math.sqrt(2.0 * hb * M)
    e4 = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    pref = np.exp(-1j * math.pi / 4) * math.sqrt(hb * math.pi) / (2.0 * math.sqrt(2.0 * M))

    B = max(k_max, n_max)
    p_lo = -(B - 1)
    p_hi = k_max + n_max
    ps = np.arange(p_lo, p_hi + 1, dtype=float)
    erf_plus = erf_complex(e4 * (math.pi * hb * ps + M) / root)
    erf_minus = erf_complex(e4 * (math.pi * hb * ps - M) / root)
    chirp = np.exp(1j * math.pi**2 * hb * ps**2 / (2.0 * M))

    def tab(table, p):
        return table[p - p_lo]

    k = np.arange(1, k_max + 1)[:, None]
    n = np.arange(1, n_max + 1)[None, :]
    ck = np.exp(1j * math.pi**2 * hb * k.astype(float) ** 2 * q * t / (2.0 * L0 * M))
    dm = k - n
    sm = k + n
    bracket1 = tab(chirp, dm) * (tab(erf_plus, dm) + tab(erf_plus, -dm))
    bracket2 = tab(chirp, sm) * (tab(erf_plus, sm) - tab(erf_minus, sm))
    return pref * ck * (bracket1 - bracket2)


def expand_eigen_in_moving(model, eigen_coeffs, *, tol=1e-10, k_cap=20000):
    """Moving-basis coefficients of a t=0 eigen-basis superposition.

    a_k = sum_n c_n <psi_k(0)|phi_n(0)>, truncated at the smallest table size
    whose discarded norm is below ``tol`` (growing geometrically), then
    renormalized. Raises TruncationError if the cap is hit first.
    """
    c = np.asarray(eigen_coeffs, dtype=complex)
    n_max = c.size
    M0 = _overlap_scale(model, 0.0)
    kbar = M0 / (math.pi * model.hbar)
    K = int(min(k_cap, max(64, math.ceil(40.0 * kbar), 2 * n_max)))
    while True:
        D0 = overlap_matrix(model, 0.0, K, n_max)
        a = D0 @ c
        discarded = 1.0 - float(np.sum(np.abs(a) ** 2))
        if discarded < tol:
            return normalized(a), discarded
        if K >= k_cap:
            raise TruncationError(
                f"discarded norm {discarded:.3e} still above {tol:.1e} at the cap K={k_cap}"
            )
        K = min(k_cap, math.ceil(1.5 * K))


def project_to_eigen(state, n_max):
    """Coefficients <phi_n(t)|state> for n = 1..n_max.

    For a moving-basis state this is a row of conjugated overlaps summed
    against the chirped-mode coefficients.
    """
    if state.basis is Basis.EIGEN:
        c = np.zeros(n_max, dtype=complex)
        upto = min(n_max, state.coeffs.size)
        c[:upto] = state.coeffs[:upto]
        return c
    D = overlap_matrix(state.model, state.t, state.coeffs.size, n_max)
    return state.coeffs @ np.conj(D)


class AnalyticEvolution:
    """Closed-form time evolution (linear or static wall).

    Linear wall: the moving-basis coefficients are constants of the motion;
    a t=0 eigen-basis state is first expanded over the chirped modes.
    Static wall: eigen coefficients rotate by exp(-i E_n (t - t0)).
    """

    def __init__(self, model, basis, coeffs, t0=0.0, *, truncation_tol=1e-10, k_cap=20000):
        kind = model.wall.kind
        if kind is WallKind.SMOOTHED:
            raise ModelError("closed-form evolution requires a static or linear wall; "
                             "use the spectral solver for the smoothed law")
        coeffs = np.asarray(coeffs, dtype=complex)
        self.model = model
        self.t0 = float(t0)
        self.truncation_discarded = 0.0
        if kind is WallKind.LINEAR:
            if basis is Basis.EIGEN:
                if self.t0 != 0.0:
                    raise ModelError("eigen-basis initial data must be given at t = 0")
                coeffs, self.truncation_discarded = expand_eigen_in_moving(
                    model, coeffs, tol=truncation_tol, k_cap=k_cap
                )
            self.basis = Basis.MOVING
        else:
            if basis is not Basis.EIGEN:
                raise ModelError("a static well has no chirped modes")
            self.basis = Basis.EIGEN
        self.coeffs0 = normalized(coeffs)

    @classmethod
    def from_state(cls, state, **kw):
        return cls(state.model, state.basis, state.coeffs, state.t, **kw)

    @classmethod
    def eigenstate(cls, model, n, **kw):
        c = np.zeros(int(n), dtype=complex)
        c[-1] = 1.0
        return cls(model, Basis.EIGEN, c, 0.0, **kw)

    @classmethod
    def moving_mode(cls, model, n, **kw):
        c = np.zeros(int(n), dtype=complex)
        c[-1] = 1.0
        return cls(model, Basis.MOVING, c, 0.0, **kw)

    def state_at(self, t):
        t = float(t)
        if self.basis is Basis.MOVING:
            return WaveState(self.model, t, Basis.MOVING, self.coeffs0)
        n = np.arange(1, self.coeffs0.size + 1)
        e = eigen_energy(n, t, self.model)
        phase = np.exp(-1j * e * (t - self.t0) / self.model.hbar)
        return WaveState(self.model, t, Basis.EIGEN, self.coeffs0 * phase)


def exact_evolve(initial, t, *, truncation_tol=1e-10, k_cap=20000):
    """Evolve a state by the closed forms and return it at time t."""
    evo = AnalyticEvolution.from_state(initial, truncation_tol=truncation_tol, k_cap=k_cap)
    return evo.state_at(t)


def position_matrix_fixed(K_out, K_in, L):
    """<k|x|n> between fixed-box modes of length L.

    L/2 on the diagonal, -8 L k n / (pi^2 (k^2 - n^2)^2) for odd k+n, else 0.
    """
    k = np.arange(1, K_out + 1, dtype=float)[:, None]
    n = np.arange(1, K_in + 1, dtype=float)[None, :]
    odd = ((k + n) % 2).astype(bool)
    denom = np.where(odd, (k**2 - n**2) ** 2, 1.0)  # odd k+n implies k != n
    X = np.where(odd, -8.0 * L * k * n / (math.pi**2 * denom), 0.0)
    idx = np.arange(min(K_out, K_in))
    X[idx, idx] = L / 2.0
    return X.astype(complex)


def momentum_matrix_fixed(K_out, K_in, L, hbar=1.0):
    """<k|P|n> between fixed-box modes: -4 i hbar k n / (L (k^2 - n^2)) for odd k+n."""
    k = np.arange(1, K_out + 1, dtype=float)[:, None]
    n = np.arange(1, K_in + 1, dtype=float)[None, :]
    odd = ((k + n) % 2).astype(bool)
    denom = np.where(odd, k**2 - n**2, 1.0)  # odd k+n implies k != n
    return np.where(odd, -4j * hbar * k * n / (L * denom), 0.0)


def _moving_phase_conjugation(model, t, K_out, K_in):
    """Factor exp(i (theta_n - theta_k)) that dresses fixed-box matrix
    elements into moving-basis ones (the chirp cancels between bra and ket)."""
    hb, m = model.hbar, model.mass
    L0 = model.wall.L0
    L = float(model.length(t))
    k2 = np.arange(1, K_out + 1, dtype=float)[:, None] ** 2
    n2 = np.arange(1, K_in + 1, dtype=float)[None, :] ** 2
    return np.exp(1j * math.pi**2 * hb * (k2 - n2) * t / (2.0 * m * L0 * L))


def position_matrix(model, t, basis, K_out, K_in=None):
    """<k|x|n> in the requested basis at time t."""
    K_in = K_out if K_in is None else K_in
    L = float(model.length(t))
    X = position_matrix_fixed(K_out, K_in, L)
    if basis is Basis.EIGEN:
        return X
    return _moving_phase_conjugation(model, t, K_out, K_in) * X


def momentum_matrix(model, t, basis, K_out, K_in=None):
    """<k|P|n> in the requested basis at time t.

    The chirp adds the local drift m q x / L to the fixed-box momentum."""
    K_in = K_out if K_in is None else K_in
    L = float(model.length(t))
    P = momentum_matrix_fixed(K_out, K_in, L, model.hbar)
    if basis is Basis.EIGEN:
        return P
    drift = (model.mass * model.wall.q / L) * position_matrix_fixed(K_out, K_in, L)
    return _moving_phase_conjugation(model, t, K_out, K_in) * (P + drift)
