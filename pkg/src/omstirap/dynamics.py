"""Lindblad master-equation right-hand side and adaptive time integration.

The generator is

    d rho / dt = -i [H(t), rho] + sum_k r_k (C_k rho C_k^+
                                             - (C_k^+ C_k rho + rho C_k^+ C_k)/2)

with the cavity decaying at rate kappa through C = a and each mechanical
mode thermalizing through the pair (b_i, Gamma_i (nbar_i + 1)) and
(b_i^+, Gamma_i nbar_i).

Density matrices are integrated directly as complex matrices with an
embedded Dormand-Prince 5(4) pair; hermiticity is restored by symmetrization
after every accepted step and the trace is monitored for divergence.  A
dense-superoperator propagator based on the matrix exponential serves as an
independent validation oracle for frozen generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    IntegrationDivergedError,
    InvalidArgumentError,
    InvalidDimensionError,
    OracleTooLargeError,
    StiffnessError,
)
from .hilbert import DensityMatrix, HilbertSpace, Operator

TRACE_SAMPLE_TOL = 1e-6
TRACE_DIVERGENCE_TOL = 1e-4
ORACLE_DIM_CAP = 4096  # on total_dim^2; the oracle scales as dim^6


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian provider plus weighted collapse operators on one space."""

    space: HilbertSpace
    hamiltonian: Callable[[float], np.ndarray] | np.ndarray | Operator | None
    collapse_terms: tuple = ()

    def __post_init__(self):
        terms = []
        for op, rate in self.collapse_terms:
            mat = op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)
            if mat.shape != (self.space.total_dim,) * 2:
                raise InvalidDimensionError("collapse operator shape mismatch")
            if rate < 0:
                raise InvalidArgumentError(f"negative collapse rate {rate}")
            terms.append((mat, float(rate)))
        object.__setattr__(self, "collapse_terms", tuple(terms))

    def hamiltonian_of_t(self) -> Callable[[float], np.ndarray]:
        h = self.hamiltonian
        if h is None:
            zero = np.zeros((self.space.total_dim,) * 2, dtype=complex)
            return lambda t: zero
        if isinstance(h, Operator):
            hm = h.matrix
            return lambda t: hm
        if isinstance(h, np.ndarray):
            return lambda t: h
        return h


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bound and sampling grid for :func:`evolve`."""

    sample_times: Sequence[float]
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf

    def __post_init__(self):
        ts = np.asarray(self.sample_times, dtype=float)
        if ts.ndim != 1 or ts.size < 2:
            raise InvalidArgumentError("need at least two sample times")
        if np.any(np.diff(ts) <= 0):
            raise InvalidArgumentError("sample times must be strictly increasing")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidArgumentError("tolerances must be > 0")
        if self.max_step <= 0:
            raise InvalidArgumentError("max_step must be > 0")
        object.__setattr__(self, "sample_times", ts)


@dataclass(frozen=True)
class Trajectory:
    """Sampled density matrices with named derived observables."""

    times: np.ndarray
    states: tuple
    observables: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise InvalidArgumentError("times and states length mismatch")

    def with_observables(self, observables: dict) -> "Trajectory":
        merged = dict(self.observables)
        merged.update(observables)
        return replace(self, observables=merged)


def _rhs_factory(model: LindbladModel) -> Callable[[float, np.ndarray], np.ndarray]:
    h_of_t = model.hamiltonian_of_t()
    jumps = []
    for c, rate in model.collapse_terms:
        if rate > 0.0:
            jumps.append(math.sqrt(rate) * c)
    if jumps:
        half_anti = 0.5 * sum(c.conj().T @ c for c in jumps)
        jump_dags = [c.conj().T for c in jumps]

        def rhs(t: float, rho: np.ndarray) -> np.ndarray:
            h = h_of_t(t)
            out = -1j * (h @ rho - rho @ h)
            out -= half_anti @ rho + rho @ half_anti
            for c, cd in zip(jumps, jump_dags):
                out += c @ rho @ cd
            return out

    else:

        def rhs(t: float, rho: np.ndarray) -> np.ndarray:
            h = h_of_t(t)
            return -1j * (h @ rho - rho @ h)

    return rhs


def lindblad_rhs(model: LindbladModel, t: float, rho) -> np.ndarray:
    """d rho/dt of the Lindblad generator at time t.

    Trace-free to numerical precision and maps Hermitian input to Hermitian
    output for any Hermitian matrix, not only physical states.
    """
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if mat.shape != (model.space.total_dim,) * 2:
        raise InvalidDimensionError("state dimension does not match model space")
    return _rhs_factory(model)(t, mat)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(rhs, t0, y0, rtol, atol, max_step, span):
    f0 = rhs(t0, y0)
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 * span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, span), f0


def _integrate_dp45(rhs, y0, config: IntegratorConfig, on_accept, on_sample):
    """Shared embedded RK 5(4) driver over the configured sample grid.

    ``on_accept(t, y)`` may repair invariants of the accepted state (and
    raises on divergence); ``on_sample(t, y)`` converts a sampled state into
    its stored form.  Steps are clamped so sample times are hit exactly.
    """
    ts = np.asarray(config.sample_times, dtype=float)
    t0, t_end = float(ts[0]), float(ts[-1])
    span = t_end - t0
    y = np.array(y0, dtype=complex)
    t = t0
    stored = [on_sample(t, y)]
    h, f0 = _initial_step(rhs, t0, y, config.rel_tol, config.abs_tol, config.max_step, span)
    next_sample = 1
    k = [None] * 7
    k[0] = f0
    hmin_scale = 16.0 * np.finfo(float).eps

    while t < t_end:
        h = min(h, config.max_step, t_end - t)
        target = ts[next_sample]
        if t + h >= target - 1e-14 * max(abs(target), span):
            h = target - t
        if h < hmin_scale * max(abs(t), span):
            raise StiffnessError(t)

        for i in range(1, 6):
            yi = y + h * sum(_A[i][j] * k[j] for j in range(i))
            k[i] = rhs(t + _C[i] * h, yi)
        y5 = y + h * sum(_B5[j] * k[j] for j in range(6))
        k[6] = rhs(t + h, y5)
        err_mat = h * sum(_E[j] * k[j] for j in range(7))
        err = _error_norm(err_mat, y, y5, config.rel_tol, config.abs_tol)

        if err <= 1.0:
            t = t + h
            y = on_accept(t, y5)
            k[0] = k[6]  # first-same-as-last
            if abs(t - ts[next_sample]) <= 1e-12 * max(abs(t), span):
                stored.append(on_sample(t, y))
                next_sample += 1
                if next_sample >= len(ts):
                    break
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            h = h * max(_MIN_FACTOR, factor)
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    return ts, stored


def evolve(model: LindbladModel, rho0: DensityMatrix, config: IntegratorConfig) -> Trajectory:
    """Integrate the master equation and sample at the configured times.

    Adaptive Dormand-Prince 5(4).  Steps never overshoot a sample time,
    accepted states are symmetrized, and sampled states are renormalized by
    their trace (drift beyond 1e-6 at a sample, or 1e-4 anywhere, aborts
    with an error carrying the time).
    """
    if rho0.space != model.space:
        raise InvalidDimensionError("initial state lives on a different space")
    rhs = _rhs_factory(model)

    def on_accept(t, y):
        y = 0.5 * (y + y.conj().T)
        drift = abs(np.trace(y).real - 1.0)
        if drift > TRACE_DIVERGENCE_TOL:
            raise IntegrationDivergedError(t, drift)
        return y

    def on_sample(t, y):
        drift = abs(np.trace(y).real - 1.0)
        if drift > TRACE_SAMPLE_TOL:
            raise IntegrationDivergedError(t, drift)
        return _snapshot(model.space, y, t)

    ts, states = _integrate_dp45(rhs, rho0.matrix, config, on_accept, on_sample)
    return Trajectory(times=ts.copy(), states=tuple(states))


def evolve_pure(
    hamiltonian: Callable[[float], np.ndarray] | np.ndarray,
    psi0,
    space: HilbertSpace,
    config: IntegratorConfig,
) -> Trajectory:
    """Schroedinger evolution of a pure state under H(t), no dissipation.

    Equivalent to :func:`evolve` with an empty collapse set and a pure
    initial state, at vector instead of matrix cost; sampled states are
    returned as density matrices so downstream analytics are uniform.
    """
    from .hilbert import StateVector

    amps = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    if amps.shape != (space.total_dim,):
        raise InvalidDimensionError("initial amplitudes do not match the space")
    h_of_t = hamiltonian if callable(hamiltonian) else (lambda t: hamiltonian)

    def rhs(t, psi):
        return -1j * (h_of_t(t) @ psi)

    def on_accept(t, y):
        nrm = np.linalg.norm(y)
        if abs(nrm - 1.0) > math.sqrt(TRACE_DIVERGENCE_TOL):
            raise IntegrationDivergedError(t, abs(nrm * nrm - 1.0))
        return y / nrm

    def on_sample(t, y):
        v = y / np.linalg.norm(y)
        return DensityMatrix(space, np.outer(v, v.conj()), validate=False)

    ts, states = _integrate_dp45(rhs, amps, config, on_accept, on_sample)
    return Trajectory(times=ts.copy(), states=tuple(states))


def _snapshot(space: HilbertSpace, y: np.ndarray, t: float) -> DensityMatrix:
    m = 0.5 * (y + y.conj().T)
    tr = np.trace(m).real
    return DensityMatrix(space, m / tr, validate=False)


def liouvillian_matrix(model: LindbladModel, t: float = 0.0) -> np.ndarray:
    """Dense superoperator of the generator frozen at time t.

    Row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho).
    """
    d = model.space.total_dim
    eye = np.eye(d)
    h = model.hamiltonian_of_t()(t)
    liou = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c, rate in model.collapse_terms:
        if rate == 0.0:
            continue
        cd_c = c.conj().T @ c
        liou += rate * (
            np.kron(c, c.conj())
            - 0.5 * (np.kron(cd_c, eye) + np.kron(eye, cd_c.T))
        )
    return liou


def propagator_oracle(
    model: LindbladModel, rho0: DensityMatrix, dt: float, t: float = 0.0
) -> DensityMatrix:
    """Propagate under the generator frozen at t via the matrix exponential.

    Vectorizes rho, applies expm(L dt) (scaling-and-squaring with Pade
    approximation), and reshapes back.  Exact for time-independent
    generators; intended as a validation oracle, hence the hard cap on
    total_dim^2.
    """
    d = model.space.total_dim
    if d * d > ORACLE_DIM_CAP:
        raise OracleTooLargeError(
            f"total_dim^2 = {d * d} exceeds the oracle cap {ORACLE_DIM_CAP}"
        )
    if rho0.space != model.space:
        raise InvalidDimensionError("initial state lives on a different space")
    if dt == 0.0:
        return DensityMatrix(model.space, rho0.matrix.copy(), validate=False)
    liou = liouvillian_matrix(model, t)
    vec = rho0.matrix.reshape(-1)
    out = (scipy.linalg.expm(liou * dt) @ vec).reshape(d, d)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(model.space, out, validate=False)


def thermal_collapse_terms(space: HilbertSpace, params) -> list:
    """Standard collapse set: cavity decay plus two thermal mechanical baths."""
    from .hilbert import destroy
    from .model import bose_occupancy

    a = destroy(space, 0).matrix
    terms = [(a, params.kappa)]
    for mode, (omega, gamma) in enumerate(
        ((params.omega1, params.gamma1), (params.omega2, params.gamma2)), start=1
    ):
        nbar = bose_occupancy(omega, params.temperature)
        b = destroy(space, mode).matrix
        terms.append((b, gamma * (nbar + 1.0)))
        terms.append((b.conj().T, gamma * nbar))
    return terms
