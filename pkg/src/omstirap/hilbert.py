"""Truncated bosonic Fock spaces and dense operator algebra.

The composite space is an ordered tensor product of truncated single-mode
Fock spaces, cavity first, in row-major basis ordering: the flat basis index
of ``|n_c, n_1, n_2>`` is ``(n_c * d1 + n_1) * d2 + n_2``.  Everything is
dense complex128; at the dimensions used here (total dimension of order 100)
dense BLAS products outperform any sparse bookkeeping.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidDimensionError,
    InvalidStateError,
    OutOfRangeError,
    TruncationError,
    TruncationWarning,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-8
NORM_TOL = 1e-10

#: tail-mass thresholds for truncated coherent/thermal constructions
TAIL_WARN = 1e-4
TAIL_ERROR = 1e-2


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered mode dimensions of a truncated tensor-product Fock space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise InvalidDimensionError("need at least one mode")
        if any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index(self, occupations: Sequence[int]) -> int:
        """Flat basis index of a multi-index, row-major."""
        if len(occupations) != self.n_modes:
            raise InvalidDimensionError(
                f"expected {self.n_modes} occupation numbers, got {len(occupations)}"
            )
        idx = 0
        for n, d in zip(occupations, self.dims):
            if not 0 <= n < d:
                raise OutOfRangeError(f"occupation {n} outside [0, {d})")
            idx = idx * d + n
        return idx

    def multi_index(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.total_dim:
            raise OutOfRangeError(f"index {index} outside [0, {self.total_dim})")
        out = []
        for d in reversed(self.dims):
            out.append(index % d)
            index //= d
        return tuple(reversed(out))


def _as_square_complex(matrix, dim: int, what: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (dim, dim):
        raise InvalidDimensionError(f"{what} must be {dim}x{dim}, got {m.shape}")
    return m


class Operator:
    """A dense complex matrix acting on a :class:`HilbertSpace`."""

    __slots__ = ("space", "matrix")

    def __init__(self, space: HilbertSpace, matrix):
        self.space = space
        self.matrix = _as_square_complex(matrix, space.total_dim, "operator matrix")
        self.matrix.flags.writeable = False

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.space != self.space:
            raise InvalidDimensionError("operators act on different spaces")
        return Operator(self.space, self.matrix @ other.matrix)


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on a space.

    ``validate=False`` skips the invariant checks; it is used internally by
    the integrator, which enforces hermiticity and trace itself.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, space: HilbertSpace, matrix, *, validate: bool = True):
        self.space = space
        self.matrix = _as_square_complex(matrix, space.total_dim, "density matrix")
        if validate:
            self._check()
        self.matrix.flags.writeable = False

    def _check(self):
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITICITY_TOL:
            raise InvalidStateError(f"not Hermitian: max |rho - rho^+| = {herm:.3e}")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr:.10f} differs from 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < EIGENVALUE_FLOOR:
            raise InvalidStateError(f"negative eigenvalue {evals.min():.3e}")

    def validate(self) -> None:
        """Re-run the full invariant checks (hermiticity, trace, positivity)."""
        self._check()


class StateVector:
    """A normalized pure state on a :class:`HilbertSpace`."""

    __slots__ = ("space", "amplitudes")

    def __init__(self, space: HilbertSpace, amplitudes, *, validate: bool = True):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (space.total_dim,):
            raise InvalidDimensionError(
                f"amplitude vector must have length {space.total_dim}, got {amps.shape}"
            )
        if validate:
            norm = np.linalg.norm(amps)
            if abs(norm - 1.0) > NORM_TOL:
                raise InvalidStateError(f"norm {norm:.12f} differs from 1")
        self.space = space
        self.amplitudes = amps
        self.amplitudes.flags.writeable = False

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()),
                             validate=False)


def ladder(dim: int, kind: str = "lower") -> np.ndarray:
    """Truncated single-mode ladder operator.

    ``lower`` has entries sqrt(k) at (k-1, k); ``raise`` is its conjugate
    transpose.  Truncation makes ``[a, a^+]`` deviate from identity only at
    the top Fock level.
    """
    if dim < 2:
        raise InvalidDimensionError(f"ladder needs dim >= 2, got {dim}")
    if kind not in ("lower", "raise"):
        raise InvalidArgumentError(f"kind must be 'lower' or 'raise', got {kind!r}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return a if kind == "lower" else a.conj().T


def embed(space: HilbertSpace, mode_index: int, local) -> Operator:
    """Lift a single-mode operator to the composite space: I x ... x A x ... x I."""
    if not 0 <= mode_index < space.n_modes:
        raise InvalidDimensionError(f"mode index {mode_index} out of range")
    loc = np.asarray(local, dtype=complex)
    d = space.dims[mode_index]
    if loc.shape != (d, d):
        raise InvalidDimensionError(
            f"local operator is {loc.shape}, mode {mode_index} has dim {d}"
        )
    left = math.prod(space.dims[:mode_index]) if mode_index > 0 else 1
    right = math.prod(space.dims[mode_index + 1:]) if mode_index + 1 < space.n_modes else 1
    out = np.kron(np.kron(np.eye(left), loc), np.eye(right))
    return Operator(space, out)


def destroy(space: HilbertSpace, mode_index: int) -> Operator:
    """Annihilation operator of one mode on the composite space."""
    return embed(space, mode_index, ladder(space.dims[mode_index], "lower"))


def create(space: HilbertSpace, mode_index: int) -> Operator:
    """Creation operator of one mode on the composite space."""
    return embed(space, mode_index, ladder(space.dims[mode_index], "raise"))


def number_operator(space: HilbertSpace, mode_index: int) -> Operator:
    """Number operator n = a^+ a of one mode on the composite space."""
    a = ladder(space.dims[mode_index], "lower")
    return embed(space, mode_index, a.conj().T @ a)


def fock_state(space: HilbertSpace, *occupations: int) -> StateVector:
    """Basis state |n_0, n_1, ...> of the composite space."""
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[space.index(occupations)] = 1.0
    return StateVector(space, amps, validate=False)


def _tail_policy(tail: float, what: str):
    if tail > TAIL_ERROR:
        raise TruncationError(f"{what}: truncated tail mass {tail:.3e} > {TAIL_ERROR}")
    if tail > TAIL_WARN:
        warnings.warn(
            f"{what}: truncated tail mass {tail:.3e}; state renormalized",
            TruncationWarning,
            stacklevel=3,
        )


def coherent_tail_mass(dim: int, alpha: complex) -> float:
    """Probability mass of a coherent state beyond the truncation level."""
    n = np.arange(dim)
    log_p = -abs(alpha) ** 2 + n * np.log(abs(alpha) ** 2 + 1e-300) - [
        math.lgamma(k + 1) for k in n
    ]
    return max(0.0, 1.0 - float(np.exp(log_p).sum()))


def coherent_state(dim: int, alpha: complex) -> StateVector:
    """Truncated coherent state, renormalized over the kept levels.

    Amplitudes follow c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!).  Tail mass
    above 1e-4 raises :class:`TruncationWarning`; above 1e-2 it is an error.
    """
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    n = np.arange(dim)
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return StateVector(HilbertSpace((dim,)), amps, validate=False)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amps = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(complex(alpha)) - log_fact / 2)
    tail = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    _tail_policy(tail, f"coherent_state(dim={dim}, alpha={alpha})")
    amps = amps / np.linalg.norm(amps)
    return StateVector(HilbertSpace((dim,)), amps, validate=False)


def thermal_tail_mass(dim: int, nbar: float) -> float:
    """Probability mass of a thermal state beyond the truncation level."""
    if nbar <= 0:
        return 0.0
    q = nbar / (1.0 + nbar)
    return q ** dim


def thermal_state(dim: int, nbar: float) -> DensityMatrix:
    """Truncated thermal state with geometric diagonal, renormalized."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if nbar < 0:
        raise InvalidArgumentError(f"nbar must be >= 0, got {nbar}")
    space = HilbertSpace((dim,))
    if nbar == 0:
        diag = np.zeros(dim)
        diag[0] = 1.0
    else:
        q = nbar / (1.0 + nbar)
        diag = (1.0 - q) * q ** np.arange(dim)
        _tail_policy(thermal_tail_mass(dim, nbar), f"thermal_state(dim={dim}, nbar={nbar})")
        diag = diag / diag.sum()
    return DensityMatrix(space, np.diag(diag.astype(complex)), validate=False)


def expectation(op: Operator, state) -> complex:
    """Tr(op rho) for a density matrix, or <psi|op|psi> for a state vector."""
    if isinstance(state, DensityMatrix):
        if state.space != op.space:
            raise InvalidDimensionError("operator and state live on different spaces")
        # trace of a product without forming it
        return complex(np.sum(op.matrix * state.matrix.T))
    if isinstance(state, StateVector):
        if state.space != op.space:
            raise InvalidDimensionError("operator and state live on different spaces")
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    raise InvalidArgumentError(f"unsupported state type {type(state)!r}")


def product_density(space: HilbertSpace, factors: Iterable) -> DensityMatrix:
    """Tensor product of single-mode states (DensityMatrix/StateVector/ndarray)."""
    mats = []
    for f in factors:
        if isinstance(f, DensityMatrix):
            mats.append(f.matrix)
        elif isinstance(f, StateVector):
            mats.append(np.outer(f.amplitudes, f.amplitudes.conj()))
        else:
            mats.append(np.asarray(f, dtype=complex))
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    if out.shape != (space.total_dim, space.total_dim):
        raise InvalidDimensionError(
            f"product has dim {out.shape[0]}, space expects {space.total_dim}"
        )
    return DensityMatrix(space, out, validate=False)
