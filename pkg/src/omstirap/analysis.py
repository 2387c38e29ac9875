"""State analytics: reductions, entanglement negativity, fidelity, Wigner.

Mode indices follow the global convention cavity = 0, mech1 = 1, mech2 = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, InvalidDimensionError, InvalidStateError
from .hilbert import DensityMatrix, HilbertSpace, StateVector, destroy
from .model import SystemParams, collective_operators

MODE_NAMES = {"cavity": 0, "mech1": 1, "mech2": 2}


@dataclass(frozen=True)
class BipartiteSplit:
    """Partition of the mode set into kept and traced modes."""

    kept_modes: tuple[int, ...]

    def __post_init__(self):
        if len(self.kept_modes) == 0:
            raise InvalidArgumentError("kept mode set must be non-empty")
        object.__setattr__(self, "kept_modes", tuple(sorted(set(self.kept_modes))))

    def traced_modes(self, n_modes: int) -> tuple[int, ...]:
        return tuple(i for i in range(n_modes) if i not in self.kept_modes)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state on the kept modes.

    ``keep`` is a :class:`BipartiteSplit`, a sequence of mode indices, or a
    sequence of mode names from ``cavity``/``mech1``/``mech2``.
    """
    if isinstance(keep, BipartiteSplit):
        kept = keep.kept_modes
    else:
        kept = tuple(
            MODE_NAMES[k] if isinstance(k, str) else int(k) for k in keep
        )
        kept = tuple(sorted(set(kept)))
    if len(kept) == 0:
        raise InvalidArgumentError("kept mode set must be non-empty")
    space = rho.space
    n = space.n_modes
    if any(k < 0 or k >= n for k in kept):
        raise InvalidArgumentError(f"kept modes {kept} outside 0..{n - 1}")
    dims = space.dims
    tensor = rho.matrix.reshape(dims + dims)
    # contract each traced mode pair (axis i, axis i + n), highest first
    traced = [i for i in range(n) if i not in kept]
    cur_n = n
    for i in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=i, axis2=i + cur_n)
        cur_n -= 1
    new_space = HilbertSpace(tuple(dims[k] for k in kept))
    d = new_space.total_dim
    return DensityMatrix(new_space, tensor.reshape(d, d), validate=False)


def partial_transpose(rho12: DensityMatrix, mode: int = 1) -> np.ndarray:
    """Partial transpose of a two-mode state over one of its modes."""
    if rho12.space.n_modes != 2:
        raise InvalidDimensionError("partial transpose expects a two-mode state")
    if mode not in (0, 1):
        raise InvalidArgumentError("mode must be 0 or 1")
    da, db = rho12.space.dims
    t = rho12.matrix.reshape(da, db, da, db)
    t = t.transpose(2, 1, 0, 3) if mode == 0 else t.transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db)


def negativity(rho12: DensityMatrix) -> float:
    """Entanglement negativity (||rho^T2||_1 - 1) / 2 of a two-mode state.

    The partial transpose of a Hermitian matrix is Hermitian, so the trace
    norm is the sum of absolute eigenvalues; the result equals the absolute
    sum of the negative eigenvalues and is clamped at zero.
    """
    herm = np.max(np.abs(rho12.matrix - rho12.matrix.conj().T))
    if herm > 1e-8:
        raise InvalidStateError(f"negativity needs a Hermitian state, deviation {herm:.2e}")
    evals = np.linalg.eigvalsh(partial_transpose(rho12))
    neg = -float(evals[evals < 0].sum())
    return max(0.0, neg)


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityMatrix, target) -> float:
    """Squared Uhlmann fidelity F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    For a pure target this reduces to <psi|rho|psi>.  Symmetric in its
    arguments and clipped into [0, 1].
    """
    if isinstance(target, StateVector):
        if target.space != rho.space:
            raise InvalidDimensionError("state and target live on different spaces")
        val = float(np.real(np.vdot(target.amplitudes, rho.matrix @ target.amplitudes)))
        return min(1.0, max(0.0, val))
    if not isinstance(target, DensityMatrix):
        raise InvalidArgumentError(f"unsupported target type {type(target)!r}")
    if target.space != rho.space:
        raise InvalidDimensionError("state and target live on different spaces")
    sq = _sqrt_psd(rho.matrix)
    inner = sq @ target.matrix @ sq
    evals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    val = float(np.sum(np.sqrt(evals)) ** 2)
    return min(1.0, max(0.0, val))


def trace_fidelity(rho: DensityMatrix, target) -> float:
    """Non-squared Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)).

    This is the convention of common master-equation toolboxes; it equals
    sqrt of :func:`fidelity`.
    """
    return math.sqrt(fidelity(rho, target))


def wigner_single_mode(
    rho_mode: DensityMatrix, x_grid, p_grid
) -> np.ndarray:
    """Wigner function W(x, p) of a single-mode state on a rectangular grid.

    Conventions: a = (x + i p) / sqrt(2), normalized so that the integral
    over dx dp is 1 and the vacuum peaks at 1/pi.  Evaluated via the
    Fock-basis displaced-parity kernel using the stable Laguerre recursion.
    Returns shape (len(x_grid), len(p_grid)).
    """
    if rho_mode.space.n_modes != 1:
        raise InvalidDimensionError("wigner_single_mode expects a single-mode state")
    x = np.asarray(x_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise InvalidArgumentError("grid must be finite")
    rho = rho_mode.matrix
    m = rho.shape[0]
    a = (x[:, None] + 1j * p[None, :]) / math.sqrt(2.0)
    # wlist[n] holds the kernel for |k><n| at the current row k, built by the
    # two-term Laguerre recursion
    wlist = np.empty((m,) + a.shape, dtype=complex)
    wlist[0] = np.exp(-2.0 * np.abs(a) ** 2) / math.pi
    total = np.real(rho[0, 0]) * np.real(wlist[0])
    for n in range(1, m):
        wlist[n] = (2.0 * a * wlist[n - 1]) / math.sqrt(n)
        total = total + 2.0 * np.real(rho[0, n] * wlist[n])
    for k in range(1, m):
        temp = wlist[k].copy()
        wlist[k] = (2.0 * np.conj(a) * temp - math.sqrt(k) * wlist[k - 1]) / math.sqrt(k)
        total = total + np.real(rho[k, k] * wlist[k])
        for n in range(k + 1, m):
            temp2 = (2.0 * a * wlist[n - 1] - math.sqrt(k) * temp) / math.sqrt(n)
            temp = wlist[n].copy()
            wlist[n] = temp2
            total = total + 2.0 * np.real(rho[k, n] * wlist[n])
    return total


def collective_populations(
    rho: DensityMatrix,
    params: SystemParams,
    schedule=None,
    t: float = 0.0,
    convention: str = "static",
) -> tuple[float, float]:
    """Expectation values (<n_plus>, <n_minus>) of the collective modes."""
    bm, bp = collective_operators(rho.space, params, schedule, t, convention)
    n_plus = np.real(np.sum((bp.matrix.conj().T @ bp.matrix) * rho.matrix.T))
    n_minus = np.real(np.sum((bm.matrix.conj().T @ bm.matrix) * rho.matrix.T))
    return float(n_plus), float(n_minus)


def antisymmetric_mode_state(rho12: DensityMatrix, invert: bool = False) -> DensityMatrix:
    """Single-mode reduction onto the antisymmetric collective mode.

    Rotates the two-mode state by the 50/50 beam splitter that maps
    (b1 - b2)/sqrt(2) onto the first mode, then traces the partner mode.
    The antisymmetric mode is the one in which the two-mode single-phonon
    Bell state (|0,1> - |1,0>)/sqrt(2) looks like a one-phonon Fock state,
    so its Wigner function exposes that state's negativity at the origin.
    ``invert=True`` selects the symmetric partner instead.
    """
    if rho12.space.n_modes != 2:
        raise InvalidDimensionError("expects a two-mode state")
    space = rho12.space
    b1 = destroy(space, 0).matrix
    b2 = destroy(space, 1).matrix
    sign = -1.0 if invert else 1.0
    # R a R^+ with R = exp(xi (b2^+ b1 - b1^+ b2)) rotates b1 -> cos b1 - sin b2
    gen = (math.pi / 4.0) * sign * (b2.conj().T @ b1 - b1.conj().T @ b2)
    r = scipy.linalg.expm(gen)
    rotated = r @ rho12.matrix @ r.conj().T
    rot_dm = DensityMatrix(space, 0.5 * (rotated + rotated.conj().T), validate=False)
    return partial_trace(rot_dm, (0,))
