"""Dense complex linear algebra and quantum-object primitives.

Everything downstream (measurement bases, instruments, guessing strategies,
moment matrices) is built on the validated objects defined here: state
vectors, density operators and POVMs, plus the handful of matrix operations
(positive square root, partial trace, purification) that the rest of the
library leans on.  All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "ValidationError",
    "NotHermitianError",
    "NegativeEigenvalueError",
    "DimensionMismatchError",
    "NotPsdError",
    "NotCompleteError",
    "StateVector",
    "DensityOperator",
    "Povm",
    "is_hermitian",
    "psd_sqrt",
    "partial_trace",
    "purify",
    "validate_povm",
]


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances used by all validity checks.

    Defaults sit at the double-precision eigendecomposition noise floor.
    """

    norm: float = 1e-9   # trace / normalization checks
    herm: float = 1e-9   # Hermiticity and idempotence checks
    psd: float = 1e-9    # how negative an eigenvalue may be before rejection
    num: float = 1e-8    # general numeric agreement (round trips etc.)


DEFAULT_TOL = Tolerances()


class ValidationError(ValueError):
    """Base class for all quantum-object validity failures."""


class NotHermitianError(ValidationError):
    pass


class NegativeEigenvalueError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class NotPsdError(ValidationError):
    pass


class NotCompleteError(ValidationError):
    """POVM elements do not sum to the identity."""


def _as_complex_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError("matrix contains non-finite entries")
    return m


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.herm) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


@dataclass(frozen=True)
class StateVector:
    """A normalized pure state on a Hilbert space of dimension ``dim``."""

    amplitudes: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0 or not np.all(np.isfinite(amps.real) & np.isfinite(amps.imag)):
            raise ValidationError("state vector must be nonempty and finite")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 10 * self.tol.norm:
            raise ValidationError(f"state vector norm {nrm} is not 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityOperator":
        return DensityOperator(self.projector(), tol=self.tol)


@dataclass(frozen=True)
class DensityOperator:
    """A trace-one positive semidefinite operator."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        if not is_hermitian(m, self.tol.herm):
            raise NotHermitianError("density operator is not Hermitian")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -self.tol.psd:
            raise NotPsdError(f"density operator has eigenvalue {eigs.min()}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 10 * self.tol.norm:
            raise ValidationError(f"density operator trace {tr} is not 1")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigensystem(self):
        """Eigenvalues (ascending) and eigenvectors as columns."""
        return np.linalg.eigh(self.matrix)


@dataclass(frozen=True)
class Povm:
    """A validated measurement: PSD elements summing to the identity.

    ``is_projective`` is set only when every element is idempotent, i.e. the
    measurement is a PVM.  Construct through :func:`validate_povm`.
    """

    elements: tuple
    is_projective: bool
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    @property
    def outcomes(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def probabilities(self, rho: DensityOperator | StateVector) -> np.ndarray:
        if isinstance(rho, StateVector):
            psi = rho.amplitudes
            p = np.array([np.vdot(psi, e @ psi).real for e in self.elements])
        else:
            p = np.array([np.trace(e @ rho.matrix).real for e in self.elements])
        return p


def psd_sqrt(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a PSD matrix.

    Eigenvalues within ``tol.psd`` of zero are clipped to zero before the
    root: the square root would amplify eigensolver noise at the zero
    eigenvalues (sqrt(1e-17) ~ 3e-9) far above the working precision.

    Raises
    ------
    NotHermitianError
        If ``m`` is not Hermitian within ``tol.herm``.
    NegativeEigenvalueError
        If an eigenvalue lies below ``-tol.psd``.
    """
    m = _as_complex_matrix(m)
    if not is_hermitian(m, tol.herm):
        raise NotHermitianError("psd_sqrt requires a Hermitian matrix")
    eigs, vecs = np.linalg.eigh(m)
    if eigs.min() < -tol.psd:
        raise NegativeEigenvalueError(f"eigenvalue {eigs.min()} below -{tol.psd}")
    eigs = np.where(np.abs(eigs) < tol.psd, 0.0, eigs)
    return (vecs * np.sqrt(eigs)) @ vecs.conj().T


def partial_trace(m, dims, keep) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    Parameters
    ----------
    m : array
        Operator on the tensor product of factors with dimensions ``dims``.
    dims : sequence of int
        Dimension of each tensor factor, in order.
    keep : int or sequence of int
        Indices of the factors to retain.

    Returns
    -------
    The reduced operator, of dimension ``prod(dims[k] for k in keep)``.
    """
    m = _as_complex_matrix(m)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatchError(
            f"product of dims {dims} does not match matrix dimension {m.shape[0]}"
        )
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(int(k) for k in keep)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatchError(f"keep indices {keep} out of range")
    n = len(dims)
    tensor = m.reshape(dims + dims)
    # contract each traced factor's row index with its column index
    traced = [i for i in range(n) if i not in keep]
    for count, i in enumerate(traced):
        axis1 = i - sum(1 for j in traced[:count] if j < i)
        axis2 = axis1 + (n - count)
        tensor = np.trace(tensor, axis1=axis1, axis2=axis2)
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def purify(rho: DensityOperator) -> StateVector:
    """Purification of ``rho`` with ancilla dimension equal to its rank.

    Tracing the ancilla out of the returned projector recovers ``rho``.
    """
    eigs, vecs = rho.eigensystem()
    keep = eigs > rho.tol.psd
    eigs, vecs = eigs[keep], vecs[:, keep]
    rank = int(eigs.size)
    amps = np.zeros(rho.dim * rank, dtype=complex)
    # |out> = sum_i sqrt(p_i) |v_i> (x) |i>
    for i in range(rank):
        amps += np.sqrt(eigs[i]) * np.kron(vecs[:, i], _basis_vec(rank, i))
    amps /= np.linalg.norm(amps)
    return StateVector(amps, tol=rho.tol)


def _basis_vec(dim: int, i: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def validate_povm(elems, tol: Tolerances = DEFAULT_TOL) -> Povm:
    """Validate a sequence of matrices as a POVM and tag the PVM case.

    Raises
    ------
    NotPsdError
        If an element has an eigenvalue below ``-tol.psd``.
    NotCompleteError
        If the elements do not sum to the identity within ``tol.norm``.
    DimensionMismatchError
        If the elements are empty, non-square, or of mixed dimension.
    """
    if len(elems) == 0:
        raise DimensionMismatchError("a POVM needs at least one element")
    mats = [_as_complex_matrix(e) for e in elems]
    dim = mats[0].shape[0]
    if any(m.shape[0] != dim for m in mats):
        raise DimensionMismatchError("POVM elements have mixed dimensions")
    for m in mats:
        if not is_hermitian(m, tol.herm):
            raise NotHermitianError("POVM element is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -tol.psd:
            raise NotPsdError("POVM element is not positive semidefinite")
    total = sum(mats)
    if np.max(np.abs(total - np.eye(dim))) > 100 * tol.norm:
        raise NotCompleteError("POVM elements do not sum to the identity")
    projective = all(np.max(np.abs(m @ m - m)) <= 100 * tol.herm for m in mats)
    mats = tuple(m.copy() for m in mats)
    for m in mats:
        m.setflags(write=False)
    return Povm(elements=mats, is_projective=projective, tol=tol)
