"""CGLMP inequality machinery for two parties with d-outcome measurements.

Provides the canonical qutrit states (maximally entangled and maximum
violation), the optimal Fourier-phase measurement bases, Born-rule joint
distributions, and two independent evaluators of the inequality: the generic
d-outcome form and the expanded qutrit form, cross-checked against each other
in the test suite.  The local-hidden-variable bound of the functional used
here is 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qcore import DEFAULT_TOL, Povm, StateVector, Tolerances, validate_povm

__all__ = [
    "CglmpSettings",
    "JointDistribution",
    "BadSettingError",
    "UnsupportedDimensionError",
    "ShapeMismatchError",
    "GAMMA_MVS",
    "measurement_basis",
    "canonical_state",
    "born_joint",
    "cglmp_value",
    "cglmp_value_qutrit",
]


class BadSettingError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


#: Weight of the middle amplitude of the qutrit maximum violation state.
GAMMA_MVS = (np.sqrt(11.0) - np.sqrt(3.0)) / 2.0


@dataclass(frozen=True)
class CglmpSettings:
    """Outcome dimension and per-setting phase offsets of the optimal bases."""

    d: int = 3
    alpha: tuple = (0.0, 0.5)
    beta: tuple = (0.25, -0.25)

    def __post_init__(self):
        if self.d < 2:
            raise UnsupportedDimensionError("outcome dimension must be >= 2")


@dataclass(frozen=True)
class JointDistribution:
    """Conditional probability table p(outcomes | settings).

    ``table`` has one leading axis per party for the settings followed by one
    trailing axis per party for the outcomes; every settings-slice must be a
    normalized distribution.
    """

    table: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim % 2 != 0:
            raise ShapeMismatchError("table needs one settings and one outcomes axis per party")
        parties = t.ndim // 2
        if np.min(t) < -100 * self.tol.num or np.max(t) > 1 + 100 * self.tol.num:
            raise ShapeMismatchError("probabilities must lie in [0, 1]")
        sums = t.reshape(t.shape[:parties] + (-1,)).sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > 1000 * self.tol.norm:
            raise ShapeMismatchError("each conditional slice must sum to 1")
        object.__setattr__(self, "table", t)

    @property
    def parties(self) -> int:
        return self.table.ndim // 2

    @property
    def settings(self) -> tuple:
        return self.table.shape[: self.parties]

    @property
    def outcomes(self) -> tuple:
        return self.table.shape[self.parties:]


def measurement_basis(party: str, setting: int, cfg: CglmpSettings = CglmpSettings()) -> Povm:
    """Rank-1 projective measurement in the optimal CGLMP basis.

    Alice's outcome-k vector has amplitudes ``exp(2*pi*i/d * j*(k + alpha_x))``
    over the computational basis; Bob's uses ``j*(-l + beta_y)``.  The d
    returned projectors are orthonormal.
    """
    if setting not in (0, 1):
        raise BadSettingError(f"setting must be 0 or 1, got {setting}")
    d = cfg.d
    j = np.arange(d)
    if party == "alice":
        phase = cfg.alpha[setting]
        sign = +1.0
    elif party == "bob":
        phase = cfg.beta[setting]
        sign = -1.0
    else:
        raise BadSettingError(f"party must be 'alice' or 'bob', got {party!r}")
    elems = []
    for k in range(d):
        vec = np.exp(2j * np.pi / d * j * (sign * k + phase)) / np.sqrt(d)
        elems.append(np.outer(vec, vec.conj()))
    return validate_povm(elems, tol=cfg_tol(cfg))


def cfg_tol(cfg: CglmpSettings) -> Tolerances:
    return DEFAULT_TOL


def canonical_state(kind: str, d: int = 3) -> StateVector:
    """Canonical bipartite qutrit state: ``"mes"`` or ``"mvs"``.

    The maximally entangled state has equal amplitudes on |00>, |11>, |22>;
    the maximum violation state replaces the middle amplitude by
    ``GAMMA_MVS`` and renormalizes.
    """
    if d != 3:
        raise UnsupportedDimensionError("canonical states are defined for d = 3 only")
    if kind == "mes":
        coeffs = np.ones(3) / np.sqrt(3.0)
    elif kind == "mvs":
        coeffs = np.array([1.0, GAMMA_MVS, 1.0]) / np.sqrt(2.0 + GAMMA_MVS**2)
    else:
        raise ValueError(f"kind must be 'mes' or 'mvs', got {kind!r}")
    amps = np.zeros(9, dtype=complex)
    for i in range(3):
        amps[i * 3 + i] = coeffs[i]
    return StateVector(amps)


def born_joint(state: StateVector, pvm_a: Povm, pvm_b: Povm) -> np.ndarray:
    """Born-rule outcome table p(a, b) for a product measurement A (x) B."""
    da, db = pvm_a.dim, pvm_b.dim
    if state.dim != da * db:
        raise ShapeMismatchError(
            f"state dim {state.dim} does not factor as {da} x {db}"
        )
    psi = state.amplitudes.reshape(da, db)
    p = np.empty((pvm_a.outcomes, pvm_b.outcomes))
    for a, ea in enumerate(pvm_a.elements):
        left = ea @ psi  # acts on Alice's index
        for b, eb in enumerate(pvm_b.elements):
            val = np.vdot(psi, left @ eb.T)
            p[a, b] = val.real
    p = np.clip(p, 0.0, None)
    return p


def joint_distribution(state: StateVector, cfg: CglmpSettings = CglmpSettings()) -> JointDistribution:
    """Full two-setting-per-party table for the optimal CGLMP bases."""
    d = cfg.d
    table = np.empty((2, 2, d, d))
    bases_a = [measurement_basis("alice", x, cfg) for x in (0, 1)]
    bases_b = [measurement_basis("bob", y, cfg) for y in (0, 1)]
    for x in (0, 1):
        for y in (0, 1):
            table[x, y] = born_joint(state, bases_a[x], bases_b[y])
    return JointDistribution(table)


def _prob_equal_shift(table_xy: np.ndarray, k: int, d: int, left_alice: bool) -> float:
    """P(left = right + k): the left party's outcome exceeds the right
    party's by k modulo d.  This algebraic reading is the one that makes the
    canonical states and bases reach the known quantum maxima."""
    j = np.arange(d)
    shifted = (j + k) % d
    if left_alice:
        return float(table_xy[shifted, j].sum())
    return float(table_xy[j, shifted].sum())


def cglmp_value(dist: JointDistribution, d: int | None = None) -> float:
    """Generic d-outcome CGLMP functional of a two-party distribution.

    The functional sums, for k from 0 to floor(d/2) - 1 with weight
    1 - 2k/(d-1), the difference f(k) - f(-k-1), where f(k) adds the
    shifted coincidence probabilities of the four setting pairs.
    Local-deterministic strategies reach at most 2.
    """
    if dist.parties != 2:
        raise ShapeMismatchError("cglmp_value needs a two-party distribution")
    if dist.settings != (2, 2):
        raise ShapeMismatchError("cglmp_value needs two settings per party")
    if d is None:
        d = dist.outcomes[0]
    if dist.outcomes != (d, d):
        raise ShapeMismatchError(f"expected {d} outcomes per party, got {dist.outcomes}")
    t = dist.table

    def f(k: int) -> float:
        # settings are 0-based: A1 -> x=0, A2 -> x=1, B1 -> y=0, B2 -> y=1
        return (
            _prob_equal_shift(t[0, 0], k, d, left_alice=True)        # P(A1 = B1 + k)
            + _prob_equal_shift(t[1, 0], k + 1, d, left_alice=False)  # P(B1 = A2 + k + 1)
            + _prob_equal_shift(t[1, 1], k, d, left_alice=True)       # P(A2 = B2 + k)
            + _prob_equal_shift(t[0, 1], k, d, left_alice=False)      # P(B2 = A1 + k)
        )

    total = 0.0
    for k in range(d // 2):
        total += (1.0 - 2.0 * k / (d - 1.0)) * (f(k) - f(-k - 1))
    return total


def cglmp_value_qutrit(dist: JointDistribution) -> float:
    """Expanded qutrit form of the functional, kept as an independent
    cross-check of :func:`cglmp_value` at d = 3."""
    if dist.parties != 2 or dist.settings != (2, 2) or dist.outcomes != (3, 3):
        raise ShapeMismatchError("qutrit evaluator needs a 2x2x3x3 table")
    t = dist.table
    d = 3
    return (
        _prob_equal_shift(t[0, 0], 0, d, True)     # P(A1 = B1)
        + _prob_equal_shift(t[1, 0], 1, d, False)  # P(B1 = A2 + 1)
        + _prob_equal_shift(t[1, 1], 0, d, True)   # P(A2 = B2)
        + _prob_equal_shift(t[0, 1], 0, d, False)  # P(B2 = A1)
        - _prob_equal_shift(t[0, 0], -1, d, True)  # P(A1 = B1 - 1)
        - _prob_equal_shift(t[1, 0], 0, d, False)  # P(B1 = A2)
        - _prob_equal_shift(t[1, 1], -1, d, True)  # P(A2 = B2 - 1)
        - _prob_equal_shift(t[0, 1], -1, d, False)  # P(B2 = A1 - 1)
    )
