"""Sequential-measurement pipeline: unsharp POVMs, state-update rules, and
violation curves for one-Alice / n-Bob chains.

A chain is described by a shared bipartite state, Alice's projective
measurements, and one instrument per (Bob round, setting).  Two update rules
are supported for the same unsharp POVM: the square-root (Lüders) instrument
and the extremal-mixture instrument built from a convex decomposition into
projective branches.  Both produce identical single-round statistics; they
disturb the state differently, which is what the second-round curves probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cglmp import (
    CglmpSettings,
    JointDistribution,
    canonical_state,
    cglmp_value,
    measurement_basis,
)
from .qcore import (
    DEFAULT_TOL,
    DensityOperator,
    DimensionMismatchError,
    Povm,
    StateVector,
    Tolerances,
    psd_sqrt,
    validate_povm,
)

__all__ = [
    "EpsilonOutOfRangeError",
    "NotWeakPovmFormError",
    "MissingDecompositionError",
    "NoWindowError",
    "WeakPovmSpec",
    "PvmMixture",
    "Instrument",
    "SequentialScenario",
    "weak_povm",
    "extremal_decomposition",
    "instrument",
    "sequential_distribution",
    "alice_round_marginal",
    "closed_form_first_round",
    "closed_form_second_round",
    "violation_curves",
    "double_violation_window",
    "build_cglmp_scenario",
]


class EpsilonOutOfRangeError(ValueError):
    pass


class NotWeakPovmFormError(ValueError):
    pass


class MissingDecompositionError(ValueError):
    pass


class NoWindowError(ValueError):
    pass


@dataclass(frozen=True)
class WeakPovmSpec:
    """Sharpness parameter and orthonormal target basis of an unsharp
    measurement with elements ``eps |l><l| + (1-eps)/d * I``."""

    epsilon: float
    basis: np.ndarray  # columns are the basis vectors |l>
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise EpsilonOutOfRangeError(f"epsilon {self.epsilon} not in [0, 1]")
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionMismatchError("basis must be a square matrix of column vectors")
        if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))) > 100 * self.tol.num:
            raise NotWeakPovmFormError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def d(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class PvmMixture:
    """Convex mixture of projective measurements modelling classical side
    information about how a POVM is implemented."""

    branches: tuple  # of (weight, Povm with the projective flag)
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        if len(self.branches) == 0:
            raise NotWeakPovmFormError("mixture needs at least one branch")
        weights = np.array([w for w, _ in self.branches], dtype=float)
        if np.min(weights) < -self.tol.num:
            raise NotWeakPovmFormError("branch weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 100 * self.tol.norm:
            raise NotWeakPovmFormError("branch weights must sum to 1")
        outcomes = {p.outcomes for _, p in self.branches}
        dims = {p.dim for _, p in self.branches}
        if len(outcomes) != 1 or len(dims) != 1:
            raise DimensionMismatchError("branches must share outcome count and dimension")
        for _, p in self.branches:
            if not p.is_projective:
                raise NotWeakPovmFormError("every branch must be projective")
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def outcomes(self) -> int:
        return self.branches[0][1].outcomes

    @property
    def dim(self) -> int:
        return self.branches[0][1].dim

    def mixed_elements(self) -> list:
        """Element-wise convex combination over the branches."""
        out = [np.zeros((self.dim, self.dim), dtype=complex) for _ in range(self.outcomes)]
        for w, pvm in self.branches:
            for b, e in enumerate(pvm.elements):
                out[b] = out[b] + w * e
        return out

    def mixed_povm(self) -> Povm:
        return validate_povm(self.mixed_elements(), tol=self.tol)


@dataclass(frozen=True)
class Instrument:
    """State-update rule: one list of Kraus operators per outcome."""

    kraus: tuple  # tuple over outcomes of tuples of Kraus matrices
    mode: str     # "sqrt" or "mixture"
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        total = None
        for ops in self.kraus:
            for k in ops:
                t = k.conj().T @ k
                total = t if total is None else total + t
        dim = total.shape[0]
        if np.max(np.abs(total - np.eye(dim))) > 1000 * self.tol.num:
            raise NotWeakPovmFormError("Kraus operators do not satisfy completeness")

    @property
    def outcomes(self) -> int:
        return len(self.kraus)

    @property
    def dim(self) -> int:
        return self.kraus[0][0].shape[0]

    def povm_elements(self) -> list:
        """The measurement statistics implemented by this instrument."""
        return [sum(k.conj().T @ k for k in ops) for ops in self.kraus]

    def apply(self, rho: np.ndarray, outcome: int) -> np.ndarray:
        """Subnormalized post-measurement state for one outcome."""
        out = np.zeros_like(rho)
        for k in self.kraus[outcome]:
            out += k @ rho @ k.conj().T
        return out


def weak_povm(spec: WeakPovmSpec) -> Povm:
    """Unsharp measurement ``eps |l><l| + (1-eps)/d * I`` for each outcome l.

    At ``eps = 1`` this is the projective basis measurement; at ``eps = 0``
    every element collapses to I/d.
    """
    d = spec.d
    noise = (1.0 - spec.epsilon) / d * np.eye(d)
    elems = []
    for l in range(d):
        v = spec.basis[:, l]
        elems.append(spec.epsilon * np.outer(v, v.conj()) + noise)
    return validate_povm(elems, tol=spec.tol)


def _recover_weak_spec(povm: Povm, tol: Tolerances) -> WeakPovmSpec:
    """Recover (epsilon, basis) from a POVM of the unsharp form."""
    d = povm.dim
    if povm.outcomes != d:
        raise NotWeakPovmFormError("unsharp form needs d elements in dimension d")
    eigs0 = np.linalg.eigvalsh(povm.elements[0])
    eps = (d * eigs0[-1] - 1.0) / (d - 1.0)
    eps = min(max(eps, 0.0), 1.0)
    basis = np.zeros((d, d), dtype=complex)
    if eps < 1e-12:
        # every element is I/d: any orthonormal basis reproduces the POVM
        basis = np.eye(d, dtype=complex)
    else:
        for l, e in enumerate(povm.elements):
            evals, evecs = np.linalg.eigh(e)
            expected = np.full(d, (1.0 - eps) / d)
            expected[-1] = eps + (1.0 - eps) / d
            if np.max(np.abs(evals - expected)) > 1e4 * tol.num:
                raise NotWeakPovmFormError("element spectrum does not match the unsharp form")
            basis[:, l] = evecs[:, -1]
    return WeakPovmSpec(epsilon=eps, basis=basis, tol=tol)


def _cyclic_pvm(basis: np.ndarray, shift: int, tol: Tolerances) -> Povm:
    """Projective measurement assigning outcome l to basis column (l+shift) mod d."""
    d = basis.shape[0]
    elems = []
    for l in range(d):
        v = basis[:, (l + shift) % d]
        elems.append(np.outer(v, v.conj()))
    return validate_povm(elems, tol=tol)


def extremal_decomposition(povm, theta_basis=None, tol: Tolerances = DEFAULT_TOL) -> PvmMixture:
    """Decompose an unsharp POVM into projective branches.

    The sharp part keeps the measurement's own eigenbasis with weight
    ``eps``; the noise part is spread over the three cyclic outcome
    assignments of ``theta_basis`` (default: the eigenbasis again) with
    weight ``(1-eps)/d`` each.  Identical branches are merged and
    zero-weight branches dropped, so the projective limit returns a single
    branch and the default basis returns the three-branch form with weights
    ``(1+2eps)/d`` and ``(1-eps)/d`` twice.
    """
    if isinstance(povm, WeakPovmSpec):
        spec = povm
    else:
        spec = _recover_weak_spec(povm, tol)
    d = spec.d
    eps = spec.epsilon
    theta = spec.basis if theta_basis is None else np.asarray(theta_basis, dtype=complex)
    if np.max(np.abs(theta.conj().T @ theta - np.eye(d))) > 100 * tol.num:
        raise NotWeakPovmFormError("theta basis columns are not orthonormal")
    raw = [(eps, _cyclic_pvm(spec.basis, 0, tol))]
    for shift in range(d):
        raw.append(((1.0 - eps) / d, _cyclic_pvm(theta, shift, tol)))
    merged: list = []
    for w, pvm in raw:
        if w <= tol.num:
            continue
        for i, (w0, p0) in enumerate(merged):
            if all(
                np.max(np.abs(a - b)) <= 100 * tol.num
                for a, b in zip(p0.elements, pvm.elements)
            ):
                merged[i] = (w0 + w, p0)
                break
        else:
            merged.append((w, pvm))
    return PvmMixture(branches=tuple(merged), tol=tol)


def instrument(povm, mode: str = "sqrt", decomposition: PvmMixture | None = None,
               tol: Tolerances = DEFAULT_TOL) -> Instrument:
    """Build the state-update rule for a measurement.

    ``sqrt`` uses one Kraus operator per outcome, the positive square root
    of the element.  ``mixture`` uses ``sqrt(weight) * projector`` per
    (branch, outcome) pair of the supplied decomposition, i.e. the update an
    eavesdropper holding the branch label would apply.
    """
    if mode == "sqrt":
        if isinstance(povm, WeakPovmSpec):
            povm = weak_povm(povm)
        kraus = tuple((psd_sqrt(e, tol),) for e in povm.elements)
        return Instrument(kraus=kraus, mode="sqrt", tol=tol)
    if mode == "mixture":
        if decomposition is None:
            if isinstance(povm, (WeakPovmSpec, Povm)):
                decomposition = extremal_decomposition(povm, tol=tol)
            else:
                raise MissingDecompositionError("mixture mode requires a decomposition")
        kraus = []
        for b in range(decomposition.outcomes):
            ops = tuple(
                np.sqrt(w) * pvm.elements[b] for w, pvm in decomposition.branches
            )
            kraus.append(ops)
        return Instrument(kraus=tuple(kraus), mode="mixture", tol=tol)
    raise ValueError(f"unknown instrument mode {mode!r}")


@dataclass(frozen=True)
class SequentialScenario:
    """One Alice and a chain of Bobs acting on a shared bipartite state.

    ``alice`` holds one projective measurement per setting; ``rounds`` holds,
    for each Bob in chain order, one instrument per setting, all acting on
    the second tensor factor.  Measurement inputs are drawn uniformly.
    """

    state: StateVector | DensityOperator
    alice: tuple       # per setting: Povm on the first factor
    rounds: tuple      # per round: tuple over settings of Instrument
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        da = self.alice[0].dim
        db = self.rounds[0][0].dim
        dim = self.state.dim if isinstance(self.state, StateVector) else self.state.dim
        if dim != da * db:
            raise DimensionMismatchError(
                f"state dimension {dim} does not match {da} x {db}"
            )
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "rounds", tuple(tuple(r) for r in self.rounds))

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)


def _scenario_density(scenario: SequentialScenario) -> np.ndarray:
    if isinstance(scenario.state, StateVector):
        return scenario.state.projector()
    return scenario.state.matrix


def sequential_distribution(scenario: SequentialScenario) -> JointDistribution:
    """Joint table p(a, b1..bn | x, y1..yn) for the full chain.

    Bob-round instruments are applied in order through subnormalized Kraus
    updates on the second factor; Alice's projector is evaluated on her
    untouched marginal at the end.  Every conditional slice sums to one.
    """
    da = scenario.alice[0].dim
    db = scenario.rounds[0][0].dim
    n = scenario.n_rounds
    n_settings = [len(scenario.alice)] + [len(r) for r in scenario.rounds]
    n_outcomes = [scenario.alice[0].outcomes] + [r[0].outcomes for r in scenario.rounds]
    rho0 = _scenario_density(scenario)
    eye_a = np.eye(da)

    shape = tuple(n_settings) + tuple(n_outcomes)
    table = np.zeros(shape)

    def bob_op(k: np.ndarray) -> np.ndarray:
        return np.kron(eye_a, k)

    def recurse(rho: np.ndarray, round_idx: int, y_tuple, b_tuple):
        if round_idx == n:
            for x in range(len(scenario.alice)):
                for a, elem in enumerate(scenario.alice[x].elements):
                    p = np.trace(np.kron(elem, np.eye(db)) @ rho).real
                    table[(x, *y_tuple, a, *b_tuple)] = p
            return
        for y, instr in enumerate(scenario.rounds[round_idx]):
            for b in range(instr.outcomes):
                post = np.zeros_like(rho)
                for k in instr.kraus[b]:
                    op = bob_op(k)
                    post += op @ rho @ op.conj().T
                recurse(post, round_idx + 1, y_tuple + (y,), b_tuple + (b,))

    recurse(rho0, 0, (), ())
    table = np.clip(table, 0.0, None)
    return JointDistribution(table)


def alice_round_marginal(dist: JointDistribution, round_index: int) -> JointDistribution:
    """Two-party table p(a, b_i | x, y_i) between Alice and one Bob round.

    Outcomes of the other rounds are summed out; settings of earlier rounds
    are averaged uniformly (their disturbance is what makes later-round
    statistics setting-dependent), while later-round settings are dropped at
    a fixed value since they cannot influence earlier statistics.
    """
    n = dist.parties - 1
    if not 0 <= round_index < n:
        raise ValueError(f"round index {round_index} out of range for {n} rounds")
    t = dist.table
    # axes: x, y1..yn, a, b1..bn
    target_y_axis = 1 + round_index
    target_b_axis = n + 2 + round_index
    # sum out other rounds' outcomes
    sum_axes = tuple(n + 2 + i for i in range(n) if i != round_index)
    t = t.sum(axis=sum_axes)
    # earlier settings: average; later settings: take slice 0
    for i in reversed(range(n)):
        if i == round_index:
            continue
        axis = 1 + i
        if i < round_index:
            t = t.mean(axis=axis)
        else:
            t = np.take(t, 0, axis=axis)
    # remaining axes: x, y_i, a, b_i
    return JointDistribution(t)


_MAX_VIOLATION = {
    "mes": 4.0 / 9.0 * (3.0 + 2.0 * np.sqrt(3.0)),
    "mvs": 1.0 + np.sqrt(11.0 / 3.0),
}


def closed_form_first_round(kind: str, eps: float) -> float:
    """First-round violation: the sharp maximum scaled linearly by the
    sharpness (first-round statistics depend only on the POVM)."""
    return _MAX_VIOLATION[kind] * eps


def closed_form_second_round(kind: str, eps: float) -> float:
    """Reference closed forms for the Alice/Bob-2 violation after an unsharp
    first round.

    These are the published reference curves used as ground truth for the
    double-violation window.  For ``"mes"`` the curve is known to differ
    from the square-root-instrument simulation by exactly ``24/81 * (1 -
    eps)``; see the README discussion of the second-round curves.
    """
    s = np.sqrt((1.0 - eps) * (1.0 + 2.0 * eps))
    if kind == "mes":
        r3 = np.sqrt(3.0)
        return (56.0 * r3 - (24.0 + 8.0 * r3 * eps) + (48.0 + 16.0 * r3) * s + 60.0) / 81.0
    if kind == "mvs":
        return 1.929 + 0.986 * s - 0.493 * eps
    raise ValueError(f"unknown state kind {kind!r}")


def build_cglmp_scenario(kind: str, eps1: float, mode: str = "mixture",
                         eps2: float = 1.0, theta_basis=None,
                         cfg: CglmpSettings = CglmpSettings()) -> SequentialScenario:
    """Standard one-Alice / two-Bob chain used throughout the experiments.

    Bob 1 measures the unsharp version of the optimal bases at sharpness
    ``eps1`` with the chosen update rule; Bob 2 measures at ``eps2``
    (projectively by default).
    """
    state = canonical_state(kind)
    alice = tuple(measurement_basis("alice", x, cfg) for x in (0, 1))

    def bob_round(eps: float) -> tuple:
        instrs = []
        for y in (0, 1):
            basis_povm = measurement_basis("bob", y, cfg)
            basis = np.column_stack(
                [_dominant_vector(e) for e in basis_povm.elements]
            )
            spec = WeakPovmSpec(epsilon=eps, basis=basis)
            if mode == "sqrt":
                instrs.append(instrument(spec, "sqrt"))
            else:
                theta = basis if theta_basis is None else theta_basis
                decomp = extremal_decomposition(spec, theta_basis=theta)
                instrs.append(instrument(weak_povm(spec), "mixture", decomp))
        return tuple(instrs)

    rounds = (bob_round(eps1), bob_round(eps2))
    return SequentialScenario(state=state, alice=alice, rounds=rounds)


def _dominant_vector(projector: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(projector)
    return evecs[:, -1]


def violation_curves(kind: str, mode: str, eps_grid) -> np.ndarray:
    """Simulated first- and second-round violations over a sharpness grid.

    Returns an array with one row (eps, I3 round 1, I3 round 2) per grid
    point.  The second-round value averages uniformly over Bob 1's input.
    """
    rows = []
    for eps in np.asarray(eps_grid, dtype=float):
        scenario = build_cglmp_scenario(kind, eps, mode=mode)
        dist = sequential_distribution(scenario)
        i1 = cglmp_value(alice_round_marginal(dist, 0))
        i2 = cglmp_value(alice_round_marginal(dist, 1))
        rows.append((eps, i1, i2))
    return np.array(rows)


def double_violation_window(kind: str, tol: float = 1e-8) -> tuple:
    """Sharpness interval on which both rounds violate the local bound.

    The lower end is the exact root of the linear first-round curve; the
    upper end is found by bisection on the second-round closed form.
    """
    lo = 2.0 / _MAX_VIOLATION[kind]
    if closed_form_second_round(kind, lo) <= 2.0:
        raise NoWindowError(f"no double violation for {kind}")
    a, b = lo, 1.0
    if closed_form_second_round(kind, b) > 2.0:
        raise NoWindowError("second round violates everywhere; no finite window top")
    while b - a > tol:
        mid = 0.5 * (a + b)
        if closed_form_second_round(kind, mid) > 2.0:
            a = mid
        else:
            b = mid
    return (lo, 0.5 * (a + b))
