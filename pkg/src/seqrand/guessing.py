"""Adversarial guessing probabilities and min-entropy.

Quantifies how well an eavesdropper holding side information about the
preparation (a pure-state ensemble) and about the measurement apparatus
(projective branch decompositions) can predict the outcomes of a sequential
measurement chain.  Two constructive strategies are provided and shown equal
to the classical evaluation: a projector onto ensemble-index subspaces for
projective chains, and a joint branch-register measurement on a projective
dilation of the chain for unsharp measurements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cglmp import CglmpSettings, canonical_state, measurement_basis
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
from .seqsim import PvmMixture, WeakPovmSpec, extremal_decomposition, weak_povm

__all__ = [
    "OutOfRangeError",
    "NotProjectiveError",
    "NotAValidMixtureError",
    "ConstraintViolatedError",
    "GuessReport",
    "EnsembleDecomposition",
    "NaimarkExtension",
    "min_entropy",
    "classical_guess",
    "eve_optimal_pvm",
    "naimark_dilation",
    "quantum_guess_eval",
    "guess_cglmp",
    "cglmp_attack",
]


class OutOfRangeError(ValueError):
    pass


class NotProjectiveError(ValueError):
    pass


class NotAValidMixtureError(ValueError):
    pass


class ConstraintViolatedError(ValueError):
    """A dilation constraint failed; carries the constraint name and residual."""

    def __init__(self, constraint: str, residual: float):
        self.constraint = constraint
        self.residual = residual
        super().__init__(f"constraint {constraint!r} violated, residual {residual:.3e}")


def min_entropy(g: float) -> float:
    """Min-entropy in bits of a guessing probability: -log2(g)."""
    if not 0.0 < g <= 1.0 + 1e-12:
        raise OutOfRangeError(f"guessing probability {g} not in (0, 1]")
    return float(-np.log2(min(g, 1.0)))


@dataclass(frozen=True)
class GuessReport:
    """Guessing probability, the implied min-entropy, and which strategy
    produced the value."""

    guess_probability: float
    min_entropy_bits: float
    strategy: str

    @classmethod
    def from_probability(cls, g: float, strategy: str) -> "GuessReport":
        return cls(guess_probability=float(g), min_entropy_bits=min_entropy(g),
                   strategy=strategy)


@dataclass(frozen=True)
class EnsembleDecomposition:
    """Pure-state ensemble {p(lambda), |phi_lambda>} compatible with a
    density operator."""

    weights: np.ndarray
    states: tuple  # of StateVector
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.states):
            raise DimensionMismatchError("one weight per ensemble state required")
        if w.min() < -self.tol.num or abs(w.sum() - 1.0) > 100 * self.tol.norm:
            raise OutOfRangeError("ensemble weights must be a probability vector")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise DimensionMismatchError("ensemble states have mixed dimensions")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def average_state(self) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        for w, s in zip(self.weights, self.states):
            rho += w * s.projector()
        return rho

    @classmethod
    def trivial(cls, state: StateVector) -> "EnsembleDecomposition":
        return cls(weights=np.array([1.0]), states=(state,))

    @classmethod
    def eigen(cls, rho: DensityOperator, cutoff: float = 1e-12) -> "EnsembleDecomposition":
        """Eigen-ensemble of a density operator (zero weights dropped)."""
        eigs, vecs = rho.eigensystem()
        keep = eigs > cutoff
        weights = eigs[keep] / eigs[keep].sum()
        states = tuple(StateVector(v) for v in vecs[:, keep].T)
        return cls(weights=weights, states=states)


def _as_mixture(round_spec) -> PvmMixture:
    if isinstance(round_spec, PvmMixture):
        return round_spec
    if isinstance(round_spec, Povm):
        if not round_spec.is_projective:
            raise NotProjectiveError("bare POVM rounds must be projective; "
                                     "pass a PvmMixture for unsharp rounds")
        return PvmMixture(branches=((1.0, round_spec),))
    raise NotAValidMixtureError(f"cannot interpret round of type {type(round_spec)!r}")


def _branch_chain_prob(psi: np.ndarray, branch_povms, outcomes) -> float:
    """Sequential Born probability of one outcome tuple for fixed branches.

    Rounds before the last act through their square-root Kraus operator
    (the element itself for projective branches); the final round
    contributes its element directly.
    """
    cur = psi
    for povm, b in zip(branch_povms[:-1], outcomes[:-1]):
        elem = povm.elements[b]
        k = elem if povm.is_projective else psd_sqrt(elem)
        cur = k @ cur
    last = branch_povms[-1].elements[outcomes[-1]]
    return float(np.vdot(cur, last @ cur).real)


def classical_guess(ensemble: EnsembleDecomposition, rounds,
                    joint_weights: np.ndarray | None = None) -> GuessReport:
    """Best guessing probability of an adversary holding the ensemble index
    and all branch labels of the round decompositions.

    For each (ensemble state, branch tuple) the adversary names the outcome
    tuple with the largest sequential Born probability; the result averages
    those maxima.  Branch labels combine as an independent product across
    rounds unless ``joint_weights`` (indexed by ensemble state then branch
    per round) supplies correlated side information.
    """
    mixtures = [_as_mixture(r) for r in rounds]
    dim = ensemble.dim
    for m in mixtures:
        if m.dim != dim:
            raise DimensionMismatchError("round dimension does not match the ensemble")
    branch_counts = [len(m.branches) for m in mixtures]
    if joint_weights is not None:
        joint = np.asarray(joint_weights, dtype=float)
        if joint.shape != tuple([ensemble.size] + branch_counts):
            raise DimensionMismatchError(
                f"joint weight table must have shape {(ensemble.size, *branch_counts)}"
            )
        if abs(joint.sum() - 1.0) > 1e-9 or joint.min() < -1e-12:
            raise OutOfRangeError("joint weights must form a probability table")
    else:
        joint = ensemble.weights.copy()
        for m in mixtures:
            joint = np.multiply.outer(joint, np.array([w for w, _ in m.branches]))

    outcome_ranges = [range(m.outcomes) for m in mixtures]
    total = 0.0
    for lam, state in enumerate(ensemble.states):
        psi = state.amplitudes
        for branch_idx in itertools.product(*[range(c) for c in branch_counts]):
            w = joint[(lam, *branch_idx)]
            if w <= 0.0:
                continue
            branch_povms = [m.branches[j][1] for m, j in zip(mixtures, branch_idx)]
            best = 0.0
            for outcomes in itertools.product(*outcome_ranges):
                p = _branch_chain_prob(psi, branch_povms, outcomes)
                if p > best:
                    best = p
            total += w * best
    label = "classical[joint]" if joint_weights is not None else "classical[product]"
    return GuessReport.from_probability(total, label)


def _lexmin_argmax(prob_by_outcome: dict) -> tuple:
    """Outcome tuple with maximal probability; ties resolved toward the
    lexicographically smallest tuple (iteration order is lexicographic)."""
    best_key, best = None, -np.inf
    for key in sorted(prob_by_outcome):
        if prob_by_outcome[key] > best:
            best_key, best = key, prob_by_outcome[key]
    return best_key


def eve_optimal_pvm(ensemble: EnsembleDecomposition, rounds) -> tuple:
    """Adversary measurement achieving the classical guessing probability for
    a projective chain on a mixed state.

    The side system carries one flag vector per ensemble state; the
    measurement projects onto the span of flags whose state makes a given
    outcome tuple the (lexicographically first) Born-rule maximizer.
    Returns the measurement and the evaluated guessing probability, which
    equals :func:`classical_guess` on the same ensemble.
    """
    povms = []
    for r in rounds:
        m = _as_mixture(r)
        if len(m.branches) != 1 or not m.branches[0][1].is_projective:
            raise NotProjectiveError("eve_optimal_pvm requires a projective chain")
        povms.append(m.branches[0][1])
    dim = ensemble.dim
    n_e = ensemble.size
    outcome_ranges = [range(p.outcomes) for p in povms]

    # assign each ensemble index to its best outcome tuple
    assignment: dict = {}
    for lam, state in enumerate(ensemble.states):
        psi = state.amplitudes
        probs = {
            outcomes: _branch_chain_prob(psi, povms, outcomes)
            for outcomes in itertools.product(*outcome_ranges)
        }
        assignment[lam] = _lexmin_argmax(probs)

    eve_elems = {}
    for outcomes in itertools.product(*outcome_ranges):
        proj = np.zeros((n_e, n_e), dtype=complex)
        for lam, target in assignment.items():
            if target == outcomes:
                proj[lam, lam] = 1.0
        eve_elems[outcomes] = proj
    eve_povm = validate_povm(list(eve_elems.values()))

    # purification sum_lam sqrt(p_lam) |phi_lam>|e_lam> on S (x) E
    psi_se = np.zeros(dim * n_e, dtype=complex)
    for lam, (w, state) in enumerate(zip(ensemble.weights, ensemble.states)):
        flag = np.zeros(n_e, dtype=complex)
        flag[lam] = 1.0
        psi_se += np.sqrt(w) * np.kron(state.amplitudes, flag)

    eye_e = np.eye(n_e)
    total = 0.0
    for outcomes, eve_elem in eve_elems.items():
        cur = psi_se
        for povm, b in zip(povms, outcomes):
            cur = np.kron(povm.elements[b], eye_e) @ cur
        total += float(np.vdot(cur, np.kron(np.eye(dim), eve_elem) @ cur).real)
    report = GuessReport.from_probability(total, "eve-optimal-pvm")
    return eve_povm, report


@dataclass(frozen=True)
class _RoundExtension:
    """Projective extension of one unsharp round on system (x) ancilla."""

    unitary: np.ndarray          # on S (x) A' (x) A''
    sigma: np.ndarray            # ancilla state |0><0| (x) diag(branch weights)
    projectors: tuple            # joint projectors, one per outcome
    purification: np.ndarray     # |phi_AE> on (A' (x) A'') (x) E
    povm_elements: tuple         # the dilated POVM on S, for recovery checks
    d: int
    outcomes: int
    branches: int


@dataclass(frozen=True)
class NaimarkExtension:
    """Projective dilation of a sequential unsharp chain with the adversary
    holding the purification of every round's ancilla."""

    rounds: tuple                 # of _RoundExtension, in chain order
    eve_measurement: tuple | None  # projectors on the joint branch registers
    guess_map: dict | None         # branch tuple -> guessed outcome tuple
    mixtures: tuple                # the round decompositions


def _complete_isometry(columns: np.ndarray, dim: int, positions) -> np.ndarray:
    """Deterministically extend orthonormal columns at given positions to a
    full unitary; remaining positions are filled from the orthogonal
    complement in index order."""
    u = np.zeros((dim, dim), dtype=complex)
    u[:, positions] = columns
    # complement basis via SVD of the known block
    svd_u, svals, _ = np.linalg.svd(columns, full_matrices=True)
    rank = int(np.sum(svals > 1e-12))
    complement = svd_u[:, rank:]
    rest = [i for i in range(dim) if i not in set(positions)]
    if len(rest) != complement.shape[1]:
        raise NotAValidMixtureError("dilation columns are not orthonormal")
    u[:, rest] = complement
    return u


def _dilate_round(mixture: PvmMixture, tol: Tolerances) -> _RoundExtension:
    d = mixture.dim
    n_out = mixture.outcomes
    m = len(mixture.branches)
    dim = d * n_out * m
    weights = np.array([w for w, _ in mixture.branches])

    # columns U|s,0,j> = sum_b (P_j^b |s>) |b,j>
    positions = []
    cols = np.zeros((dim, d * m), dtype=complex)
    idx = 0
    for s in range(d):
        basis_s = np.zeros(d, dtype=complex)
        basis_s[s] = 1.0
        for j in range(m):
            col = np.zeros(dim, dtype=complex)
            pvm = mixture.branches[j][1]
            for b in range(n_out):
                vec = pvm.elements[b] @ basis_s
                # tensor position (s', b, j)
                for sp in range(d):
                    col[(sp * n_out + b) * m + j] += vec[sp]
            cols[:, idx] = col
            positions.append((s * n_out + 0) * m + j)
            idx += 1
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(d * m))) > 1e4 * tol.num:
        raise NotAValidMixtureError("branch elements do not define an isometry")
    unitary = _complete_isometry(cols, dim, positions)

    sigma = np.zeros((n_out * m, n_out * m), dtype=complex)
    for j, w in enumerate(weights):
        sigma[j, j] = w  # position (a'=0, a''=j)

    projectors = []
    for b in range(n_out):
        sel = np.zeros((n_out * m, n_out * m))
        for j in range(m):
            sel[b * m + j, b * m + j] = 1.0
        proj = unitary.conj().T @ np.kron(np.eye(d), sel) @ unitary
        projectors.append(proj)

    purification = np.zeros(n_out * m * m, dtype=complex)
    for j, w in enumerate(weights):
        purification[(0 * m + j) * m + j] = np.sqrt(w)

    return _RoundExtension(
        unitary=unitary,
        sigma=sigma,
        projectors=tuple(projectors),
        purification=purification,
        povm_elements=tuple(mixture.mixed_elements()),
        d=d,
        outcomes=n_out,
        branches=m,
    )


def naimark_dilation(decompositions, state: StateVector | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> NaimarkExtension:
    """Projective extension of a chain of decomposed unsharp measurements.

    Each round gets a two-register ancilla (an outcome register starting in
    |0> and a branch register holding the decomposition weights), a unitary
    that writes the branch Kraus action into the outcome register, and joint
    projectors recovering the round's POVM when the ancilla is traced
    against its initial state.  When ``state`` is given, the adversary's
    joint measurement over all branch registers is constructed as well: each
    branch tuple is mapped to the outcome tuple maximizing the sequential
    Born rule, and the measurement projects onto branch subspaces grouped by
    that guess.
    """
    if isinstance(decompositions, PvmMixture):
        decompositions = (decompositions,)
    mixtures = tuple(decompositions)
    rounds = tuple(_dilate_round(m, tol) for m in mixtures)

    eve_measurement = None
    guess_map = None
    if state is not None:
        if state.dim != mixtures[0].dim:
            raise DimensionMismatchError("state dimension does not match the rounds")
        psi = state.amplitudes
        branch_counts = [len(m.branches) for m in mixtures]
        outcome_ranges = [range(m.outcomes) for m in mixtures]
        guess_map = {}
        for branch_idx in itertools.product(*[range(c) for c in branch_counts]):
            branch_povms = [m.branches[j][1] for m, j in zip(mixtures, branch_idx)]
            probs = {
                outcomes: _branch_chain_prob(psi, branch_povms, outcomes)
                for outcomes in itertools.product(*outcome_ranges)
            }
            guess_map[branch_idx] = _lexmin_argmax(probs)
        dim_e = int(np.prod(branch_counts))
        elems = []
        for outcomes in itertools.product(*outcome_ranges):
            proj = np.zeros((dim_e, dim_e), dtype=complex)
            for branch_idx, target in guess_map.items():
                if target == outcomes:
                    flat = np.ravel_multi_index(branch_idx, branch_counts)
                    proj[flat, flat] = 1.0
            elems.append(proj)
        eve_measurement = tuple(elems)

    return NaimarkExtension(rounds=rounds, eve_measurement=eve_measurement,
                            guess_map=guess_map, mixtures=mixtures)


def _apply_on_axis(state: np.ndarray, op: np.ndarray, axes) -> np.ndarray:
    """Apply ``op`` to the tensor factors at ``axes`` of a state tensor."""
    moved = np.moveaxis(state, axes, range(len(axes)))
    lead_shape = moved.shape[: len(axes)]
    lead = int(np.prod(lead_shape))
    flat = moved.reshape(lead, -1)
    out = (op @ flat).reshape(lead_shape + moved.shape[len(axes):])
    return np.moveaxis(out, range(len(axes)), axes)


def recovery_residual(ext: NaimarkExtension) -> float:
    """Largest deviation of tr_A[Pi_b (I (x) sigma_A)] from the POVM."""
    worst = 0.0
    for r in ext.rounds:
        d, anc = r.d, r.outcomes * r.branches
        for b, proj in enumerate(r.projectors):
            tensor = proj.reshape(d, anc, d, anc)
            rec = np.einsum("iajb,ba->ij", tensor, r.sigma)
            worst = max(worst, float(np.max(np.abs(rec - r.povm_elements[b]))))
    return worst


def _check_extension(state: StateVector, ext: NaimarkExtension, tol: Tolerances):
    for i, r in enumerate(ext.rounds):
        dim = r.d * r.outcomes * r.branches
        total = np.zeros((dim, dim), dtype=complex)
        for proj in r.projectors:
            res = float(np.max(np.abs(proj @ proj - proj)))
            if res > 1e4 * tol.num:
                raise ConstraintViolatedError(f"round {i} projectivity", res)
            total += proj
        res = float(np.max(np.abs(total - np.eye(dim))))
        if res > 1e4 * tol.num:
            raise ConstraintViolatedError(f"round {i} completeness", res)
    res = recovery_residual(ext)
    if res > 1e4 * tol.num:
        raise ConstraintViolatedError("povm recovery", res)
    _check_post_state_statistics(state, ext, tol)


def _check_post_state_statistics(state: StateVector, ext: NaimarkExtension,
                                 tol: Tolerances):
    """Outcome statistics of every round on the dilation must match the
    branch-averaged Kraus evolution on the system alone."""
    psi = _joint_initial_state(state, ext)
    n = len(ext.rounds)
    worst = 0.0

    def recurse(vec, rho_model, round_idx):
        nonlocal worst
        if round_idx == n:
            return
        r = ext.rounds[round_idx]
        for b in range(r.outcomes):
            new_vec = _apply_round_projector(vec, ext, round_idx, b)
            p_dilation = float(np.vdot(new_vec, new_vec).real)
            # model: branch-averaged square-root Kraus update on S
            new_rho = np.zeros_like(rho_model)
            mix = ext.mixtures[round_idx]
            for w, pvm in mix.branches:
                k = pvm.elements[b]
                new_rho += w * (k @ rho_model @ k.conj().T)
            p_model = float(np.trace(new_rho).real)
            worst = max(worst, abs(p_dilation - p_model))
            if p_dilation > 1e-12:
                recurse(new_vec, new_rho, round_idx + 1)

    recurse(psi, np.outer(state.amplitudes, state.amplitudes.conj()), 0)
    if worst > 1e4 * tol.num:
        raise ConstraintViolatedError("post-state statistics", worst)


def _joint_initial_state(state: StateVector, ext: NaimarkExtension) -> np.ndarray:
    """|psi_S> (x) all round purifications, shaped (S, A_1..A_n, E_1..E_n)."""
    anc_dims = [r.outcomes * r.branches for r in ext.rounds]
    eve_dims = [r.branches for r in ext.rounds]
    vec = state.amplitudes
    for r in ext.rounds:
        vec = np.kron(vec, r.purification)
    # current index order: S, (A_1, E_1), (A_2, E_2), ...
    shape = [state.dim]
    for a, e in zip(anc_dims, eve_dims):
        shape.extend([a, e])
    tensor = vec.reshape(shape)
    n = len(ext.rounds)
    perm = [0] + [1 + 2 * i for i in range(n)] + [2 + 2 * i for i in range(n)]
    return np.transpose(tensor, perm)


def _apply_round_projector(tensor: np.ndarray, ext: NaimarkExtension,
                           round_idx: int, outcome: int) -> np.ndarray:
    return _apply_on_axis(tensor, ext.rounds[round_idx].projectors[outcome],
                          (0, 1 + round_idx))


def quantum_guess_eval(state: StateVector, extension: NaimarkExtension,
                       eve_measurement=None, check: bool = True,
                       tol: Tolerances = DEFAULT_TOL) -> GuessReport:
    """Guessing probability of a fixed adversary strategy on the dilation.

    Evaluates, for each outcome tuple, the overlap of the projector-chain
    image of the joint state with the adversary's matching measurement
    element.  This is an evaluation of one feasible strategy, hence a lower
    bound on the best the adversary could do.  With ``check`` enabled the
    dilation constraints (projectivity, POVM recovery, post-state
    statistics) are verified first and a failure raises
    :class:`ConstraintViolatedError`.
    """
    if check:
        _check_extension(state, extension, tol)
    eve = extension.eve_measurement if eve_measurement is None else tuple(eve_measurement)
    if eve is None:
        raise ConstraintViolatedError("eve measurement missing", np.inf)
    n = len(extension.rounds)
    branch_counts = [r.branches for r in extension.rounds]
    dim_e = int(np.prod(branch_counts))
    total_e = sum(eve)
    res = float(np.max(np.abs(total_e - np.eye(dim_e))))
    if res > 1e4 * tol.num:
        raise ConstraintViolatedError("eve completeness", res)
    for m in eve:
        r = float(np.max(np.abs(m @ m - m)))
        if r > 1e4 * tol.num:
            raise ConstraintViolatedError("eve projectivity", r)

    psi = _joint_initial_state(state, extension)
    eve_axes = tuple(1 + n + i for i in range(n))
    outcome_ranges = [range(r.outcomes) for r in extension.rounds]
    total = 0.0
    for idx, outcomes in enumerate(itertools.product(*outcome_ranges)):
        vec = psi
        for i, b in enumerate(outcomes):
            vec = _apply_round_projector(vec, extension, i, b)
        meas = _apply_on_axis(vec, eve[idx], eve_axes)
        total += float(np.vdot(vec.ravel(), meas.ravel()).real)
    return GuessReport.from_probability(total, "naimark-quantum")


def guess_cglmp(state: StateVector, alice_povm: Povm, decomposition: PvmMixture,
                bob2_povm: Povm, scope: str = "global") -> GuessReport:
    """Adversary guessing probability for the one-Alice / two-Bob chain when
    the first Bob's apparatus is known to follow a projective decomposition.

    For each branch the joint outcome distribution is the subnormalized
    sandwich tr[(A_a (x) B2_b2) (I (x) P^b1) rho (I (x) P^b1)]; the adversary
    names the modal outcome tuple per branch.  ``scope`` selects whether
    Alice's outcome is guessed as well (``"global"``) or marginalized out
    (``"local"``, guessing the two Bob outcomes only).
    """
    if not alice_povm.is_projective or not bob2_povm.is_projective:
        raise NotProjectiveError("alice and the final round must be projective")
    if scope not in ("global", "local"):
        raise ValueError(f"scope must be 'global' or 'local', got {scope!r}")
    da = alice_povm.dim
    db = decomposition.dim
    if state.dim != da * db:
        raise DimensionMismatchError("state does not match the measurement dimensions")
    rho = state.projector()
    eye_a = np.eye(da)
    total = 0.0
    for w, pvm in decomposition.branches:
        table = np.empty((alice_povm.outcomes, pvm.outcomes, bob2_povm.outcomes))
        for b1, p1 in enumerate(pvm.elements):
            sand = np.kron(eye_a, p1) @ rho @ np.kron(eye_a, p1)
            for a, ea in enumerate(alice_povm.elements):
                for b2, e2 in enumerate(bob2_povm.elements):
                    table[a, b1, b2] = np.trace(np.kron(ea, e2) @ sand).real
        if scope == "local":
            total += w * float(table.sum(axis=0).max())
        else:
            total += w * float(table.max())
    return GuessReport.from_probability(total, f"cglmp-decomposition[{scope}]")


def cglmp_attack(kind: str, eps1: float, setting=(0, 0, 1), scope: str = "global",
                 theta_basis=None, cfg: CglmpSettings = CglmpSettings()) -> GuessReport:
    """Convenience wrapper building the canonical chain attack.

    ``setting`` is (Alice input, Bob-1 input, Bob-2 input); Bob 1 measures
    the unsharp optimal basis at sharpness ``eps1`` through its extremal
    decomposition, Bob 2 measures projectively.
    """
    x, y1, y2 = setting
    state = canonical_state(kind)
    alice = measurement_basis("alice", x, cfg)
    bob1_basis = _povm_basis(measurement_basis("bob", y1, cfg))
    spec = WeakPovmSpec(epsilon=eps1, basis=bob1_basis)
    decomposition = extremal_decomposition(spec, theta_basis=theta_basis)
    bob2 = measurement_basis("bob", y2, cfg)
    return guess_cglmp(state, alice, decomposition, bob2, scope=scope)


def _povm_basis(povm: Povm) -> np.ndarray:
    cols = []
    for e in povm.elements:
        evals, evecs = np.linalg.eigh(e)
        cols.append(evecs[:, -1])
    return np.column_stack(cols)
