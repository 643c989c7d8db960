"""Moment-matrix relaxation for device-independent guessing bounds in the
sequential two-Bob scenario.

Words are products of projectors for Alice (two ternary settings), two
sequential Bob rounds (two ternary settings each, mutually non-commuting),
and a nine-outcome adversary commuting with everyone.  The compiler builds
the symmetric placement map of a fixed word set, pins observed probabilities
onto the sandwich moments <A B1 B2 B1>, imposes every representable
completeness relation by affine elimination, and reduces out the exact null
space those relations force on all feasible moment matrices before handing a
strictly feasible semidefinite program to :mod:`seqrand.sdp`.

Conjugation symmetry lets the relaxation run over real symmetric moment
matrices of the original size: for any feasible complex Hermitian moment
matrix the entrywise conjugate is feasible with the same (real) objective,
so the real part is feasible and optimal values coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cglmp import CglmpSettings, JointDistribution, canonical_state, measurement_basis
from .guessing import GuessReport, _dilate_round, _povm_basis
from .qcore import DEFAULT_TOL
from .sdp import InfeasibleError, SdpConfig, SdpProblem, SdpSolution, solve
from .seqsim import WeakPovmSpec, extremal_decomposition

__all__ = [
    "ALICE",
    "EVE",
    "Letter",
    "Word",
    "ShapeMismatchError",
    "ProfileTooSmallError",
    "SolverFailureError",
    "canonicalize",
    "adjoint",
    "build_words",
    "MomentProblem",
    "build_problem",
    "CompiledSdp",
    "compile_problem",
    "di_guess_bound",
    "NpaBound",
    "canonical_realization",
    "realization_moment_matrix",
    "check_moment_matrix",
]

ALICE = 0     # party codes: 0 Alice, 1..n Bob rounds, EVE adversary
EVE = 99

_N_SETTINGS = 2
_N_OUTCOMES = 3
_EVE_OUTCOMES = 9


class ShapeMismatchError(ValueError):
    pass


class ProfileTooSmallError(ValueError):
    """The word profile cannot index a required data or objective moment."""


class SolverFailureError(RuntimeError):
    def __init__(self, solution: SdpSolution):
        self.solution = solution
        super().__init__(f"solver ended with status {solution.status!r} "
                         f"after {solution.iterations} iterations")


@dataclass(frozen=True, order=True)
class Letter:
    """One projector: party (Alice, Bob round, or adversary), setting, outcome."""

    party: int
    setting: int
    outcome: int

    def __post_init__(self):
        n_out = _EVE_OUTCOMES if self.party == EVE else _N_OUTCOMES
        n_set = 1 if self.party == EVE else _N_SETTINGS
        if not (0 <= self.setting < n_set and 0 <= self.outcome < n_out):
            raise ShapeMismatchError(f"invalid letter {self!r}")


@dataclass(frozen=True)
class Word:
    """Product of letters in time order, or the zero operator."""

    letters: tuple = ()
    is_zero: bool = False

    def __len__(self):
        return len(self.letters)

    def key(self):
        return tuple((l.party, l.setting, l.outcome) for l in self.letters)


ZERO = Word(is_zero=True)
IDENTITY = Word()


def _party_class(party: int) -> int:
    if party == ALICE:
        return 0
    if party == EVE:
        return 2
    return 1


def canonicalize(word: Word) -> Word:
    """Canonical form under cross-party commutation and projector algebra.

    Letters are stably sorted into Alice, Bob-rounds, adversary blocks
    (relative order inside each block is preserved: Bob rounds do not
    commute with each other, nor do different settings of one party).
    Adjacent same-party same-setting letters then collapse by idempotence or
    annihilate by orthogonality.
    """
    if word.is_zero:
        return ZERO
    letters = sorted(word.letters, key=lambda l: _party_class(l.party))
    out: list = []
    for letter in letters:
        if out and out[-1].party == letter.party and out[-1].setting == letter.setting:
            if out[-1].outcome == letter.outcome:
                continue  # idempotent projector
            return ZERO     # orthogonal outcomes of one measurement
        out.append(letter)
    return Word(letters=tuple(out))


def adjoint(word: Word) -> Word:
    """Canonical form of the reversed word (each letter is self-adjoint)."""
    if word.is_zero:
        return ZERO
    return canonicalize(Word(letters=tuple(reversed(word.letters))))


def _concat(u: Word, v: Word) -> Word:
    if u.is_zero or v.is_zero:
        return ZERO
    return canonicalize(Word(letters=u.letters + v.letters))


_FAMILIES = {
    "A": (ALICE,),
    "B1": (1,),
    "B2": (2,),
    "E": (EVE,),
    "A.B1": (ALICE, 1),
    "B2.B1": (2, 1),
    "B1.E": (1, EVE),
    "B1.B2": (1, 2),
    "A.B2": (ALICE, 2),
}

_PROFILES = {
    "default": ("A", "B1", "B2", "E", "A.B1", "B2.B1", "B1.E"),
    "extended": ("A", "B1", "B2", "E", "A.B1", "B2.B1", "B1.E", "B1.B2", "A.B2"),
}


def _letters_for_party(party: int):
    if party == EVE:
        return [Letter(EVE, 0, e) for e in range(_EVE_OUTCOMES)]
    return [Letter(party, s, o)
            for s in range(_N_SETTINGS) for o in range(_N_OUTCOMES)]


def build_words(profile="default") -> list:
    """Word list of the relaxation: identity plus the requested families.

    A family name like ``"B2.B1"`` denotes all products of one letter per
    named party, in the written order.
    """
    if isinstance(profile, str):
        try:
            families = _PROFILES[profile]
        except KeyError:
            raise ProfileTooSmallError(f"unknown profile {profile!r}") from None
    else:
        families = tuple(profile)
        for fam in families:
            if fam not in _FAMILIES:
                raise ProfileTooSmallError(f"unknown word family {fam!r}")
    words = [IDENTITY]
    for fam in families:
        parties = _FAMILIES[fam]
        pools = [_letters_for_party(p) for p in parties]
        for combo in itertools.product(*pools):
            words.append(Word(letters=combo))
    return words


def _moment_rep(word: Word):
    """Representative key of the moment class {w, w adjoint}."""
    k1 = word.key()
    k2 = adjoint(word).key()
    return min((len(k1), k1), (len(k2), k2))[1]


@dataclass
class MomentProblem:
    """Symbolic moment problem: placement map, equalities, and objective.

    ``entries[(i, j)]`` holds the moment key of word pair (i, j) or ``None``
    for an algebraically zero entry.  ``equalities`` collects the pinned
    normalization, the observed-probability constraints, and every
    completeness relation representable inside the word set, each as
    (coefficient map over keys, constant).  The PSD condition applies to the
    real symmetric matrix the placement map describes.
    """

    words: list
    entries: dict
    keys: list
    key_index: dict
    equalities: list
    objective: dict
    objective_const: float
    setting: tuple
    profile: tuple
    n_data_rows: int


def _require_indexable(word: Word, available: set, what: str):
    if _moment_rep(word) not in available:
        raise ProfileTooSmallError(f"{what} moment {word.key()} is not indexable "
                                   "in this word profile")


def build_problem(p_obs: JointDistribution | None, setting,
                  profile="default") -> MomentProblem:
    """Compile the guessing relaxation for one target setting pair.

    ``p_obs`` is the full observed table p(a, b1, b2 | x, y1, y2) used as
    equality constraints (pass ``None`` for the unconstrained sanity case);
    ``setting`` is the target (y1, y2) whose outcomes the adversary guesses.
    The adversary outcome for the pair (b1, b2) is ``3*b1 + b2``.
    """
    y1s, y2s = (int(setting[0]), int(setting[1])) if len(setting) == 2 \
        else (int(setting[1]), int(setting[2]))
    if not (0 <= y1s < _N_SETTINGS and 0 <= y2s < _N_SETTINGS):
        raise ShapeMismatchError(f"bad target setting {setting}")
    if p_obs is not None:
        if p_obs.parties != 3 or p_obs.settings != (2, 2, 2) \
                or p_obs.outcomes != (3, 3, 3):
            raise ShapeMismatchError("observed table must be 2x2x2 settings "
                                     "by 3x3x3 outcomes")

    words = build_words(profile)
    n = len(words)
    entries: dict = {}
    key_set: dict = {}
    for i in range(n):
        ui = adjoint(words[i])
        for j in range(i, n):
            prod = _concat(ui, words[j])
            if prod.is_zero:
                entries[(i, j)] = None
                continue
            rep = _moment_rep(prod)
            entries[(i, j)] = rep
            key_set.setdefault(rep, []).append((i, j))
    keys = sorted(key_set, key=lambda k: (len(k), k))
    key_index = {k: idx for idx, k in enumerate(keys)}
    available = set(keys)

    equalities: list = []
    # normalization <1> = 1
    equalities.append(({_moment_rep(IDENTITY): 1.0}, 1.0))

    # observed-probability pins on the sandwich moments
    n_data = 0
    if p_obs is not None:
        for x in range(2):
            for y1 in range(2):
                for y2 in range(2):
                    for a in range(3):
                        for b1 in range(3):
                            for b2 in range(3):
                                w = canonicalize(Word(letters=(
                                    Letter(ALICE, x, a),
                                    Letter(1, y1, b1),
                                    Letter(2, y2, b2),
                                    Letter(1, y1, b1),
                                )))
                                _require_indexable(w, available, "observed-data")
                                equalities.append((
                                    {_moment_rep(w): 1.0},
                                    float(p_obs.table[x, y1, y2, a, b1, b2]),
                                ))
                                n_data += 1

    # completeness: sum over one letter's outcomes collapses to the shorter
    # word, wherever every term is indexable
    seen_rows = set()
    for rep in keys:
        word = Word(letters=tuple(Letter(*t) for t in rep))
        for pos in range(len(word.letters)):
            letter = word.letters[pos]
            n_out = _EVE_OUTCOMES if letter.party == EVE else _N_OUTCOMES
            family = []
            ok = True
            for o in range(n_out):
                variant = canonicalize(Word(letters=(
                    word.letters[:pos]
                    + (Letter(letter.party, letter.setting, o),)
                    + word.letters[pos + 1:]
                )))
                if variant.is_zero:
                    continue
                vrep = _moment_rep(variant)
                if vrep not in available:
                    ok = False
                    break
                family.append(vrep)
            if not ok:
                continue
            dropped = canonicalize(Word(letters=word.letters[:pos]
                                        + word.letters[pos + 1:]))
            if dropped.is_zero:
                drep = None  # orthogonal neighbors: the sum collapses to 0
            else:
                drep = _moment_rep(dropped)
                if drep not in available:
                    continue
            row: dict = {}
            for vrep in family:
                row[vrep] = row.get(vrep, 0.0) + 1.0
            if drep is not None:
                row[drep] = row.get(drep, 0.0) - 1.0
            row = {k: v for k, v in row.items() if abs(v) > 1e-15}
            if not row:
                continue
            signature = tuple(sorted(row.items()))
            if signature not in seen_rows:
                seen_rows.add(signature)
                equalities.append((row, 0.0))

    # objective: adversary guesses the outcome pair of the target setting
    objective: dict = {}
    for b1 in range(3):
        for b2 in range(3):
            w = canonicalize(Word(letters=(
                Letter(1, y1s, b1),
                Letter(2, y2s, b2),
                Letter(1, y1s, b1),
                Letter(EVE, 0, 3 * b1 + b2),
            )))
            _require_indexable(w, available, "objective")
            rep = _moment_rep(w)
            objective[rep] = objective.get(rep, 0.0) + 1.0

    return MomentProblem(
        words=words,
        entries=entries,
        keys=keys,
        key_index=key_index,
        equalities=equalities,
        objective=objective,
        objective_const=0.0,
        setting=(y1s, y2s),
        profile=tuple(_PROFILES[profile]) if isinstance(profile, str) else tuple(profile),
        n_data_rows=n_data,
    )


@dataclass
class CompiledSdp:
    """Solver-ready form of a moment problem plus the recovery metadata."""

    problem: SdpProblem
    free_keys: list
    objective_const: float
    reduction_basis: np.ndarray   # columns span the retained subspace
    n_words: int
    substitutions: dict


def _eliminate(equalities, tol: float = 1e-9):
    """Gaussian elimination of the equality rows over the moment variables.

    Every relation removes one variable, preferring to eliminate the moment
    with the longest word so short moments remain the free basis.
    Substitutions are kept fully reduced.  Returns the substitution map
    key -> (affine dict over free keys, constant).
    """
    subs: dict = {}
    referencing: dict = {}

    def reduce_row(row: dict, const: float):
        out: dict = {}
        stack = list(row.items())
        while stack:
            k, c = stack.pop()
            if abs(c) < 1e-14:
                continue
            if k in subs:
                aff, cst = subs[k]
                const += c * cst
                stack.extend((k2, c * c2) for k2, c2 in aff.items())
            else:
                out[k] = out.get(k, 0.0) + c
        out = {k: c for k, c in out.items() if abs(c) > 1e-12}
        return out, const

    order = sorted(range(len(equalities)),
                   key=lambda i: (min(len(k) for k in equalities[i][0]),))
    for idx in order:
        row, const = equalities[idx]
        row, const = reduce_row(dict(row), -float(const))
        # invariant: row + const = 0
        if not row:
            if abs(const) > 1e-7:
                raise InfeasibleError(
                    f"inconsistent moment equalities (residual {const:.3e})")
            continue
        pivot = max(row, key=lambda k: (len(k), k, abs(row[k])))
        pc = row.pop(pivot)
        aff = {k: -c / pc for k, c in row.items()}
        cst = -const / pc
        subs[pivot] = (aff, cst)
        for k in aff:
            referencing.setdefault(k, set()).add(pivot)
        # keep existing substitutions fully reduced
        for holder in list(referencing.get(pivot, ())):
            haff, hcst = subs[holder]
            coeff = haff.pop(pivot, 0.0)
            if coeff:
                hcst += coeff * cst
                for k2, c2 in aff.items():
                    haff[k2] = haff.get(k2, 0.0) + coeff * c2
                    referencing.setdefault(k2, set()).add(holder)
                haff = {k: c for k, c in haff.items() if abs(c) > 1e-12}
                subs[holder] = (haff, hcst)
        referencing.pop(pivot, None)
    return subs


def compile_problem(mp: MomentProblem, reduce_null: bool = True,
                    cone_shift: float = 0.0) -> CompiledSdp:
    """Affine-eliminate the equalities and serialize to a solver problem.

    The moment matrix is parametrized over the surviving free moments; the
    linear matrix inequality becomes the dual cone constraint of the emitted
    primal problem.  Because the completeness relations force a common null
    space on every feasible moment matrix, that null space (verified
    numerically) is projected out first.

    Exactly pinned observed probabilities can still leave the feasible set
    without interior (every compatible moment matrix sits on a face of the
    cone).  A positive ``cone_shift`` relaxes the inequality to
    ``T(z) + shift * I >= 0``: the feasible set only grows, so the optimum
    remains a valid upper bound on the guessing probability while the
    interior-point method regains a strictly feasible region.
    """
    subs = _eliminate(mp.equalities)
    n = len(mp.words)

    free_index: dict = {}
    free_keys: list = []

    def affine_of(key):
        if key in subs:
            return subs[key]
        return ({key: 1.0}, 0.0)

    # assemble placement structure entry by entry
    f0 = np.zeros((n, n))
    placements: dict = {}  # free key -> list of (i, j, coeff)
    for (i, j), key in mp.entries.items():
        if key is None:
            continue
        aff, cst = affine_of(key)
        if cst:
            f0[i, j] += cst
            f0[j, i] = f0[i, j] if i != j else f0[i, j]
        for k, c in aff.items():
            if k not in free_index:
                free_index[k] = len(free_keys)
                free_keys.append(k)
            placements.setdefault(k, []).append((i, j, c))
    f0 = 0.5 * (f0 + f0.T)
    m = len(free_keys)

    def placement_matrix(key):
        mat = np.zeros((n, n))
        for i, j, c in placements[key]:
            mat[i, j] += c
            if i != j:
                mat[j, i] += c
        return mat

    F = np.zeros((m, n, n))
    for k, idx in free_index.items():
        F[idx] = placement_matrix(k)

    # objective over free moments
    c_vec = np.zeros(m)
    c0 = mp.objective_const
    for key, coeff in mp.objective.items():
        aff, cst = affine_of(key)
        c0 += coeff * cst
        for k, c in aff.items():
            c_vec[free_index[k]] += coeff * c

    if reduce_null:
        V = _common_range_basis(f0, F)
    else:
        V = np.eye(n)
    F0r = V.T @ f0 @ V
    Fr = np.einsum("pi,mij,jq->mpq", V.T, F, V, optimize=True)
    Fr = 0.5 * (Fr + np.transpose(Fr, (0, 2, 1)))
    F0r = 0.5 * (F0r + F0r.T)
    if cone_shift:
        F0r = F0r + cone_shift * np.eye(F0r.shape[0])

    problem = SdpProblem(C=-F0r, A=-Fr, b=c_vec)
    return CompiledSdp(problem=problem, free_keys=free_keys,
                       objective_const=c0, reduction_basis=V,
                       n_words=n, substitutions=subs)


def _common_range_basis(f0: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the joint range of all placement matrices.

    The completeness relations baked into the parametrization force fixed
    null vectors on F0 + sum_k z_k F_k for every z; two deterministic random
    combinations expose that null space and each candidate direction is
    verified against every matrix before being projected out.
    """
    n = f0.shape[0]
    rng = np.random.default_rng(2024)
    m = F.shape[0]
    candidates = None
    for _ in range(2):
        z = rng.standard_normal(m)
        mat = f0 + np.tensordot(z, F, axes=(0, 0))
        w, vecs = np.linalg.eigh(mat)
        null = vecs[:, np.abs(w) < 1e-8 * max(1.0, np.abs(w).max())]
        if candidates is None:
            candidates = null
        elif candidates.shape[1] == 0 or null.shape[1] == 0:
            candidates = np.zeros((n, 0))
        else:
            # intersection via principal angles: singular values near 1
            u, sv, _ = np.linalg.svd(candidates.T @ null)
            keep = sv > 1.0 - 1e-8
            candidates = candidates @ u[:, keep]
    if candidates is None or candidates.shape[1] == 0:
        return np.eye(n)
    # verify candidates annihilate every matrix, drop any that fail
    ok_cols = []
    for col in range(candidates.shape[1]):
        v = candidates[:, col]
        res = max(float(np.max(np.abs(f0 @ v))),
                  float(np.max(np.abs(F @ v))))
        if res < 1e-7:
            ok_cols.append(col)
    null_basis = candidates[:, ok_cols]
    if null_basis.shape[1] == 0:
        return np.eye(n)
    # orthonormal complement
    q, _ = np.linalg.qr(np.hstack([null_basis,
                                   np.eye(n)]))
    comp = q[:, null_basis.shape[1]: n]
    return comp


@dataclass(frozen=True)
class NpaBound:
    """Device-independent guessing bound with solver diagnostics."""

    report: GuessReport
    status: str
    gap: float
    iterations: int
    value_dual: float


DEFAULT_CONE_SHIFT = 1e-5

#: Solver tolerances for the moment relaxations.  Their optima sit exactly on
#: the cone boundary (the observed data pins a face), so the termination
#: targets are set at the level the geometry supports; the reported duality
#: gap stays below 1e-6.
NPA_SOLVER_CONFIG = SdpConfig(gap_tol=1e-6, res_tol=1e-6)


def di_guess_bound(p_obs: JointDistribution | None, setting,
                   config: SdpConfig | None = None,
                   profile="default",
                   cone_shift: float = DEFAULT_CONE_SHIFT) -> NpaBound:
    """Upper bound on the adversary's guessing probability compatible with
    the observed table, hence a certified lower bound ``-log2 G`` on the
    randomness of the target setting's outcome pair.

    ``cone_shift`` relaxes the moment-matrix cone by a small diagonal
    margin; the relaxed optimum can only exceed the exact one, so the
    certificate direction of the bound is preserved.  Raises
    :class:`SolverFailureError` if the interior-point method does not reach
    its optimality tolerances, and :class:`InfeasibleError` if the observed
    table contradicts itself.
    """
    mp = build_problem(p_obs, setting, profile=profile)
    compiled = compile_problem(mp, cone_shift=cone_shift)
    cfg = config if config is not None else NPA_SOLVER_CONFIG
    sol = solve(compiled.problem, cfg)
    if sol.status != "optimal":
        raise SolverFailureError(sol)
    g_primal = compiled.objective_const - sol.primal_value
    g_dual = compiled.objective_const - sol.dual_value
    g = min(max(g_primal, g_dual), 1.0)
    report = GuessReport.from_probability(
        g, f"npa[{'x'.join(map(str, mp.setting))}]")
    return NpaBound(report=report, status=sol.status, gap=sol.gap,
                    iterations=sol.iterations, value_dual=g_dual)


def canonical_realization(kind: str, eps1: float, setting,
                          cfg: CglmpSettings = CglmpSettings()):
    """Explicit operator realization of the canonical mixture-instrument
    chain, for feasibility-witness checks.

    The first Bob round is dilated to joint projectors on system (x) outcome
    register (x) branch register; the adversary holds a purification of the
    branch register and guesses the modal outcome pair of each branch for
    the target setting.  Returns the letter-to-operator map and the joint
    state vector; the moment matrix of this realization satisfies every
    compiled constraint.
    """
    y1s, y2s = (int(setting[0]), int(setting[1]))
    state = canonical_state(kind)
    decomps = []
    for y in (0, 1):
        basis = _povm_basis(measurement_basis("bob", y, cfg))
        decomps.append(extremal_decomposition(WeakPovmSpec(eps1, basis)))
    n_branch = len(decomps[0].branches)
    if len(decomps[1].branches) != n_branch:
        raise ShapeMismatchError("setting-dependent branch counts are not supported")
    rounds = [_dilate_round(d, DEFAULT_TOL) for d in decomps]
    dims = (3, 3, 3, n_branch, n_branch)  # Alice, Bob, outcome reg, branch reg, adversary

    def embed(op, first_slot, n_slots):
        mats, i = [], 0
        while i < len(dims):
            if i == first_slot:
                mats.append(op)
                i += n_slots
            else:
                mats.append(np.eye(dims[i]))
                i += 1
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    letter_ops = {}
    for x in (0, 1):
        alice = measurement_basis("alice", x, cfg)
        for a in range(3):
            letter_ops[Letter(ALICE, x, a)] = embed(alice.elements[a], 0, 1)
    for y in (0, 1):
        for b in range(3):
            letter_ops[Letter(1, y, b)] = embed(rounds[y].projectors[b], 1, 3)
        bob2 = measurement_basis("bob", y, cfg)
        for b in range(3):
            letter_ops[Letter(2, y, b)] = embed(bob2.elements[b], 1, 1)

    # adversary guess: modal outcome pair per branch of the target setting
    dec = decomps[y1s]
    bob2 = measurement_basis("bob", y2s, cfg)
    rho = state.projector()
    guess = {}
    for j, (w, pvm) in enumerate(dec.branches):
        table = np.empty((3, 3))
        for b1 in range(3):
            embed_b1 = np.kron(np.eye(3), pvm.elements[b1])
            sand = embed_b1 @ rho @ embed_b1
            for b2 in range(3):
                table[b1, b2] = np.trace(np.kron(np.eye(3), bob2.elements[b2]) @ sand).real
        guess[j] = int(np.argmax(table))
    for e in range(_EVE_OUTCOMES):
        proj = np.zeros((n_branch, n_branch), dtype=complex)
        for j, g in guess.items():
            if g == e:
                proj[j, j] = 1.0
        letter_ops[Letter(EVE, 0, e)] = embed(proj, 4, 1)

    psi_ab = state.amplitudes.reshape(3, 3)
    anc = np.zeros((3, n_branch, n_branch), dtype=complex)
    for j, (w, _) in enumerate(dec.branches):
        anc[0, j, j] = np.sqrt(w)
    psi = np.tensordot(psi_ab, anc, axes=0).reshape(-1)
    return letter_ops, psi


def realization_moment_matrix(mp: MomentProblem, letter_ops: dict,
                              psi: np.ndarray) -> np.ndarray:
    """Complex Hermitian moment matrix of an explicit operator realization.

    ``letter_ops`` maps each :class:`Letter` to an operator on the space of
    ``psi``; words act in letter order.  The resulting Gram matrix is a
    feasibility witness for the compiled relaxation.
    """
    vecs = []
    for w in mp.words:
        v = psi
        for letter in reversed(w.letters):
            v = letter_ops[letter] @ v
        vecs.append(v)
    stack = np.column_stack(vecs)
    return stack.conj().T @ stack


def check_moment_matrix(mp: MomentProblem, H: np.ndarray) -> dict:
    """Residuals of a Hermitian matrix against every generated constraint.

    Returns the worst-case residuals: zero entries, equal-moment ties,
    self-adjointness (imaginary parts), every equality row, and the minimum
    eigenvalue of the real part (which should be nonnegative).
    """
    n = len(mp.words)
    values: dict = {}
    res_zero = 0.0
    res_tie = 0.0
    res_imag = 0.0
    for (i, j), key in mp.entries.items():
        v = H[i, j]
        if key is None:
            res_zero = max(res_zero, abs(v))
            continue
        word = Word(letters=tuple(Letter(*t) for t in key))
        if _moment_rep(word) == _moment_rep(adjoint(word)) and \
                word.key() == adjoint(word).key():
            res_imag = max(res_imag, abs(v.imag))
        if key in values:
            res_tie = max(res_tie, abs(v.real - values[key]))
        else:
            values[key] = v.real
    res_eq = 0.0
    for row, const in mp.equalities:
        acc = -const
        for k, c in row.items():
            acc += c * values.get(k, 0.0)
        res_eq = max(res_eq, abs(acc))
    eigs = np.linalg.eigvalsh(0.5 * (H + H.conj().T).real)
    return {
        "zero_entries": res_zero,
        "moment_ties": res_tie,
        "imag_parts": res_imag,
        "equalities": res_eq,
        "min_eigenvalue": float(eigs[0]),
    }
