"""Tests for adversarial guessing probabilities and strategy constructions."""

import numpy as np
import pytest

from seqrand.cglmp import canonical_state, measurement_basis
from seqrand.guessing import (
    ConstraintViolatedError,
    EnsembleDecomposition,
    NotProjectiveError,
    OutOfRangeError,
    cglmp_attack,
    classical_guess,
    eve_optimal_pvm,
    guess_cglmp,
    min_entropy,
    naimark_dilation,
    quantum_guess_eval,
    recovery_residual,
)
from seqrand.qcore import DensityOperator, StateVector, validate_povm
from seqrand.seqsim import PvmMixture, WeakPovmSpec, extremal_decomposition


def random_pvm(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(a)
    return validate_povm([np.outer(q[:, i], q[:, i].conj()) for i in range(d)])


def random_density(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_state(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector(v / np.linalg.norm(v))


def random_mixture(d, n_branches, rng):
    w = rng.dirichlet(np.ones(n_branches))
    return PvmMixture(branches=tuple((w[j], random_pvm(d, rng)) for j in range(n_branches)))


class TestMinEntropy:
    @pytest.mark.parametrize("g,h", [(0.5, 1.0), (1.0, 0.0), (0.25, 2.0)])
    def test_values(self, g, h):
        assert min_entropy(g) == pytest.approx(h, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            min_entropy(0.0)
        with pytest.raises(OutOfRangeError):
            min_entropy(1.5)


Z2 = validate_povm([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


class TestClassicalGuess:
    def test_eigen_ensemble_saturates(self):
        ens = EnsembleDecomposition.eigen(DensityOperator(np.eye(2) / 2))
        rep = classical_guess(ens, [Z2])
        assert rep.guess_probability == pytest.approx(1.0, abs=1e-12)

    def test_unbiased_pure_state(self):
        plus = StateVector(np.array([1.0, 1.0]) / np.sqrt(2))
        rep = classical_guess(EnsembleDecomposition.trivial(plus), [Z2])
        assert rep.guess_probability == pytest.approx(0.5, abs=1e-12)

    def test_chsh_warmup_correlated_branches(self):
        # two-qubit maximally entangled state; both rounds use the same
        # projective decomposition of an unsharp qubit measurement, and the
        # adversary's branch choice is perfectly correlated across rounds
        phi = StateVector(np.array([1.0, 0, 0, 1.0]) / np.sqrt(2))
        eye2 = np.eye(2)
        p0 = validate_povm([np.kron(eye2, np.diag([1.0, 0.0])),
                            np.kron(eye2, np.diag([0.0, 1.0]))])
        p1 = validate_povm([np.kron(eye2, np.diag([0.0, 1.0])),
                            np.kron(eye2, np.diag([1.0, 0.0]))])
        eps0 = 0.7
        mix = PvmMixture(branches=((eps0, p0), (1 - eps0, p1)))
        joint = np.zeros((1, 2, 2))
        joint[0, 0, 0] = eps0
        joint[0, 1, 1] = 1 - eps0
        rep = classical_guess(EnsembleDecomposition.trivial(phi), [mix, mix],
                              joint_weights=joint)
        assert rep.guess_probability == pytest.approx(0.5, abs=1e-12)
        assert rep.min_entropy_bits == pytest.approx(1.0, abs=1e-12)

    def test_relabeling_invariance(self):
        # permuting every branch's outcome labels leaves the optimum alone
        rng = np.random.default_rng(10)
        psi = random_state(3, rng)
        mixes = [random_mixture(3, 3, rng) for _ in range(2)]
        base = classical_guess(EnsembleDecomposition.trivial(psi), mixes).guess_probability
        perm = [2, 0, 1]
        relabeled = []
        for mix in mixes:
            branches = []
            for w, pvm in mix.branches:
                elems = [pvm.elements[perm[b]] for b in range(3)]
                branches.append((w, validate_povm(elems)))
            relabeled.append(PvmMixture(branches=tuple(branches)))
        new = classical_guess(EnsembleDecomposition.trivial(psi), relabeled).guess_probability
        assert new == pytest.approx(base, abs=1e-12)

    def test_duplicate_branch_split_never_decreases(self):
        # splitting a branch into identical sub-branches is the trivial
        # refinement; the guessing probability must not decrease
        rng = np.random.default_rng(11)
        for _ in range(10):
            psi = random_state(3, rng)
            mix = random_mixture(3, 2, rng)
            (w0, p0), (w1, p1) = mix.branches
            fine = PvmMixture(branches=((0.5 * w0, p0), (0.5 * w0, p0), (w1, p1)))
            g_coarse = classical_guess(EnsembleDecomposition.trivial(psi), [mix]).guess_probability
            g_fine = classical_guess(EnsembleDecomposition.trivial(psi), [fine]).guess_probability
            assert g_fine >= g_coarse - 1e-12

    def test_flattened_convex_combination(self):
        rng = np.random.default_rng(12)
        psi = random_state(3, rng)
        m1, m2 = random_mixture(3, 2, rng), random_mixture(3, 3, rng)
        pi = 0.3
        flat = PvmMixture(branches=tuple((pi * w, p) for w, p in m1.branches)
                          + tuple(((1 - pi) * w, p) for w, p in m2.branches))
        g1 = classical_guess(EnsembleDecomposition.trivial(psi), [m1]).guess_probability
        g2 = classical_guess(EnsembleDecomposition.trivial(psi), [m2]).guess_probability
        gf = classical_guess(EnsembleDecomposition.trivial(psi), [flat]).guess_probability
        assert gf == pytest.approx(pi * g1 + (1 - pi) * g2, abs=1e-12)


class TestEveOptimalPvm:
    def test_diagonal_case(self):
        ens = EnsembleDecomposition.eigen(DensityOperator(np.eye(2) / 2))
        povm, rep = eve_optimal_pvm(ens, [Z2])
        assert rep.guess_probability == pytest.approx(1.0, abs=1e-12)

    def test_projectors_partition_flag_space(self):
        rng = np.random.default_rng(13)
        ens = EnsembleDecomposition.eigen(random_density(3, rng))
        povm, _ = eve_optimal_pvm(ens, [random_pvm(3, rng), random_pvm(3, rng)])
        total = sum(povm.elements)
        assert np.max(np.abs(total - np.eye(ens.size))) < 1e-12

    def test_equals_classical_on_random_instances(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            ens = EnsembleDecomposition.eigen(random_density(3, rng))
            chain = [random_pvm(3, rng), random_pvm(3, rng)]
            gc = classical_guess(ens, chain).guess_probability
            _, rep = eve_optimal_pvm(ens, chain)
            assert abs(rep.guess_probability - gc) < 1e-8

    def test_requires_projective(self):
        rng = np.random.default_rng(15)
        ens = EnsembleDecomposition.eigen(random_density(3, rng))
        with pytest.raises(NotProjectiveError):
            eve_optimal_pvm(ens, [random_mixture(3, 2, rng)])


class TestNaimarkDilation:
    def test_trivial_mixture_embeds_pvm(self):
        rng = np.random.default_rng(16)
        pvm = random_pvm(3, rng)
        ext = naimark_dilation(PvmMixture(branches=((1.0, pvm),)))
        assert recovery_residual(ext) < 1e-10
        # on the initial-ancilla sector the joint projector acts as the PVM
        r = ext.rounds[0]
        for b, proj in enumerate(r.projectors):
            for s in range(3):
                for t in range(3):
                    row = s * r.outcomes * r.branches  # ancilla position (0, 0)
                    col = t * r.outcomes * r.branches
                    assert abs(proj[row, col] - pvm.elements[b][s, t]) < 1e-10

    def test_weak_decomposition_recovery(self):
        dec = extremal_decomposition(WeakPovmSpec(0.7, np.eye(3)))
        ext = naimark_dilation(dec)
        assert recovery_residual(ext) < 1e-10

    def test_matches_classical_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            psi = random_state(3, rng)
            mixes = [random_mixture(3, int(rng.integers(2, 5)), rng) for _ in range(2)]
            gc = classical_guess(EnsembleDecomposition.trivial(psi), mixes).guess_probability
            ext = naimark_dilation(mixes, state=psi)
            rep = quantum_guess_eval(psi, ext)
            assert abs(rep.guess_probability - gc) < 1e-8
            assert recovery_residual(ext) < 1e-10


class TestQuantumGuessEval:
    def test_wrong_eve_measurement_is_suboptimal(self):
        rng = np.random.default_rng(18)
        psi = random_state(3, rng)
        mixes = [random_mixture(3, 2, rng) for _ in range(2)]
        ext = naimark_dilation(mixes, state=psi)
        optimal = quantum_guess_eval(psi, ext).guess_probability
        # identity-split adversary: guess a fixed outcome pair regardless
        dim_e = int(np.prod([r.branches for r in ext.rounds]))
        wrong = [np.zeros((dim_e, dim_e)) for _ in range(9)]
        wrong[0] = np.eye(dim_e)
        value = quantum_guess_eval(psi, ext, eve_measurement=wrong).guess_probability
        assert value <= optimal + 1e-12

    def test_constraint_check_catches_bad_eve(self):
        rng = np.random.default_rng(19)
        psi = random_state(3, rng)
        ext = naimark_dilation([random_mixture(3, 2, rng)], state=psi)
        bad = [np.eye(2) for _ in range(3)]  # not a partition of identity
        with pytest.raises(ConstraintViolatedError):
            quantum_guess_eval(psi, ext, eve_measurement=bad)


class TestGuessCglmp:
    def test_projective_limit_matches_bruteforce(self):
        rep = cglmp_attack("mes", 1.0, setting=(0, 0, 1), scope="global")
        psi = canonical_state("mes").amplitudes
        pa = measurement_basis("alice", 0)
        p1 = measurement_basis("bob", 0)
        p2 = measurement_basis("bob", 1)
        best = max(
            np.vdot(psi, np.kron(pa.elements[a],
                                 p1.elements[b1] @ p2.elements[b2] @ p1.elements[b1]) @ psi).real
            for a in range(3) for b1 in range(3) for b2 in range(3)
        )
        assert rep.guess_probability == pytest.approx(best, abs=1e-12)

    def test_against_branch_enumeration_oracle(self):
        eps = 0.8
        rep = cglmp_attack("mes", eps, setting=(0, 0, 1), scope="global")
        psi = canonical_state("mes").amplitudes
        rho = np.outer(psi, psi.conj())
        pa = measurement_basis("alice", 0)
        p2 = measurement_basis("bob", 1)
        bob1 = measurement_basis("bob", 0)
        basis = np.column_stack([np.linalg.eigh(e)[1][:, -1] for e in bob1.elements])
        dec = extremal_decomposition(WeakPovmSpec(eps, basis))
        total = 0.0
        for w, pvm in dec.branches:
            best = 0.0
            for b1 in range(3):
                embed = np.kron(np.eye(3), pvm.elements[b1])
                sand = embed @ rho @ embed
                for a in range(3):
                    for b2 in range(3):
                        val = np.trace(np.kron(pa.elements[a], p2.elements[b2]) @ sand).real
                        best = max(best, val)
            total += w * best
        assert rep.guess_probability == pytest.approx(total, abs=1e-12)

    def test_dominates_modal_probability(self):
        # convexity: naming the modal outcome triple is always available
        for kind in ("mes", "mvs"):
            for eps in (0.72, 0.85):
                rep = cglmp_attack(kind, eps, setting=(0, 0, 1), scope="global")
                psi = canonical_state(kind)
                bob1 = measurement_basis("bob", 0)
                basis = np.column_stack([np.linalg.eigh(e)[1][:, -1] for e in bob1.elements])
                dec = extremal_decomposition(WeakPovmSpec(eps, basis))
                modal = 0.0
                rho = psi.projector()
                pa = measurement_basis("alice", 0)
                p2 = measurement_basis("bob", 1)
                for a in range(3):
                    for b1 in range(3):
                        for b2 in range(3):
                            val = 0.0
                            for w, pvm in dec.branches:
                                embed = np.kron(np.eye(3), pvm.elements[b1])
                                sand = embed @ rho @ embed
                                val += w * np.trace(
                                    np.kron(pa.elements[a], p2.elements[b2]) @ sand).real
                            modal = max(modal, val)
                assert rep.guess_probability >= modal - 1e-12

    def test_local_scope_marginalizes_alice(self):
        g_local = cglmp_attack("mes", 0.8, setting=(0, 0, 1), scope="local")
        g_global = cglmp_attack("mes", 0.8, setting=(0, 0, 1), scope="global")
        assert g_local.guess_probability >= g_global.guess_probability - 1e-12
        # the local value for the canonical chain is 4/27
        assert g_local.guess_probability == pytest.approx(4.0 / 27.0, abs=1e-10)

    def test_requires_projective_final_round(self):
        rng = np.random.default_rng(20)
        state = canonical_state("mes")
        dec = extremal_decomposition(WeakPovmSpec(0.8, np.eye(3)))
        soft = validate_povm([np.eye(3) / 3] * 3)
        with pytest.raises(NotProjectiveError):
            guess_cglmp(state, measurement_basis("alice", 0), dec, soft)
