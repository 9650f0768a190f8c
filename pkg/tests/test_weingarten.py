import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from haartrace.combinatorics import (
    Permutation,
    all_permutations,
    enumerate_pairings,
    gamma_pairing,
    loop_count,
    perm_pairing,
)
from haartrace.errors import SingularGramError, SizeLimitError
from haartrace.sampling import haar_batch
from haartrace.weingarten import (
    RationalMatrix,
    eta,
    gram_orthogonal,
    gram_unitary,
    hyperoctahedral_group,
    joint_moment_orthogonal,
    joint_moment_unitary,
    orthogonal_gram_weingarten,
    orthogonal_table,
    particular_permutations,
    sigma_of,
    t_of_perm,
    tau_of_signs,
    unitary_gram_weingarten,
    unitary_table,
    weingarten_orthogonal,
    weingarten_unitary,
)


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------

def test_rational_matrix_inverse_roundtrip():
    m = RationalMatrix([[Fraction(1, 2), 3, 0], [1, 1, 4], [0, 2, 1]])
    assert (m @ m.invert()).is_identity()
    assert (m.invert() @ m).is_identity()


@given(st.integers(0, 2**32 - 1))
def test_rational_matrix_inverse_random(seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(-6, 7, size=(4, 4))
    m = RationalMatrix(a.tolist())
    try:
        inv = m.invert()
    except SingularGramError:
        assert round(np.linalg.det(a.astype(float))) == 0
        return
    assert (m @ inv).is_identity()


def test_singular_matrix_raises():
    with pytest.raises(SingularGramError):
        RationalMatrix([[1, 2], [2, 4]]).invert()


def test_adjugate_oracle_3x3_orthogonal_gram():
    # exact 3x3 inversion by cofactors, fully independent of the solver
    n = 4
    g = [[n**2, n, n], [n, n**2, n], [n, n, n**2]]
    det = (g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
           - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
           + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]))
    adj = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            sub = [[g[r][c] for c in range(3) if c != j] for r in range(3) if r != i]
            cof = sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0]
            adj[j][i] = (-1) ** (i + j) * cof
    expected = [[Fraction(adj[i][j], det) for j in range(3)] for i in range(3)]
    got = gram_orthogonal(2, n).invert()
    assert [list(row) for row in got.entries] == expected


# ---------------------------------------------------------------------------
# unitary Gram and Weingarten
# ---------------------------------------------------------------------------

def test_gram_unitary_small():
    for n in (1, 3, 7):
        assert gram_unitary(1, n).entries == ((Fraction(n),),)
        g2 = gram_unitary(2, n)
        assert g2.entries == ((Fraction(n * n), Fraction(n)), (Fraction(n), Fraction(n * n)))


def test_gram_unitary_matches_loop_oracle():
    n, k = 5, 3
    perms = all_permutations(k)
    g = gram_unitary(k, n)
    for i, a in enumerate(perms):
        for j, b in enumerate(perms):
            assert g[i, j] == n ** loop_count(perm_pairing(a), perm_pairing(b))
            # loop count of bipartite pairings equals the cycle count of b a^-1
            assert g[i, j] == n ** (b * a.inverse()).num_cycles


def test_weingarten_unitary_closed_forms():
    for n in (2, 3, 4, 6):
        assert weingarten_unitary(n, (1,)) == Fraction(1, n)
        assert weingarten_unitary(n, (1, 1)) == Fraction(1, n * n - 1)
        assert weingarten_unitary(n, (2,)) == Fraction(-1, n * (n * n - 1))
    assert weingarten_unitary(3, (1, 1)) == Fraction(1, 8)
    assert weingarten_unitary(3, (2,)) == Fraction(-1, 24)


def test_weingarten_unitary_class_function():
    for k in (2, 3):
        perms, _, inv = unitary_gram_weingarten(k, 5)
        ididx = perms.index(Permutation.identity(k))
        for tau in perms:
            for sig in perms:
                conj = tau * sig * tau.inverse()
                assert weingarten_unitary(5, conj) == inv[ididx, perms.index(sig)]


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_gram_times_weingarten_identity_full_range(k):
    for n in range(2 * k, 2 * k + 5):
        _, gram, inv = unitary_gram_weingarten(k, n)
        assert (gram @ inv).is_identity()
    if k <= 3:
        for n in range(2 * k, 2 * k + 5):
            _, gram, inv = orthogonal_gram_weingarten(k, n)
            assert (gram @ inv).is_identity()


def test_singular_gram_is_error_not_pseudoinverse():
    with pytest.raises(SingularGramError):
        weingarten_unitary(1, (1, 1))
    with pytest.raises(SingularGramError):
        weingarten_unitary(3, (1, 1, 1, 1))
    with pytest.raises(SingularGramError):
        weingarten_orthogonal(2, (1, 1, 1))


def test_order_guards():
    with pytest.raises(SizeLimitError):
        weingarten_unitary(10, (1,) * 5)
    with pytest.raises(SizeLimitError):
        weingarten_orthogonal(10, (1, 1, 1, 1))
    with pytest.raises(SizeLimitError):
        gram_unitary(5, 10)
    with pytest.raises(SizeLimitError):
        gram_orthogonal(4, 10)


def test_weingarten_unitary_monte_carlo():
    # MC oracle for W(n, id_3) = E(U11 U22 U33 conj U11 conj U22 conj U33)
    n, reps = 5, 200_000
    batch = haar_batch("unitary", n, reps, master_seed=505)
    prod = batch[:, 0, 0] * batch[:, 1, 1] * batch[:, 2, 2]
    x = np.abs(prod) ** 2
    exact = float(weingarten_unitary(n, (1, 1, 1)))
    se = x.std(ddof=1) / np.sqrt(reps)
    assert abs(x.mean() - exact) < 3 * se


# ---------------------------------------------------------------------------
# hyperoctahedral machinery
# ---------------------------------------------------------------------------

def test_eta_basics():
    k = 3
    assert eta(Permutation.identity(2 * k)) == gamma_pairing(k)
    for eps in itertools.product((1, -1), repeat=k):
        assert eta(tau_of_signs(eps)) == gamma_pairing(k)
    with pytest.raises(ValueError):
        eta(Permutation.identity(3))


@given(st.integers(0, 2**32 - 1))
def test_eta_right_invariant_under_h3(seed):
    rng = np.random.default_rng(seed)
    g = Permutation(tuple(int(x) + 1 for x in rng.permutation(6)))
    for h in hyperoctahedral_group(3):
        assert eta(g * h) == eta(g)


def test_t_and_tau_embeddings():
    assert t_of_perm(Permutation.identity(3)) == Permutation.identity(6)
    pi = Permutation.from_cycles(2, [(1, 2)])
    assert t_of_perm(pi).images == (1, 2, 4, 3)
    assert tau_of_signs((1, 1)) == Permutation.identity(4)
    assert tau_of_signs((-1, -1)).images == (3, 4, 1, 2)  # the reference involution


def test_hyperoctahedral_is_centralizer():
    import math
    for k in (1, 2, 3):
        group = hyperoctahedral_group(k)
        assert len(group) == 2**k * math.factorial(k)
        gamma = tau_of_signs((-1,) * k)
        assert all(h * gamma == gamma * h for h in group)


def test_particular_permutation_counts_and_condition():
    import math
    for k in (1, 2, 3):
        pairs = particular_permutations(k)
        assert len(pairs) == math.factorial(2 * k) // (2**k * math.factorial(k))
        for eps, pi in pairs:
            assert all(eps[c[0] - 1] == 1 for c in pi.cycles())
    assert particular_permutations(1) == [((1,), Permutation.identity(1))]


def test_particular_permutations_hit_each_coset_once():
    # right cosets g H_2 partition S_4; each contains exactly one tau_eps t_pi
    h2 = set(hyperoctahedral_group(2))
    particulars = {tau_of_signs(eps) * t_of_perm(pi) for eps, pi in particular_permutations(2)}
    seen_cosets = []
    for g in all_permutations(4):
        coset = frozenset(g * h for h in h2)
        if coset not in seen_cosets:
            seen_cosets.append(coset)
    assert len(seen_cosets) == 3
    for coset in seen_cosets:
        assert len(coset & particulars) == 1


def test_sigma_of_basics():
    for k in (1, 2, 3):
        assert sigma_of(Permutation.identity(2 * k)) == Permutation.identity(k)
        for eps in itertools.product((1, -1), repeat=k):
            assert sigma_of(tau_of_signs(eps)) == Permutation.identity(k)
    for pi in all_permutations(3):
        assert sigma_of(t_of_perm(pi)).cycle_type() == pi.cycle_type()


def test_sigma_of_lands_in_the_same_double_coset():
    h2 = hyperoctahedral_group(2)
    for big in all_permutations(4):
        rep = t_of_perm(sigma_of(big))
        assert any(h1 * rep * h2e == big for h1 in h2 for h2e in h2)


def test_sigma_of_reproduces_gram_inverse_full_s4():
    pairings = enumerate_pairings(4)
    index = {p: i for i, p in enumerate(pairings)}
    _, _, inv = orthogonal_gram_weingarten(2, 5)
    gidx = index[gamma_pairing(2)]
    for big in all_permutations(4):
        assert weingarten_orthogonal(5, big) == inv[gidx, index[eta(big)]]


# ---------------------------------------------------------------------------
# orthogonal Gram and Weingarten
# ---------------------------------------------------------------------------

def test_gram_orthogonal_k2_structure():
    for n in (3, 4, 6):
        g = gram_orthogonal(2, n)
        assert g.rows == g.cols == 3
        for i in range(3):
            for j in range(3):
                assert g[i, j] == (n * n if i == j else n)


def test_weingarten_orthogonal_closed_forms():
    for n in (3, 4, 6, 9):
        assert weingarten_orthogonal(n, (1,)) == Fraction(1, n)
        assert weingarten_orthogonal(n, (1, 1)) == Fraction(n + 1, n * (n + 2) * (n - 1))
        assert weingarten_orthogonal(n, (2,)) == Fraction(-1, n * (n + 2) * (n - 1))


def test_orthogonal_gram_weingarten_identity():
    for k, n in [(1, 3), (2, 4), (3, 6), (3, 4)]:
        _, gram, inv = orthogonal_gram_weingarten(k, n)
        assert (gram @ inv).is_identity()


def test_weingarten_orthogonal_double_coset_invariance():
    for k in (1, 2):
        hk = hyperoctahedral_group(k)
        for big in all_permutations(2 * k):
            base = weingarten_orthogonal(6, big)
            for h1 in hk:
                for h2 in hk:
                    assert weingarten_orthogonal(6, h1 * big * h2) == base


def test_tables_are_memoized_views():
    t1 = unitary_table(5, 2)
    assert t1.group == "unitary" and t1.n == 5 and t1.order == 2
    assert t1.values[(1, 1)] == Fraction(1, 24)
    t2 = orthogonal_table(4, 2)
    assert t2.values[(1, 1)] == Fraction(5, 72)


# ---------------------------------------------------------------------------
# joint entry moments
# ---------------------------------------------------------------------------

def test_joint_moment_unitary_paper_values():
    for n in range(2, 9):
        assert joint_moment_unitary((1, 1), (1, 1), n) == Fraction(1, n)
        assert joint_moment_unitary((1, 1, 1, 1), (1, 1, 1, 1), n) == Fraction(2, n * (n + 1))
        assert joint_moment_unitary((1, 1, 1, 1), (1, 2, 1, 2), n) == Fraction(1, n * (n + 1))
        assert joint_moment_unitary((1, 2, 1, 2), (1, 2, 1, 2), n) == Fraction(1, n * n - 1)


def test_joint_moment_unitary_unbalanced_vanishes():
    # unmatched conjugation pattern has no admissible pairing
    assert joint_moment_unitary((1, 2, 1, 1), (1, 1, 1, 1), 4) == 0


def test_joint_moment_orthogonal_paper_values():
    for n in range(4, 9):
        assert joint_moment_orthogonal((1, 1, 1, 1), (1, 1, 1, 1), n) == Fraction(3, n * (n + 2))
        assert joint_moment_orthogonal((1, 1, 1, 1), (1, 2, 1, 2), n) == Fraction(1, n * (n + 2))
        assert joint_moment_orthogonal((1, 2, 1, 2), (1, 2, 1, 2), n) == \
            Fraction(n + 1, n * (n + 2) * (n - 1))
        assert joint_moment_orthogonal((1, 1, 1, 1), (1, 1, 1, 2), n) == 0


def test_joint_moment_index_validation():
    with pytest.raises(ValueError):
        joint_moment_unitary((1, 1), (1, 9), 4)
    with pytest.raises(ValueError):
        joint_moment_unitary((1, 1, 1), (1, 1, 1), 4)
    with pytest.raises(SizeLimitError):
        joint_moment_orthogonal((1,) * 8, (1,) * 8, 12)


@given(st.integers(0, 2**32 - 1))
def test_joint_moment_relabeling_invariance(seed):
    rng = np.random.default_rng(seed)
    n, k = 6, 2
    i = tuple(int(x) for x in rng.integers(1, n + 1, size=2 * k))
    j = tuple(int(x) for x in rng.integers(1, n + 1, size=2 * k))
    rowmap = {a + 1: int(b) + 1 for a, b in enumerate(rng.permutation(n))}
    colmap = {a + 1: int(b) + 1 for a, b in enumerate(rng.permutation(n))}
    base = joint_moment_unitary(i, j, n)
    assert base == joint_moment_unitary(
        tuple(rowmap[x] for x in i), tuple(colmap[x] for x in j), n)
