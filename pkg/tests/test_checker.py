import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_dtmc, random_path, random_prop
from patternmc.checker import (
    Alpha,
    And,
    Atomic,
    Filter,
    Next,
    Not,
    Prob,
    TrueF,
    Until,
    enumerate_oracle,
    evaluate,
    eventually,
    filtered_prob,
    monte_carlo,
    parse,
    parse_path,
    parse_state,
    prob_from_init,
    prob_path,
    prob_vector,
    sat,
)
from patternmc.exceptions import EmptyFilterError, FormulaError, ModelError, UnknownPropositionError
from patternmc.model import Dtmc, StateSpace


def two_state(p_ab=0.3, p_ba=0.0):
    space = StateSpace((1, 2), {1: {"a"}, 2: {"b"}})
    return Dtmc(space, [1.0, 0.0], [[1 - p_ab, p_ab], [p_ba, 1 - p_ba]])


def with_init(first=1):
    """init -> first (deterministic), then a 2-state chain a <-> b."""
    space = StateSpace((0, 1, 2), {0: {"init"}, 1: {"a"}, 2: {"b"}}, has_dummy_init=True)
    trans = np.zeros((3, 3))
    trans[0, first] = 1.0
    trans[1] = [0, 0.7, 0.3]
    trans[2] = [0, 0.5, 0.5]
    return Dtmc(space, [1.0, 0, 0], trans)


class TestSat:
    def test_true(self):
        assert sat(two_state(), TrueF()).all()

    def test_atomic(self, yoshi_umm):
        feed = sat(yoshi_umm, Atomic("feed"))
        expected = [i for i in range(yoshi_umm.dtmc.n) if yoshi_umm.pair(i)[0] == 2]
        assert list(np.flatnonzero(feed)) == expected

    def test_unknown(self):
        with pytest.raises(UnknownPropositionError, match="zzz"):
            sat(two_state(), Atomic("zzz"))

    def test_bounded_prob_operator(self):
        d = two_state(p_ab=0.6)
        assert sat(d, Prob(Next(Atomic("b")), ">=", 0.5))[0]
        assert not sat(d, Prob(Next(Atomic("b")), ">", 0.6))[0]

    def test_query_has_no_truth_value(self):
        with pytest.raises(FormulaError):
            sat(two_state(), Prob(Next(Atomic("b"))))


class TestProbPath:
    def test_zero_steps(self):
        d = two_state()
        assert prob_path(d, 1, Until(TrueF(), Atomic("b"), 0)) == 0.0
        assert prob_path(d, 2, Until(TrueF(), Atomic("b"), 0)) == 1.0

    def test_one_step_enumeration(self):
        # paths of one step from A: A->A (0.7, fails), A->B (0.3, holds)
        assert prob_path(two_state(0.3), 1, eventually(Atomic("b"), 1)) == pytest.approx(0.3, abs=1e-15)

    def test_until_recursion_two_steps(self):
        # A stays with 0.7 then moves with 0.3: 0.3 + 0.7 * 0.3
        assert prob_path(two_state(0.3), 1, eventually(Atomic("b"), 2)) == pytest.approx(0.51, abs=1e-15)

    def test_unbounded(self):
        assert prob_path(two_state(0.3), 1, eventually(Atomic("b"))) == pytest.approx(1.0, abs=1e-10)

    def test_unreachable_is_zero(self):
        d = two_state(0.0)
        assert prob_path(d, 1, eventually(Atomic("b"))) == 0.0

    def test_next_duality(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            d = random_dtmc(rng)
            phi = random_prop(rng)
            total = prob_vector(d, Next(phi)) + prob_vector(d, Next(Not(phi)))
            np.testing.assert_allclose(total, 1.0, atol=1e-14)

    def test_true_until_true_is_one(self):
        rng = np.random.default_rng(6)
        d = random_dtmc(rng)
        np.testing.assert_array_equal(prob_vector(d, Until(TrueF(), TrueF(), 4)), 1.0)

    def test_restricted_missing_mass(self):
        space = StateSpace((1,), {1: {"a"}})
        d = Dtmc(space, [1.0], [[0.6]], restricted=True)
        assert prob_path(d, 1, Next(Atomic("a"))) == 0.6
        assert prob_path(d, 1, eventually(Atomic("a"), 3)) == 1.0
        assert prob_path(d, 1, Next(Until(TrueF(), Atomic("a"), 2))) == 0.6


class TestFromInit:
    def test_shifted_by_one_step(self):
        d = with_init(first=1)
        for N in range(1, 6):
            assert prob_from_init(d, eventually(Atomic("b"), N)) == pytest.approx(
                prob_path(d, 1, eventually(Atomic("b"), N - 1)), abs=1e-15
            )
        # by hand: init->a, then reach b within N-1 steps from a
        assert prob_from_init(d, eventually(Atomic("b"), 3)) == pytest.approx(1 - 0.7**2, abs=1e-15)

    def test_init_immediately(self):
        assert prob_from_init(with_init(), eventually(Atomic("init"), 0)) == 1.0

    def test_unlabelled_target(self):
        space = StateSpace((0, 1), {0: {"init"}, 1: {"a", "unused"}}, has_dummy_init=True)
        d = Dtmc(space, [1, 0], [[0, 1], [0, 1]])
        assert prob_from_init(d, eventually(Not(TrueF()), 9)) == 0.0

    def test_requires_dummy(self):
        with pytest.raises(ModelError):
            prob_from_init(two_state(), eventually(Atomic("b"), 1))


class TestFiltered:
    def test_unique_state_filters_agree(self):
        d = with_init()
        psi = eventually(Atomic("b"), 3)
        values = {op: filtered_prob(d, op, Atomic("a"), psi) for op in ("min", "max", "avg")}
        assert values["min"] == values["max"] == values["avg"] == prob_path(d, 1, psi)

    def test_min_hits_zero(self):
        d = two_state(0.3, 0.0)
        assert filtered_prob(d, "min", TrueF(), Next(Atomic("a"))) == 0.0

    def test_empty(self):
        with pytest.raises(EmptyFilterError):
            filtered_prob(two_state(), "min", And(Atomic("a"), Atomic("b")), Next(Atomic("a")))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_min_avg_max_order(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dtmc(rng, n=5)
        phi, psi = random_prop(rng), random_path(rng)
        if not sat(d, phi).any():
            return
        lo, mid, hi = (filtered_prob(d, op, phi, psi) for op in ("min", "avg", "max"))
        assert lo <= mid + 1e-15 and mid <= hi + 1e-15


class TestOracle:
    def test_zero_horizon(self):
        d = two_state()
        assert enumerate_oracle(d, 2, eventually(Atomic("b"), 0)) == 1.0
        assert enumerate_oracle(d, 1, eventually(Atomic("b"), 0)) == 0.0

    def test_guard(self):
        rng = np.random.default_rng(0)
        d = random_dtmc(rng, n=6)
        with pytest.raises(ValueError):
            enumerate_oracle(d, 0, eventually(Atomic("a"), 10))

    def test_unbounded_rejected(self):
        with pytest.raises(FormulaError):
            enumerate_oracle(two_state(), 1, eventually(Atomic("b")))

    def test_absorbing_target_approaches_reachability(self):
        space = StateSpace((0, 1, 2), {0: {"s"}, 1: {"goal"}, 2: {"trap"}})
        trans = [[0.5, 0.3, 0.2], [0, 1, 0], [0, 0, 1]]
        d = Dtmc(space, [1, 0, 0], trans)
        exact = prob_path(d, 0, eventually(Atomic("goal")))
        assert exact == pytest.approx(0.6, abs=1e-12)
        prev = 0.0
        for N in (2, 6, 10, 14):
            approx = enumerate_oracle(d, 0, eventually(Atomic("goal"), N))
            assert approx == pytest.approx(0.6 * (1 - 0.5**N), abs=1e-12)
            assert prev < approx < exact
            prev = approx

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_backward_recursion(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dtmc(rng)
        psi = random_path(rng)
        s = int(rng.integers(d.n))
        assert prob_path(d, s, psi) == pytest.approx(enumerate_oracle(d, s, psi), abs=1e-10)

    def test_monte_carlo_agrees(self):
        d = with_init()
        psi = eventually(Atomic("b"), 3)
        est, se = monte_carlo(d, 0, psi, 200_000, seed=1)
        assert abs(est - enumerate_oracle(d, 0, psi)) <= 4 * se


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_in_horizon(self, seed):
        rng = np.random.default_rng(seed)
        d = random_dtmc(rng)
        left, right = random_prop(rng), random_prop(rng)
        prev = np.zeros(d.n)
        for N in range(12):
            cur = prob_vector(d, Until(left, right, N))
            assert np.all(cur >= prev - 1e-15)
            assert np.all((cur >= 0) & (cur <= 1))
            prev = cur

    def test_unbounded_is_limit(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            d = random_dtmc(rng)
            left, right = random_prop(rng), random_prop(rng)
            a = prob_vector(d, Until(left, right))
            b = prob_vector(d, Until(left, right, 2000))
            assert np.max(np.abs(a - b)) <= 1e-8


class TestParser:
    def test_q1_text(self):
        f = parse('P=?[(!"feed") U<=5 ((alpha=1)&"feed")]')
        assert f == Prob(Until(Not(Atomic("feed")), And(Alpha(1), Atomic("feed")), 5))

    def test_q2_filter_text(self):
        text = 'filter(min,P=?[X(((alpha=1)&(!"pick")&(!"feed"))U((alpha=1)&"feed"))],((alpha=1)&"feed"))'
        f = parse(text)
        assert isinstance(f, Filter) and f.op.value == "min"
        assert isinstance(f.query.path, Next) and isinstance(f.query.path.operand, Until)
        assert f.query.path.operand.bound is None

    def test_printing_roundtrips(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            psi = random_path(rng)
            assert parse_path(str(psi)) == psi
            assert parse(str(Prob(psi))) == Prob(psi)

    def test_bounded_prob_and_derived_ops(self):
        f = parse_state('P>=0.5 [ X "b" ] | false')
        assert f == Not(And(Not(Prob(Next(Atomic("b")), ">=", 0.5)), Not(Not(TrueF()))))

    def test_strict_bound_and_eventually(self):
        assert parse_path('F<3 "a"') == Until(TrueF(), Atomic("a"), 2)
        assert parse_path("true U a") == Until(TrueF(), Atomic("a"), None)
        assert parse_path("X k=2") == Next(Alpha(2))

    @pytest.mark.parametrize(
        "text, pos",
        [
            ('P=?[ "a" U<= ]', 13),
            ('P=?[ "a" ', 9),
            ("P=?[ a U b ] junk", 13),
            ("P=?[ a # b ]", 7),
            ("P>1.5[ X a ]", None),
        ],
    )
    def test_errors_carry_position(self, text, pos):
        with pytest.raises(FormulaError) as err:
            parse(text)
        assert err.value.position == pos

    def test_evaluate_text(self):
        d = with_init()
        assert evaluate(d, 'P=?[ F<=3 "b" ]') == pytest.approx(1 - 0.7**2)
        assert evaluate(d, 'filter(max, P=?[ X "b" ], "a"|"b")') == pytest.approx(0.5)
        assert evaluate(d, '"init"') is True
