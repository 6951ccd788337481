"""Expression-tree tests: protected operators, evaluation, the seeded
selection rule, random growth, subtree mutation, and serialisation."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import closed_form_uct
from evomcts.expr import (
    Const,
    DEFAULT_MAX_DEPTH,
    Expression,
    Func,
    K_VALUES,
    NodeContext,
    Var,
    evaluate,
    mutate,
    parse,
    protected_div,
    protected_log,
    protected_sqrt,
    random_subtree,
    uct_seed,
)

ANY_CTX = NodeContext(0.5, 10.0, 5.0)


def _walk(node):
    yield node
    if type(node) is Func:
        for child in node.args:
            yield from _walk(child)


def _const_values(expression):
    return [n.value for n in _walk(expression.root) if type(n) is Const]


class TestProtectedOperators:
    def test_div_near_zero_divisor_returns_one(self):
        assert protected_div(1.0, 0.0005) == 1.0
        assert protected_div(123.0, -0.0009) == 1.0
        assert protected_div(0.0, 0.0) == 1.0

    def test_div_normal(self):
        assert protected_div(6.0, 3.0) == 2.0
        assert protected_div(1.0, -2.0) == -0.5
        # Threshold is on magnitude and exclusive: 0.001 itself divides.
        assert protected_div(1.0, 0.001) == 1000.0

    def test_log_magnitude_and_floor(self):
        assert protected_log(math.e) == pytest.approx(1.0)
        assert protected_log(-math.e) == pytest.approx(1.0)
        assert protected_log(0.0) == 0.0
        assert protected_log(0.0005) == 0.0
        assert protected_log(-0.0009) == 0.0

    def test_sqrt_magnitude(self):
        assert protected_sqrt(4.0) == 2.0
        assert protected_sqrt(-4.0) == 2.0
        assert protected_sqrt(0.0) == 0.0


class TestEvaluate:
    def test_constant_leaf(self):
        e = Expression(Const(math.sqrt(2.0)))
        assert evaluate(e, ANY_CTX) == math.sqrt(2.0)
        assert evaluate(e, NodeContext(0.0, 1.0, 1.0)) == math.sqrt(2.0)

    def test_variable_leaves(self):
        ctx = NodeContext(0.25, 7.0, 3.0)
        assert evaluate(Expression(Var("Q")), ctx) == 0.25
        assert evaluate(Expression(Var("Np")), ctx) == 7.0
        assert evaluate(Expression(Var("Nc")), ctx) == 3.0

    def test_unknown_variable_rejected(self):
        with pytest.raises(ValueError):
            Var("Xp")

    def test_bad_arity_rejected(self):
        with pytest.raises(ValueError):
            Func("add", (Var("Q"),))
        with pytest.raises(ValueError):
            Func("log", (Var("Q"), Var("Nc")))
        with pytest.raises(ValueError):
            Func("pow", (Var("Q"), Var("Nc")))

    def test_protection_inside_tree(self):
        # div picks the fallback when the evaluated divisor is tiny.
        e = Expression(Func("div", (Var("Np"), Var("Q"))))
        assert evaluate(e, NodeContext(0.0, 5.0, 1.0)) == 1.0
        # log of a tiny subexpression falls back to 0.
        e = Expression(Func("log", (Var("Q"),)))
        assert evaluate(e, NodeContext(0.0, 5.0, 1.0)) == 0.0

    def test_deterministic(self):
        rng = random.Random(7)
        for _ in range(50):
            e = random_subtree(6, rng)
            ctx = NodeContext(rng.random(), 1.0 + rng.random() * 99, 1.0 + rng.random() * 9)
            assert evaluate(e, ctx) == evaluate(e, ctx)


class TestUctSeed:
    def test_serialised_shape(self):
        assert str(uct_seed(math.sqrt(2.0))) == (
            "(add Q (mul (k 1.4142135623730951) "
            "(sqrt (div (mul (k 2.0) (log Np)) Nc))))"
        )

    def test_depth_within_cap(self):
        assert uct_seed(1.0).depth() == 7
        assert uct_seed(1.0).depth() <= DEFAULT_MAX_DEPTH

    def test_value_c1(self):
        got = evaluate(uct_seed(1.0), NodeContext(0.5, 10.0, 5.0))
        assert got == pytest.approx(1.4597051824376162, abs=1e-12)
        assert got == pytest.approx(closed_form_uct(0.5, 10.0, 5.0, 1.0), abs=1e-12)

    def test_value_csqrt2(self):
        got = evaluate(uct_seed(math.sqrt(2.0)), NodeContext(0.5, 100.0, 10.0))
        assert got == pytest.approx(1.8572280848830225, abs=1e-12)

    def test_single_visit_root_gives_zero_bonus(self):
        assert evaluate(uct_seed(1.0), NodeContext(0.0, 1.0, 1.0)) == 0.0

    def test_matches_closed_form_on_random_contexts(self):
        rng = random.Random(20260819)
        for c in K_VALUES:
            seed_tree = uct_seed(c)
            worst = 0.0
            for _ in range(1000):
                n_parent = rng.randrange(1, 1_000_000)
                n_child = rng.randrange(1, n_parent + 1)
                ctx = NodeContext(rng.random(), float(n_parent), float(n_child))
                worst = max(worst, abs(evaluate(seed_tree, ctx) - closed_form_uct(*ctx, c)))
            assert worst <= 1e-9


class TestRandomSubtree:
    def test_depth_one_is_always_terminal(self):
        rng = random.Random(11)
        for _ in range(500):
            e = random_subtree(1, rng)
            assert type(e.root) in (Const, Var)
            assert e.depth() == 1

    def test_depth_never_exceeds_budget(self):
        rng = random.Random(12)
        seen = set()
        for _ in range(2000):
            e = random_subtree(6, rng)
            assert 1 <= e.depth() <= 6
            seen.add(e.depth())
        assert len(seen) > 2  # growth actually varies

    def test_terminal_kinds_uniform(self):
        rng = random.Random(13)
        counts = {"Q": 0, "Np": 0, "Nc": 0, "k": 0}
        const_values = {}
        n = 100_000
        for _ in range(n):
            root = random_subtree(1, rng).root
            if type(root) is Const:
                counts["k"] += 1
                const_values[root.value] = const_values.get(root.value, 0) + 1
            else:
                counts[root.name] += 1
        for kind, c in counts.items():
            assert abs(c / n - 0.25) < 0.02, (kind, c / n)
        assert set(const_values) == set(K_VALUES)
        for value, c in const_values.items():
            assert abs(c / counts["k"] - 0.2) < 0.02, (value, c / counts["k"])

    def test_bad_budget_rejected(self):
        with pytest.raises(ValueError):
            random_subtree(0, random.Random(1))


def _diff_path(a, b, path=()):
    """Topmost position at which two trees differ, or None if equal."""
    if a == b:
        return None
    if type(a) is Func and type(b) is Func and a.op == b.op:
        diffs = [i for i, (x, y) in enumerate(zip(a.args, b.args)) if x != y]
        if len(diffs) == 1:
            return _diff_path(a.args[diffs[0]], b.args[diffs[0]], path + (diffs[0],))
    return path


def _node_at(node, path):
    for i in path:
        node = node.args[i]
    return node


def _pick_kind(seed, has_internal):
    # Mirror of the documented mutation-point protocol: when the tree has
    # internal nodes, one uniform draw below 0.9 selects the internal
    # branch; a leaf-only tree spends no draw.
    if not has_internal:
        return "leaf"
    return "internal" if random.Random(seed).random() < 0.9 else "leaf"


class TestMutate:
    # add, mul, sqrt, div, log: exactly five internal nodes.
    FIVE_INTERNAL = Expression(
        Func(
            "add",
            (
                Var("Q"),
                Func(
                    "mul",
                    (
                        Const(0.5),
                        Func("sqrt", (Func("div", (Func("log", (Var("Np"),)), Var("Nc"))),)),
                    ),
                ),
            ),
        )
    )

    def test_depth_cap_holds_over_trials(self):
        rng = random.Random(21)
        deep = []
        while len(deep) < 50:
            e = random_subtree(8, rng)
            if e.depth() == 8:
                deep.append(e)
        for i in range(10_000):
            assert mutate(deep[i % 50], rng).depth() <= 8

    def test_input_not_modified(self):
        e = self.FIVE_INTERNAL
        before = str(e)
        rng = random.Random(22)
        for _ in range(200):
            mutate(e, rng)
        assert str(e) == before
        assert e == self.FIVE_INTERNAL

    def test_single_leaf_tree_mutates_the_leaf(self):
        rng = random.Random(23)
        changed = 0
        for _ in range(200):
            out = mutate(Expression(Var("Q")), rng)
            assert out.depth() <= DEFAULT_MAX_DEPTH
            if out.root != Var("Q"):
                changed += 1
        assert changed > 100  # regrowing exactly Q is the rare case

    def test_internal_pick_frequency(self):
        n = 100_000
        internal = sum(1 for seed in range(n) if _pick_kind(seed, True) == "internal")
        assert abs(internal / n - 0.90) < 0.01

    def test_pick_kind_agrees_with_behaviour_on_leaves(self):
        # When the protocol mirror says "leaf", any change must sit at a
        # leaf position of the original tree.
        e = self.FIVE_INTERNAL
        checked = 0
        for seed in range(4000):
            kind = _pick_kind(seed, True)
            if kind != "leaf":
                continue
            out = mutate(e, random.Random(seed))
            diff = _diff_path(e.root, out.root)
            if diff is None:
                continue  # replacement happened to regrow the same leaf
            assert type(_node_at(e.root, diff)) is not Func
            checked += 1
        assert checked > 200

    def test_internal_picks_do_change_operator_nodes(self):
        # Conversely some mutations must land on internal positions.
        e = self.FIVE_INTERNAL
        internal_hits = 0
        for seed in range(2000):
            out = mutate(e, random.Random(seed))
            diff = _diff_path(e.root, out.root)
            if diff is not None and type(_node_at(e.root, diff)) is Func:
                internal_hits += 1
        assert internal_hits > 1000

    def test_constants_stay_in_mutation_set(self):
        rng = random.Random(24)
        e = uct_seed(math.sqrt(2.0))
        for _ in range(300):
            e = mutate(e, rng)
            assert e.depth() <= DEFAULT_MAX_DEPTH
            for value in _const_values(e):
                assert value in K_VALUES

class TestParseRoundTrip:
    def test_seed_round_trip(self):
        for c in K_VALUES:
            e = uct_seed(c)
            assert parse(str(e)) == e

    def test_random_round_trip(self):
        rng = random.Random(31)
        for _ in range(500):
            e = random_subtree(8, rng)
            assert parse(str(e)) == e
            assert str(parse(str(e))) == str(e)

    def test_full_precision_constants(self):
        e = Expression(Const(math.sqrt(2.0)))
        parsed = parse(str(e))
        assert parsed.root.value == math.sqrt(2.0)

    def test_integer_constant_text_accepted(self):
        assert parse("(k 2)") == Expression(Const(2.0))

    def test_parse_errors(self):
        for text in [
            "",
            "(add Q)",
            "(log Q Nc)",
            "(frob Q Nc)",
            "(add Q Nc",
            "(add Q Nc)) ",
            "Q Q",
            "(k )",
            "(k spam)",
            "Xp",
        ]:
            with pytest.raises(ValueError):
                parse(text)


_terminals = st.one_of(
    st.sampled_from([Var("Q"), Var("Np"), Var("Nc")]),
    st.builds(Const, st.sampled_from(list(K_VALUES))),
    st.builds(Const, st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)),
)
_trees = st.recursive(
    _terminals,
    lambda sub: st.one_of(
        st.builds(lambda op, a: Func(op, (a,)), st.sampled_from(["log", "sqrt"]), sub),
        st.builds(
            lambda op, a, b: Func(op, (a, b)),
            st.sampled_from(["add", "sub", "mul", "div"]),
            sub,
            sub,
        ),
    ),
    max_leaves=25,
)
_finite = st.floats(min_value=-1e308, max_value=1e308, allow_nan=False)


class TestTotalisation:
    @given(root=_trees, q=_finite, n_parent=_finite, n_child=_finite)
    @settings(max_examples=300)
    def test_every_tree_evaluates_finite(self, root, q, n_parent, n_child):
        value = evaluate(Expression(root), NodeContext(q, n_parent, n_child))
        assert math.isfinite(value)

    @given(root=_trees)
    @settings(max_examples=200)
    def test_round_trip_property(self, root):
        e = Expression(root)
        assert parse(str(e)) == e

    def test_saturation_on_product_towers(self):
        # A balanced tower of 128 multiplied parent counts overflows
        # float64; the result must clamp instead of reaching infinity.
        node = Var("Np")
        for _ in range(7):
            node = Func("mul", (node, node))
        value = evaluate(Expression(node), NodeContext(0.5, 1e6, 1.0))
        assert math.isfinite(value)
        assert value == 1e300
