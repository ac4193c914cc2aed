# test_primitives.py

import logging
from fractions import Fraction

import pytest

from app.core.errors import (
    AlternationViolation,
    BadParams,
    DepthOverflow,
    LengthMismatch,
    NegativeMass,
    NotNormalized,
    RationalFormatError,
    RewardsNotNegationClosed,
    SymbolOutOfSpace,
)
from app.models import primitives
from app.models.primitives import (
    NodeBudget,
    Parity,
    Percept,
    Spaces,
    dist_from_mapping,
    dist_make,
    dot,
    dual_history,
    format_history,
    format_rational,
    history_append,
    iter_histories,
    parse_history,
    parse_rational,
    uniform,
)

logger = logging.getLogger(__name__)


def test_parse_and_format_rationals():
    logger.info("Testing rational encoding")
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational("-2/4") == Fraction(-1, 2)
    assert parse_rational("2") == Fraction(2)
    assert parse_rational(3) == Fraction(3)
    assert format_rational(Fraction(2, 4)) == "1/2"
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-1, 3)) == "-1/3"


def test_parse_rational_converts_other_rational_types():
    logger.info("Testing rationals from the standard library")
    value = parse_rational(Fraction(2, 6))
    assert isinstance(value, primitives.Fraction)
    assert value == Fraction(1, 3)
    assert format_rational(value) == "1/3"


@pytest.mark.parametrize("text", ["0.5", "1/0", "a/b", "", True])
def test_parse_rational_rejects_malformed_text(text):
    logger.info(f"Testing malformed rational {text!r}")
    with pytest.raises(RationalFormatError):
        parse_rational(text)


def test_dist_make_accepts_normalized_masses():
    logger.info("Testing dist_make on normalized masses")
    assert dist_make(("a", "b"), ("1/2", "1/2")) == uniform(("a", "b"))
    dist = dist_make(("a", "b"), ("1/3", "2/3"))
    assert dist["b"] == Fraction(2, 3)
    assert not dist.is_point_mass()


def test_dist_make_rejects_bad_masses():
    logger.info("Testing dist_make validation")
    with pytest.raises(NotNormalized):
        dist_make(("a", "b"), ("1/2", "1/3"))
    with pytest.raises(NegativeMass):
        dist_make(("a", "b"), ("-1/2", "3/2"))
    with pytest.raises(LengthMismatch):
        dist_make(("a", "b"), ("1",))


def test_dist_from_mapping_fills_missing_symbols_with_zero(spaces):
    logger.info("Testing dist_from_mapping")
    dist = dist_from_mapping(spaces.actions, {"b": "1"})
    assert dist["a"] == 0
    assert dist.to_mapping() == {"b": "1"}
    with pytest.raises(SymbolOutOfSpace):
        dist_from_mapping(spaces.actions, {"c": "1"})


def test_spaces_validation():
    logger.info("Testing spaces validation")
    with pytest.raises(BadParams):
        Spaces(("a",), ("o",), (Fraction(2),))
    with pytest.raises(BadParams):
        Spaces(("a", "a"), ("o",), (Fraction(0),))
    with pytest.raises(BadParams):
        Spaces(("a",), ("a",), (Fraction(0),))
    closed = Spaces(("a",), ("o",), (Fraction(-1), Fraction(0), Fraction(1)))
    assert closed.negation_closed
    assert len(closed.percepts) == 3


def test_history_append_alternates(spaces):
    logger.info("Testing history alternation")
    x0 = Percept("o", Fraction(0))
    h = history_append(spaces.empty, x0)
    assert str(h) == "(o,0)"
    assert h.parity is Parity.ENDS_IN_PERCEPT
    h = history_append(h, "a")
    assert str(h) == "(o,0) a"
    assert h.parity is Parity.ENDS_IN_ACTION
    with pytest.raises(AlternationViolation):
        history_append(spaces.empty, "a")
    with pytest.raises(AlternationViolation):
        history_append(h, "b")
    with pytest.raises(SymbolOutOfSpace):
        history_append(spaces.empty, Percept("o", Fraction(1, 2)))


def test_parse_history_round_trips(spaces):
    logger.info("Testing history parsing")
    h = parse_history("(o,1) b (o,-1)", spaces)
    assert len(h) == 3
    assert str(parse_history(str(h), spaces)) == "(o,1) b (o,-1)"
    assert parse_history("", spaces) == spaces.empty
    assert parse_history("ε", spaces) == spaces.empty
    assert h.reward_sum() == 0
    assert h.completed_steps == 1
    assert h.last_percept() == Percept("o", Fraction(-1))
    assert h.prefix(2).is_prefix_of(h)


def test_history_keys_and_parents(spaces):
    logger.info("Testing history keys, hashing and cached parents")
    h = parse_history("(o,1) b (o,-1)", spaces)
    rebuilt = primitives.History(spaces, h.items)
    assert h == rebuilt and hash(h) == hash(rebuilt)
    assert h.key == rebuilt.key
    assert h.key != parse_history("(o,-1) b (o,1)", spaces).key
    assert spaces.empty.key == 0
    child = h.extend("a")
    assert child.parent is h
    assert rebuilt.parent is rebuilt.parent
    assert rebuilt.parent == h.prefix(2)
    assert format_history(child) == "(o,1) b (o,-1) a"
    assert format_history(spaces.empty) == ""
    with pytest.raises(SymbolOutOfSpace):
        spaces.item_code("z")


def test_dual_history(spaces):
    logger.info("Testing dual histories")
    assert dual_history(spaces.empty) == spaces.empty
    h = parse_history("(o,1) a", spaces)
    assert str(dual_history(h)) == "(o,-1) a"
    assert dual_history(dual_history(h)) == h


def test_dual_history_requires_negation_closed_rewards():
    logger.info("Testing dual history on non negation-closed rewards")
    lopsided = Spaces(("a",), ("o",), (Fraction(0), Fraction(1)))
    h = parse_history("(o,1)", lopsided)
    with pytest.raises(RewardsNotNegationClosed):
        dual_history(h)


def test_iter_histories_counts(spaces):
    logger.info("Testing history enumeration")
    histories = list(iter_histories(spaces, 3))
    # 1 empty + 3 percepts + 6 percept-action pairs + 18 of length 3
    assert len(histories) == 28
    assert histories[0] == spaces.empty
    assert len(set(histories)) == len(histories)


def test_node_budget_overflow(spaces):
    logger.info("Testing node budget")
    with pytest.raises(DepthOverflow):
        list(iter_histories(spaces, 6, NodeBudget(50)))


def test_dot_products():
    logger.info("Testing dot products")
    assert dot((Fraction(1, 3), Fraction(2, 3)), (Fraction(1), Fraction(-1))) == Fraction(-1, 3)
    with pytest.raises(LengthMismatch):
        dot((Fraction(1),), (Fraction(1), Fraction(2)))
