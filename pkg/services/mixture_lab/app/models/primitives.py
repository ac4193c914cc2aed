# services/mixture_lab/app/models/primitives.py
"""
Shared vocabulary of the algebra: exact rationals, the fixed finite spaces,
percepts, alternating histories and probability distributions.

Every value here is immutable once built. Probabilities and rewards are
exact rationals (`quicktions.Fraction` when installed, else the stdlib
`fractions.Fraction`); floats only ever appear in report formatting.
"""
import numbers
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from random import Random
from typing import Any, Dict, Iterable, Iterator, NamedTuple, Optional, Sequence, Tuple, Union

try:
    from quicktions import Fraction
except ImportError:  # pragma: no cover
    from fractions import Fraction

from app.core.config import settings
from app.core.errors import (
    AlternationViolation,
    BadParams,
    DepthOverflow,
    InvalidDepth,
    LengthMismatch,
    NegativeMass,
    NotNormalized,
    RationalFormatError,
    RewardsNotNegationClosed,
    SymbolOutOfSpace,
)

Rational = Fraction

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")
_SYMBOL_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")
_PERCEPT_RE = re.compile(r"^\(([^,()\s]+),([^,()\s]+)\)$")

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rational(value: Any) -> Fraction:
    """Read "num/den", "num" or an int as an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise RationalFormatError(f"Cannot read {value!r} as a rational")
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if match:
            numerator = int(match.group(1))
            denominator = int(match.group(2)) if match.group(2) is not None else 1
            if denominator == 0:
                raise RationalFormatError(f"Zero denominator in {value!r}")
            return Fraction(numerator, denominator)
    raise RationalFormatError(f"Cannot read {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    # Fraction already prints lowest terms, "2" for integers, "-1/3" otherwise
    return str(Fraction(value))


def to_decimal(value: Fraction, digits: Optional[int] = None) -> float:
    """Convenience decimal for reports; never used in comparisons."""
    return round(float(value), digits if digits is not None else settings.DECIMAL_DIGITS)


class Percept(NamedTuple):
    observation: str
    reward: Fraction

    def __str__(self) -> str:
        return f"({self.observation},{format_rational(self.reward)})"

    def negated(self) -> "Percept":
        return Percept(self.observation, -self.reward)


Action = str
Item = Union[Percept, Action]


class Parity(str, Enum):
    EMPTY = "Empty"
    ENDS_IN_PERCEPT = "EndsInPercept"
    ENDS_IN_ACTION = "EndsInAction"


@dataclass(frozen=True)
class Spaces:
    """The fixed finite action, observation and reward sets of a scenario."""
    actions: Tuple[str, ...]
    observations: Tuple[str, ...]
    rewards: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "rewards", tuple(parse_rational(r) for r in self.rewards))

        for label, symbols in (("actions", self.actions), ("observations", self.observations)):
            if not symbols:
                raise BadParams(f"{label} must be nonempty")
            if len(set(symbols)) != len(symbols):
                raise BadParams(f"{label} must be distinct")
            for symbol in symbols:
                if not isinstance(symbol, str) or not _SYMBOL_RE.match(symbol):
                    raise BadParams(f"Invalid symbol {symbol!r} in {label}")
        if set(self.actions) & set(self.observations):
            raise BadParams("Action and observation symbols must not overlap")
        if not self.rewards:
            raise BadParams("rewards must be nonempty")
        if len(set(self.rewards)) != len(self.rewards):
            raise BadParams("rewards must be distinct")
        for r in self.rewards:
            if not -1 <= r <= 1:
                raise BadParams(f"Reward {format_rational(r)} lies outside [-1,1]")

    @cached_property
    def negation_closed(self) -> bool:
        rewards = set(self.rewards)
        return all(-r in rewards for r in rewards)

    @cached_property
    def contains_zero(self) -> bool:
        return ZERO in self.rewards

    @cached_property
    def percepts(self) -> Tuple[Percept, ...]:
        return tuple(Percept(o, r) for o in self.observations for r in self.rewards)

    @cached_property
    def uniform_actions(self) -> "Dist":
        return uniform(self.actions)

    @cached_property
    def uniform_percepts(self) -> "Dist":
        return uniform(self.percepts)

    @cached_property
    def empty(self) -> "History":
        return History(self)

    @cached_property
    def item_codes(self) -> Dict[Item, int]:
        """Nonzero digit of each percept and action in a history key."""
        codes: Dict[Item, int] = {x: i + 1 for i, x in enumerate(self.percepts)}
        codes.update((y, i + 1) for i, y in enumerate(self.actions))
        return codes

    @cached_property
    def key_base(self) -> int:
        return max(len(self.percepts), len(self.actions)) + 1

    def item_code(self, item: Item) -> int:
        code = self.item_codes.get(item)
        if code is None:
            raise SymbolOutOfSpace(f"{item} is not in the declared spaces")
        return code

    def has_percept(self, x: Percept) -> bool:
        return x.observation in self.observations and x.reward in self.rewards

    def require_negation_closed(self) -> None:
        if not self.negation_closed:
            rewards = ", ".join(format_rational(r) for r in self.rewards)
            raise RewardsNotNegationClosed(f"Rewards {{{rewards}}} are not closed under negation")

    def parse_percept(self, token: str) -> Percept:
        match = _PERCEPT_RE.match(token)
        if not match:
            raise SymbolOutOfSpace(f"Malformed percept {token!r}")
        percept = Percept(match.group(1), parse_rational(match.group(2)))
        if not self.has_percept(percept):
            raise SymbolOutOfSpace(f"Percept {token} is not in the declared spaces")
        return percept


@dataclass(frozen=True)
class Dist:
    """Exact probability distribution over a full finite carrier."""
    carrier: Tuple[Any, ...]
    masses: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.carrier) != len(self.masses):
            raise LengthMismatch(
                f"Carrier has {len(self.carrier)} elements but {len(self.masses)} masses were given"
            )
        for symbol, mass in zip(self.carrier, self.masses):
            if mass < 0:
                raise NegativeMass(f"Mass {format_rational(mass)} on {symbol} is negative")
        total = sum(self.masses, ZERO)
        if total != 1:
            raise NotNormalized(f"Masses sum to {format_rational(total)}, not 1")

    @classmethod
    def unchecked(cls, carrier: Sequence[Any], masses: Sequence[Fraction]) -> "Dist":
        """Build without validation: mutations, and lattice draws normalized by construction."""
        dist = object.__new__(cls)
        object.__setattr__(dist, "carrier", tuple(carrier))
        object.__setattr__(dist, "masses", tuple(masses))
        return dist

    def __getitem__(self, symbol: Any) -> Fraction:
        try:
            return self.masses[self.carrier.index(symbol)]
        except ValueError:
            raise SymbolOutOfSpace(f"{symbol} is not in the carrier")

    def items(self) -> Iterator[Tuple[Any, Fraction]]:
        return zip(self.carrier, self.masses)

    def support(self) -> Iterator[Tuple[Any, Fraction]]:
        return ((symbol, mass) for symbol, mass in self.items() if mass)

    def is_point_mass(self) -> bool:
        return any(mass == 1 for mass in self.masses)

    def to_mapping(self) -> dict:
        return {str(symbol): format_rational(mass) for symbol, mass in self.items() if mass}

    def __str__(self) -> str:
        return " ".join(f"{symbol}:{format_rational(mass)}" for symbol, mass in self.items())


def dist_make(carrier: Sequence[Any], masses: Sequence[Any]) -> Dist:
    return Dist(tuple(carrier), tuple(parse_rational(m) for m in masses))


def uniform(carrier: Sequence[Any]) -> Dist:
    share = Fraction(1, len(carrier))
    return Dist(tuple(carrier), (share,) * len(carrier))


def point_mass(carrier: Sequence[Any], symbol: Any) -> Dist:
    carrier = tuple(carrier)
    if symbol not in carrier:
        raise SymbolOutOfSpace(f"{symbol} is not in the carrier")
    return Dist(carrier, tuple(ONE if s == symbol else ZERO for s in carrier))


def dist_from_mapping(carrier: Sequence[Any], mapping: dict, key: Any = str) -> Dist:
    """Build a Dist from {canonical symbol text: mass}; unlisted symbols get 0."""
    by_name = {key(symbol): symbol for symbol in carrier}
    unknown = set(mapping) - set(by_name)
    if unknown:
        raise SymbolOutOfSpace(f"Unknown carrier symbols {sorted(unknown)}")
    masses = [parse_rational(mapping.get(name, 0)) for name in by_name]
    return Dist(tuple(carrier), tuple(masses))


class History:
    """
    Alternating percept/action sequence over fixed spaces, starting with a
    percept when nonempty. Equality and hashing ignore the spaces object.

    `key` spells the items in base `spaces.key_base` with nonzero digits, so
    it is unique per history and extends in O(1); random tables seed on it.
    """
    __slots__ = ("spaces", "items", "key", "_parent")

    def __init__(self, spaces: Spaces, items: Tuple[Item, ...] = ()):
        self.spaces = spaces
        self.items = tuple(items)
        key = 0
        for item in self.items:
            key = key * spaces.key_base + spaces.item_code(item)
        self.key = key
        self._parent: Optional[History] = None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, History) and self.key == other.key and self.items == other.items

    def __hash__(self) -> int:
        return hash(self.key)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self.items)

    def __str__(self) -> str:
        return " ".join(str(item) for item in self.items)

    def __repr__(self) -> str:
        return f"History({str(self)!r})"

    @property
    def parity(self) -> Parity:
        if not self.items:
            return Parity.EMPTY
        return Parity.ENDS_IN_PERCEPT if len(self.items) % 2 == 1 else Parity.ENDS_IN_ACTION

    @property
    def expects_percept(self) -> bool:
        return len(self.items) % 2 == 0

    @property
    def last(self) -> Optional[Item]:
        return self.items[-1] if self.items else None

    @property
    def parent(self) -> "History":
        if self._parent is None:
            self._parent = History(self.spaces, self.items[:-1])
        return self._parent

    @property
    def completed_steps(self) -> int:
        """Number of actions taken so far."""
        return len(self.items) // 2

    def percepts(self) -> Iterator[Percept]:
        return (item for item in self.items[::2])

    def actions(self) -> Iterator[Action]:
        return (item for item in self.items[1::2])

    def last_percept(self) -> Optional[Percept]:
        if not self.items:
            return None
        index = len(self.items) - 1 if len(self.items) % 2 == 1 else len(self.items) - 2
        return self.items[index]

    def reward_sum(self) -> Fraction:
        """R(h): the sum of the rewards in h."""
        return sum((x.reward for x in self.percepts()), ZERO)

    def prefix(self, length: int) -> "History":
        return History(self.spaces, self.items[:length])

    def is_prefix_of(self, other: "History") -> bool:
        return other.items[: len(self.items)] == self.items

    def append(self, item: Item) -> "History":
        return history_append(self, item)

    def extend(self, item: Item) -> "History":
        """Append a symbol already known to come from the spaces, in turn."""
        child = History.__new__(History)
        child.spaces = self.spaces
        child.items = self.items + (item,)
        child.key = self.key * self.spaces.key_base + self.spaces.item_code(item)
        child._parent = self
        return child


def history_append(h: History, item: Item) -> History:
    wants_percept = h.expects_percept
    if isinstance(item, Percept):
        if not wants_percept:
            raise AlternationViolation(f"Expected an action after {h!s:.60}, got percept {item}")
        if not h.spaces.has_percept(item):
            raise SymbolOutOfSpace(f"Percept {item} is not in the declared spaces")
    elif isinstance(item, str):
        if wants_percept:
            raise AlternationViolation(f"Expected a percept, got action {item}")
        if item not in h.spaces.actions:
            raise SymbolOutOfSpace(f"Action {item} is not in the declared spaces")
    else:
        raise SymbolOutOfSpace(f"{item!r} is neither a percept nor an action")
    return h.extend(item)


def dual_history(h: History) -> History:
    """Replace every reward r in h by -r; actions are untouched."""
    h.spaces.require_negation_closed()
    return History(
        h.spaces,
        tuple(item.negated() if isinstance(item, Percept) else item for item in h.items),
    )


def parse_history(text: str, spaces: Spaces) -> History:
    """Read the canonical space-separated encoding; "" and "ε" are the empty history."""
    h = spaces.empty
    for token in text.split():
        if token == "ε":
            continue
        item: Item = spaces.parse_percept(token) if token.startswith("(") else token
        h = history_append(h, item)
    return h


def format_history(h: History) -> str:
    return str(h)


class NodeBudget:
    """Counts visited tree nodes and raises DepthOverflow past the limit."""
    __slots__ = ("limit", "used")

    def __init__(self, limit: Optional[int] = None):
        self.limit = limit if limit is not None else settings.MAX_NODES
        self.used = 0

    def tick(self, count: int = 1) -> None:
        self.used += count
        if self.used > self.limit:
            raise DepthOverflow(f"Enumeration visited more than {self.limit} nodes")


def require_steps(t: int, name: str = "t") -> int:
    if t < 0:
        raise InvalidDepth(f"{name} must be non-negative, got {t}")
    return t


def require_depth(depth: int, name: str = "depth") -> int:
    if depth < 1:
        raise InvalidDepth(f"{name} must be at least 1, got {depth}")
    return depth


def children(h: History) -> Tuple[Item, ...]:
    """The symbols that may follow h: all percepts or all actions."""
    return h.spaces.percepts if h.expects_percept else h.spaces.actions


def iter_histories(
    spaces: Spaces, max_len: int, budget: Optional[NodeBudget] = None
) -> Iterator[History]:
    """Every history of length <= max_len, depth-first in carrier order."""
    budget = budget or NodeBudget()
    stack = [spaces.empty]
    while stack:
        h = stack.pop()
        budget.tick()
        yield h
        if len(h) < max_len:
            stack.extend(h.extend(item) for item in reversed(children(h)))


def dot(weights: Iterable[Fraction], values: Iterable[Fraction]) -> Fraction:
    """w . v for equal-length vectors."""
    weights, values = tuple(weights), tuple(values)
    if len(weights) != len(values):
        raise LengthMismatch(f"Cannot dot {len(weights)} weights with {len(values)} values")
    return sum((w * v for w, v in zip(weights, values)), ZERO)


def lattice_dist(
    carrier: Sequence[Any], rng: Random, denominator: int, allowed: Optional[Sequence[Any]] = None
) -> Dist:
    """Random distribution whose masses are multiples of 1/denominator."""
    allowed = tuple(allowed) if allowed is not None else tuple(carrier)
    cuts = sorted(rng.randint(0, denominator) for _ in range(len(allowed) - 1))
    bounds = [0, *cuts, denominator]
    shares = {
        symbol: Fraction(high - low, denominator)
        for symbol, low, high in zip(allowed, bounds, bounds[1:])
    }
    return Dist.unchecked(carrier, tuple(shares.get(symbol, ZERO) for symbol in carrier))
