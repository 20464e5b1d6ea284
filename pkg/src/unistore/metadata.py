"""Vector timestamps, Lamport stamps and identifiers shared by all modules."""

from __future__ import annotations

import enum
from typing import NamedTuple, Sequence

STRONG = 0  # index of the strong entry; data centers are numbered 1..D


class ConfigError(ValueError):
    """Raised for inconsistent configuration such as a dimension mismatch."""


class Relation(enum.Enum):
    EQUAL = "Equal"
    LESS = "Less"
    GREATER = "Greater"
    INCOMPARABLE = "Incomparable"

    @property
    def le(self) -> bool:
        return self in (Relation.EQUAL, Relation.LESS)

    @property
    def ge(self) -> bool:
        return self in (Relation.EQUAL, Relation.GREATER)


class VectorTimestamp:
    """D data-center entries plus one ``strong`` entry.

    Entries are stored in a tuple with the strong entry at index 0, so
    ``v[i]`` reads DC ``i`` and ``v[STRONG]`` reads the strong entry.
    """

    __slots__ = ("_e",)

    def __init__(self, dc: Sequence[int] = (), strong: int = 0):
        e = (int(strong),) + tuple(int(x) for x in dc)
        if any(x < 0 for x in e):
            raise ConfigError(f"negative vector entry in {e}")
        self._e = e

    @classmethod
    def zero(cls, D: int) -> "VectorTimestamp":
        return cls._raw((0,) * (D + 1))

    @classmethod
    def _raw(cls, entries: tuple) -> "VectorTimestamp":
        v = object.__new__(cls)
        v._e = entries
        return v

    @property
    def dc(self) -> tuple:
        return self._e[1:]

    @property
    def strong(self) -> int:
        return self._e[0]

    @property
    def D(self) -> int:
        return len(self._e) - 1

    def __getitem__(self, i: int) -> int:
        return self._e[i]

    def with_entry(self, i: int, x: int) -> "VectorTimestamp":
        e = list(self._e)
        e[i] = x
        return VectorTimestamp._raw(tuple(e))

    def _check(self, other: "VectorTimestamp") -> None:
        if len(self._e) != len(other._e):
            raise ConfigError(f"dimension mismatch: {self.D} vs {other.D}")

    def __le__(self, other: "VectorTimestamp") -> bool:
        self._check(other)
        return all(a <= b for a, b in zip(self._e, other._e))

    def __lt__(self, other: "VectorTimestamp") -> bool:
        return self <= other and self._e != other._e

    def __ge__(self, other: "VectorTimestamp") -> bool:
        return other <= self

    def __gt__(self, other: "VectorTimestamp") -> bool:
        return other < self

    def causal_le(self, other: "VectorTimestamp") -> bool:
        """Entrywise <= over the DC entries only, ignoring ``strong``."""
        self._check(other)
        return all(a <= b for a, b in zip(self._e[1:], other._e[1:]))

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorTimestamp) and self._e == other._e

    def __hash__(self) -> int:
        return hash(self._e)

    def __repr__(self) -> str:
        return f"VT({list(self.dc)}, s={self.strong})"

    def to_json(self) -> dict:
        return {"dc": list(self._e[1:]), "strong": self._e[0]}

    @classmethod
    def from_json(cls, obj: dict) -> "VectorTimestamp":
        return cls(obj["dc"], obj["strong"])


def vec_compare(a: VectorTimestamp, b: VectorTimestamp) -> Relation:
    """Entrywise relation between two vectors of equal dimension."""
    a._check(b)
    le = a <= b
    ge = b <= a
    if le and ge:
        return Relation.EQUAL
    if le:
        return Relation.LESS
    if ge:
        return Relation.GREATER
    return Relation.INCOMPARABLE


def vec_join(a: VectorTimestamp, b: VectorTimestamp) -> VectorTimestamp:
    a._check(b)
    return VectorTimestamp._raw(tuple(max(x, y) for x, y in zip(a._e, b._e)))


def vec_meet(a: VectorTimestamp, b: VectorTimestamp) -> VectorTimestamp:
    a._check(b)
    return VectorTimestamp._raw(tuple(min(x, y) for x, y in zip(a._e, b._e)))


class LamportStamp(NamedTuple):
    """Client Lamport counter with the client id as tie-break.

    Tuple ordering already gives the required total order.
    """

    counter: int
    client: int

    def to_json(self) -> dict:
        return {"lc": self.counter, "client": self.client}

    @classmethod
    def from_json(cls, obj: dict) -> "LamportStamp":
        return cls(obj["lc"], obj["client"])


INITIAL_STAMP = LamportStamp(0, 0)


def lamport_less(a: LamportStamp, b: LamportStamp) -> bool:
    return (a.counter, a.client) < (b.counter, b.client)


class TxId(NamedTuple):
    dc: int
    partition: int
    seq: int

    def __str__(self) -> str:
        return f"{self.dc}.{self.partition}.{self.seq}"

    @classmethod
    def parse(cls, s: str) -> "TxId":
        d, m, q = s.split(".")
        return cls(int(d), int(m), int(q))


def check_dims(D: int, f: int) -> None:
    if D != 2 * f + 1:
        raise ConfigError(f"need D = 2f+1, got D={D}, f={f}")
