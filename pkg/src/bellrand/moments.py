"""Local-level-2 moment matrices for two parties with two ±1 observables each.

Rows and columns are indexed by the 25 products u⊗v with u, v drawn from the
reduced words {1, X0, X1, X0X1, X1X0}.  Entry (u⊗v, u'⊗v') holds the moment of
u†u' ⊗ v†v'.  Moments are taken real, so a word and its adjoint share one
variable; the resulting matrices are symmetric.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .bell import OUTCOME_SIGN, QUANTITIES

Word = tuple[int, ...]

LOCAL_WORDS: tuple[Word, ...] = ((), (0,), (1,), (0, 1), (1, 0))


def reduce_word(word) -> Word:
    """Cancel adjacent repeated letters (every observable squares to 1)."""
    stack: list[int] = []
    for letter in word:
        if stack and stack[-1] == letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Monomial:
    alice: Word = ()
    bob: Word = ()

    @property
    def adjoint(self) -> "Monomial":
        return Monomial(self.alice[::-1], self.bob[::-1])

    @property
    def reduced(self) -> "Monomial":
        return Monomial(reduce_word(self.alice), reduce_word(self.bob))

    def is_reduced(self) -> bool:
        return self.alice == reduce_word(self.alice) and self.bob == reduce_word(self.bob)

    def sort_key(self):
        return (len(self.alice) + len(self.bob), len(self.bob), self.alice, self.bob)

    def __str__(self) -> str:
        text = "".join(f"A{i}" for i in self.alice) + "".join(f"B{i}" for i in self.bob)
        return text or "1"

    @classmethod
    def parse(cls, text: str) -> "Monomial":
        """Inverse of ``str``: ``"A0A1B1"`` -> Monomial((0, 1), (1,)); ``"1"`` is empty."""
        alice: list[int] = []
        bob: list[int] = []
        body = "" if text == "1" else text
        if len(body) % 2:
            raise ValueError(f"cannot parse monomial {text!r}")
        for party, index in zip(body[::2], body[1::2]):
            if party not in "AB" or index not in "01":
                raise ValueError(f"cannot parse monomial {text!r}")
            if party == "A" and bob:
                raise ValueError(f"Alice letters must precede Bob letters in {text!r}")
            (alice if party == "A" else bob).append(int(index))
        return cls(tuple(alice), tuple(bob))


def product(left: Monomial, right: Monomial) -> Monomial:
    """The unreduced word left† · right (parties commute, so they stay split)."""
    return Monomial(left.alice[::-1] + right.alice, left.bob[::-1] + right.bob)


def canonicalize(m: Monomial) -> tuple[Monomial, bool]:
    """Reduce ``m`` and pick the representative of {m, m†}.

    Returns the representative and whether it is the adjoint of the reduced
    input.  Under real moments both share a value, so the flag only records
    which one was chosen.
    """
    r = m.reduced
    adj = r.adjoint
    if adj.sort_key() < r.sort_key():
        return adj, True
    return r, False


@dataclass(frozen=True, eq=False)
class MomentStructure:
    index_list: tuple[Monomial, ...]
    monomials: tuple[Monomial, ...]
    positions: np.ndarray  # (25, 25) canonical-monomial index of every entry
    basis: np.ndarray  # (k, 25, 25) indicator matrices E_m
    behavior_positions: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.index_list)

    @property
    def num_monomials(self) -> int:
        return len(self.monomials)

    def index_of(self, m: Monomial) -> int:
        return self._lookup[canonicalize(m)[0]]

    @functools.cached_property
    def _lookup(self) -> dict[Monomial, int]:
        return {m: i for i, m in enumerate(self.monomials)}

    @functools.cached_property
    def class_sizes(self) -> np.ndarray:
        """Number of matrix entries carried by each monomial (<E_m, E_m>)."""
        return np.bincount(self.positions.ravel(), minlength=self.num_monomials).astype(float)

    def moment_matrix(self, moments: np.ndarray) -> np.ndarray:
        return np.asarray(moments, dtype=float)[self.positions]

    def read_moments(self, gamma: np.ndarray) -> np.ndarray:
        """Pick each monomial's value from its first position (row-major)."""
        flat = np.asarray(gamma).ravel()
        first = np.full(self.num_monomials, -1)
        for pos, m in enumerate(self.positions.ravel()):
            if first[m] < 0:
                first[m] = pos
        return flat[first]

    def adjoint_map(self, coeffs: np.ndarray) -> np.ndarray:
        """<E_m, X> for every monomial m."""
        return np.bincount(self.positions.ravel(), weights=np.asarray(coeffs).ravel(), minlength=self.num_monomials)


@functools.lru_cache(maxsize=None)
def build_structure() -> MomentStructure:
    index_list = tuple(Monomial(u, v) for u in LOCAL_WORDS for v in LOCAL_WORDS)
    n = len(index_list)
    canon = [[canonicalize(product(r, c))[0] for c in index_list] for r in index_list]
    monomials = tuple(sorted({m for row in canon for m in row}, key=Monomial.sort_key))
    lookup = {m: i for i, m in enumerate(monomials)}
    positions = np.array([[lookup[m] for m in row] for row in canon], dtype=np.intp)
    positions.setflags(write=False)
    basis = np.zeros((len(monomials), n, n))
    for i, j in itertools.product(range(n), repeat=2):
        basis[positions[i, j], i, j] = 1.0
    basis.setflags(write=False)

    behavior_positions = {"1": lookup[Monomial()]}
    for x in range(2):
        behavior_positions[f"A{x}"] = lookup[Monomial((x,), ())]
    for y in range(2):
        behavior_positions[f"B{y}"] = lookup[Monomial((), (y,))]
    for x, y in itertools.product(range(2), repeat=2):
        behavior_positions[f"A{x}B{y}"] = lookup[Monomial((x,), (y,))]
    behavior_positions = {q: behavior_positions[q] for q in QUANTITIES}
    return MomentStructure(index_list, monomials, positions, basis, behavior_positions)


def behavior_constraint_row(quantity: str, structure: MomentStructure | None = None) -> np.ndarray:
    """Row over canonical monomials extracting one of the nine quantities.

    For a block's subnormalized moment vector, the "1" row gives its weight.
    """
    s = structure or build_structure()
    if quantity not in s.behavior_positions:
        raise KeyError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    row = np.zeros(s.num_monomials)
    row[s.behavior_positions[quantity]] = 1.0
    return row


def expectation_rows(structure: MomentStructure | None = None) -> np.ndarray:
    """The nine quantity rows stacked in ``QUANTITIES`` order."""
    return np.stack([behavior_constraint_row(q, structure) for q in QUANTITIES])


def probability_row(a: int, b: int, x: int, y: int, structure: MomentStructure | None = None) -> np.ndarray:
    """Row giving P(ab|xy) = (1 + s_a<A_x> + s_b<B_y> + s_a s_b<A_xB_y>)/4."""
    s = structure or build_structure()
    sa, sb = OUTCOME_SIGN[a], OUTCOME_SIGN[b]
    return (
        behavior_constraint_row("1", s)
        + sa * behavior_constraint_row(f"A{x}", s)
        + sb * behavior_constraint_row(f"B{y}", s)
        + sa * sb * behavior_constraint_row(f"A{x}B{y}", s)
    ) / 4


def _word_operator(ops, word: Word) -> np.ndarray:
    out = np.eye(2, dtype=complex)
    for letter in word:
        out = out @ ops[letter]
    return out


def moment_vector(model, structure: MomentStructure | None = None) -> np.ndarray:
    """Real parts of <u ⊗ v> on the model's state for every canonical monomial."""
    s = structure or build_structure()
    return np.array(
        [
            model.expectation(_word_operator(model.alice_obs, m.alice), _word_operator(model.bob_obs, m.bob)).real
            for m in s.monomials
        ]
    )
