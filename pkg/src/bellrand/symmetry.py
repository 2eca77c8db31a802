"""Relabelings of settings and outcomes, and how certificates move under them.

A relabeling swaps a party's two settings and flips outcomes depending on the
setting.  On observables it acts as ``X_i -> s_i X_{pi(i)}`` with signs
``s_i = ±1``, so it sends every word of the moment basis to a signed word of
the same basis.  A sum-of-squares certificate for one guessing program
therefore becomes one for the relabeled program: its Bell coefficients are
permuted with signs and its Gram matrices are conjugated by a signed
permutation.  The transported certificate is checked again before use, so
this module only has to be right about which program it targets.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bell import QUANTITIES, BellExpression
from .guessing import DualCertificate, GuessingProgram, GuessingStrategy
from .moments import Monomial, build_structure


@dataclass(frozen=True)
class Relabeling:
    swap_a: int = 0
    swap_b: int = 0
    flip_a: tuple[int, int] = (0, 0)  # flip Alice's outcome when her setting is x
    flip_b: tuple[int, int] = (0, 0)

    def setting(self, setting: tuple[int, int]) -> tuple[int, int]:
        x, y = setting
        return x ^ self.swap_a, y ^ self.swap_b

    def outcome(self, setting: tuple[int, int], outcome: tuple[int, int]) -> tuple[int, int]:
        (x, y), (a, b) = setting, outcome
        return a ^ self.flip_a[x], b ^ self.flip_b[y]

    def letter(self, party: str, i: int) -> tuple[int, float]:
        swap, flip = (self.swap_a, self.flip_a) if party == "A" else (self.swap_b, self.flip_b)
        return i ^ swap, -1.0 if flip[i] else 1.0

    def word(self, party: str, word) -> tuple[tuple[int, ...], float]:
        sign = 1.0
        out = []
        for i in word:
            j, s = self.letter(party, i)
            out.append(j)
            sign *= s
        return tuple(out), sign

    def quantity_map(self) -> tuple[np.ndarray, np.ndarray]:
        """Target index and sign of every entry of ``QUANTITIES``."""
        index = {q: k for k, q in enumerate(QUANTITIES)}
        target, signs = [], []
        for q in QUANTITIES:
            m = Monomial.parse(q)
            alice, sa = self.word("A", m.alice)
            bob, sb = self.word("B", m.bob)
            target.append(index[str(Monomial(alice, bob))])
            signs.append(sa * sb)
        return np.array(target), np.array(signs)

    def basis_map(self) -> tuple[np.ndarray, np.ndarray]:
        """Target position and sign of every index word of the moment matrix."""
        s = build_structure()
        index = {m: k for k, m in enumerate(s.index_list)}
        target, signs = [], []
        for m in s.index_list:
            alice, sa = self.word("A", m.alice)
            bob, sb = self.word("B", m.bob)
            target.append(index[Monomial(alice, bob)])
            signs.append(sa * sb)
        return np.array(target), np.array(signs)


def all_relabelings() -> list[Relabeling]:
    return [
        Relabeling(sa, sb, (fa0, fa1), (fb0, fb1))
        for sa, sb, fa0, fa1, fb0, fb1 in itertools.product(range(2), repeat=6)
    ]


def relabelings_between(source: tuple[int, int], target: tuple[int, int]) -> list[Relabeling]:
    return [r for r in all_relabelings() if r.setting(source) == tuple(target)]


def _map_strategy(r: Relabeling, strategy: GuessingStrategy) -> GuessingStrategy:
    moved = sorted((r.setting(s), r.outcome(s, o)) for s, o in strategy.guess)
    return GuessingStrategy(tuple(moved))


def transport_certificate(
    cert: DualCertificate,
    r: Relabeling,
    source: GuessingProgram,
    target: GuessingProgram,
) -> DualCertificate | None:
    """Move ``cert`` from ``source`` to ``target`` along ``r``.

    Returns None when the relabeled strategies do not match the target's
    blocks or the certificate carries no Gram matrices.
    """
    if cert.gram is None or len(cert.gram) != source.num_blocks:
        return None
    slot = {st: k for k, st in enumerate(target.strategies)}
    order = []
    for st in source.strategies:
        moved = _map_strategy(r, st)
        if moved not in slot:
            return None
        order.append(slot[moved])
    if sorted(order) != list(range(target.num_blocks)):
        return None

    q_target, q_sign = r.quantity_map()
    vec = cert.expression.correlator_form()
    moved_vec = np.zeros_like(vec)
    moved_vec[q_target] = q_sign * vec

    b_target, b_sign = r.basis_map()
    weights = np.outer(b_sign, b_sign)
    gram: list[np.ndarray] = [None] * target.num_blocks  # type: ignore[list-item]
    for k, z in zip(order, cert.gram):
        moved = np.empty_like(z)
        moved[np.ix_(b_target, b_target)] = weights * z
        gram[k] = moved
    return DualCertificate(BellExpression.from_correlators(moved_vec), cert.offset, tuple(gram))


def average_certificate(
    program: GuessingProgram,
    parts: dict[tuple[int, int], tuple[GuessingProgram, DualCertificate]],
) -> DualCertificate | None:
    """Combine fixed-setting certificates into one for an averaged program.

    ``parts`` maps each setting in the support of ``program``'s distribution
    to a certificate of the fixed-setting program there.  Each block of the
    averaged program gets the weighted sum of the matching fixed-setting
    Gram matrices.
    """
    weights = program.spec.settings_distribution.weights
    support = program.spec.settings_distribution.support
    if any(s not in parts or parts[s][1].gram is None for s in support):
        return None
    lookup = {}
    for s in support:
        prog, cert = parts[s]
        for k, st in enumerate(prog.strategies):
            if st.support != (s,):
                return None
            lookup[s, st[s]] = cert.gram[k]
    vec = sum(weights[s] * parts[s][1].expression.correlator_form() for s in support)
    offset = sum(weights[s] * parts[s][1].offset for s in support)
    gram = tuple(sum(weights[s] * lookup[s, st[s]] for s in support) for st in program.strategies)
    return DualCertificate(BellExpression.from_correlators(vec), float(offset), gram)
