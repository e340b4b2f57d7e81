"""Marking: per-store FIFO token multisets bound to a net.

Fusion coherence is structural: all places of one group resolve to the same
backing store, so aliases can never disagree. check_fusion_coherence still
re-reads every alias and compares token-id sequences; the engine runs it
after each mutation under __debug__ as the always-on debug assertion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CapacityExceeded, DuplicateTokenId, UnknownPlace
from .net import Net, Token


@dataclass(frozen=True)
class Marking:
    net: Net = field(repr=False)
    stores: Mapping[str, tuple[Token, ...]]
    next_token_seq: int = 1

    @classmethod
    def initial(cls, net: Net) -> "Marking":
        """Seed tokens per the net's initial marking, at tick 0, in sorted place order."""
        stores: dict[str, list[Token]] = {key: [] for key in set(net.store_keys.values())}
        seq = 1
        for pid in sorted(net.initial):
            for payload in net.initial[pid]:
                token = Token(f"tk-{seq}", dict(payload), 0, 0)
                seq += 1
                stores[net.store_key(pid)].append(token)
        return cls(net=net, stores={k: tuple(v) for k, v in stores.items()}, next_token_seq=seq)

    def tokens(self, place_id: str) -> tuple[Token, ...]:
        if place_id not in self.net.places:
            raise UnknownPlace(place_id)
        return self.stores.get(self.net.store_key(place_id), ())

    def store_tokens(self, store_key: str) -> tuple[Token, ...]:
        return self.stores.get(store_key, ())

    def counts(self) -> dict[str, int]:
        """Token count per logical store (fusion aliases collapse to one entry)."""
        return {key: len(self.stores.get(key, ())) for key in sorted(set(self.net.store_keys.values()))}

    def all_token_ids(self) -> set[str]:
        ids: set[str] = set()
        for tokens in self.stores.values():
            ids.update(t.token_id for t in tokens)
        return ids

    def _replace_store(self, key: str, tokens: Iterable[Token], next_seq: int | None = None) -> "Marking":
        stores = dict(self.stores)
        stores[key] = tuple(tokens)
        return Marking(
            net=self.net,
            stores=stores,
            next_token_seq=self.next_token_seq if next_seq is None else next_seq,
        )

    def with_appended(self, place_id: str, token: Token) -> "Marking":
        """Append FIFO-last, enforcing the store's capacity bound."""
        if place_id not in self.net.places:
            raise UnknownPlace(place_id)
        key = self.net.store_key(place_id)
        current = self.stores.get(key, ())
        cap = self.net.store_capacity(key)
        if cap is not None and len(current) + 1 > cap:
            raise CapacityExceeded(f"place {place_id} (store {key}) is at capacity {cap}")
        if token.token_id in self.all_token_ids():
            raise DuplicateTokenId(token.token_id)
        return self._replace_store(key, current + (token,))

    def drain(self, place_id: str) -> tuple[tuple[Token, ...], "Marking"]:
        """Remove and return every token of a place's store (FIFO order)."""
        if place_id not in self.net.places:
            raise UnknownPlace(place_id)
        key = self.net.store_key(place_id)
        tokens = self.stores.get(key, ())
        return tokens, self._replace_store(key, ())

    def to_dict(self) -> dict:
        return {
            "stores": {
                key: [t.to_dict() for t in self.stores.get(key, ())]
                for key in sorted(set(self.net.store_keys.values()))
            },
            "next_token_seq": self.next_token_seq,
        }


def check_fusion_coherence(net: Net, marking: Marking) -> None:
    """Assert identical token-id sequences through every alias of each group."""
    for group, members in net.fusion_groups.items():
        sequences = [
            tuple(t.token_id for t in marking.tokens(member)) for member in members
        ]
        if any(seq != sequences[0] for seq in sequences):
            raise AssertionError(f"fusion group {group} aliases disagree: {sequences}")
