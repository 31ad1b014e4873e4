"""Python bindings for the chainvoice ledger core.

Transactions are plain dicts in the same shape the HTTP API and the JSONL files use,
for example ``{"type": "create_bill", "payee": "s1", "amount": 1000,
"tax_amount": 180, "memo": "rice"}``.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Optional

from . import _core
from ._core import CorruptRecord, DecodeError, InvalidScenario, JsonError

__all__ = [
    "Chain",
    "ContractState",
    "CorruptRecord",
    "DecodeError",
    "InvalidScenario",
    "JsonError",
    "encode_tx",
    "flag_evasion",
    "period_of",
    "replay",
    "run_simulation",
    "tax_report",
    "tx_hash",
    "tx_root",
    "verify_data_dir",
    "visible_records",
]

Tx = dict


def _dump(value: Any) -> str:
    return json.dumps(value, separators=(",", ":"))


def tx_hash(tx: Tx) -> str:
    return _core.tx_hash(_dump(tx))


def encode_tx(tx: Tx) -> bytes:
    return _core.encode_tx(_dump(tx))


def tx_root(txs: Iterable[Tx]) -> str:
    return _core.tx_root([_dump(t) for t in txs])


def period_of(timestamp: int) -> str:
    return _core.period_of(timestamp)


class Chain:
    """Immutable chain of blocks; ``append`` returns a new chain."""

    def __init__(self, inner: "_core.Chain"):
        self._inner = inner

    @classmethod
    def genesis(cls, chain_id: str, timestamp: int) -> "Chain":
        return cls(_core.Chain.genesis(chain_id, timestamp))

    @classmethod
    def from_jsonl(cls, text: str, chain_id: str = "") -> "Chain":
        return cls(_core.Chain.from_jsonl(text, chain_id))

    def to_jsonl(self) -> str:
        return self._inner.to_jsonl()

    def append(self, txs: Iterable[Tx], proposer: str, timestamp: int) -> "Chain":
        return Chain(self._inner.append([_dump(t) for t in txs], proposer, timestamp))

    @property
    def height(self) -> int:
        return self._inner.height

    @property
    def tip_hash(self) -> str:
        return self._inner.tip_hash

    def block(self, height: int) -> dict:
        return json.loads(self._inner.header(height))

    def validate(self) -> Optional[tuple[int, str]]:
        """None if the chain is intact, else ``(height, reason)`` of the first violation."""
        return self._inner.validate()

    def __len__(self) -> int:
        return len(self._inner)


class ContractState:
    def __init__(self, inner: Optional["_core.ContractState"] = None):
        self._inner = inner if inner is not None else _core.ContractState()

    def apply(self, tx: Tx, height: int) -> dict:
        """``{"ok": True, "events": [...]}`` or ``{"ok": False, "error": code, "detail": ...}``."""
        return json.loads(self._inner.apply(_dump(tx), height))

    def snapshot(self) -> dict:
        return json.loads(self._inner.snapshot())

    def digest(self) -> str:
        return self._inner.digest()

    @property
    def bill_counter(self) -> int:
        return self._inner.bill_counter

    @property
    def total_balance(self) -> int:
        return self._inner.total_balance


def replay(chain: Chain) -> ContractState:
    return ContractState(_core.ContractState.replay(chain._inner))


def visible_records(chain: Chain, viewer: str, role: str) -> dict:
    return json.loads(_core.visible_records(chain._inner, viewer, role))


def tax_report(chain: Chain, seller: str, period: str) -> dict:
    return json.loads(_core.tax_report(chain._inner, seller, period))


def flag_evasion(chain: Chain, period: str) -> list:
    return json.loads(_core.flag_evasion(chain._inner, period))


def run_simulation(scenario: dict) -> tuple[dict, list[dict]]:
    """Returns the summary and the parsed event trace."""
    summary, trace = _core.run_simulation(_dump(scenario))
    return json.loads(summary), [json.loads(line) for line in trace.splitlines()]


def verify_data_dir(path: str) -> dict:
    return json.loads(_core.verify_data_dir(str(path)))
