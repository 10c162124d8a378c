"""Credit-for-information contracts on a hash-chained public ledger.

Two layers mirror the exchange protocol: a private negotiation between one
spreader and one enrolled receiver (price quote, risk check against the
public record, credit transfer), and a public ledger that batches each
step's transactions into a SHA-256 hash-chained block and republishes the
running aggregates (highest credit ever paid, per-member balances, per-item
transaction lists).

The ledger is single-writer: one simulation owns and mutates it.  Chains are
immutable values; appending produces a new chain.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

# Reserved spreader_id marking settlement payouts written by the validator.
SETTLEMENT_ORACLE_ID = -1

GENESIS_PREV_HASH = bytes(32)

_INFO_ID_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _check_int(name: str, value, minimum: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True)
class LedgerParams:
    """Economic knobs of the contract mechanism.

    base_price             price of a first sale, in credit units
    markup                 fractional price increase per prior resale
    risk_aversion          weight of the public price record in refusals
    initial_credit         credit allocated to each enrolled member
    validation_delay_days  time until an exchange is validated and settled
    reward_multiplier      payout factor for trustworthy information
    """

    base_price: int = 10
    markup: float = 0.5
    risk_aversion: float = 0.7
    initial_credit: int = 100
    validation_delay_days: float = 1.0
    reward_multiplier: float = 2.0

    def __post_init__(self) -> None:
        _check_int("base_price", self.base_price, 1)
        if not (isinstance(self.markup, (int, float)) and self.markup >= 0.0):
            raise ValueError(f"markup must be >= 0, got {self.markup!r}")
        if not (isinstance(self.risk_aversion, (int, float))
                and 0.0 <= self.risk_aversion <= 1.0):
            raise ValueError(f"risk_aversion must lie in [0, 1], got {self.risk_aversion!r}")
        _check_int("initial_credit", self.initial_credit, 0)
        if not (isinstance(self.validation_delay_days, (int, float))
                and self.validation_delay_days >= 0.0):
            raise ValueError(
                f"validation_delay_days must be >= 0, got {self.validation_delay_days!r}")
        if not (isinstance(self.reward_multiplier, (int, float))
                and self.reward_multiplier >= 1.0):
            raise ValueError(
                f"reward_multiplier must be >= 1, got {self.reward_multiplier!r}")


@dataclass(frozen=True)
class Transaction:
    """One credit-for-information exchange (or a settlement payout)."""

    tx_id: int
    time: float
    spreader_id: int
    receiver_id: int
    credit_amount: int
    info_id: str

    def __post_init__(self) -> None:
        _check_int("tx_id", self.tx_id, 0)
        if not (isinstance(self.time, (int, float)) and math.isfinite(self.time)
                and self.time >= 0.0):
            raise ValueError(f"time must be a finite non-negative number, got {self.time!r}")
        _check_int("spreader_id", self.spreader_id, SETTLEMENT_ORACLE_ID)
        _check_int("receiver_id", self.receiver_id, 0)
        if self.spreader_id == self.receiver_id:
            raise ValueError("spreader_id and receiver_id must differ")
        _check_int("credit_amount", self.credit_amount, 1)
        if not (isinstance(self.info_id, str) and _INFO_ID_RE.match(self.info_id)):
            raise ValueError(
                f"info_id must match [A-Za-z0-9_.-]+, got {self.info_id!r}")

    def canonical(self) -> str:
        return (f"{self.tx_id},{self.time:.6f},{self.spreader_id},"
                f"{self.receiver_id},{self.credit_amount},{self.info_id}")

    @property
    def is_settlement(self) -> bool:
        return self.spreader_id == SETTLEMENT_ORACLE_ID


@dataclass(frozen=True)
class PrivateContract:
    """A signed pairwise exchange awaiting publication."""

    spreader_id: int
    receiver_id: int
    credit_amount: int
    info_id: str
    time: float

    def __post_init__(self) -> None:
        _check_int("spreader_id", self.spreader_id, 0)
        _check_int("receiver_id", self.receiver_id, 0)
        if self.spreader_id == self.receiver_id:
            raise ValueError("spreader_id and receiver_id must differ")
        _check_int("credit_amount", self.credit_amount, 1)
        if not (isinstance(self.info_id, str) and _INFO_ID_RE.match(self.info_id)):
            raise ValueError(f"info_id must match [A-Za-z0-9_.-]+, got {self.info_id!r}")
        if not (isinstance(self.time, (int, float)) and math.isfinite(self.time)
                and self.time >= 0.0):
            raise ValueError(f"time must be a finite non-negative number, got {self.time!r}")


@dataclass(frozen=True)
class Declined:
    """Outcome of a negotiation that formed no contract."""

    reason: str  # "insufficient credit" or "risk refusal"


@dataclass(frozen=True)
class Settlement:
    """Validation outcome for one exchange transaction."""

    tx_id: int
    receiver_id: int
    reward: int     # credits paid out; zero when the information was a rumor
    rumor: bool


def compute_block_hash(index: int, timestamp: float,
                       transactions: Sequence[Transaction],
                       prev_hash: bytes) -> bytes:
    """SHA-256 over the canonical block serialization.

    Canonical form (ASCII): ``index|timestamp|tx;tx;...|prev_hash_hex`` with
    the timestamp and transaction times fixed to six fractional digits and
    the previous hash as 64 lowercase hex characters.
    """
    payload = "|".join((
        str(index),
        f"{timestamp:.6f}",
        ";".join(tx.canonical() for tx in transactions),
        prev_hash.hex(),
    ))
    return hashlib.sha256(payload.encode("ascii")).digest()


@dataclass(frozen=True)
class Block:
    index: int
    timestamp: float
    transactions: tuple[Transaction, ...]
    prev_hash: bytes
    hash: bytes

    def __post_init__(self) -> None:
        _check_int("index", self.index, 0)
        if not (isinstance(self.timestamp, (int, float)) and math.isfinite(self.timestamp)
                and self.timestamp >= 0.0):
            raise ValueError(f"timestamp must be finite and non-negative, got {self.timestamp!r}")
        if not (isinstance(self.prev_hash, bytes) and len(self.prev_hash) == 32):
            raise ValueError("prev_hash must be 32 bytes")
        if not (isinstance(self.hash, bytes) and len(self.hash) == 32):
            raise ValueError("hash must be 32 bytes")


def make_block(index: int, timestamp: float,
               transactions: Sequence[Transaction], prev_hash: bytes) -> Block:
    """Assemble a block with its hash computed from the contents."""
    txs = tuple(transactions)
    return Block(index=index, timestamp=timestamp, transactions=txs,
                 prev_hash=prev_hash,
                 hash=compute_block_hash(index, timestamp, txs, prev_hash))


@dataclass(frozen=True)
class Chain:
    """An immutable sequence of blocks; append returns a new chain."""

    blocks: tuple[Block, ...] = ()

    @classmethod
    def genesis(cls, timestamp: float = 0.0) -> "Chain":
        return cls(blocks=(make_block(0, timestamp, (), GENESIS_PREV_HASH),))

    @property
    def last(self) -> Block:
        if not self.blocks:
            raise ValueError("chain is empty")
        return self.blocks[-1]

    def __len__(self) -> int:
        return len(self.blocks)

    def transactions(self) -> Iterable[Transaction]:
        for block in self.blocks:
            yield from block.transactions


def append_block(chain: Chain, transactions: Sequence[Transaction],
                 timestamp: float) -> Chain:
    """Extend the chain by one block holding the given transactions."""
    if not chain.blocks:
        raise ValueError("cannot append to an empty chain; create a genesis block first")
    last = chain.last
    if timestamp < last.timestamp:
        raise ValueError(
            f"timestamp {timestamp} precedes predecessor timestamp {last.timestamp}")
    block = make_block(last.index + 1, timestamp, transactions, last.hash)
    return Chain(blocks=chain.blocks + (block,))


@dataclass(frozen=True)
class ChainViolation:
    """First integrity failure found in a chain."""

    block_index: int
    check: str

    def __str__(self) -> str:
        return f"block {self.block_index}: {self.check}"


def validate_chain(chain: Chain) -> Optional[ChainViolation]:
    """Recheck every link and hash; None means the chain is intact.

    Checks, in order per block: index continuity, genesis shape, link to the
    predecessor hash, timestamp monotonicity, hash recomputation.
    """
    if not chain.blocks:
        return ChainViolation(0, "empty chain")
    for i, block in enumerate(chain.blocks):
        if block.index != i:
            return ChainViolation(i, "index mismatch")
        if i == 0:
            if block.prev_hash != GENESIS_PREV_HASH:
                return ChainViolation(0, "genesis prev_hash")
            if block.transactions:
                return ChainViolation(0, "genesis transactions")
        else:
            prev = chain.blocks[i - 1]
            if block.prev_hash != prev.hash:
                return ChainViolation(i, "prev_hash mismatch")
            if block.timestamp < prev.timestamp:
                return ChainViolation(i, "timestamp order")
        expected = compute_block_hash(block.index, block.timestamp,
                                      block.transactions, block.prev_hash)
        if block.hash != expected:
            return ChainViolation(i, "hash mismatch")
    return None


class PublicLedger:
    """Chain plus the live aggregates republished after every block.

    cred_list     per-member credit balance as recorded on chain
    info_list     per-information list of transaction ids
    resale_count  sales so far per (spreader, information) pair; advanced at
                  negotiation time so prices escalate within a step
    c_max         highest credit amount across all exchange transactions
    """

    def __init__(self, initial_credits: Optional[dict[int, int]] = None,
                 genesis_time: float = 0.0) -> None:
        self.chain = Chain.genesis(genesis_time)
        self.c_max = 0
        self.initial_credits = dict(initial_credits or {})
        self.cred_list: dict[int, int] = dict(self.initial_credits)
        self.info_list: dict[str, list[int]] = {}
        self.resale_count: dict[tuple[int, str], int] = {}
        self.settled_ids: set[int] = set()
        self._next_tx_id = 0
        self._pending_settlements: list[Transaction] = []
        self._awaiting: deque[Transaction] = deque()

    @property
    def block_count(self) -> int:
        return len(self.chain)


def asking_price(ledger: PublicLedger, spreader_id: int, info_id: str,
                 params: LedgerParams) -> int:
    """Price quote: the base price marked up per prior resale by this spreader."""
    resales = ledger.resale_count.get((spreader_id, info_id), 0)
    return _round_half_up(params.base_price * (1.0 + params.markup * resales))


def acceptance_probability(price: int, c_max: int, params: LedgerParams) -> float:
    """Chance a rational enrolled receiver accepts a quoted price.

    The receiver weighs the quote against the highest credit ever recorded;
    a price at or above the public record triggers full risk aversion, and an
    empty record is treated the same way.
    """
    if price < 1:
        raise ValueError(f"price must be >= 1, got {price!r}")
    if c_max < 0:
        raise ValueError(f"c_max must be >= 0, got {c_max!r}")
    exposure = min(1.0, price / max(c_max, price))
    return 1.0 - params.risk_aversion * exposure


def negotiate_private_contract(spreader, receiver, ledger: PublicLedger,
                               params: LedgerParams, rng_draw: float,
                               info_id: str, time: float):
    """Run one pairwise negotiation; returns a PrivateContract or Declined.

    ``spreader`` and ``receiver`` are agent-like objects exposing ``id``,
    ``enrolled``, ``credit`` and ``known_info``.  The caller supplies the
    uniform [0,1) draw so the operation itself stays deterministic.  On
    success the credit moves immediately (receiver pays, spreader accrues),
    the receiver learns the information, and the spreader's resale count
    advances.
    """
    if not receiver.enrolled:
        raise ValueError("receiver is not enrolled; unenrolled exchanges bypass the ledger")
    if info_id not in spreader.known_info:
        raise ValueError(f"spreader {spreader.id} does not hold {info_id!r}")
    if not (0.0 <= rng_draw < 1.0):
        raise ValueError(f"rng_draw must lie in [0, 1), got {rng_draw!r}")
    price = asking_price(ledger, spreader.id, info_id, params)
    if receiver.credit < price:
        return Declined("insufficient credit")
    if rng_draw >= acceptance_probability(price, ledger.c_max, params):
        return Declined("risk refusal")
    receiver.credit -= price
    spreader.credit += price
    receiver.known_info.add(info_id)
    key = (spreader.id, info_id)
    ledger.resale_count[key] = ledger.resale_count.get(key, 0) + 1
    return PrivateContract(spreader_id=spreader.id, receiver_id=receiver.id,
                           credit_amount=price, info_id=info_id, time=time)


def publish_contracts(ledger: PublicLedger, contracts: Sequence[PrivateContract],
                      timestamp: float) -> PublicLedger:
    """Record a step's contracts (and any queued settlements) in one block.

    Transactions are assigned monotone ids and listed in id order: queued
    settlement payouts first, then this step's exchanges.  With nothing to
    record, the ledger is returned unchanged and no block is appended.
    """
    new_txs = []
    for contract in contracts:
        new_txs.append(Transaction(
            tx_id=ledger._next_tx_id, time=contract.time,
            spreader_id=contract.spreader_id, receiver_id=contract.receiver_id,
            credit_amount=contract.credit_amount, info_id=contract.info_id))
        ledger._next_tx_id += 1
    block_txs = tuple(ledger._pending_settlements) + tuple(new_txs)
    if not block_txs:
        return ledger
    ledger.chain = append_block(ledger.chain, block_txs, timestamp)
    for tx in block_txs:
        if tx.is_settlement:
            ledger.cred_list[tx.receiver_id] = (
                ledger.cred_list.get(tx.receiver_id, 0) + tx.credit_amount)
        else:
            ledger.cred_list[tx.receiver_id] = (
                ledger.cred_list.get(tx.receiver_id, 0) - tx.credit_amount)
            ledger.cred_list[tx.spreader_id] = (
                ledger.cred_list.get(tx.spreader_id, 0) + tx.credit_amount)
            if tx.credit_amount > ledger.c_max:
                ledger.c_max = tx.credit_amount
            ledger._awaiting.append(tx)
        ledger.info_list.setdefault(tx.info_id, []).append(tx.tx_id)
    ledger._pending_settlements = []
    return ledger


def settle_contracts(ledger: PublicLedger, agents, current_time: float,
                     params: LedgerParams, is_rumor: bool) -> list[Settlement]:
    """Validate every exchange whose delay has elapsed, exactly once each.

    Trustworthy information pays the receiver ``reward_multiplier`` times the
    price, recorded on the next published block under the validator's
    reserved id.  A rumor pays nothing: the receiver's earlier payment is the
    loss.  ``agents`` maps member id to an agent-like object with ``credit``.
    """
    reports: list[Settlement] = []
    while ledger._awaiting and (
            ledger._awaiting[0].time + params.validation_delay_days <= current_time):
        tx = ledger._awaiting.popleft()
        if tx.tx_id in ledger.settled_ids:
            continue
        ledger.settled_ids.add(tx.tx_id)
        if is_rumor:
            reports.append(Settlement(tx_id=tx.tx_id, receiver_id=tx.receiver_id,
                                      reward=0, rumor=True))
            continue
        reward = _round_half_up(params.reward_multiplier * tx.credit_amount)
        agents[tx.receiver_id].credit += reward
        ledger._pending_settlements.append(Transaction(
            tx_id=ledger._next_tx_id, time=current_time,
            spreader_id=SETTLEMENT_ORACLE_ID, receiver_id=tx.receiver_id,
            credit_amount=reward, info_id=tx.info_id))
        ledger._next_tx_id += 1
        reports.append(Settlement(tx_id=tx.tx_id, receiver_id=tx.receiver_id,
                                  reward=reward, rumor=False))
    return reports


def replay_credits(chain: Chain, initial_credits: dict[int, int]) -> dict[int, int]:
    """Fold the chain from genesis into per-member balances.

    Independent of the live aggregates; used to audit ``cred_list``.
    """
    balances = dict(initial_credits)
    for tx in chain.transactions():
        if tx.is_settlement:
            balances[tx.receiver_id] = balances.get(tx.receiver_id, 0) + tx.credit_amount
        else:
            balances[tx.receiver_id] = balances.get(tx.receiver_id, 0) - tx.credit_amount
            balances[tx.spreader_id] = balances.get(tx.spreader_id, 0) + tx.credit_amount
    return balances


def chain_to_json(chain: Chain) -> dict:
    """Plain-dict form of a chain, hashes as lowercase hex."""
    return {
        "blocks": [
            {
                "index": b.index,
                "timestamp": b.timestamp,
                "transactions": [
                    {
                        "tx_id": tx.tx_id,
                        "time": tx.time,
                        "spreader_id": tx.spreader_id,
                        "receiver_id": tx.receiver_id,
                        "credit_amount": tx.credit_amount,
                        "info_id": tx.info_id,
                    }
                    for tx in b.transactions
                ],
                "prev_hash": b.prev_hash.hex(),
                "hash": b.hash.hex(),
            }
            for b in chain.blocks
        ]
    }


def _require_keys(obj: dict, keys: set[str], where: str) -> None:
    if set(obj) != keys:
        raise ValueError(f"{where}: expected keys {sorted(keys)}, got {sorted(obj)}")


def chain_from_json(doc: dict) -> Chain:
    """Rebuild a chain from its dict form, keeping stored hashes unverified.

    Stored hashes are preserved as-is so that ``validate_chain`` can report
    tampering; structural problems raise ValueError.
    """
    if not isinstance(doc, dict):
        raise ValueError("chain document must be an object")
    _require_keys(doc, {"blocks"}, "chain document")
    if not isinstance(doc["blocks"], list):
        raise ValueError("blocks must be a list")
    blocks = []
    for bi, raw in enumerate(doc["blocks"]):
        if not isinstance(raw, dict):
            raise ValueError(f"block {bi}: must be an object")
        _require_keys(raw, {"index", "timestamp", "transactions", "prev_hash", "hash"},
                      f"block {bi}")
        if not isinstance(raw["transactions"], list):
            raise ValueError(f"block {bi}: transactions must be a list")
        txs = []
        for ti, tx in enumerate(raw["transactions"]):
            if not isinstance(tx, dict):
                raise ValueError(f"block {bi} transaction {ti}: must be an object")
            _require_keys(tx, {"tx_id", "time", "spreader_id", "receiver_id",
                               "credit_amount", "info_id"},
                          f"block {bi} transaction {ti}")
            txs.append(Transaction(
                tx_id=tx["tx_id"], time=float(tx["time"]),
                spreader_id=tx["spreader_id"], receiver_id=tx["receiver_id"],
                credit_amount=tx["credit_amount"], info_id=tx["info_id"]))
        try:
            prev_hash = bytes.fromhex(raw["prev_hash"])
            block_hash = bytes.fromhex(raw["hash"])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"block {bi}: bad hash encoding: {exc}") from exc
        blocks.append(Block(index=raw["index"], timestamp=float(raw["timestamp"]),
                            transactions=tuple(txs), prev_hash=prev_hash,
                            hash=block_hash))
    return Chain(blocks=tuple(blocks))


def save_chain(chain: Chain, path) -> None:
    Path(path).write_text(json.dumps(chain_to_json(chain), indent=1) + "\n",
                          encoding="utf-8")


def load_chain(path) -> Chain:
    text = Path(path).read_text(encoding="utf-8")
    return chain_from_json(json.loads(text))
