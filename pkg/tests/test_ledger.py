"""Ledger checks: hashing, chain integrity, negotiation, settlement, replay."""
import dataclasses
import json
import random

import pytest

from rumorsim.abm import Agent, AgentState
from rumorsim.ledger import (GENESIS_PREV_HASH, SETTLEMENT_ORACLE_ID, Block,
                             Chain, Declined, LedgerParams, PrivateContract,
                             PublicLedger, Transaction, acceptance_probability,
                             append_block, asking_price, chain_from_json,
                             chain_to_json, compute_block_hash, load_chain,
                             make_block, negotiate_private_contract,
                             publish_contracts, replay_credits, save_chain,
                             settle_contracts, validate_chain)

# Golden digest of the canonical genesis payload "0|0.000000||" + 64 zeros,
# computed once with hashlib and frozen.
GENESIS_HASH_HEX = "c03860ba63adf550bb75804e3e0a3bd829fc9e1b47c88b8eccde314c0dc3e61c"

DEFAULTS = LedgerParams()


def sample_tx(tx_id=0, **kwargs):
    fields = dict(tx_id=tx_id, time=1.5, spreader_id=3, receiver_id=7,
                  credit_amount=10, info_id="info-0")
    fields.update(kwargs)
    return Transaction(**fields)


def enrolled_agent(agent_id, credit=100, state=AgentState.IGNORANT_ENROLLED):
    return Agent(id=agent_id, state=state, enrolled=True, credit=credit)


def spreader_agent(agent_id, info="info-0"):
    return Agent(id=agent_id, state=AgentState.SPREADER, enrolled=False,
                 credit=0, known_info={info})


def build_chain(n_blocks, txs_per_block=3, amount=lambda i, j: 5 + (i * 7 + j) % 20):
    chain = Chain.genesis()
    tx_id = 0
    for i in range(1, n_blocks):
        txs = []
        for j in range(txs_per_block):
            txs.append(Transaction(tx_id=tx_id, time=float(i), spreader_id=2 * j,
                                   receiver_id=2 * j + 1,
                                   credit_amount=amount(i, j), info_id="info-0"))
            tx_id += 1
        chain = append_block(chain, txs, timestamp=float(i))
    return chain


class TestBlockHash:
    def test_genesis_golden_value(self):
        assert compute_block_hash(0, 0.0, (), GENESIS_PREV_HASH).hex() == GENESIS_HASH_HEX
        assert Chain.genesis().blocks[0].hash.hex() == GENESIS_HASH_HEX

    def test_identical_payloads_identical_digests(self):
        txs = (sample_tx(),)
        a = compute_block_hash(4, 2.5, txs, b"\x11" * 32)
        b = compute_block_hash(4, 2.5, txs, b"\x11" * 32)
        assert a == b

    def test_any_field_change_changes_the_digest(self):
        base = compute_block_hash(4, 2.5, (sample_tx(),), b"\x11" * 32)
        assert compute_block_hash(5, 2.5, (sample_tx(),), b"\x11" * 32) != base
        assert compute_block_hash(4, 2.6, (sample_tx(),), b"\x11" * 32) != base
        assert compute_block_hash(4, 2.5, (sample_tx(credit_amount=11),), b"\x11" * 32) != base
        assert compute_block_hash(4, 2.5, (sample_tx(),), b"\x12" * 32) != base


class TestChain:
    def test_append_links_blocks(self):
        chain = Chain.genesis()
        chain2 = append_block(chain, (sample_tx(),), timestamp=1.0)
        assert len(chain2) == 2
        assert chain2.blocks[1].prev_hash == chain2.blocks[0].hash
        assert len(chain) == 1  # value semantics: the original is untouched
        assert validate_chain(chain2) is None

    def test_append_rejects_earlier_timestamp(self):
        chain = append_block(Chain.genesis(timestamp=2.0), (sample_tx(),), timestamp=3.0)
        with pytest.raises(ValueError, match="precedes"):
            append_block(chain, (sample_tx(tx_id=1),), timestamp=1.0)

    def test_append_rejects_empty_chain(self):
        with pytest.raises(ValueError, match="genesis"):
            append_block(Chain(), (sample_tx(),), timestamp=0.0)

    def test_validate_accepts_long_untampered_chain(self):
        assert validate_chain(build_chain(100)) is None

    def test_validate_flags_tampered_credit(self):
        chain = build_chain(10)
        block = chain.blocks[5]
        txs = list(block.transactions)
        txs[0] = dataclasses.replace(txs[0], credit_amount=txs[0].credit_amount + 1)
        tampered = Block(index=block.index, timestamp=block.timestamp,
                         transactions=tuple(txs), prev_hash=block.prev_hash,
                         hash=block.hash)
        blocks = chain.blocks[:5] + (tampered,) + chain.blocks[6:]
        violation = validate_chain(Chain(blocks=blocks))
        assert violation is not None
        assert violation.block_index == 5
        assert violation.check == "hash mismatch"

    def test_validate_flags_spliced_chains(self):
        genesis = Chain.genesis()
        fork_a = append_block(genesis, (sample_tx(0),), timestamp=1.0)
        fork_b = append_block(genesis, (sample_tx(0, credit_amount=99),), timestamp=1.0)
        fork_b2 = append_block(fork_b, (sample_tx(1),), timestamp=2.0)
        spliced = Chain(blocks=fork_a.blocks + fork_b2.blocks[2:])
        violation = validate_chain(spliced)
        assert violation is not None
        assert violation.block_index == 2
        assert violation.check == "prev_hash mismatch"

    def test_validate_flags_bad_genesis_and_indices(self):
        bad_genesis = Chain(blocks=(make_block(0, 0.0, (), b"\x01" * 32),))
        assert validate_chain(bad_genesis).check == "genesis prev_hash"
        chain = build_chain(3)
        reindexed = Block(index=7, timestamp=chain.blocks[1].timestamp,
                          transactions=chain.blocks[1].transactions,
                          prev_hash=chain.blocks[1].prev_hash,
                          hash=chain.blocks[1].hash)
        violation = validate_chain(Chain(blocks=(chain.blocks[0], reindexed)))
        assert violation.check == "index mismatch"
        assert validate_chain(Chain()).check == "empty chain"

    def test_random_single_field_mutations_are_detected(self):
        chain = build_chain(20)
        rng = random.Random(7)
        for _ in range(200):
            assert validate_chain(_mutate(chain, rng)) is not None


def _mutate(chain: Chain, rng: random.Random) -> Chain:
    """Copy the chain with one randomly chosen field changed to a valid value."""
    bi = rng.randrange(1, len(chain.blocks))
    block = chain.blocks[bi]
    choice = rng.choice(["index", "timestamp", "prev_hash", "hash", "tx"])
    if choice == "index":
        block = dataclasses.replace(block, index=block.index + rng.randrange(1, 5))
    elif choice == "timestamp":
        block = dataclasses.replace(block, timestamp=block.timestamp + rng.uniform(0.5, 3.0))
    elif choice == "prev_hash":
        flipped = bytearray(block.prev_hash)
        flipped[rng.randrange(32)] ^= 1 << rng.randrange(8)
        block = dataclasses.replace(block, prev_hash=bytes(flipped))
    elif choice == "hash":
        flipped = bytearray(block.hash)
        flipped[rng.randrange(32)] ^= 1 << rng.randrange(8)
        block = dataclasses.replace(block, hash=bytes(flipped))
    else:
        txs = list(block.transactions)
        ti = rng.randrange(len(txs))
        tx = txs[ti]
        field_choice = rng.choice(["tx_id", "time", "spreader_id", "receiver_id",
                                   "credit_amount", "info_id"])
        if field_choice == "tx_id":
            tx = dataclasses.replace(tx, tx_id=tx.tx_id + 1000)
        elif field_choice == "time":
            tx = dataclasses.replace(tx, time=tx.time + 0.25)
        elif field_choice == "spreader_id":
            new_id = tx.spreader_id + 100
            if new_id == tx.receiver_id:
                new_id += 1
            tx = dataclasses.replace(tx, spreader_id=new_id)
        elif field_choice == "receiver_id":
            new_id = tx.receiver_id + 100
            if new_id == tx.spreader_id:
                new_id += 1
            tx = dataclasses.replace(tx, receiver_id=new_id)
        elif field_choice == "credit_amount":
            tx = dataclasses.replace(tx, credit_amount=tx.credit_amount + rng.randrange(1, 9))
        else:
            tx = dataclasses.replace(tx, info_id="info-tampered")
        txs[ti] = tx
        block = dataclasses.replace(block, transactions=tuple(txs))
    return Chain(blocks=chain.blocks[:bi] + (block,) + chain.blocks[bi + 1:])


class TestPricing:
    def test_first_sale_is_base_price(self):
        ledger = PublicLedger()
        assert asking_price(ledger, 3, "info-0", DEFAULTS) == 10

    def test_price_marks_up_with_resales(self):
        ledger = PublicLedger()
        ledger.resale_count[(3, "info-0")] = 2
        assert asking_price(ledger, 3, "info-0", DEFAULTS) == 20

    def test_zero_markup_keeps_base_price(self):
        params = LedgerParams(markup=0.0)
        ledger = PublicLedger()
        ledger.resale_count[(3, "info-0")] = 50
        assert asking_price(ledger, 3, "info-0", params) == 10

    def test_acceptance_probability_examples(self):
        assert acceptance_probability(10, 0, DEFAULTS) == pytest.approx(0.3)
        assert acceptance_probability(10, 100, DEFAULTS) == pytest.approx(0.93)
        fearless = LedgerParams(risk_aversion=0.0)
        assert acceptance_probability(10, 0, fearless) == 1.0
        assert acceptance_probability(999, 10, DEFAULTS) == pytest.approx(0.3)


class TestNegotiation:
    def test_insufficient_credit_declines(self):
        ledger = PublicLedger()
        outcome = negotiate_private_contract(
            spreader_agent(1), enrolled_agent(2, credit=5), ledger, DEFAULTS,
            rng_draw=0.0, info_id="info-0", time=1.0)
        assert outcome == Declined("insufficient credit")

    def test_successful_contract_moves_credit(self):
        ledger = PublicLedger()
        seller = spreader_agent(1)
        buyer = enrolled_agent(2, credit=100)
        outcome = negotiate_private_contract(seller, buyer, ledger, DEFAULTS,
                                             rng_draw=0.0, info_id="info-0", time=1.0)
        assert isinstance(outcome, PrivateContract)
        assert outcome.credit_amount == 10
        assert buyer.credit == 90
        assert seller.credit == 10
        assert buyer.credit - 100 + (seller.credit - 0) == 0
        assert "info-0" in buyer.known_info
        assert ledger.resale_count[(1, "info-0")] == 1

    def test_high_draw_is_a_risk_refusal(self):
        ledger = PublicLedger()
        outcome = negotiate_private_contract(
            spreader_agent(1), enrolled_agent(2), ledger, DEFAULTS,
            rng_draw=0.999, info_id="info-0", time=1.0)
        assert outcome == Declined("risk refusal")

    def test_rejects_unenrolled_receiver_and_unknown_info(self):
        ledger = PublicLedger()
        outsider = Agent(id=2, state=AgentState.IGNORANT_UNENROLLED, enrolled=False,
                         credit=100)
        with pytest.raises(ValueError, match="not enrolled"):
            negotiate_private_contract(spreader_agent(1), outsider, ledger,
                                       DEFAULTS, 0.0, "info-0", 1.0)
        with pytest.raises(ValueError, match="does not hold"):
            negotiate_private_contract(spreader_agent(1, info="other"),
                                       enrolled_agent(2), ledger, DEFAULTS,
                                       0.0, "info-0", 1.0)


class TestPublish:
    def test_empty_publish_is_a_no_op(self):
        ledger = PublicLedger()
        before = ledger.chain
        publish_contracts(ledger, [], timestamp=1.0)
        assert ledger.chain is before
        assert ledger.c_max == 0

    def test_c_max_tracks_the_largest_exchange(self):
        ledger = PublicLedger()
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        assert ledger.c_max == 10
        publish_contracts(ledger, [
            PrivateContract(1, 3, 25, "info-0", 2.0),
            PrivateContract(4, 5, 15, "info-0", 2.0),
        ], 2.0)
        assert ledger.c_max == 25
        publish_contracts(ledger, [PrivateContract(1, 6, 5, "info-0", 3.0)], 3.0)
        assert ledger.c_max == 25  # never decreases
        assert validate_chain(ledger.chain) is None

    def test_cred_list_matches_replay(self):
        ledger = PublicLedger(initial_credits={2: 100, 3: 100})
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        publish_contracts(ledger, [PrivateContract(2, 3, 12, "info-0", 2.0)], 2.0)
        assert ledger.cred_list == replay_credits(ledger.chain, ledger.initial_credits)
        assert ledger.cred_list[1] == 10
        assert ledger.cred_list[2] == 102
        assert ledger.cred_list[3] == 88


class TestSettlement:
    def test_nothing_due_settles_nothing(self):
        ledger = PublicLedger()
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        assert settle_contracts(ledger, {}, current_time=1.5, params=DEFAULTS,
                                is_rumor=False) == []

    def test_trustworthy_information_pays_double(self):
        ledger = PublicLedger(initial_credits={2: 100})
        buyer = enrolled_agent(2, credit=90)  # already paid 10
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        reports = settle_contracts(ledger, {2: buyer}, current_time=2.0,
                                   params=DEFAULTS, is_rumor=False)
        assert len(reports) == 1
        assert reports[0].reward == 20
        assert buyer.credit == 110  # net +10 over the exchange
        publish_contracts(ledger, [], timestamp=2.0)  # settlement record flushes
        assert len(ledger.chain) == 3
        settlement_tx = ledger.chain.blocks[2].transactions[0]
        assert settlement_tx.spreader_id == SETTLEMENT_ORACLE_ID
        assert settlement_tx.credit_amount == 20
        assert ledger.cred_list == replay_credits(ledger.chain, ledger.initial_credits)

    def test_rumor_pays_nothing_and_records_nothing(self):
        ledger = PublicLedger(initial_credits={2: 100})
        buyer = enrolled_agent(2, credit=90)
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        reports = settle_contracts(ledger, {2: buyer}, current_time=2.0,
                                   params=DEFAULTS, is_rumor=True)
        assert len(reports) == 1
        assert reports[0].reward == 0 and reports[0].rumor
        assert reports[0].receiver_id == 2
        assert buyer.credit == 90  # the paid credit is the loss
        publish_contracts(ledger, [], timestamp=2.0)
        assert len(ledger.chain) == 2  # no settlement record appended

    def test_no_double_settlement(self):
        ledger = PublicLedger(initial_credits={2: 100})
        buyer = enrolled_agent(2, credit=90)
        publish_contracts(ledger, [PrivateContract(1, 2, 10, "info-0", 1.0)], 1.0)
        first = settle_contracts(ledger, {2: buyer}, 2.0, DEFAULTS, False)
        second = settle_contracts(ledger, {2: buyer}, 3.0, DEFAULTS, False)
        assert len(first) == 1 and second == []
        assert buyer.credit == 110


class TestChainJson:
    def test_round_trip_preserves_hashes(self, tmp_path):
        chain = build_chain(8)
        path = tmp_path / "chain.json"
        save_chain(chain, path)
        loaded = load_chain(path)
        assert [b.hash for b in loaded.blocks] == [b.hash for b in chain.blocks]
        assert validate_chain(loaded) is None
        assert chain_from_json(chain_to_json(chain)) == chain

    def test_tampered_file_fails_validation(self, tmp_path):
        chain = build_chain(5)
        path = tmp_path / "chain.json"
        save_chain(chain, path)
        doc = json.loads(path.read_text())
        doc["blocks"][3]["transactions"][0]["credit_amount"] += 7
        path.write_text(json.dumps(doc))
        violation = validate_chain(load_chain(path))
        assert violation is not None
        assert violation.block_index == 3
        assert violation.check == "hash mismatch"

    def test_malformed_documents_are_rejected(self):
        with pytest.raises(ValueError):
            chain_from_json({"blocks": [{"index": 0}]})
        with pytest.raises(ValueError):
            chain_from_json({"nope": []})


class TestLedgerParams:
    def test_field_bounds(self):
        with pytest.raises(ValueError):
            LedgerParams(base_price=0)
        with pytest.raises(ValueError):
            LedgerParams(markup=-0.1)
        with pytest.raises(ValueError):
            LedgerParams(risk_aversion=1.5)
        with pytest.raises(ValueError):
            LedgerParams(reward_multiplier=0.5)
        with pytest.raises(ValueError):
            LedgerParams(validation_delay_days=-1.0)


class TestTransactionInvariants:
    def test_bounds(self):
        with pytest.raises(ValueError):
            sample_tx(credit_amount=0)
        with pytest.raises(ValueError):
            sample_tx(spreader_id=7, receiver_id=7)
        with pytest.raises(ValueError):
            sample_tx(info_id="bad info id")
        sample_tx(spreader_id=SETTLEMENT_ORACLE_ID)  # reserved validator id
