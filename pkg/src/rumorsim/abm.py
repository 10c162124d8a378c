"""Individual-level rumor spreading on an explicit random graph.

Each run owns one PCG64 stream seeded by ``sim_seed`` (the graph has its own,
seeded by ``graph_seed``).  Draws are consumed in a fixed, documented order so
runs reproduce bit-for-bit on any platform:

1. seed-spreader selection, then enrolled-ignorant selection;
2. per step, one uniform per ignorant-spreader contact, walking ignorants by
   ascending id and their spreader neighbors by ascending id;
3. in ledger mode, one extra uniform per contract negotiation, receivers by
   ascending id;
4. one uniform per spreader-(spreader or stifler) contact, spreaders by
   ascending id, neighbors by ascending id;
5. one uniform per spreader, ascending id, for the forgetting draw.

A step of length dt reads a snapshot of all states and applies every
transition at once.  Per contact, an ignorant starts spreading with
probability spread_prob*dt, else stifles with probability dismiss_prob*dt;
spreaders stifle with probability stifle_prob*dt per informed neighbor and
forget with probability forget_rate*dt.  An agent triggered toward both
outcomes becomes a spreader (spread beats stifle); in ledger mode the first
triggering contact, by ascending neighbor id, is the one negotiated.

In ledger mode enrolled ignorants use the unenrolled base probabilities, but
actually converting to a spreader requires a successful credit negotiation;
a declined negotiation turns the receiver into a stifler directly.  The
effective rates are therefore emergent: spread_prob_unenrolled * p_accept
toward spreading, with the declined mass added to dismissal.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from .graph import SocialGraph, generate_graph
from .ledger import (LedgerParams, PrivateContract, PublicLedger, Declined,
                     negotiate_private_contract, publish_contracts,
                     settle_contracts)
from .models import BlockRateParams, PopulationConfig

PARAMETRIC = "parametric"
LEDGER = "ledger"

DEFAULT_INFO_ID = "info-0"

# Enrollment split of the initial ignorants: the enrolled count is
# round-half-up of (size - spreaders) * ratio / (1 + ratio).
ENROLLMENT_ROUNDING = "round-half-up on the enrolled count, remainder unenrolled"


class AgentState(IntEnum):
    IGNORANT_ENROLLED = 0
    IGNORANT_UNENROLLED = 1
    SPREADER = 2
    STIFLER = 3


@dataclass
class Agent:
    """One individual: compartment, contract enrollment, credit, held items."""

    id: int
    state: AgentState
    enrolled: bool
    credit: int = 0
    known_info: set = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.state == AgentState.IGNORANT_ENROLLED and not self.enrolled:
            raise ValueError(f"agent {self.id}: enrolled-ignorant state requires enrollment")
        if self.credit < 0:
            raise ValueError(f"agent {self.id}: credit must be non-negative")


@dataclass
class AgentPopulation:
    """All agents of one run plus the identifier of the seeded information."""

    agents: list[Agent]
    info_id: str = DEFAULT_INFO_ID

    def counts(self) -> tuple[int, int, int, int]:
        c = [0, 0, 0, 0]
        for agent in self.agents:
            c[agent.state] += 1
        return tuple(c)


@dataclass(frozen=True)
class AbmConfig:
    """Everything one stochastic run depends on."""

    pop: PopulationConfig
    rates: BlockRateParams
    graph_seed: int
    sim_seed: int
    dt: float = 0.01
    t_end: float = 10.0
    mode: str = PARAMETRIC
    ledger_params: LedgerParams = LedgerParams()
    info_is_rumor: bool = True
    info_id: str = DEFAULT_INFO_ID

    def __post_init__(self) -> None:
        if self.mode not in (PARAMETRIC, LEDGER):
            raise ValueError(f"mode must be '{PARAMETRIC}' or '{LEDGER}', got {self.mode!r}")
        if not (isinstance(self.dt, (int, float)) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (isinstance(self.t_end, (int, float)) and math.isfinite(self.t_end)
                and self.t_end >= 0.0):
            raise ValueError(f"t_end must be finite and non-negative, got {self.t_end!r}")
        for name in ("graph_seed", "sim_seed"):
            seed = getattr(self, name)
            if not isinstance(seed, int) or isinstance(seed, bool) or not (0 <= seed < 2 ** 64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {seed!r}")
        r = self.rates
        if (r.spread_prob_enrolled + r.dismiss_prob_enrolled) * self.dt > 1.0:
            raise ValueError("per-step enrolled contact probability exceeds 1; shrink dt")
        if (r.spread_prob_unenrolled + r.dismiss_prob_unenrolled) * self.dt > 1.0:
            raise ValueError("per-step unenrolled contact probability exceeds 1; shrink dt")
        if r.stifle_prob * self.dt > 1.0 or r.forget_rate * self.dt > 1.0:
            raise ValueError("per-step stifle/forget probability exceeds 1; shrink dt")
        worst = max(r.spread_prob_unenrolled, r.dismiss_prob_unenrolled,
                    r.spread_prob_enrolled, r.dismiss_prob_enrolled,
                    r.stifle_prob * r.mean_degree, r.forget_rate)
        if worst * self.dt > 0.1:
            warnings.warn(
                f"per-step probabilities reach {worst * self.dt:.3f}; the "
                "discrete step is a coarse approximation above 0.1",
                stacklevel=2)


@dataclass(frozen=True)
class StepReport:
    """Transition and contact tallies for one step."""

    t: float
    contacts_enrolled: int = 0
    contacts_unenrolled: int = 0
    spread_contacts_enrolled: int = 0
    spread_contacts_unenrolled: int = 0
    stifle_contacts_enrolled: int = 0
    stifle_contacts_unenrolled: int = 0
    new_spreaders: int = 0
    new_stiflers_from_ignorant: int = 0
    new_stiflers_from_spreader: int = 0
    contracts_formed: int = 0
    declined_risk: int = 0
    declined_credit: int = 0


@dataclass(frozen=True)
class AbmTrajectory:
    """Per-step compartment counts plus a ledger summary and step reports."""

    times: tuple[float, ...]
    n_ib: tuple[int, ...]
    n_in: tuple[int, ...]
    n_s: tuple[int, ...]
    n_r: tuple[int, ...]
    c_max: tuple[int, ...]
    blocks: tuple[int, ...]
    metadata: dict
    reports: tuple[StepReport, ...]

    def __post_init__(self) -> None:
        lengths = {len(self.times), len(self.n_ib), len(self.n_in),
                   len(self.n_s), len(self.n_r), len(self.c_max), len(self.blocks)}
        if lengths != {len(self.times)}:
            raise ValueError("all per-time sequences must share one length")
        if len(self.reports) != len(self.times) - 1:
            raise ValueError("there must be exactly one report per step")

    def densities(self) -> dict[str, np.ndarray]:
        n = self.metadata["n"]
        return {
            "i_b": np.asarray(self.n_ib, dtype=float) / n,
            "i_n": np.asarray(self.n_in, dtype=float) / n,
            "s": np.asarray(self.n_s, dtype=float) / n,
            "r": np.asarray(self.n_r, dtype=float) / n,
        }


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _as_generator(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.PCG64(seed_or_rng))


def init_agents(graph: SocialGraph, pop: PopulationConfig, mode: str,
                ledger_params: LedgerParams, sim_seed,
                info_id: str = DEFAULT_INFO_ID) -> AgentPopulation:
    """Draw seed spreaders, then split the rest into enrollment classes.

    Both draws are uniform without replacement from the run's stream;
    ``sim_seed`` may be an integer or an already-running Generator.  The
    enrolled count follows ENROLLMENT_ROUNDING.
    """
    if pop.size != graph.n:
        raise ValueError(f"population size {pop.size} does not match graph size {graph.n}")
    rng = _as_generator(sim_seed)
    n = pop.size
    a = pop.initial_spreaders
    spreader_ids = set(int(v) for v in rng.choice(n, size=a, replace=False))
    rest = np.array(sorted(set(range(n)) - spreader_ids), dtype=np.int64)
    eps = pop.enrollment_ratio
    if math.isinf(eps):
        n_enrolled = len(rest)
    else:
        n_enrolled = _round_half_up(len(rest) * eps / (1.0 + eps))
    enrolled_ids = set(int(v) for v in rng.choice(rest, size=n_enrolled, replace=False))
    agents = []
    for i in range(n):
        if i in spreader_ids:
            agents.append(Agent(id=i, state=AgentState.SPREADER, enrolled=False,
                                credit=0, known_info={info_id}))
        elif i in enrolled_ids:
            agents.append(Agent(id=i, state=AgentState.IGNORANT_ENROLLED, enrolled=True,
                                credit=ledger_params.initial_credit))
        else:
            agents.append(Agent(id=i, state=AgentState.IGNORANT_UNENROLLED,
                                enrolled=False))
    return AgentPopulation(agents=agents, info_id=info_id)


class Simulation:
    """One run: graph, agents, optional ledger, and a single random stream."""

    def __init__(self, config: AbmConfig, *,
                 graph: Optional[SocialGraph] = None,
                 population: Optional[AgentPopulation] = None,
                 ledger: Optional[PublicLedger] = None,
                 rng: Optional[np.random.Generator] = None) -> None:
        self.config = config
        self.graph = graph if graph is not None else generate_graph(
            config.pop.size, config.rates.mean_degree, config.graph_seed)
        self.rng = rng if rng is not None else _as_generator(config.sim_seed)
        if population is None:
            population = init_agents(self.graph, config.pop, config.mode,
                                     config.ledger_params, self.rng, config.info_id)
        if len(population.agents) != self.graph.n:
            raise ValueError(f"population of {len(population.agents)} agents does "
                             f"not match graph size {self.graph.n}")
        self.population = population
        self.agents = population.agents
        if config.mode == LEDGER:
            if ledger is None:
                ledger = PublicLedger(initial_credits={
                    agent.id: agent.credit for agent in self.agents if agent.enrolled})
            self.ledger = ledger
        else:
            self.ledger = ledger
        # Flat directed edge arrays in (owner asc, neighbor asc) order; these
        # fix the documented draw order and never change during a run.
        n = self.graph.n
        degrees = np.array([len(nbrs) for nbrs in self.graph.adjacency], dtype=np.int64)
        self._owners = np.repeat(np.arange(n, dtype=np.int64), degrees)
        total = int(degrees.sum())
        self._neighbors = np.fromiter(
            (v for nbrs in self.graph.adjacency for v in nbrs),
            dtype=np.int64, count=total)
        self.state = np.array([agent.state for agent in self.agents], dtype=np.int8)

    def counts(self) -> tuple[int, int, int, int]:
        tallies = np.bincount(self.state, minlength=4)
        return tuple(int(x) for x in tallies[:4])

    def step(self, t: float) -> StepReport:
        """Advance the run from t to t + dt."""
        cfg = self.config
        rates = cfg.rates
        dt = cfg.dt
        state = self.state
        owners, neighbors = self._owners, self._neighbors

        is_spreader = state == AgentState.SPREADER
        is_stifler = state == AgentState.STIFLER
        is_ignorant = ~(is_spreader | is_stifler)
        enrolled_state = state == AgentState.IGNORANT_ENROLLED

        # Contacts: ignorant owner, spreader neighbor, flat order.
        contact_mask = is_ignorant[owners] & is_spreader[neighbors]
        c_owner = owners[contact_mask]
        c_nbr = neighbors[contact_mask]
        draws = self.rng.random(c_owner.shape[0])
        owner_enrolled = enrolled_state[c_owner]

        n = self.graph.n
        becomes_spreader = np.zeros(n, dtype=bool)
        becomes_stifler = np.zeros(n, dtype=bool)
        contracts: list[PrivateContract] = []
        declined_risk = declined_credit = 0
        spread_e = spread_u = stifle_e = stifle_u = 0

        if cfg.mode == PARAMETRIC:
            lam = np.where(owner_enrolled, rates.spread_prob_enrolled,
                           rates.spread_prob_unenrolled)
            eta = np.where(owner_enrolled, rates.dismiss_prob_enrolled,
                           rates.dismiss_prob_unenrolled)
            trig_spread = draws < lam * dt
            trig_stifle = ~trig_spread & (draws < (lam + eta) * dt)
            becomes_spreader[c_owner[trig_spread]] = True
            becomes_stifler[c_owner[trig_stifle]] = True
            spread_e = int(np.count_nonzero(trig_spread & owner_enrolled))
            spread_u = int(np.count_nonzero(trig_spread & ~owner_enrolled))
            stifle_e = int(np.count_nonzero(trig_stifle & owner_enrolled))
            stifle_u = int(np.count_nonzero(trig_stifle & ~owner_enrolled))
        else:
            # Both classes run on the unenrolled base probabilities; enrolled
            # conversions additionally pass through a credit negotiation.
            lam = rates.spread_prob_unenrolled
            eta = rates.dismiss_prob_unenrolled
            trig_spread = draws < lam * dt
            trig_stifle = ~trig_spread & (draws < (lam + eta) * dt)

            plain = ~owner_enrolled
            becomes_spreader[c_owner[trig_spread & plain]] = True
            # Dismissal triggers stifle both classes directly; only the
            # spread triggers of enrolled receivers pass through negotiation.
            becomes_stifler[c_owner[trig_stifle]] = True
            spread_u = int(np.count_nonzero(trig_spread & plain))
            stifle_u = int(np.count_nonzero(trig_stifle & plain))
            stifle_e = int(np.count_nonzero(trig_stifle & owner_enrolled))

            want_idx = np.flatnonzero(trig_spread & owner_enrolled)
            if want_idx.size:
                # One negotiation per receiver and step: the first triggering
                # contact wins, and flat order makes that the lowest neighbor id.
                _, first = np.unique(c_owner[want_idx], return_index=True)
                t_next = t + dt
                for j in want_idx[np.sort(first)]:
                    receiver = self.agents[int(c_owner[j])]
                    seller = self.agents[int(c_nbr[j])]
                    outcome = negotiate_private_contract(
                        seller, receiver, self.ledger, cfg.ledger_params,
                        float(self.rng.random()), self.population.info_id, t_next)
                    if isinstance(outcome, Declined):
                        becomes_stifler[receiver.id] = True
                        stifle_e += 1
                        if outcome.reason == "risk refusal":
                            declined_risk += 1
                        else:
                            declined_credit += 1
                    else:
                        contracts.append(outcome)
                        becomes_spreader[receiver.id] = True
                        spread_e += 1

        # Spread beats stifle when one agent triggered both.
        becomes_stifler &= ~becomes_spreader

        # Spreaders stifled by informed (spreader or stifler) neighbors.
        informed = is_spreader | is_stifler
        stifle_mask = is_spreader[owners] & informed[neighbors]
        s_owner = owners[stifle_mask]
        s_draws = self.rng.random(s_owner.shape[0])
        spreader_stifled = np.zeros(n, dtype=bool)
        spreader_stifled[s_owner[s_draws < rates.stifle_prob * dt]] = True

        # Forgetting.
        spreader_ids = np.flatnonzero(is_spreader)
        f_draws = self.rng.random(spreader_ids.shape[0])
        spreader_stifled[spreader_ids[f_draws < rates.forget_rate * dt]] = True

        # Apply the snapshot-based transitions all at once.
        new_spreader_ids = np.flatnonzero(becomes_spreader)
        new_stifler_ids = np.flatnonzero(becomes_stifler)
        stifled_ids = np.flatnonzero(spreader_stifled)
        state[new_spreader_ids] = AgentState.SPREADER
        state[new_stifler_ids] = AgentState.STIFLER
        state[stifled_ids] = AgentState.STIFLER
        info = self.population.info_id
        for i in new_spreader_ids:
            agent = self.agents[int(i)]
            agent.state = AgentState.SPREADER
            agent.known_info.add(info)
        for i in new_stifler_ids:
            self.agents[int(i)].state = AgentState.STIFLER
        for i in stifled_ids:
            self.agents[int(i)].state = AgentState.STIFLER

        if cfg.mode == LEDGER:
            t_next = t + dt
            settle_contracts(self.ledger, self.agents, t_next,
                             cfg.ledger_params, cfg.info_is_rumor)
            publish_contracts(self.ledger, contracts, t_next)

        return StepReport(
            t=t,
            contacts_enrolled=int(np.count_nonzero(owner_enrolled)),
            contacts_unenrolled=int(np.count_nonzero(~owner_enrolled)),
            spread_contacts_enrolled=spread_e,
            spread_contacts_unenrolled=spread_u,
            stifle_contacts_enrolled=stifle_e,
            stifle_contacts_unenrolled=stifle_u,
            new_spreaders=int(new_spreader_ids.size),
            new_stiflers_from_ignorant=int(new_stifler_ids.size),
            new_stiflers_from_spreader=int(stifled_ids.size),
            contracts_formed=len(contracts),
            declined_risk=declined_risk,
            declined_credit=declined_credit,
        )

    def run(self) -> AbmTrajectory:
        cfg = self.config
        steps = round(cfg.t_end / cfg.dt)
        times = [i * cfg.dt for i in range(steps + 1)]
        series = {key: [] for key in ("n_ib", "n_in", "n_s", "n_r", "c_max", "blocks")}
        reports: list[StepReport] = []

        def record() -> None:
            n_ib, n_in, n_s, n_r = self.counts()
            series["n_ib"].append(n_ib)
            series["n_in"].append(n_in)
            series["n_s"].append(n_s)
            series["n_r"].append(n_r)
            if self.ledger is not None:
                series["c_max"].append(self.ledger.c_max)
                series["blocks"].append(self.ledger.block_count)
            else:
                series["c_max"].append(0)
                series["blocks"].append(0)

        record()
        for i in range(steps):
            reports.append(self.step(times[i]))
            record()

        enrolled_total = sum(1 for agent in self.agents if agent.enrolled)
        metadata = {
            "n": cfg.pop.size,
            "mode": cfg.mode,
            "graph_seed": cfg.graph_seed,
            "sim_seed": cfg.sim_seed,
            "dt": cfg.dt,
            "info_id": self.population.info_id,
            "info_is_rumor": cfg.info_is_rumor,
            "initial_enrolled": enrolled_total,
            "enrollment_rounding": ENROLLMENT_ROUNDING,
            "rng": "pcg64, one stream per run, documented draw order",
        }
        return AbmTrajectory(
            times=tuple(times),
            n_ib=tuple(series["n_ib"]), n_in=tuple(series["n_in"]),
            n_s=tuple(series["n_s"]), n_r=tuple(series["n_r"]),
            c_max=tuple(series["c_max"]), blocks=tuple(series["blocks"]),
            metadata=metadata, reports=tuple(reports),
        )


def simulate_step(population: AgentPopulation, graph: SocialGraph,
                  config: AbmConfig, ledger: Optional[PublicLedger],
                  t: float, rng: np.random.Generator) -> StepReport:
    """One synchronous step over existing population/ledger state.

    Convenience wrapper over :class:`Simulation` for callers managing their
    own objects; the population and ledger are mutated in place.
    """
    sim = Simulation(config, graph=graph, population=population,
                     ledger=ledger, rng=rng)
    return sim.step(t)


def run_simulation(config: AbmConfig) -> AbmTrajectory:
    """Build graph, agents and (in ledger mode) a genesis ledger, then run."""
    return Simulation(config).run()


@dataclass(frozen=True)
class EnsembleResult:
    """Pointwise mean and standard deviation of density curves across seeds."""

    times: tuple[float, ...]
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    seeds: tuple[int, ...]


def derive_run_seeds(seed: int) -> tuple[int, int]:
    """Spawn independent (graph_seed, sim_seed) for one ensemble member."""
    children = np.random.SeedSequence(seed).spawn(2)
    return (int(children[0].generate_state(1, np.uint64)[0]),
            int(children[1].generate_state(1, np.uint64)[0]))


def ensemble_mean(config: AbmConfig, seeds: Sequence[int]) -> EnsembleResult:
    """Average density trajectories over seeds; needs at least two."""
    if len(seeds) < 2:
        raise ValueError("ensemble_mean needs at least two seeds")
    stacks: dict[str, list[np.ndarray]] = {"i_b": [], "i_n": [], "s": [], "r": []}
    times: Optional[tuple[float, ...]] = None
    for seed in seeds:
        graph_seed, sim_seed = derive_run_seeds(seed)
        run_cfg = dataclasses.replace(config, graph_seed=graph_seed, sim_seed=sim_seed)
        traj = run_simulation(run_cfg)
        if times is None:
            times = traj.times
        elif traj.times != times:
            raise ValueError("all ensemble members must share one horizon")
        for key, values in traj.densities().items():
            stacks[key].append(values)
    mean = {key: np.mean(np.stack(rows), axis=0) for key, rows in stacks.items()}
    std = {key: np.std(np.stack(rows), axis=0) for key, rows in stacks.items()}
    return EnsembleResult(times=times, mean=mean, std=std, seeds=tuple(seeds))
