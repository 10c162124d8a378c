"""Rumor spreading on social networks, with and without a blockchain credit ledger."""

from .models import (BlockRateParams, BsirState, PopulationConfig, RateParams,
                     SirState, bsir_derivative, bsir_rhs, initial_bsir_state,
                     initial_sir_state, poisson_pmf, sir_derivative, sir_rhs)
from .integrate import (IntegrationError, IntegratorConfig, Trajectory,
                        extinction_time, integrate, peak, rk4_step,
                        sup_distance, terminal_state)
from .graph import SocialGraph, generate_graph
from .ledger import (Block, Chain, ChainViolation, Declined, LedgerParams,
                     PrivateContract, PublicLedger, Settlement, Transaction,
                     acceptance_probability, append_block, asking_price,
                     chain_from_json, chain_to_json, compute_block_hash,
                     load_chain, make_block, negotiate_private_contract,
                     publish_contracts, replay_credits, save_chain,
                     settle_contracts, validate_chain)
from .abm import (AbmConfig, AbmTrajectory, Agent, AgentPopulation, AgentState,
                  EnsembleResult, Simulation, StepReport, ensemble_mean,
                  init_agents, run_simulation, simulate_step)
from .config import (AbmSettings, ConfigError, OutputPaths, RunConfig,
                     SweepSpec, parse_run_config)

__version__ = "0.1.0"
