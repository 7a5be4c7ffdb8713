"""Finite decision processes, higher-order process functions, and the
correspondence between them.

The package models deterministic partially observable environments and
finite-memory agents, identifies agents with one-input process functions
(higher-order functions with a unique fixed point under any inserted local
function), composes strategies with environments through a link step, and
searches small multi-party strategy spaces for behavior that no fixed
causal ordering of the parties can reproduce.
"""

from .core import (
    Agent,
    AxisMismatch,
    BudgetExceeded,
    ConsistencyViolation,
    DecPomdp,
    DetPomdp,
    DiscountSpec,
    DocumentError,
    DomainError,
    FiniteSet,
    HopfError,
    InitialDistribution,
    InvariantViolation,
    NoStrategyError,
    NotObservationIndependent,
    PartySlot,
    PartySpace,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    TableFunction,
    Trajectory,
    UfpStatus,
    UfpWitness1,
    UfpWitnessN,
    as_discount,
    as_n_input,
    as_one_input,
    curry_state,
    eval_table,
    pack_index,
    product_set,
    table_from_callable,
    unpack_index,
)
from .correspondence import (
    agent_to_pf,
    agents_equivalent,
    one_step_direct,
    pf_to_agent,
    probe_pomdp,
    probe_state,
)
from .documents import (
    DocumentEnvelope,
    dumps_canonical,
    envelope_for,
    load,
    loads,
    save,
)
from .dynamics import (
    EncodedPomdp,
    discounted_reward_exact,
    discounted_reward_truncated,
    encode_pomdp,
    link_step_1,
    link_step_n,
    performance,
    rollout,
)
from .fastscan import (
    CHUNK_ROWS,
    CandidateSpace,
    build_pf,
    candidate_digits,
    candidate_index,
    dependence_matrices,
    iter_valid_indices,
    order_from_dependence,
    ordered_mask,
    pf_digits,
    sample_digits,
    scan_valid_indices,
    valid_mask,
)
from .reporting import flatten_report, render_figure, write_csv
from .search import (
    ScoredStrategy,
    SearchCounts,
    SearchReport,
    StrategyShape,
    advantage_search,
    best_strategy,
    enumerate_pf_1,
    enumerate_pf_n,
    find_unordered_witness,
    gyni_env,
    wrap_single_party,
)
from .verify import (
    DEFAULT_BUDGET,
    CombOrder,
    ObsCounterexample,
    Verdict,
    check_comb_order,
    check_obs_independence,
    check_ufp_1_bruteforce,
    check_ufp_1_fast,
    check_ufp_n,
    decompose,
    is_causally_ordered,
    recompose,
    validated,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
