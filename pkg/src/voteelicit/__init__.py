"""Vote elicitation engine: winners, termination checks, deciding subsets,
reduction instance generators, and exact equilibrium verification."""

from .core import (
    ApprovalBallot,
    Ballot,
    BudgetExceededError,
    ElectionFormatError,
    ElectionOutcome,
    PartialProfile,
    Protocol,
    RankingBallot,
    ScoreVector,
    StvRound,
    all_approval_ballots,
    all_ballots,
    all_rankings,
    approval,
    pairwise_tallies,
    parse_election,
    ranking,
    score,
    serialize_election,
    stv_run,
    winner,
)
from .elicit import (
    ApproveCandidate,
    CoarseTreeNode,
    ElicitationInstance,
    ElicitationTranscript,
    FineTreeNode,
    FixedOrder,
    FixedOrderFine,
    NextPreferred,
    PredictedWinnerFirst,
    RandomFixedOrderFine,
    RandomOrder,
    RoundRobin,
    fine_policy_tree,
    is_nondivulging,
    min_deciding_subset,
    plurality_elicit_order,
    simulate_coarse,
    simulate_fine,
    validate_coarse_tree,
)
from .reductions import (
    BordaReductionParams,
    EPInstance,
    ThreeCoverInstance,
    gen_approval_elicitation,
    gen_borda_elicitation,
    gen_stv_not_done,
    solve_3cover,
    solve_effective_preference,
)
from .strategy import (
    BneCounterexample,
    BneResult,
    CoarsePositionObserving,
    FineTreeMechanism,
    FullElicitation,
    VotingGame,
    expected_utility,
    is_bne,
    outcome_distribution,
    theorem7_game,
    theorem9_game,
    truthful_profile,
    truthful_strategy,
)
from .termination import (
    PreventionResult,
    adversarial_completion,
    brute_force_prevent,
    can_prevent_win,
    decided,
)

__all__ = [name for name in dir() if not name.startswith("_")]
