"""Command-line interface: election files in, deterministic reports out.

Exit codes: 0 on success, 2 on input errors, 3 when a brute-force budget is
exceeded.  Every report is a pure function of the inputs and seed flags;
pass --json for the machine-readable form of the same fields.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import random
import sys
from fractions import Fraction

from . import elicit, reductions, strategy, termination
from .core import (
    ApprovalBallot,
    Ballot,
    BudgetExceededError,
    ElectionFormatError,
    PartialProfile,
    Protocol,
    RankingBallot,
    parse_election,
    serialize_election,
    winner,
)

_POLICIES = {
    "predicted-winner-first": lambda seed: elicit.PredictedWinnerFirst(),
    "round-robin": lambda seed: elicit.RoundRobin(),
    "fixed-order": lambda seed: elicit.FixedOrder(),
    "random": lambda seed: elicit.RandomOrder(seed),
}

_ORDINALS = ("first", "second", "third", "fourth", "fifth",
             "sixth", "seventh", "eighth", "ninth", "tenth")


def _ordinal(position: int) -> str:
    return _ORDINALS[position] if position < len(_ORDINALS) else f"{position + 1}th"


def random_ballot(protocol: Protocol, m: int, rng: random.Random) -> Ballot:
    """One ballot drawn uniformly from the protocol's ballot space."""
    if protocol.uses_rankings:
        return RankingBallot(tuple(rng.sample(range(m), m)))
    return ApprovalBallot(frozenset(c for c in range(m) if rng.getrandbits(1)))


def experiment_savings(protocol: Protocol, n: int, m: int, trials: int, seed: int,
                       policies=("predicted-winner-first", "round-robin",
                                 "fixed-order", "random"),
                       budget: int = termination.DEFAULT_BUDGET) -> dict:
    """Query counts of whole-ballot elicitation with perfect suspicions.

    Draws seeded uniform random profiles, simulates each policy with the
    predicted profile equal to the true one, and reports the mean, minimum,
    and maximum number of queries next to the full-elicitation cost n.
    """
    rng = random.Random(seed)
    instances = {name: _POLICIES[name](seed) for name in policies}
    counts: dict[str, list[int]] = {name: [] for name in policies}
    for _ in range(trials):
        profile = tuple(random_ballot(protocol, m, rng) for _ in range(n))
        for name, policy in instances.items():
            transcript = elicit.simulate_coarse(policy, profile, profile, protocol, m, budget)
            counts[name].append(transcript.queries_used)
    report = {"protocol": protocol.value, "n": n, "m": m, "trials": trials, "seed": seed,
              "policies": {}}
    for name in policies:
        queries = counts[name]
        mean = Fraction(sum(queries), trials)
        report["policies"][name] = {
            "mean_queries": str(mean),
            "min_queries": min(queries),
            "max_queries": max(queries),
            "mean_savings": str(Fraction(n) - mean),
        }
    return report


# ---------------------------------------------------------------------------
# Report helpers


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _candidate_index(profile, name: str) -> int:
    if name not in profile.candidate_names:
        raise ElectionFormatError(f"unknown candidate name {name!r}")
    return profile.candidate_names.index(name)


def _set_text(names, candidates) -> str:
    return "{" + ",".join(names[c] for c in sorted(candidates)) + "}"


def _ballot_text(names, ballot: Ballot) -> str:
    if isinstance(ballot, RankingBallot):
        return ">".join(names[c] for c in ballot.order)
    return _set_text(names, ballot.approved)


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _full_profile(profile: PartialProfile, what: str) -> PartialProfile:
    if profile.unknown_count:
        raise ElectionFormatError(f"{what} needs a fully known profile; drop 'unknown:'")
    return profile


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_winner(args) -> int:
    profile = parse_election(_read(args.file))
    outcome = winner(profile.protocol, profile.known, profile.m)
    names = profile.candidate_names
    payload = {
        "winner": names[outcome.tiebreak_winner],
        "winner_set": sorted(names[c] for c in outcome.winner_set),
    }
    lines = [f"winner: {names[outcome.tiebreak_winner]} "
             f"(set: {_set_text(names, outcome.winner_set)})"]
    if profile.protocol is Protocol.STV:
        payload["rounds"] = [
            {"scores": {names[c]: s for c, s in rnd.scores}, "eliminated": names[rnd.eliminated]}
            for rnd in outcome.stv_trace
        ]
        for number, rnd in enumerate(outcome.stv_trace, start=1):
            scores = " ".join(f"{names[c]}:{s}" for c, s in rnd.scores)
            lines.append(f"round {number}: {scores} -> {names[rnd.eliminated]} eliminated")
    else:
        from .core import score
        vector = score(profile.protocol, profile.known, profile.m)
        payload["scores"] = {names[c]: s for c, s in enumerate(vector.scores)}
        lines.append("scores: " + " ".join(f"{names[c]}:{s}" for c, s in enumerate(vector.scores)))
    _emit(args, payload, lines)
    return 0


def _cmd_decided(args) -> int:
    profile = parse_election(_read(args.file))
    result = termination.decided(profile, args.budget)
    names = profile.candidate_names
    payload = {"decided": None if result is None else names[result]}
    _emit(args, payload, [f"decided: {'no' if result is None else names[result]}"])
    return 0


def _cmd_prevent(args) -> int:
    profile = parse_election(_read(args.file))
    h = _candidate_index(profile, args.h)
    result = termination.can_prevent_win(profile, h, args.budget)
    names = profile.candidate_names
    payload = {"h": args.h, "preventable": result.preventable}
    lines = [f"preventable: {'yes' if result.preventable else 'no'}"]
    if result.preventable:
        payload["challenger"] = names[result.challenger]
        payload["witness"] = [_ballot_text(names, b) for b in result.witness]
        lines.append(f"challenger: {names[result.challenger]}")
        lines.append("witness: " + "; ".join(_ballot_text(names, b) for b in result.witness))
    _emit(args, payload, lines)
    return 0


def _cmd_min_elicit(args) -> int:
    profile = _full_profile(parse_election(_read(args.file)), "min-elicit")
    instance = elicit.ElicitationInstance(
        profile.protocol, profile.m, profile.known, args.k,
        candidate_names=profile.candidate_names,
    )
    subset = elicit.min_deciding_subset(instance, args.budget)
    if subset is None:
        payload = {"k": args.k, "subset": None}
        lines = [f"no deciding subset of size <= {args.k}"]
    else:
        payload = {"k": args.k, "subset": list(subset), "size": len(subset)}
        listed = " ".join(str(v) for v in subset)
        lines = [f"minimum deciding subset: voters [{listed}] (size {len(subset)})"]
    _emit(args, payload, lines)
    return 0


def _cmd_policy_plurality(args) -> int:
    profile = _full_profile(parse_election(_read(args.file)), "policy-plurality")
    instance = elicit.ElicitationInstance(
        profile.protocol, profile.m, profile.known, profile.n,
        candidate_names=profile.candidate_names,
    )
    order, stop = elicit.plurality_elicit_order(instance, args.budget)
    payload = {"order": list(order), "stop_index": stop}
    _emit(args, payload, [
        "order: " + " ".join(str(v) for v in order),
        f"stop index: {stop}",
    ])
    return 0


def _cmd_simulate(args) -> int:
    predicted = _full_profile(parse_election(_read(args.file)), "simulate")
    true_profile = predicted
    if args.true_file:
        true_profile = _full_profile(parse_election(_read(args.true_file)), "simulate")
        if (true_profile.protocol, true_profile.m) != (predicted.protocol, predicted.m):
            raise ElectionFormatError("the true profile must match the predicted election")
    policy = _POLICIES[args.policy](args.seed)
    transcript = elicit.simulate_coarse(
        policy, true_profile.known, predicted.known,
        predicted.protocol, predicted.m, args.budget,
    )
    names = predicted.candidate_names
    outcome = transcript.outcome
    payload = {
        "policy": args.policy,
        "queries_used": transcript.queries_used,
        "n": predicted.n,
        "terminated_early": transcript.terminated_early,
        "asked": [entry[0] for entry in transcript.entries],
        "outcome": names[outcome.tiebreak_winner],
    }
    _emit(args, payload, [
        f"queries used: {transcript.queries_used} of {predicted.n}",
        f"terminated early: {'yes' if transcript.terminated_early else 'no'}",
        "asked: " + " ".join(str(entry[0]) for entry in transcript.entries),
        f"outcome: {names[outcome.tiebreak_winner]} (set: {_set_text(names, outcome.winner_set)})",
    ])
    return 0


def _write_generated(args, header: list[str], profile: PartialProfile) -> None:
    text = "".join(f"# {line}\n" for line in header) + serialize_election(profile)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        print(text, end="")


def _cmd_gen_3cover_approval(args) -> int:
    tc = reductions.parse_3cover(_read(args.file))
    instance = reductions.gen_approval_elicitation(tc)
    profile = PartialProfile(instance.protocol, instance.m, instance.predicted, 0,
                             instance.candidate_names)
    _write_generated(args, [
        "deciding-subset instance generated from a 3-cover instance",
        f"k: {instance.k}",
        f"tagged: {instance.candidate_names[instance.tagged_candidate]}",
    ], profile)
    return 0


def _cmd_gen_3cover_borda(args) -> int:
    tc = reductions.parse_3cover(_read(args.file))
    instance = reductions.gen_borda_elicitation(tc)
    profile = PartialProfile(instance.protocol, instance.m, instance.predicted, 0,
                             instance.candidate_names)
    _write_generated(args, [
        "deciding-subset instance generated from a 3-cover instance",
        f"k: {instance.k}",
        f"tagged: {instance.candidate_names[instance.tagged_candidate]}",
    ], profile)
    return 0


def _cmd_gen_stv_ep(args) -> int:
    ep = reductions.parse_ep(_read(args.file))
    profile, h = reductions.gen_stv_not_done(ep)
    _write_generated(args, [
        "prevention instance generated from a single-vote manipulation instance",
        f"h: {profile.candidate_names[h]}",
    ], profile)
    return 0


_MECHANISMS = ("full", "coarse-position", "fine")


def _game_with_mechanism(name: str, mechanism: str) -> strategy.VotingGame:
    game = strategy.theorem7_game() if name == "theorem7" else strategy.theorem9_game()
    if mechanism == "full":
        return dataclasses.replace(game, mechanism=strategy.FullElicitation())
    wanted = (strategy.CoarsePositionObserving if mechanism == "coarse-position"
              else strategy.FineTreeMechanism)
    if not isinstance(game.mechanism, wanted):
        raise ElectionFormatError(f"game {name} has no {mechanism} elicitation variant")
    return game


def _fraction_table(name: str) -> list[tuple[str, Fraction]]:
    full = _game_with_mechanism(name, "full")
    u = strategy.expected_utility
    if name == "theorem7":
        truthful = strategy.truthful_profile(full)
        lie = {**truthful, 2: strategy.ConstantBallotStrategy(ApprovalBallot(frozenset({0, 1})))}
        return [
            ("u(k: {a,b} | i=1, j=2)", u(full, lie, 2, 0, given={0: 0, 1: 1})),
            ("u(k: {a,b} | i=2, j=2)", u(full, lie, 2, 0, given={0: 1, 1: 1})),
            ("u(k: {a,b} | j=2)", u(full, lie, 2, 0, given={1: 1})),
            ("u(k: {a}   | j=2)", u(full, truthful, 2, 0, given={1: 1})),
        ]
    truthful = strategy.truthful_profile(full)
    lie = {**truthful, 1: strategy.ConstantBallotStrategy(ApprovalBallot(frozenset({0})))}
    return [
        ("u(j: {a,b} | i=1)", u(full, truthful, 1, 0, given={0: 0})),
        ("u(j: {a}   | i=1)", u(full, lie, 1, 0, given={0: 0})),
        ("u(j: {a,b} | i=2)", u(full, truthful, 1, 0, given={0: 1})),
        ("u(j: {a}   | i=2)", u(full, lie, 1, 0, given={0: 1})),
        ("u(j: {a,b})", u(full, truthful, 1, 0)),
        ("u(j: {a})", u(full, lie, 1, 0)),
    ]


def _describe_deviation(game: strategy.VotingGame, cx: strategy.BneCounterexample) -> str:
    names = game.candidate_names
    agent = game.agents[cx.agent]
    if isinstance(game.mechanism, strategy.CoarsePositionObserving):
        return (f"{agent} approves {_set_text(names, cx.action.approved)} "
                f"when queried {_ordinal(cx.observation)}")
    if isinstance(game.mechanism, strategy.FineTreeMechanism):
        history, query = cx.observation
        answer = "yes" if cx.action else "no"
        if history:
            prior = ", ".join(
                f"{'yes' if r else 'no'} to approving {names[q.candidate]}"
                for q, r in history
            )
        else:
            prior = "no prior queries"
        return (f"{agent} answers {answer} to approving {names[query.candidate]} "
                f"after {prior}")
    return f"{agent} casts {_ballot_text(names, cx.action)}"


def _cmd_verify_bne(args) -> int:
    game = _game_with_mechanism(args.game, args.mechanism)
    table = _fraction_table(args.game)
    result = strategy.is_bne(game, strategy.truthful_profile(game), budget=args.budget)
    return _report_bne(args, game, table, result)


def _report_bne(args, game, table, result) -> int:
    payload = {
        "game": args.game,
        "mechanism": args.mechanism,
        "fractions": {label: str(value) for label, value in table},
        "bne": result.is_equilibrium,
    }
    lines = [f"game: {args.game}", f"mechanism: {args.mechanism}",
             "expected utilities (full elicitation):"]
    lines += [f"  {label} = {value}" for label, value in table]
    lines.append(f"BNE: {'true' if result.is_equilibrium else 'false'}")
    if result.counterexample is not None:
        description = _describe_deviation(game, result.counterexample)
        payload["deviation"] = description
        payload["gain"] = str(result.counterexample.gain)
        lines.append(f"deviation: {description} (gain {result.counterexample.gain})")
    _emit(args, payload, lines)
    return 0


def _cmd_check_nondivulging(args) -> int:
    if args.game:
        if args.game != "theorem9":
            raise ElectionFormatError("only the theorem9 game has a per-query policy")
        game = strategy.theorem9_game()
        policy = game.mechanism.policy
        m, n = game.m, len(game.agents)
        label = "theorem9 policy"
    else:
        m, n = args.m, args.n
        if args.seed is None:
            policy = elicit.FixedOrderFine()
            label = "fixed-order policy"
        else:
            policy = elicit.RandomFixedOrderFine(args.seed, Protocol.APPROVAL, m, n)
            label = f"random fixed-order policy (seed {args.seed})"
    tree = elicit.fine_policy_tree(policy, Protocol.APPROVAL, m, n, args.budget)
    verdict = elicit.is_nondivulging(tree, args.budget)
    payload = {"policy": label, "nondivulging": verdict}
    _emit(args, payload, [f"policy: {label}", f"nondivulging: {'yes' if verdict else 'no'}"])
    return 0


def _brute_force_min_subset(profile: PartialProfile, k: int, budget: int):
    n = profile.n
    for size in range(min(k, n) + 1):
        for subset in itertools.combinations(range(n), size):
            known = tuple(profile.known[v] for v in subset)
            partial = PartialProfile(profile.protocol, profile.m, known, n - size)
            if termination.decided(partial, budget) is not None:
                return subset
    return None


def _cmd_oracle(args) -> int:
    if args.problem == "3cover":
        tc = reductions.parse_3cover(_read(args.file))
        exists = reductions.solve_3cover(tc, args.budget)
        _emit(args, {"problem": args.problem, "cover_exists": exists},
              [f"cover exists: {'yes' if exists else 'no'}"])
        return 0
    if args.problem == "effective-preference":
        ep = reductions.parse_ep(_read(args.file))
        possible = reductions.solve_effective_preference(ep, args.budget)
        _emit(args, {"problem": args.problem, "target_can_win": possible},
              [f"target can win: {'yes' if possible else 'no'}"])
        return 0
    profile = parse_election(_read(args.file))
    if args.problem == "prevent":
        if args.h is None:
            raise ElectionFormatError("oracle --problem prevent needs --h")
        h = _candidate_index(profile, args.h)
        result = termination.brute_force_prevent(profile, h, args.budget)
        payload = {"problem": args.problem, "h": args.h, "preventable": result.preventable}
        lines = [f"preventable: {'yes' if result.preventable else 'no'}"]
        if result.preventable:
            names = profile.candidate_names
            payload["witness"] = [_ballot_text(names, b) for b in result.witness]
            lines.append("witness: " + "; ".join(_ballot_text(names, b) for b in result.witness))
        _emit(args, payload, lines)
        return 0
    if args.problem == "min-elicit":
        if args.k is None:
            raise ElectionFormatError("oracle --problem min-elicit needs --k")
        profile = _full_profile(profile, "oracle min-elicit")
        subset = _brute_force_min_subset(profile, args.k, args.budget)
        if subset is None:
            _emit(args, {"problem": args.problem, "k": args.k, "subset": None},
                  [f"no deciding subset of size <= {args.k}"])
        else:
            _emit(args, {"problem": args.problem, "k": args.k,
                         "subset": list(subset), "size": len(subset)},
                  [f"minimum deciding subset: voters [{' '.join(map(str, subset))}] "
                   f"(size {len(subset)})"])
        return 0
    raise ElectionFormatError(f"unknown oracle problem {args.problem!r}")


def _cmd_experiment_savings(args) -> int:
    protocol = Protocol(args.protocol)
    report = experiment_savings(protocol, args.n, args.m, args.trials, args.seed,
                                budget=args.budget)
    lines = [f"protocol: {report['protocol']}  n: {report['n']}  m: {report['m']}  "
             f"trials: {report['trials']}  seed: {report['seed']}"]
    for name, stats in report["policies"].items():
        mean = Fraction(stats["mean_queries"])
        lines.append(
            f"{name}: mean {float(mean):.3f} ({stats['mean_queries']})  "
            f"min {stats['min_queries']}  max {stats['max_queries']}  "
            f"mean savings {stats['mean_savings']}"
        )
    _emit(args, report, lines)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voteelicit",
        description="Vote elicitation engine: winners, termination, deciding "
                    "subsets, reduction generators, and equilibrium checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, file=True):
        if file:
            p.add_argument("--file", required=True, help="input file")
        p.add_argument("--budget", type=int, default=termination.DEFAULT_BUDGET,
                       help="brute-force work budget")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("winner", help="winner of a fully known election")
    common(p)
    p.set_defaults(handler=_cmd_winner)

    p = sub.add_parser("decided", help="is the outcome already fixed by the known votes")
    common(p)
    p.set_defaults(handler=_cmd_decided)

    p = sub.add_parser("prevent", help="can the unknown votes stop a candidate from winning")
    common(p)
    p.add_argument("--h", required=True, help="candidate whose win is to be prevented")
    p.set_defaults(handler=_cmd_prevent)

    p = sub.add_parser("min-elicit", help="smallest deciding subset of a predicted profile")
    common(p)
    p.add_argument("--k", type=int, required=True, help="subset size budget")
    p.set_defaults(handler=_cmd_min_elicit)

    p = sub.add_parser("policy-plurality", help="plurality elicitation order and stop index")
    common(p)
    p.set_defaults(handler=_cmd_policy_plurality)

    p = sub.add_parser("simulate", help="simulate whole-ballot elicitation")
    common(p)
    p.add_argument("--policy", choices=sorted(_POLICIES), required=True)
    p.add_argument("--true-file", help="true ballots when the suspicions are wrong")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_simulate)

    for name, handler in (("gen-3cover-approval", _cmd_gen_3cover_approval),
                          ("gen-3cover-borda", _cmd_gen_3cover_borda),
                          ("gen-stv-ep", _cmd_gen_stv_ep)):
        p = sub.add_parser(name, help="generate a reduction instance as an election file")
        common(p)
        p.add_argument("--out", help="write the election file here instead of stdout")
        p.set_defaults(handler=handler)

    p = sub.add_parser("verify-bne", help="equilibrium verdict for a worked example game")
    common(p, file=False)
    p.add_argument("--game", choices=("theorem7", "theorem9"), required=True)
    p.add_argument("--mechanism", choices=_MECHANISMS, required=True)
    p.set_defaults(handler=_cmd_verify_bne)

    p = sub.add_parser("check-nondivulging", help="does a per-query policy divulge others' responses")
    common(p, file=False)
    p.add_argument("--game", choices=("theorem9",))
    p.add_argument("--fixed-order", action="store_true")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=_cmd_check_nondivulging)

    p = sub.add_parser("oracle", help="brute-force reference answers")
    common(p)
    p.add_argument("--problem", required=True,
                   choices=("prevent", "min-elicit", "3cover", "effective-preference"))
    p.add_argument("--h", help="candidate for --problem prevent")
    p.add_argument("--k", type=int, help="subset budget for --problem min-elicit")
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("experiment-savings", help="query savings of elicitation policies")
    common(p, file=False)
    p.add_argument("--protocol", choices=sorted(pr.value for pr in Protocol), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(handler=_cmd_experiment_savings)

    return parser


def run_cli(argv) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ElectionFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run_cli(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
