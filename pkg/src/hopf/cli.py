"""Command-line surface: validate, convert, simulate, search, witness,
report, and benchmark-environment generation.

Exit codes: 0 success, 1 validation failure (a witness or counterexample is
printed), 2 usage or document errors.  All randomness flows from --seed;
HOPF_BUDGET overrides the default check budget.
"""

from __future__ import annotations

import argparse
import os
import sys

from .core import (
    AxisMismatch,
    BudgetExceeded,
    ConsistencyViolation,
    DecPomdp,
    DetPomdp,
    DiscountSpec,
    DocumentError,
    DomainError,
    InvariantViolation,
    NoStrategyError,
    NotObservationIndependent,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    UfpStatus,
)
from .correspondence import agent_to_pf, pf_to_agent
from .documents import dumps_canonical, format_float, load, save
from .dynamics import (
    discounted_reward_exact,
    discounted_reward_truncated,
    rollout,
)
from .reporting import render_figure, write_csv
from .search import (
    StrategyShape,
    advantage_search,
    find_unordered_witness,
    gyni_env,
    wrap_single_party,
)
from .verify import (
    DEFAULT_BUDGET,
    check_obs_independence,
    check_ufp_1_fast,
    check_ufp_n,
    validated,
)

_USAGE_ERRORS = (
    DocumentError,
    AxisMismatch,
    PreconditionError,
    DomainError,
    InvariantViolation,
    BudgetExceeded,
    OSError,
    ValueError,
)
_VALIDATION_ERRORS = (
    NotObservationIndependent,
    ConsistencyViolation,
    NoStrategyError,
)


def _env_budget() -> int:
    raw = os.environ.get("HOPF_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise DocumentError(f"HOPF_BUDGET: not an integer: {raw!r}") from exc
    if value < 1:
        raise DocumentError(f"HOPF_BUDGET: must be positive, got {value}")
    return value


def _default_threads() -> int:
    return os.cpu_count() or 1


def _parse_shape(text: str, horizon: int | None) -> StrategyShape:
    """Shape syntax: MEMORY:AxO[,AxO...], e.g. 1:2x2,2x2,2x2."""
    head, sep, rest = text.partition(":")
    if not sep:
        raise DocumentError(f"--shape: expected MEMORY:AxO[,AxO...], got {text!r}")
    try:
        memory = int(head)
        pairs = []
        for chunk in rest.split(","):
            a_text, sep2, o_text = chunk.partition("x")
            if not sep2:
                raise ValueError(chunk)
            pairs.append((int(a_text), int(o_text)))
    except ValueError as exc:
        raise DocumentError(f"--shape: expected MEMORY:AxO[,AxO...], got {text!r}") from exc
    return StrategyShape(memory=memory, parties=tuple(pairs), horizon=horizon)


def _emit(obj, output: str | None, summary: list[str]) -> None:
    """Write the document to the output path (summary to stdout) or to
    stdout itself (summary to stderr)."""
    if output:
        save(obj, output)
        for line in summary:
            print(line)
    else:
        sys.stdout.write(dumps_canonical(obj))
        for line in summary:
            print(line, file=sys.stderr)


def _print_witness_1(witness) -> None:
    print("invalid")
    print(
        f"witness: p={witness.p} f={list(witness.f)}"
        f" solutions={list(witness.solutions)}"
    )


def _print_witness_n(witness) -> None:
    print("invalid")
    print(
        f"witness: p={witness.p} f={[list(f) for f in witness.f]}"
        f" solutions={[list(s) for s in witness.solutions]}"
    )


def _print_obs_counterexample(ce) -> None:
    print("invalid")
    print(
        f"counterexample: party={ce.party} state={ce.state}"
        f" action={list(ce.action)} action_prime={list(ce.action_prime)}"
        f" observed={ce.observed} observed_prime={ce.observed_prime}"
    )


def _ensure_checked(w, budget: int):
    """Run the unique fixed-point check unless the document already carries
    a verdict; returns the validated strategy or None on failure (after
    printing the witness)."""
    if w.status is UfpStatus.UNCHECKED:
        w = validated(w, budget=budget, method="fast") if isinstance(
            w, ProcessFunction1
        ) else validated(w, budget=budget)
    if w.status is UfpStatus.INVALID:
        if isinstance(w, ProcessFunction1):
            _print_witness_1(w.witness)
        else:
            _print_witness_n(w.witness)
        return None
    return w


def _ensure_factored(env: DecPomdp) -> DecPomdp | None:
    if env.factored_obs is not None:
        return env
    result = check_obs_independence(env)
    if isinstance(result, tuple):
        return env.with_factored_obs(result)
    _print_obs_counterexample(result)
    return None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    doc = load(args.file)
    payload = doc.payload
    if doc.kind == "process_function_1":
        verdict = check_ufp_1_fast(payload)
        if not verdict.valid:
            _print_witness_1(verdict.witness)
            return 1
    elif doc.kind == "process_function_n":
        verdict = check_ufp_n(payload, budget=args.budget)
        if not verdict.valid:
            _print_witness_n(verdict.witness)
            return 1
    elif doc.kind == "dec_pomdp":
        result = check_obs_independence(payload)
        if not isinstance(result, tuple):
            _print_obs_counterexample(result)
            return 1
    print("valid")
    return 0


def _cmd_convert(args) -> int:
    doc = load(args.file)
    if args.to == "agent":
        if doc.kind != "process_function_1":
            raise DocumentError(
                f"convert --to agent expects a process_function_1 document, got {doc.kind}"
            )
        w = _ensure_checked(doc.payload, args.budget)
        if w is None:
            return 1
        _emit(pf_to_agent(w), args.output, [])
    else:
        if doc.kind != "agent":
            raise DocumentError(
                f"convert --to pf expects an agent document, got {doc.kind}"
            )
        _emit(agent_to_pf(doc.payload), args.output, [])
    return 0


def _cmd_simulate(args) -> int:
    env_doc = load(args.env)
    strat_doc = load(args.strategy)
    env, w = env_doc.payload, strat_doc.payload
    if env_doc.kind == "pomdp" and strat_doc.kind == "process_function_1":
        pass
    elif env_doc.kind == "dec_pomdp" and strat_doc.kind == "process_function_n":
        env = _ensure_factored(env)
        if env is None:
            return 1
    else:
        raise DocumentError(
            f"cannot simulate a {strat_doc.kind} strategy on a {env_doc.kind}"
            " environment; pair pomdp with process_function_1 or dec_pomdp with"
            " process_function_n"
        )
    w = _ensure_checked(w, args.budget)
    if w is None:
        return 1
    gamma = DiscountSpec(args.gamma)
    trajectory = rollout(w, env, args.m0, args.s0, args.horizon)
    summary = []
    if args.horizon >= 1:
        value, bound = discounted_reward_truncated(
            w, env, args.m0, args.s0, gamma, args.horizon
        )
        summary.append(
            f"discounted_truncated={format_float(value)}"
            f" error_bound={format_float(bound)}"
        )
    if args.exact:
        exact = discounted_reward_exact(w, env, args.m0, args.s0, gamma)
        summary.append(f"discounted_exact={format_float(exact)}")
    _emit(trajectory, args.output, summary)
    return 0


def _cmd_search(args) -> int:
    doc = load(args.env)
    if doc.kind == "pomdp":
        env = wrap_single_party(doc.payload)
    elif doc.kind == "dec_pomdp":
        env = _ensure_factored(doc.payload)
        if env is None:
            return 1
    else:
        raise DocumentError(f"search expects an environment document, got {doc.kind}")
    shape = _parse_shape(args.shape, args.horizon)
    environment_id = args.env_id or os.path.basename(args.env)
    report = advantage_search(
        env,
        shape,
        DiscountSpec(args.gamma),
        budget=args.budget,
        seed=args.seed,
        samples=args.samples,
        m0=args.m0,
        environment_id=environment_id,
        threads=args.threads,
    )
    summary = []
    if args.mode in ("general", "advantage"):
        summary.append(f"best_general={format_float(report.best_general.value)}")
    if args.mode in ("ordered", "advantage"):
        order = report.best_ordered.order
        order_text = ">".join(str(i) for i in order.order) if order else ""
        summary.append(
            f"best_ordered={format_float(report.best_ordered.value)} order={order_text}"
        )
    if args.mode == "advantage":
        summary.append(f"advantage={format_float(report.advantage)}")
    _emit(report, args.output, summary)
    return 0


def _cmd_witness(args) -> int:
    shape = _parse_shape(args.shape, None)
    hit = find_unordered_witness(shape, budget=args.budget)
    if hit is None:
        print("no strategy without a fixed causal order exists at this shape")
        return 1
    index, w = hit
    _emit(w, args.output, [f"index={index}"])
    return 0


def _cmd_report(args) -> int:
    doc = load(args.file)
    if doc.kind != "search_report":
        raise DocumentError(f"report expects a search_report document, got {doc.kind}")
    write_csv(doc.payload, args.csv)
    print(f"wrote {args.csv}")
    if not args.no_figure:
        figure = args.figure or os.path.splitext(args.csv)[0] + ".png"
        render_figure(doc.payload, figure)
        print(f"wrote {figure}")
    return 0


def _cmd_gyni(args) -> int:
    _emit(gyni_env(args.parties), args.output, [])
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_budget(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="elementary-check / candidate-table budget"
        " (default: HOPF_BUDGET or 10^8)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopf",
        description="Finite decision processes, higher-order process functions,"
        " and the correspondence between them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a document's semantic invariants")
    p.add_argument("file")
    _add_budget(p)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("convert", help="convert between agents and process functions")
    p.add_argument("file")
    p.add_argument("--to", choices=("agent", "pf"), required=True)
    p.add_argument("-o", "--output", default=None)
    _add_budget(p)
    p.set_defaults(handler=_cmd_convert)

    p = sub.add_parser("simulate", help="roll a strategy out against an environment")
    p.add_argument("env")
    p.add_argument("strategy")
    p.add_argument("--m0", type=int, default=0, help="initial memory index")
    p.add_argument("--s0", type=int, default=0, help="initial state index")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument(
        "--exact",
        action="store_true",
        help="also report the exact infinite-horizon discounted value",
    )
    p.add_argument("-o", "--output", default=None)
    _add_budget(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("search", help="search strategies for an order advantage")
    p.add_argument("env")
    p.add_argument(
        "--shape", required=True, help="strategy shape MEMORY:AxO[,AxO...]"
    )
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument(
        "--mode", choices=("general", "ordered", "advantage"), default="advantage"
    )
    p.add_argument("--m0", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--env-id", default=None)
    p.add_argument("-o", "--output", default=None)
    _add_budget(p)
    p.set_defaults(handler=_cmd_search)

    p = sub.add_parser(
        "witness", help="find a strategy admitting no fixed causal order"
    )
    p.add_argument(
        "--shape", required=True, help="strategy shape MEMORY:AxO[,AxO...]"
    )
    p.add_argument("-o", "--output", default=None)
    _add_budget(p)
    p.set_defaults(handler=_cmd_witness)

    p = sub.add_parser("report", help="flatten a search report to CSV and a figure")
    p.add_argument("file")
    p.add_argument("--csv", required=True)
    p.add_argument("--figure", default=None)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(handler=_cmd_report)

    p = sub.add_parser("gyni", help="emit a neighbor-guessing benchmark environment")
    p.add_argument("parties", type=int)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(handler=_cmd_gyni)

    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if getattr(args, "budget", None) is None and hasattr(args, "budget"):
        try:
            args.budget = _env_budget()
        except DocumentError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = _default_threads()
    try:
        return args.handler(args)
    except _VALIDATION_ERRORS as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> int:
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(entry())
