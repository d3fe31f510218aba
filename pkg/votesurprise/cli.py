"""
Command line interface.

Every command reads an optional json config file holding its parameter
object, overlays the flags given on the command line and writes its
outputs plus a manifest into --out. Exit codes: 0 success, 2 invalid input,
3 runtime diagnostic.
"""

import argparse
from collections.abc import Sequence
from dataclasses import asdict, dataclass
import logging
from pathlib import Path
import sys
from typing import Any

import numpy as np

from .brexit import ingest, run_sweep_sync, write_curve_csv
from .engine import (
    SurpriseEngine,
    TrialConfig,
    brute_force_surprise,
    class_system,
    compare_rules,
    mpfb_empirical_ordering,
)
from .errors import (
    EXIT_OK,
    InvalidInput,
    RuntimeDiagnostic,
    VoteSurpriseException,
    exit_code_for,
)
from .manifest import RunManifest, config_hash
from .models.brexit import SweepConfig
from .models.connection import ClassDistribution, ConnectionMatrix, load_model_file
from .models.report import SurpriseReport, write_reports_csv
from .models.sample import GeoDecayParams
from .models.scoring import RuleName, preset_rule, rule_from_config
from .models.theory import ReducedConnection, Verdict
from .streams import RngSeed
from .theory import (
    DEFAULT_WINNER,
    analytic_mpfb_ordering,
    classify_two_candidate,
    ordering_contradicts,
    theorem_claim,
)
from .util import dump_json, load_json, parse_config, parse_float_list, to_jsonable

LOGGER = logging.getLogger(__package__).getChild("cli")

Matrix = tuple[tuple[float, ...], ...]

COMMANDS = ("simulate", "theory-check", "mpfb-compare", "brexit", "oracle-check")


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved command invocation."""

    command: str
    parameters: dict[str, Any]
    master_seed: int = 0
    output_dir: Path = Path()


def _matrix(raw: Matrix | None, name: str) -> ConnectionMatrix:
    if raw is None:
        raise InvalidInput(f"`{name}` is required")
    return ConnectionMatrix(np.asarray(raw, dtype=np.float64))


@dataclass(frozen=True)
class SimulateParams:
    """Parameters of `simulate`; a model file fills in m, eps, p and phat."""

    n: int = 1000
    m: int | None = None
    eps: tuple[float, ...] | None = None
    p: Matrix | None = None
    phat: Matrix | None = None
    model: Path | None = None
    rule: str = "plurality"
    scores: tuple[float, ...] | None = None
    trials: int = 1000
    panel_size: int = 10
    tiebreak: tuple[int, ...] | None = None
    conditioning: int | None = None

    def to_trial_config(self) -> TrialConfig:
        """Resolve the model and validate everything."""
        m, eps, p, phat = self.m, None, None, None
        if self.model is not None:
            model = load_model_file(self.model)
            m, eps, p, phat = model.m, model.eps, model.p, model.phat
        m = self.m or m or 2
        if self.eps is not None:
            eps = ClassDistribution(np.asarray(self.eps, dtype=np.float64))
        if self.p is not None:
            p = _matrix(self.p, "p")
        if self.phat is not None:
            phat = _matrix(self.phat, "phat")
        if p is None:
            raise InvalidInput("`p` is required (inline or through `model`)")
        return TrialConfig(
            n=self.n,
            dist=eps or ClassDistribution.uniform(class_system(m).size),
            p=p,
            phat=phat or p,
            rule=rule_from_config(self.rule, m, self.scores),
            trials=self.trials,
            panel_size=self.panel_size,
            tiebreak=self.tiebreak,
            conditioning=self.conditioning,
        )


@dataclass(frozen=True)
class TheoryParams:
    """Parameters of `theory-check`; m=2 runs the threshold check, m=3 the MPFB model."""

    p: Matrix | None = None
    phat: Matrix | None = None
    m: int = 2
    epsilon: float = 0.05
    n: int = 4000
    winner: int = DEFAULT_WINNER
    trials: int = 200
    panel_size: int = 10


@dataclass(frozen=True)
class MpfbParams:
    """Parameters of `mpfb-compare` (three candidates, uniform population)."""

    p: Matrix | None = None
    phat: Matrix | None = None
    reduced: ReducedConnection | None = None
    n: int = 3000
    winner: int = DEFAULT_WINNER
    trials: int = 1000
    panel_size: int = 10

    def matrices(self) -> tuple[ConnectionMatrix, ConnectionMatrix]:
        """Return (p, phat), from the two-level form when given."""
        if self.reduced is not None:
            return self.reduced.to_matrices(class_system(3))
        p = _matrix(self.p, "p")
        return p, _matrix(self.phat, "phat") if self.phat is not None else p


@dataclass(frozen=True)
class BrexitParams:
    """Parameters of `brexit`."""

    votes: Path | None = None
    locations: Path | None = None
    p: float = 0.4
    q: float = 0.2
    bias_grid: tuple[float, ...] = (0.0, 0.05, 0.1)
    wg_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    sample: int = 2000
    attempts: int = 100
    trials: int = 20
    length_km: float = 100.0
    p1_max: float | None = None
    shared_noise: bool = False
    paper_scale: bool = False

    def to_sweep(self) -> SweepConfig:
        """Return the validated sweep."""
        sweep = SweepConfig(
            p=self.p,
            q=self.q,
            bias_grid=self.bias_grid,
            wg_grid=self.wg_grid,
            sample_size=self.sample,
            attempts=self.attempts,
            trials=self.trials,
            decay=GeoDecayParams(p1_max=self.p1_max, length_km=self.length_km),
            shared_noise=self.shared_noise,
        )
        return sweep.paper_scale() if self.paper_scale else sweep


@dataclass(frozen=True)
class OracleParams:
    """Parameters of `oracle-check`."""

    n: tuple[int, ...] = (4, 6, 8)
    trials: int = 20_000
    panel_size: int = 8
    tolerance: float = 3.0


@dataclass(frozen=True)
class OracleCase:
    """One model of the oracle grid (two candidates)."""

    name: str
    eps: tuple[float, float]
    p: Matrix
    phat: Matrix


ORACLE_CASES = (
    OracleCase("inverted", (0.6, 0.4), ((0.9, 0.1), (0.1, 0.9)), ((0.1, 0.9), (0.9, 0.1))),
    OracleCase("exact", (0.5, 0.5), ((0.6, 0.3), (0.3, 0.6)), ((0.6, 0.3), (0.3, 0.6))),
    OracleCase("swapped", (0.55, 0.45), ((0.4, 0.2), (0.2, 0.4)), ((0.2, 0.4), (0.4, 0.2))),
    OracleCase("overrated", (0.7, 0.3), ((0.5, 0.5), (0.5, 0.5)), ((0.8, 0.3), (0.3, 0.8))),
)


@dataclass
class OracleRow:
    """One comparison of Monte Carlo against exact enumeration."""

    case: str
    n: int
    class_index: int
    exact: float
    estimate: float
    ci: float
    passed: bool = False

    @property
    def delta(self) -> float:
        """Return estimate - exact."""
        return self.estimate - self.exact


def oracle_grid(params: OracleParams, seed: RngSeed, threads: int = 1) -> list[OracleRow]:
    """Compare run_trials against brute_force_surprise on every case and n."""
    rule = preset_rule(RuleName.PLURALITY, 2)
    rows = []
    for n in params.n:
        for index, case in enumerate(ORACLE_CASES):
            dist = ClassDistribution(np.asarray(case.eps))
            p = ConnectionMatrix(np.asarray(case.p))
            phat = ConnectionMatrix(np.asarray(case.phat))
            exact = [brute_force_surprise(n, dist, p, phat, rule, k) for k in (0, 1)]
            config = TrialConfig(
                n=n,
                dist=dist,
                p=p,
                phat=phat,
                rule=rule,
                trials=params.trials,
                panel_size=params.panel_size,
            )
            report = SurpriseEngine(
                config, seed.child(n * 100 + index), threads, label=f"oracle-{case.name}-{n}"
            ).run_trials_sync()
            for k, est in enumerate(report.per_class):
                row = OracleRow(case.name, n, k, exact[k], est.surprise, est.surprise_ci)
                row.passed = abs(row.delta) <= params.tolerance * row.ci + 1e-12
                rows.append(row)
    return rows


def _write_report(reports: Sequence[SurpriseReport], out: Path, stem: str) -> list[str]:
    write_reports_csv(list(reports), out / f"{stem}.csv")
    dump_json([r.to_dict() for r in reports], out / f"{stem}.json")
    return [f"{stem}.csv", f"{stem}.json"]


def cmd_simulate(run: RunConfig, threads: int) -> dict[str, Any]:
    """Run one configuration and write report.json and report.csv."""
    params = parse_config(SimulateParams, run.parameters)
    config = params.to_trial_config()
    report = SurpriseEngine(config, RngSeed(run.master_seed), threads).run_trials_sync()
    outputs = _write_report([report], run.output_dir, "report")
    RunManifest(run.command, run.master_seed, run.parameters, tuple(outputs)).write(run.output_dir)
    return {
        "per_class_surprise": list(report.per_class_surprise),
        "mpfb": list(report.mpfb),
        "discard_rate": report.discard_rate,
        "outputs": outputs,
    }


def _two_candidate_check(params: TheoryParams, run: RunConfig, compare: bool, threads: int) -> dict[str, Any]:
    p = _matrix(params.p, "p")
    phat = _matrix(params.phat, "phat") if params.phat is not None else p
    verdicts = [classify_two_candidate(params.epsilon, p, phat, k, params.n) for k in (0, 1)]
    result: dict[str, Any] = {
        "classes": [
            {
                "class_index": v.class_index,
                "verdict": v.verdict.value,
                "lhs": v.ratio_lhs,
                "rhs": v.ratio_rhs,
                "exponent": v.rate_exponent_coeff,
                "bounds": {"upper": v.tail_bound, "lower": v.surprise_lower_bound},
            }
            for v in verdicts
        ],
        "winner_bound": to_jsonable(verdicts[0].winner_bound),
    }
    if compare:
        config = TrialConfig(
            n=params.n,
            dist=ClassDistribution.two_candidate(params.epsilon),
            p=p,
            phat=phat,
            rule=preset_rule(RuleName.PLURALITY, 2),
            trials=params.trials,
            panel_size=params.panel_size,
            conditioning=0,
        )
        report = SurpriseEngine(config, RngSeed(run.master_seed), threads).run_trials_sync()
        for entry, verdict, est in zip(result["classes"], verdicts, report.per_class, strict=True):
            entry["measured"] = est.surprise
            entry["agreement"] = (
                None if verdict.verdict is Verdict.KNIFE_EDGE
                else (est.surprise >= 0.5) == verdict.surprised_whp
            )
        result["discard_rate"] = report.discard_rate
    return result


def _compare_rules(
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    n: int,
    winner: int,
    trials: int,
    panel_size: int,
    seed: RngSeed,
    threads: int,
) -> dict[str, SurpriseReport]:
    config = TrialConfig(
        n=n,
        dist=ClassDistribution.uniform(class_system(3).size),
        p=p,
        phat=phat,
        rule=preset_rule(RuleName.PLURALITY, 3),
        trials=trials,
        panel_size=panel_size,
        conditioning=winner,
    )
    reports = compare_rules(config, seed, threads=threads)
    return {name.short: report for name, report in reports.items()}


def _three_candidate_rows(
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    n: int,
    winner: int,
    reports: dict[str, SurpriseReport] | None,
) -> list[dict[str, Any]]:
    cs = class_system(3)
    rows = []
    for k in range(cs.size):
        analytic = analytic_mpfb_ordering(k, p, phat, cs, n, winner)
        row: dict[str, Any] = {
            "class_index": k,
            "class_label": cs.table1_label(k),
            "ranking": analytic.class_label,
            "winner_rank": analytic.category.value,
            "analytic": analytic.values,
            "analytic_order": analytic.label,
            "matches_claim": analytic.matches_claim,
        }
        if reports is not None:
            ordering = mpfb_empirical_ordering(reports["Plu"], reports["Bor"], reports["Vet"], k)
            row["empirical_order"] = ordering.label
            row["empirical"] = {name: value for name, value, _ in ordering.entries}
            row["agreement"] = not ordering_contradicts(ordering, theorem_claim(analytic.category))
        rows.append(row)
    return rows


def cmd_theory_check(run: RunConfig, threads: int, compare: bool = False) -> dict[str, Any]:
    """Print the closed-form verdicts, optionally next to a matching Monte Carlo run."""
    params = parse_config(TheoryParams, run.parameters)
    if params.m == 2:
        result = _two_candidate_check(params, run, compare, threads)
    elif params.m == 3:
        p = _matrix(params.p, "p")
        phat = _matrix(params.phat, "phat") if params.phat is not None else p
        reports = None
        if compare:
            reports = _compare_rules(
                p, phat, params.n, params.winner, params.trials, params.panel_size,
                RngSeed(run.master_seed), threads,
            )
        result = {"classes": _three_candidate_rows(p, phat, params.n, params.winner, reports)}
    else:
        raise InvalidInput(f"m={params.m}: theory-check covers two or three candidates")
    dump_json(result, run.output_dir / "theory.json")
    RunManifest(run.command, run.master_seed, run.parameters, ("theory.json",)).write(run.output_dir)
    return result


def cmd_mpfb_compare(run: RunConfig, threads: int) -> dict[str, Any]:
    """Run plurality, Borda and veto on one model and order their MPFB factors per class."""
    params = parse_config(MpfbParams, run.parameters)
    p, phat = params.matrices()
    reports = _compare_rules(
        p, phat, params.n, params.winner, params.trials, params.panel_size,
        RngSeed(run.master_seed), threads,
    )
    result = {"classes": _three_candidate_rows(p, phat, params.n, params.winner, reports)}
    outputs = _write_report(list(reports.values()), run.output_dir, "reports")
    dump_json(result, run.output_dir / "orderings.json")
    outputs.append("orderings.json")
    RunManifest(run.command, run.master_seed, run.parameters, tuple(outputs)).write(run.output_dir)
    return result


def cmd_brexit(run: RunConfig, threads: int) -> dict[str, Any]:
    """Ingest the referendum files and write the surprise curves."""
    params = parse_config(BrexitParams, run.parameters)
    if params.votes is None or params.locations is None:
        raise InvalidInput("`votes` and `locations` are required")
    sweep = params.to_sweep()
    records, coverage = ingest(params.votes, params.locations)
    points = run_sweep_sync(records, sweep, RngSeed(run.master_seed), threads)
    write_curve_csv(points, run.output_dir / "curve.csv")
    dump_json(
        {**asdict(coverage), "missing_fraction": coverage.missing_fraction},
        run.output_dir / "coverage.json",
    )
    RunManifest(
        run.command, run.master_seed, run.parameters, ("curve.csv", "coverage.json")
    ).write(run.output_dir)
    return {"points": len(points), "missing_fraction": coverage.missing_fraction}


def cmd_oracle_check(run: RunConfig, threads: int) -> dict[str, Any]:
    """Run the oracle grid and fail when a delta exceeds the tolerance."""
    params = parse_config(OracleParams, run.parameters)
    rows = oracle_grid(params, RngSeed(run.master_seed), threads)
    table = [{**asdict(row), "delta": row.delta} for row in rows]
    dump_json(table, run.output_dir / "oracle.json")
    RunManifest(run.command, run.master_seed, run.parameters, ("oracle.json",)).write(run.output_dir)
    for row in rows:
        print(
            f"{row.case:>10} n={row.n} class={row.class_index} exact={row.exact:.5f} "
            f"mc={row.estimate:.5f} ci={row.ci:.5f} delta={row.delta:+.5f} "
            f"{'pass' if row.passed else 'FAIL'}"
        )
    failed = [row for row in rows if not row.passed]
    if failed:
        raise RuntimeDiagnostic(f"{len(failed)} of {len(rows)} oracle comparisons out of tolerance")
    return {"comparisons": len(rows), "failed": 0}


# flags that override config file parameters of the same name
FLAG_PARAMS: dict[str, tuple[str, ...]] = {
    "simulate": ("n", "model", "rule", "trials", "panel_size", "conditioning", "tiebreak"),
    "theory-check": ("m", "epsilon", "n", "trials", "panel_size"),
    "mpfb-compare": ("n", "trials", "panel_size"),
    "brexit": (
        "votes", "locations", "p", "q", "bias_grid", "wg_grid", "sample", "attempts",
        "trials", "length_km", "p1_max", "shared_noise", "paper_scale",
    ),
    "oracle-check": ("n", "trials", "tolerance", "panel_size"),
}


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in parse_float_list(raw))


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one sub command per operation."""
    parser = argparse.ArgumentParser(
        prog="votesurprise",
        description="Simulate and analyse surprise in elections held over biased social networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="json file with the command's parameters")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads, never changes results")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo surprise report")
    simulate.add_argument("--model", type=Path, help="model json {m, eps, p, phat}")
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--rule", choices=[r.value for r in RuleName if r is not RuleName.CUSTOM])
    simulate.add_argument("--trials", type=int)
    simulate.add_argument("--panel-size", type=int)
    simulate.add_argument("--conditioning", type=int, help="keep trials won by this candidate")
    simulate.add_argument("--tiebreak", type=_int_list, help="candidate priority, e.g. 1,0")

    theory = sub.add_parser("theory-check", parents=[common], help="closed-form verdicts")
    theory.add_argument("--m", type=int, choices=(2, 3))
    theory.add_argument("--epsilon", type=float)
    theory.add_argument("--n", type=int)
    theory.add_argument("--trials", type=int)
    theory.add_argument("--panel-size", type=int)
    theory.add_argument("--compare", action="store_true", help="also run a matching Monte Carlo")

    mpfb = sub.add_parser("mpfb-compare", parents=[common], help="MPFB ordering of Plu/Bor/Vet")
    mpfb.add_argument("--n", type=int)
    mpfb.add_argument("--trials", type=int)
    mpfb.add_argument("--panel-size", type=int)

    brexit = sub.add_parser("brexit", parents=[common], help="referendum surprise curves")
    brexit.add_argument("--votes", type=Path, help="csv with region,leave,remain")
    brexit.add_argument("--locations", type=Path, help="csv with town,region,lat,lon")
    brexit.add_argument("--sample", type=int)
    brexit.add_argument("--attempts", type=int)
    brexit.add_argument("--p", type=float)
    brexit.add_argument("--q", type=float)
    brexit.add_argument("--bias-grid", type=parse_float_list)
    brexit.add_argument("--wg-grid", type=parse_float_list)
    brexit.add_argument("--trials", type=int)
    brexit.add_argument("--length-km", type=float)
    brexit.add_argument("--p1-max", type=float)
    brexit.add_argument("--shared-noise", action="store_true", default=None)
    brexit.add_argument("--paper-scale", action="store_true", default=None)

    oracle = sub.add_parser("oracle-check", parents=[common], help="Monte Carlo vs exact enumeration")
    oracle.add_argument("--n", type=_int_list, help="voter counts, e.g. 4,6,8")
    oracle.add_argument("--trials", type=int)
    oracle.add_argument("--panel-size", type=int)
    oracle.add_argument("--tolerance", type=float, help="allowed |delta| in CI half-widths")
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < flags into a RunConfig."""
    parameters: dict[str, Any] = {}
    seed = 0
    if args.config is not None:
        raw = load_json(args.config)
        if not isinstance(raw, dict):
            raise InvalidInput(f"{args.config} must hold a json object")
        parameters.update(raw)
        seed = int(parameters.pop("seed", seed))
    for name in FLAG_PARAMS[args.command]:
        value = getattr(args, name, None)
        if value is not None:
            parameters[name] = value
    if args.seed is not None:
        seed = args.seed
    return RunConfig(
        command=args.command,
        parameters=to_jsonable(parameters),
        master_seed=seed,
        output_dir=args.out,
    )


def run(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.threads < 1:
            raise InvalidInput(f"threads={args.threads} must be positive")
        config = resolve(args)
        config.output_dir.mkdir(parents=True, exist_ok=True)
        LOGGER.info(
            "%s with seed %s, config %s", config.command, config.master_seed,
            config_hash(config.parameters),
        )
        if config.command == "simulate":
            result = cmd_simulate(config, args.threads)
        elif config.command == "theory-check":
            result = cmd_theory_check(config, args.threads, compare=args.compare)
        elif config.command == "mpfb-compare":
            result = cmd_mpfb_compare(config, args.threads)
        elif config.command == "brexit":
            result = cmd_brexit(config, args.threads)
        else:
            result = cmd_oracle_check(config, args.threads)
    except VoteSurpriseException as exc:
        LOGGER.error("%s", exc)
        return exit_code_for(exc)
    print(dump_json(result), end="")
    return EXIT_OK


def main() -> None:
    """Entry point of the votesurprise script."""
    sys.exit(run())
