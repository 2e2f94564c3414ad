import argparse
import logging

from dishka import Container

from msa_lab.application.interfaces import ResultSink
from msa_lab.application.runner import EXPERIMENTS, ExperimentRunner
from msa_lab.config import load_experiment_config
from msa_lab.domain.statistics import EstimateStatus

from .exceptions import EXIT_OK, BoundViolatedError
from .schemas import ResultRecord

logger = logging.getLogger(__name__)

DESCRIPTIONS = {
    "build": "Operator: H = -Δ + U + g·V(x1) + g·V(x2) on the volume is real symmetric; optional triplet dump.",
    "spectrum": "Eigenpairs: H·ψ_j = E_j·ψ_j with orthonormal ψ_j; the residuals are reported.",
    "green": "Green function: G(y, u; E) = Σ_j ψ_j(y)ψ_j(u)/(E_j - E) equals the solve of (H - E)w = δ_y.",
    "classify": (
        "Verdicts: E-resonant iff dist(σ(H), E) < exp(-L^β); (E, m)-singular iff max over the boundary "
        "of |G(x, u; E)| > exp(-mL); m-tunneling iff Σ_j |ψ_j(x)|(|ψ_j(x-L)| + |ψ_j(x+L)|) > exp(-mL)."
    ),
    "schedule": (
        "Induction scales: L_{k+1} = ⌈L_k^α⌉ and m_{k+1} = m_k·(1 - 8·L_0^{-k/2}); "
        "the mass product is reported."
    ),
    "geometry": (
        "Projections: squares more than 8L apart have one projection free of the other three or both "
        "pairs disjoint; diagonal squares more than 5L apart with L > d have both pairs disjoint."
    ),
    "wegner": "Wegner bound: P(dist(σ(H), E) < r) ≤ 2/(πB)·(2L1+1)(2L2+1)·r with B = 2(a|g| - b - 1).",
    "wegner-cond": (
        "Conditional Wegner bound: with the potential on one projection frozen, "
        "P(dist(σ(H), E) < r) ≤ 4/(πB)·(2L1+1)(2L2+1)·r."
    ),
    "trace": "Trace inequality: P(dist(σ(H), E) < r) ≤ E #{j : |E_j - E| < r}.",
    "resonance": "Resonance bound: P(the volume is E-resonant) ≤ |Λ|²·‖f‖∞·exp(-L^β).",
    "tunneling": "Tunneling bound: P(the segment is m-non-tunneling) ≥ 1 - L^{-q}.",
    "pairs": (
        "Pair bound: two L-distant squares are both (E, m)-singular for some E with probability "
        "≤ L^{-2p}; both resonant ≤ L^{-q} when all projections are disjoint."
    ),
    "direct-sum": (
        "Off-diagonal pairs: P(both singular for some E, neither resonant nor tunneling) ≤ L^{-2p}; "
        "the events B, C, T and D are reported separately."
    ),
    "molchanov": (
        "Path integral: <δ_u, exp(itH) δ_u> = exp(c|t|)·E[i^K·exp(i∫W(X_s)ds); X_t = u] over jump paths "
        "of rate c, 4 inside the lattice, killed outside the volume."
    ),
    "khat": "Characteristic decay: |E <δ_u, exp(itH) δ_u>| ≤ exp(-B|t|) with B = 2(a|g| - b - 1).",
    "khat-cond": (
        "Conditional characteristic decay: with one projection frozen, "
        "|E <δ_u, exp(itH) δ_u>| ≤ exp(-B|t|/2)."
    ),
    "measure": "Spectral measure: the disorder average of <δ_u, 1_bin(H) δ_u> has total mass 1.",
    "implication": (
        "Deterministic implication: an E-non-resonant, m-non-tunneling volume with no singular site "
        "is (E, m')-non-singular, m' the degraded mass."
    ),
    "count": (
        "Singular packing: the number of pairwise distant (E, m)-singular sub-squares of radius L "
        "against the counting bound."
    ),
    "mass": "Localization: eigenfunctions decay as |ψ(x)| ≈ exp(-m‖x - c‖); the fitted m and r² are reported.",
}


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML file with the experiment parameters")
    parser.add_argument("--seed", type=int, help="master seed of every random stream")
    parser.add_argument("--samples", type=int, help="number of disorder samples")
    parser.add_argument("--out", help="file that receives the records")
    parser.add_argument("--format", choices=("csv", "jsonl"), help="record format")
    parser.add_argument("--workers", type=int, help="threads that run replicates")
    parser.add_argument("--strict", action="store_true", help="fail when a record violates its bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msa-lab", description="Numerical checks for two-particle localization.")
    commands = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        experiment = commands.add_parser(
            name,
            help=DESCRIPTIONS[name],
            description=DESCRIPTIONS[name],
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        _add_run_options(experiment)
        experiment.set_defaults(experiment=name)

    commands.add_parser("list", help="describe the available experiments")
    return parser


def list_experiments() -> int:
    for name in EXPERIMENTS:
        print(f"{name:<12} {DESCRIPTIONS[name]}")
    return EXIT_OK


def run_experiment(args: argparse.Namespace, container: Container) -> int:
    overrides = {
        "experiment": args.experiment,
        "seed": args.seed,
        "samples": args.samples,
        "out": args.out,
        "format": args.format,
    }
    config = load_experiment_config(args.config, overrides)

    with container() as request_container:
        runner = request_container.get(ExperimentRunner)
        sink = request_container.get(ResultSink)
        rows = runner(config)
        records = [ResultRecord.from_row(row).model_dump() for row in rows]
        sink.emit(records, config.output.format, config.output.path)

    violated = sum(record["status"] == EstimateStatus.BOUND_VIOLATED.value for record in records)
    if violated and args.strict:
        raise BoundViolatedError(violated)
    return EXIT_OK
