"""
poisoncert/cli/commands/common.py
Options, instance builders and error handling shared by the commands.
"""

import functools
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError

from poisoncert.certcore.types import Ball
from poisoncert.certificates import CertificateResult, ClassInstance, MeanInstance
from poisoncert.cli.display.rich_formatter import get_formatter
from poisoncert.cli.report import AttackRecord, InstanceRecord, RunReport, config_hash, matrix_digest, write_run
from poisoncert.config.settings import PoisonCertSettings
from poisoncert.data import gen_blobs, gen_gaussian_task, load_table, preprocess
from poisoncert.simulate import estimate_avg_reward, parse_policy, run_many
from poisoncert.utils.exceptions import (
    ConfigurationError,
    ContractViolation,
    DataError,
    DominanceViolation,
    PoisonCertError,
    SolverError,
)

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_DOMINANCE = 4
_UNHASHED = ("out", "threads")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ContractViolation, ConfigurationError, DataError, ValidationError)):
        return EXIT_USAGE
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    if isinstance(exc, DominanceViolation):
        return EXIT_DOMINANCE
    return 1


def guarded(fn):
    """Render library errors as panels and exit with the matching code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PoisonCertError, ValidationError) as exc:
            code = exit_code_for(exc)
            get_formatter().show_error(type(exc).__name__, str(exc), code)
            click.get_current_context().exit(code)

    return wrapper


def run_options(out_file: bool = False, out_default: Optional[Path] = None):
    """--seed, --out and --threads, honored by every command.

    --out names a run directory, or a single output file when out_file is set.
    """

    def decorate(fn):
        fn = click.option('--threads', type=click.IntRange(min=0), default=None,
                          help='Worker threads (0 = auto)')(fn)
        if out_file:
            fn = click.option('--out', type=click.Path(dir_okay=False, path_type=Path), default=out_default,
                              show_default=True, help='Output file')(fn)
        else:
            fn = click.option('--out', type=click.Path(file_okay=False, path_type=Path), default=None,
                              help='Run directory (default runs/<command>-<hash>)')(fn)
        fn = click.option('--seed', type=int, default=0, show_default=True, help='Base random seed')(fn)
        return fn

    return decorate


common_options = run_options()


def simulation_options(fn):
    fn = click.option('--seeds', 'n_seeds', type=click.IntRange(min=2), default=None,
                      help='Simulation seeds per attack')(fn)
    fn = click.option('--burn-in', type=click.IntRange(min=0), default=None, help='Burn-in steps')(fn)
    fn = click.option('--T', 'horizon', type=click.IntRange(min=1), default=None, help='Simulated steps')(fn)
    return fn


def get_run_settings(ctx: click.Context) -> PoisonCertSettings:
    return ctx.obj['settings']


def thread_count(threads: Optional[int], settings: PoisonCertSettings) -> int:
    return settings.experiment.threads if threads is None else threads


def split_list(text: str, cast=str) -> List:
    items = [item.strip() for item in text.split(',') if item.strip()]
    try:
        return [cast(item) for item in items]
    except ValueError as e:
        raise ContractViolation(f"cannot parse list '{text}': {e}") from e


def cell_seed(base_seed: int, index: int) -> int:
    """Seed of grid cell `index`; independent of scheduling."""
    return base_seed ^ index


def mean_instance(d: int, epsilon: float, eta: float, r: float, trace_s: float, seed: int) -> MeanInstance:
    mu, Sigma = gen_gaussian_task(d, seed)
    return MeanInstance(mu, Sigma, eta, (trace_s / d) * np.eye(d), epsilon, r)


def load_points(data: str, n_points: int, d: int, margin: float, seed: int) -> np.ndarray:
    """Processed, label-multiplied points from synthetic blobs or a feature CSV."""
    if data == 'blobs':
        table = gen_blobs(d, n_points, margin, seed)
    else:
        table = load_table(Path(data))
        if table.y is None:
            raise DataError(f"{data}: classification needs a label column")
        d = min(d, table.n_features)
    return preprocess(table, d).Z


def class_instance(points: np.ndarray, epsilon: float, eta: float, sigma: float, cap: int,
                   seed: int) -> ClassInstance:
    return ClassInstance.from_dataset(points, eta, sigma, epsilon, cap=cap, seed=seed)


def simulate_attacks(inst, attacks: Sequence[str], settings: PoisonCertSettings, horizon: Optional[int],
                     burn_in: Optional[int], n_seeds: Optional[int], seed: int, threads: int) -> List[AttackRecord]:
    sim = settings.simulation
    T = horizon or sim.T
    burn = sim.burn_in if burn_in is None else burn_in
    if burn >= T:
        burn = T // 5
    seeds = [seed * 1000 + s for s in range(n_seeds or sim.seeds)]
    theta0 = inst.mu if isinstance(inst, MeanInstance) else np.zeros(inst.dim)
    adv_set: Ball = inst.adversarial_set()

    records = []
    for name in attacks:
        policy = parse_policy(name)
        runs = run_many(inst.rule(), inst.stream(), inst.objective(), policy, T, burn, seeds, theta0, adv_set,
                        threads)
        mean, stderr = estimate_avg_reward(runs)
        records.append(AttackRecord(policy=policy.name, mean=mean, stderr=stderr, seeds=len(seeds),
                                    avg_benign_loss=float(np.mean([run.avg_benign_loss for run in runs]))))
        logger.info("%s: average adversarial loss %.6g ± %.2g", policy.name, mean, stderr)
    return records


def certificate_record(result: Optional[CertificateResult], inst, attacks: List[AttackRecord],
                       wall_time: float, **extra: Any) -> InstanceRecord:
    common: Dict[str, Any] = dict(epsilon=inst.epsilon, eta=inst.eta, attack_results=attacks, wall_time=wall_time,
                                  extra=extra)
    if isinstance(inst, MeanInstance):
        common.update(kind="mean", r=inst.r, s_digest=matrix_digest(inst.S))
    else:
        common.update(kind="class", sigma=inst.sigma)
    if result is not None:
        common.update(certificate_solver=result.solver_value, certificate_verified=result.verified,
                      solver_status=result.solver_status, verification_converged=result.verification_converged)
    return InstanceRecord(**common)


def finish_run(ctx: click.Context, command: str, records: List[InstanceRecord], out: Optional[Path],
               seed: int, notes: Optional[Dict[str, Any]] = None,
               artifacts: Optional[Callable[[Path], None]] = None) -> RunReport:
    """Hash the configuration, check dominance, write the run directory and print the summary."""
    settings = get_run_settings(ctx)
    params = {key: value for key, value in ctx.params.items() if key not in _UNHASHED}
    hashed_settings = settings.to_dict()
    hashed_settings['experiment'].pop('threads', None)
    config = {'command': command, 'params': params, 'settings': hashed_settings}
    digest = config_hash(config)

    report = RunReport(command=command, config_hash=digest, seed=seed, records=records, notes=notes or {})
    for record in report.records:
        record.check_dominance(settings.simulation.mc_tolerance_sigmas)

    out_dir = out or Path('runs') / f"{command.replace(' ', '-')}-{digest[:8]}"
    write_run(report, out_dir, config)
    if artifacts is not None:
        artifacts(out_dir)
    get_formatter().show_report(report, out_dir)
    if report.violations:
        raise DominanceViolation(f"{len(report.violations)} record(s) in {out_dir} violate the certificate")
    return report
