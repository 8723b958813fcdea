"""
poisoncert/cli/commands/meta.py
`poisoncert meta`: learn the defense covariance and compare it with S = 0 and sI.
"""

import json
import time
from pathlib import Path

import click
import numpy as np
import pandas as pd

from poisoncert.cli.commands.common import (
    common_options,
    finish_run,
    get_run_settings,
    guarded,
    simulation_options,
    thread_count,
)
from poisoncert.cli.display.rich_formatter import get_formatter
from poisoncert.cli.report import AttackRecord, InstanceRecord, matrix_digest
from poisoncert.meta import MetaConfig, TaskPrior, eval_defense_per_task, meta_train, sample_tasks, training_tasks
from poisoncert.simulate import parse_policy


@click.command()
@click.option('--d', 'dim', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--K', 'n_tasks', type=click.IntRange(min=1), default=None, help='Training tasks')
@click.option('--iterations', type=click.IntRange(min=1), default=None, help='Alternating rounds')
@click.option('--kappa', type=click.FloatRange(min=0.0, min_open=True), default=None)
@click.option('--test-tasks', type=click.IntRange(min=1), default=None)
@click.option('--epsilon', type=click.FloatRange(0.0, 1.0), default=0.05, show_default=True)
@click.option('--eta', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.1,
              show_default=True)
@click.option('--r', 'budget', type=click.FloatRange(min=0.0, min_open=True), default=None)
@click.option('--attack', default='greedy', show_default=True, help='Attack used for evaluation')
@simulation_options
@common_options
@click.pass_context
@guarded
def meta(ctx, dim, n_tasks, iterations, kappa, test_tasks, epsilon, eta, budget, attack, horizon, burn_in,
         n_seeds, seed, out, threads):
    """
    Meta-learn the mean-estimation defense S and evaluate it on held-out tasks.

    Examples:
        poisoncert meta --d 5 --K 10 --iterations 10
        poisoncert meta --kappa 1e-6 --T 5000 --seeds 2
    """
    settings = get_run_settings(ctx)
    meta_settings, sim = settings.meta, settings.simulation
    r = settings.experiment.r if budget is None else budget
    workers = thread_count(threads, settings)
    prior = TaskPrior(d=dim)
    cfg = MetaConfig(kappa=kappa or meta_settings.kappa, T=iterations or meta_settings.T,
                     K=n_tasks or meta_settings.K, seed=seed, prior=prior, trace_cap=meta_settings.trace_cap,
                     threads=workers)
    get_formatter().header("Meta-learned defense", f"d={dim}  K={cfg.K}  T={cfg.T}  κ={cfg.kappa:g}  ε={epsilon:g}")

    train = training_tasks(cfg)
    test = sample_tasks(prior, test_tasks or meta_settings.test_tasks, seed + 1)
    policy = parse_policy(attack)
    T = horizon or sim.T
    burn = sim.burn_in if burn_in is None else burn_in
    if burn >= T:
        burn = T // 5
    evaluation = dict(T=T, burn_in=burn, seeds=n_seeds or sim.seeds, seed=seed, threads=workers)

    started = time.perf_counter()
    traces = {
        'full': meta_train(train, eta, epsilon, r, cfg, settings.solver),
        'isotropic': meta_train(train, eta, epsilon, r, cfg.model_copy(update={'structure': 'isotropic'}),
                                settings.solver),
    }
    defenses = {'learned': traces['full'].S, 'none': np.zeros((dim, dim)), 'isotropic': traces['isotropic'].S}

    records = []
    for label, S in defenses.items():
        losses = eval_defense_per_task(S, test, eta, epsilon, r, policy, **evaluation)
        stderr = float(losses.std(ddof=1) / np.sqrt(losses.size)) if losses.size > 1 else 0.0
        records.append(InstanceRecord(
            kind=f"meta:{label}", epsilon=epsilon, eta=eta, r=r, s_digest=matrix_digest(S),
            attack_results=[AttackRecord(policy=policy.name, mean=float(losses.mean()), stderr=stderr,
                                         seeds=evaluation['seeds'])],
            wall_time=time.perf_counter() - started,
            extra={'trace_S': float(np.trace(S)), 'benign_loss': float(eta ** 2 * np.trace(S))},
        ))

    def artifacts(out_dir: Path) -> None:
        with open(out_dir / 'meta_trace.json', 'w', encoding='utf-8') as f:
            json.dump({name: trace.to_dict() for name, trace in traces.items()}, f, indent=2)
        pd.DataFrame(traces['full'].S).to_csv(out_dir / 'S.csv', index=False, header=False)

    finish_run(ctx, 'meta', records, out, seed,
               notes={'objectives': traces['full'].objectives, 'trace_S': float(np.trace(traces['full'].S))},
               artifacts=artifacts)
