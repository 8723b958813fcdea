"""
poisoncert/cli/commands/simulate.py
`poisoncert simulate mean|class`: attack simulations without a certificate.
"""

import time

import click

from poisoncert.cli.commands.common import (
    certificate_record,
    class_instance,
    common_options,
    finish_run,
    get_run_settings,
    guarded,
    load_points,
    mean_instance,
    simulate_attacks,
    simulation_options,
    split_list,
    thread_count,
)
from poisoncert.cli.display.rich_formatter import get_formatter


@click.group()
def simulate():
    """Run poisoned dynamics under the chosen attacks."""


@simulate.command(name='mean')
@click.option('--d', 'dim', type=click.IntRange(min=1), default=2, show_default=True)
@click.option('--epsilon', type=click.FloatRange(0.0, 1.0), default=0.05, show_default=True)
@click.option('--eta', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.1,
              show_default=True)
@click.option('--r', 'budget', type=click.FloatRange(min=0.0, min_open=True), default=None)
@click.option('--trace-s', type=click.FloatRange(min=0.0), default=0.0, show_default=True)
@click.option('--attacks', default='none,greedy,fgsm', show_default=True)
@simulation_options
@common_options
@click.pass_context
@guarded
def simulate_mean(ctx, dim, epsilon, eta, budget, trace_s, attacks, horizon, burn_in, n_seeds, seed, out,
                  threads):
    """Simulate attacks on online mean estimation."""
    settings = get_run_settings(ctx)
    r = settings.experiment.r if budget is None else budget
    get_formatter().header("Mean-estimation simulation", f"d={dim}  ε={epsilon:g}  η={eta:g}  r={r:g}")
    started = time.perf_counter()
    inst = mean_instance(dim, epsilon, eta, r, trace_s, seed)
    records = simulate_attacks(inst, split_list(attacks), settings, horizon, burn_in, n_seeds, seed,
                               thread_count(threads, settings))
    finish_run(ctx, 'simulate mean', [certificate_record(None, inst, records, time.perf_counter() - started)],
               out, seed)


@simulate.command(name='class')
@click.option('--data', default='blobs', show_default=True)
@click.option('--n-points', type=click.IntRange(min=2), default=100, show_default=True)
@click.option('--d', 'dim', type=click.IntRange(min=1), default=2, show_default=True)
@click.option('--margin', type=click.FloatRange(min=0.0), default=3.0, show_default=True)
@click.option('--epsilon', type=click.FloatRange(0.0, 1.0), default=0.01, show_default=True)
@click.option('--eta', type=click.FloatRange(min=0.0, min_open=True), default=5e-4, show_default=True)
@click.option('--sigma', type=click.FloatRange(min=0.0, min_open=True), default=3e-2, show_default=True)
@click.option('--attacks', default='none,fgsm,pgd,label_flip', show_default=True)
@simulation_options
@common_options
@click.pass_context
@guarded
def simulate_class(ctx, data, n_points, dim, margin, epsilon, eta, sigma, attacks, horizon, burn_in, n_seeds,
                   seed, out, threads):
    """Simulate attacks on the online hinge-loss classifier."""
    settings = get_run_settings(ctx)
    get_formatter().header("Classification simulation", f"data={data}  ε={epsilon:g}  η={eta:g}  σ={sigma:g}")
    started = time.perf_counter()
    points = load_points(data, n_points, dim, margin, seed)
    inst = class_instance(points, epsilon, eta, sigma, max(points.shape[0], 1), seed)
    records = simulate_attacks(inst, split_list(attacks), settings, horizon, burn_in, n_seeds, seed,
                               thread_count(threads, settings))
    finish_run(ctx, 'simulate class', [certificate_record(None, inst, records, time.perf_counter() - started)],
               out, seed)
