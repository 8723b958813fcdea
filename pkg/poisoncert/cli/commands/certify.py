"""
poisoncert/cli/commands/certify.py
`poisoncert certify mean|class`: certificate, verification and attack simulations.
"""

import time

import click

from poisoncert.certificates import certify_class, certify_mean
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
def certify():
    """Compute a certificate and check it against simulated attacks."""


@certify.command(name='mean')
@click.option('--d', 'dim', type=click.IntRange(min=1), default=2, show_default=True, help='Dimension')
@click.option('--epsilon', type=click.FloatRange(0.0, 1.0), default=0.05, show_default=True)
@click.option('--eta', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.1,
              show_default=True)
@click.option('--r', 'budget', type=click.FloatRange(min=0.0, min_open=True), default=None,
              help='Adversary budget (default from settings)')
@click.option('--trace-s', type=click.FloatRange(min=0.0), default=0.0, show_default=True,
              help='Isotropic defense noise S = (trace/d) I')
@click.option('--attacks', default='greedy,fgsm', show_default=True, help='Comma-separated attack names')
@simulation_options
@common_options
@click.pass_context
@guarded
def certify_mean_cmd(ctx, dim, epsilon, eta, budget, trace_s, attacks, horizon, burn_in, n_seeds, seed, out,
                     threads):
    """
    Certify online mean estimation under poisoning.

    Examples:
        poisoncert certify mean --d 2 --epsilon 0.05 --eta 0.1 --r 1.0 --seed 7
    """
    settings = get_run_settings(ctx)
    r = settings.experiment.r if budget is None else budget
    get_formatter().header("Mean-estimation certificate", f"d={dim}  ε={epsilon:g}  η={eta:g}  r={r:g}")

    started = time.perf_counter()
    inst = mean_instance(dim, epsilon, eta, r, trace_s, seed)
    result = certify_mean(inst, solver=settings.solver, search=settings.search)
    attack_records = simulate_attacks(inst, split_list(attacks), settings, horizon, burn_in, n_seeds, seed,
                                      thread_count(threads, settings))
    record = certificate_record(result, inst, attack_records, time.perf_counter() - started,
                                benign_loss=result.metadata['trace_S'] * eta ** 2)
    finish_run(ctx, 'certify mean', [record], out, seed)


@certify.command(name='class')
@click.option('--data', default='blobs', show_default=True, help="'blobs' or a feature CSV path")
@click.option('--n-points', type=click.IntRange(min=2), default=100, show_default=True)
@click.option('--d', 'dim', type=click.IntRange(min=1), default=2, show_default=True,
              help='Feature dimension after projection (a bias coordinate is appended)')
@click.option('--margin', type=click.FloatRange(min=0.0), default=3.0, show_default=True, help='Blob separation')
@click.option('--epsilon', type=click.FloatRange(0.0, 1.0), default=0.01, show_default=True)
@click.option('--eta', type=click.FloatRange(min=0.0, min_open=True), default=5e-4, show_default=True)
@click.option('--sigma', type=click.FloatRange(min=0.0, min_open=True), default=3e-2, show_default=True)
@click.option('--constraint-sense', type=click.Choice(['le', 'eq']), default='le', show_default=True)
@click.option('--cap', type=click.IntRange(min=1), default=None, help='Point cap for the certificate program')
@click.option('--attacks', default='fgsm,pgd,label_flip', show_default=True, help='Comma-separated attack names')
@simulation_options
@common_options
@click.pass_context
@guarded
def certify_class_cmd(ctx, data, n_points, dim, margin, epsilon, eta, sigma, constraint_sense, cap, attacks,
                      horizon, burn_in, n_seeds, seed, out, threads):
    """
    Certify the online hinge-loss classifier under poisoning.

    Examples:
        poisoncert certify class --data blobs --epsilon 0.01 --eta 5e-4 --sigma 3e-2
    """
    settings = get_run_settings(ctx)
    get_formatter().header("Classification certificate", f"data={data}  ε={epsilon:g}  η={eta:g}  σ={sigma:g}")

    started = time.perf_counter()
    points = load_points(data, n_points, dim, margin, seed)
    inst = class_instance(points, epsilon, eta, sigma, cap or settings.experiment.class_point_cap, seed)
    result = certify_class(inst, solver=settings.solver, search=settings.search, sense=constraint_sense)
    attack_records = simulate_attacks(inst, split_list(attacks), settings, horizon, burn_in, n_seeds, seed,
                                      thread_count(threads, settings))
    record = certificate_record(result, inst, attack_records, time.perf_counter() - started,
                                winner=result.metadata['winner'], opt1=result.metadata['opt1'],
                                opt2=result.metadata['opt2'], sense=constraint_sense)
    finish_run(ctx, 'certify class', [record], out, seed)
