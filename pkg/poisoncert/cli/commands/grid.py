"""
poisoncert/cli/commands/grid.py
`poisoncert grid`: certificate sweep over ε × η × σ for the hinge-loss learner.
"""

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

from poisoncert.certificates import certify_class
from poisoncert.cli.commands.common import (
    cell_seed,
    certificate_record,
    class_instance,
    common_options,
    finish_run,
    get_run_settings,
    guarded,
    load_points,
    simulate_attacks,
    simulation_options,
    split_list,
    thread_count,
)
from poisoncert.cli.display.rich_formatter import get_formatter

logger = logging.getLogger(__name__)

_MONOTONE_SLACK = 1e-6


def _monotonicity_flags(records) -> int:
    """Adjacent ε pairs (same η, σ) whose certificate decreases."""
    by_pair = {}
    for record in records:
        by_pair.setdefault((record.eta, record.sigma), []).append(record)
    flagged = 0
    for cells in by_pair.values():
        cells.sort(key=lambda rec: rec.epsilon)
        for low, high in zip(cells, cells[1:]):
            if high.certificate_verified < low.certificate_verified - _MONOTONE_SLACK:
                flagged += 1
    return flagged


@click.command()
@click.option('--data', default='blobs', show_default=True, help="'blobs' or a feature CSV path")
@click.option('--n-points', type=click.IntRange(min=2), default=100, show_default=True)
@click.option('--d', 'dim', type=click.IntRange(min=1), default=2, show_default=True)
@click.option('--margin', type=click.FloatRange(min=0.0), default=3.0, show_default=True)
@click.option('--epsilons', default=None, help='Comma-separated ε values (default from settings)')
@click.option('--etas', default=None, help='Comma-separated η values (default from settings)')
@click.option('--sigmas', default=None, help='Comma-separated σ values (default from settings)')
@click.option('--kappa', type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True,
              help='Weight of the certificate in benign + κ·certificate')
@click.option('--constraint-sense', type=click.Choice(['le', 'eq']), default='le', show_default=True)
@click.option('--cap', type=click.IntRange(min=1), default=None)
@click.option('--attacks', default='fgsm,pgd,label_flip', show_default=True)
@simulation_options
@common_options
@click.pass_context
@guarded
def grid(ctx, data, n_points, dim, margin, epsilons, etas, sigmas, kappa, constraint_sense, cap, attacks,
         horizon, burn_in, n_seeds, seed, out, threads):
    """
    Sweep certificates over the (ε, η, σ) lattice and pick (η, σ) per ε.

    Examples:
        poisoncert grid --n-points 100 --T 20000 --seeds 4
        poisoncert grid --epsilons 0.01,0.05 --etas 5e-4 --sigmas 3e-2,6e-2
    """
    settings = get_run_settings(ctx)
    exp = settings.experiment
    eps_list = split_list(epsilons, float) if epsilons else list(exp.epsilons)
    eta_list = split_list(etas, float) if etas else list(exp.etas)
    sigma_list = split_list(sigmas, float) if sigmas else list(exp.sigmas)
    cells = list(itertools.product(eps_list, eta_list, sigma_list))
    workers = thread_count(threads, settings)
    get_formatter().header("Certificate grid", f"{len(eps_list)} ε × {len(eta_list)} η × {len(sigma_list)} σ "
                                               f"= {len(cells)} cells")

    points = load_points(data, n_points, dim, margin, seed)
    attack_names = split_list(attacks)

    def run_cell(index):
        epsilon, eta, sigma = cells[index]
        local_seed = cell_seed(seed, index)
        started = time.perf_counter()
        inst = class_instance(points, epsilon, eta, sigma, cap or exp.class_point_cap, local_seed)
        result = certify_class(inst, solver=settings.solver, search=settings.search, sense=constraint_sense)
        attack_records = simulate_attacks(inst, attack_names, settings, horizon, burn_in, n_seeds, local_seed, 1)
        # benign performance of the same (η, σ) without poisoning
        (benign,) = simulate_attacks(inst.with_epsilon(0.0), ['none'], settings, horizon, burn_in, n_seeds,
                                     local_seed, 1)
        return certificate_record(result, inst, attack_records, time.perf_counter() - started,
                                  cell=index, seed=local_seed, benign=benign.mean,
                                  proxy=benign.mean + kappa * result.verified)

    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), BarColumn(),
                  TaskProgressColumn(), console=get_formatter().console) as progress:
        task = progress.add_task("Certifying cells...", total=len(cells))
        with ThreadPoolExecutor(max_workers=workers or None) as pool:
            futures = [pool.submit(run_cell, index) for index in range(len(cells))]
            records = []
            for future in futures:
                records.append(future.result())
                progress.advance(task)

    selected = {}
    for epsilon in eps_list:
        candidates = [rec for rec in records if rec.epsilon == epsilon]
        best = min(candidates, key=lambda rec: rec.extra['proxy'])
        selected[f"{epsilon:g}"] = {'eta': best.eta, 'sigma': best.sigma, 'proxy': best.extra['proxy']}
    flagged = _monotonicity_flags(records)
    pairs = max(1, len(eta_list) * len(sigma_list) * max(len(eps_list) - 1, 0))
    if flagged:
        logger.warning("%d of %d adjacent epsilon pairs decrease the certificate", flagged, pairs)
    get_formatter().show_lines("Selected (η, σ) per ε", [
        f"ε={eps}: η={choice['eta']:g}, σ={choice['sigma']:g}, benign + κ·certificate = {choice['proxy']:.5g}"
        for eps, choice in selected.items()
    ])
    finish_run(ctx, 'grid', records, out, seed,
               notes={'selected': selected, 'monotonicity_flags': flagged,
                      'monotonicity_rate': float(np.round(flagged / pairs, 6)), 'kappa': kappa})
