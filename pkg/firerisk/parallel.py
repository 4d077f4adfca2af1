import logging

import numpy as np
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)


def run_parallel(function, tasks, threads=1):
    """Apply `function` to each argument tuple of `tasks`, keeping order

    Parameters
    ----------
    function: callable
        Module-level function so it can be shipped to worker processes
    tasks: list(tuple)
        Positional arguments, one tuple per call
    threads: int
        Number of workers; 1 or less runs in the calling process

    Returns
    -------
    List of results in task order
    """
    tasks = list(tasks)
    if threads is None or threads <= 1 or len(tasks) <= 1:
        return [function(*args) for args in tasks]
    n_jobs = min(int(threads), len(tasks))
    logger.debug('running %d tasks on %d workers', len(tasks), n_jobs)
    return Parallel(n_jobs=n_jobs)(delayed(function)(*args)
                                   for args in tasks)


def spawn_seeds(seed, n):
    """Derive `n` independent integer seeds from a master seed"""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1, dtype=np.uint32)[0])
            for child in children]


def derive_seed(seed, *path):
    """Seed for the task addressed by `path`, e.g. (iteration, fold)"""
    entropy = [int(seed)] + [int(p) for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(
        1, dtype=np.uint32)[0])


def chunk(sequence, n_chunks):
    """Split `sequence` into at most `n_chunks` contiguous slices"""
    n = len(sequence)
    n_chunks = max(1, min(n_chunks, n))
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    return [sequence[bounds[i]:bounds[i + 1]] for i in range(n_chunks)]
