"""Named random sub-streams derived from a single master seed.

Each (replication, purpose) pair maps to its own ``SeedSequence`` spawn key, so
streams are independent of one another and of the order in which jobs run.
Runs that differ only in velocity or mobility model therefore share arrivals,
initial positions and fades (common random numbers).
"""

import numpy as np

PURPOSES = ("arrivals", "placement", "headings", "fades", "motion", "service", "kernel", "snapshots")


def stream(seed, purpose, replication=0):
    """Return a generator for one named purpose of one replication.

    Parameters
    ----------
    seed : int
        Master seed.
    purpose : str
        One of ``PURPOSES``.
    replication : int
        Replication index.

    Returns
    -------
    numpy.random.Generator
    """
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose {purpose!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), PURPOSES.index(purpose)))
    return np.random.default_rng(ss)
