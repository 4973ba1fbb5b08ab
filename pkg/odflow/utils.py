"""
    Helpers shared by the generator, the solver and the harness:
    seed derivation, random generators and version reporting.
"""
import numpy as np


def seed_sequence(seed, *keys):
    """ SeedSequence for `seed` specialised by integer keys.

    The same (seed, keys) always yields the same stream and distinct keys
    give statistically independent streams.
    """
    if isinstance(seed, np.random.SeedSequence):
        if not keys:
            return seed
        spawn_key = tuple(seed.spawn_key) + tuple(int(k) for k in keys)
        return np.random.SeedSequence(seed.entropy, spawn_key=spawn_key)
    return np.random.SeedSequence(int(seed),
                                  spawn_key=tuple(int(k) for k in keys))


def make_rng(seed, *keys):
    """ PCG64 generator for (seed, keys) """
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def trial_seeds(master_seed, trials):
    """ Per-trial integer seeds derived from a master seed """
    ss = np.random.SeedSequence(int(master_seed))
    return [int(child.generate_state(1, np.uint32)[0])
            for child in ss.spawn(trials)]


def versions():
    """ Versions of the numerical stack, recorded in manifests """
    import networkx
    import scipy
    from ._version import __version__
    return {
        "odflow": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "networkx": networkx.__version__,
        "rng": "PCG64",
    }


def parse_grid(text):
    """ "RxC" -> (rows, cols) """
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise ValueError("grid must read RxC, got %r" % text)
