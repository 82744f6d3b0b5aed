import math

import numpy as np
import pytest

from boxload import AllocationModel, equiprobable_profile, make_profile

#: ball counts exercised on the tiny-model corpus
TINY_N = (0, 1, 2, 3, 7, 10)


def random_tiny_profiles(count=10, max_boxes=4, seed=0x5EED):
    """Fixed corpus of random profiles with N <= max_boxes."""
    rng = np.random.default_rng(seed)
    profiles = []
    while len(profiles) < count:
        boxes = int(rng.integers(2, max_boxes + 1))
        raw = rng.random(boxes) + 0.05
        total = math.fsum(raw.tolist())
        profiles.append(make_profile([x / total for x in raw.tolist()]))
    return profiles


@pytest.fixture(scope="session")
def tiny_profiles():
    """Equiprobable N in 1..4 plus ten fixed random profiles with N <= 4."""
    named = [(f"equi:{boxes}", equiprobable_profile(boxes)) for boxes in (1, 2, 3, 4)]
    named += [(f"rand:{i}", p) for i, p in enumerate(random_tiny_profiles())]
    return named


@pytest.fixture(scope="session")
def tiny_models(tiny_profiles):
    """The tiny profiles crossed with ball counts up to 10."""
    return [(f"{label},n={n}", AllocationModel(n, profile))
            for label, profile in tiny_profiles for n in TINY_N]
