import numpy as np

from fchaos.chaos import ChaosElement
from fchaos.kernels import random_kernel


def random_element(kind, grid, rng, max_order=2, mirror=False, scale=1.0):
    """Random chaos element with one part per order up to max_order."""
    parts = {
        n: scale * random_kernel(grid, n, rng, mirror_symmetric=mirror)
        for n in range(1, max_order + 1)
    }
    return ChaosElement(kind, grid, float(scale * rng.standard_normal()), parts)
