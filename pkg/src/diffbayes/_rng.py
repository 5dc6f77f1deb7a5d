"""Counter-based random substreams.

One master seed expands into independent substreams keyed by (purpose,
index) through the Philox counter, so changing the network size or the
number of steps never reshuffles draws belonging to other substreams.
"""

from __future__ import annotations

import numpy as np

PURPOSE_REGRESSOR = 0
PURPOSE_NOISE = 1
PURPOSE_TOPOLOGY = 2


def substream(seed: int, purpose: int, index: int) -> np.random.Generator:
    """Return the generator for one (seed, purpose, index) substream."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, index, purpose]))
