"""Reproducible random streams.

Every random draw in the package comes from a stream keyed by
``(master_seed, trajectory_index, stream_tag)``.  The key is turned into a
:class:`numpy.random.SeedSequence` whose ``spawn_key`` holds the trajectory
index and a CRC32 of the tag; the sequence keys a Philox counter-based bit
generator.  Streams therefore do not depend on worker count, scheduling, or
platform, and the draw pattern inside one stream is the only thing that
matters for replay.
"""

from __future__ import annotations

import zlib

import numpy as np

# Tags used by the circuit generator.  The classical kernels read the same
# streams, so changing a tag or a draw shape breaks replay equivalence.
GATES = "gates"
MEASURE = "measure"
OUTCOMES = "outcomes"
ANGLES = "angles"
HADAMARD = "hadamard"
INIT = "init"
SAMPLES = "samples"

SEED_RULE = (
    "Generator(Philox(SeedSequence(entropy=master_seed, "
    "spawn_key=(trajectory_index, crc32(stream_tag)))))"
)


def tag_code(stream_tag: str) -> int:
    return zlib.crc32(stream_tag.encode("utf-8"))


def seed_for(master_seed: int, trajectory_index: int, stream_tag: str) -> np.random.Generator:
    """Return the random stream for one trajectory and purpose."""
    if master_seed < 0 or trajectory_index < 0:
        raise ValueError("seeds and trajectory indices must be non-negative")
    seq = np.random.SeedSequence(
        entropy=int(master_seed),
        spawn_key=(int(trajectory_index), tag_code(stream_tag)),
    )
    return np.random.Generator(np.random.Philox(seq))
