'''
@date:    19/10/2026
@brief:   Seeded random streams.

One root seed per experiment. Every component draws from its own
numpy Generator derived from (root seed, component id, index) so that
the order in which components consume randomness, or running them in
parallel, never changes results.
'''

import numpy as np


# component ids, part of the spawn key: never renumber
ANCHORS = 0
MEMBER_BATCHES = 1
ENVIRONMENT = 2
EXPLORATION = 3
REPLAY = 4
ROLLOUT = 5
DATASET = 6
MDP_STRUCTURE = 7
BEHAVIOR_POLICY = 8
REFERENCE = 9


def make_rng(seed, component, index=0):
    '''Return the numpy Generator of the given component and index for
    the root seed. Identical arguments always give identical streams.
    '''
    if seed is None:
        raise ValueError('make_rng: a root seed is mandatory.')
    sequence = np.random.SeedSequence(int(seed),
                                      spawn_key=(int(component), int(index)))
    return np.random.Generator(np.random.PCG64(sequence))


def child_seed(seed, component, index=0):
    '''Return a derived integer seed, e.g. to hand a nested experiment
    (the random walker reference run) its own root seed.
    '''
    sequence = np.random.SeedSequence(int(seed),
                                      spawn_key=(int(component), int(index)))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
