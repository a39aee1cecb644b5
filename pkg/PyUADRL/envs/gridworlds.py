'''
@date:    19/10/2026
@brief:   Grid worlds: the open (deterministic) grid and the windy
          cliff grid.

Cells are addressed by 1-indexed (row, col) tuples, row 1 at the top.
The traversable band of height x width cells is numbered row-major,
state = (row - 1) * width + (col - 1). Cliff cells lying outside the
band (the row just below it) are appended after the band states in
sorted order.

Actions: 0 up, 1 down, 2 left, 3 right. Moves against the border leave
the agent where it is.
'''

from dataclasses import asdict, dataclass

import numpy as np

from PyUADRL.mdp.mdp_core import IndexOutOfRange, TabularMdp
from PyUADRL.mdp.replay import starve


UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
ACTION_NAMES = ('up', 'down', 'left', 'right')
_MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}


class SpecInvalid(ValueError):
    '''Raise if an environment spec violates its invariants.'''
    def __init__(self, message):
        super(SpecInvalid, self).__init__(message)
        self.message = message


def _cells(cells):
    return tuple(sorted(tuple(int(x) for x in cell) for cell in cells))


@dataclass
class GridSpec:
    width: int = 7
    height: int = 7
    start: tuple = (1, 1)
    goal: tuple = (7, 7)
    cliff_cells: tuple = ()
    wind_prob: float = 0.
    # None: every band cell with a cliff cell directly below
    wind_cells: tuple = None
    step_reward: float = 0.
    goal_reward: float = 1.
    cliff_reward: float = -1.
    gamma: float = 0.99

    def __post_init__(self):
        self.start = tuple(int(x) for x in self.start)
        self.goal = tuple(int(x) for x in self.goal)
        self.cliff_cells = _cells(self.cliff_cells)
        if self.wind_cells is not None:
            self.wind_cells = _cells(self.wind_cells)

    @classmethod
    def open_7x7(cls):
        '''Deterministic 7x7 grid, start top left, goal bottom right.'''
        return cls()

    @classmethod
    def cliff_2x6(cls):
        '''2x6 band above a cliff. Start bottom left, goal bottom right,
        the four cells between them are exposed to 20% wind.'''
        return cls(width=6, height=2, start=(2, 1), goal=(2, 6),
                   cliff_cells=((3, 2), (3, 3), (3, 4), (3, 5)),
                   wind_prob=0.2)

    def in_band(self, cell):
        row, col = cell
        return 1 <= row <= self.height and 1 <= col <= self.width

    def effective_wind_cells(self):
        if self.wind_cells is not None:
            return self.wind_cells
        cliffs = set(self.cliff_cells)
        return tuple(cell for cell in self.band_cells()
                     if (cell[0] + 1, cell[1]) in cliffs)

    def band_cells(self):
        return [(row, col) for row in range(1, self.height + 1)
                for col in range(1, self.width + 1)]

    def outer_cliff_cells(self):
        return [cell for cell in self.cliff_cells if not self.in_band(cell)]

    @property
    def n_states(self):
        return self.width * self.height + len(self.outer_cliff_cells())

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise SpecInvalid('grid needs at least one cell')
        for name in ('start', 'goal'):
            if not self.in_band(getattr(self, name)):
                raise SpecInvalid('{:s} {} outside the {:d}x{:d} grid'.format(
                    name, getattr(self, name), self.height, self.width))
        if self.start == self.goal:
            raise SpecInvalid('start and goal coincide')
        if self.start in self.cliff_cells or self.goal in self.cliff_cells:
            raise SpecInvalid('start and goal must not be cliff cells')
        for cell in self.outer_cliff_cells():
            if not (cell[0] == self.height + 1 and
                    1 <= cell[1] <= self.width):
                raise SpecInvalid('cliff cell {} neither in the grid nor in '
                                  'the row below it'.format(cell))
        if not 0. <= self.wind_prob <= 1.:
            raise SpecInvalid('wind_prob {} not in [0, 1]'.format(
                self.wind_prob))
        cliffs = set(self.cliff_cells)
        for cell in self.effective_wind_cells():
            if not self.in_band(cell) or cell in cliffs:
                raise SpecInvalid('wind cell {} must be a band cell off the '
                                  'cliff'.format(cell))
            if (cell[0] + 1, cell[1]) not in cliffs:
                raise SpecInvalid('wind cell {} has no cliff cell below '
                                  'it'.format(cell))
        if not 0. <= self.gamma < 1.:
            raise SpecInvalid('gamma {} not in [0, 1)'.format(self.gamma))
        return self

    def to_dict(self):
        document = asdict(self)
        for key in ('start', 'goal'):
            document[key] = list(document[key])
        document['cliff_cells'] = [list(c) for c in self.cliff_cells]
        document['wind_cells'] = (None if self.wind_cells is None else
                                  [list(c) for c in self.wind_cells])
        return document

    @classmethod
    def from_dict(cls, document):
        known = set(cls.__dataclass_fields__)
        unknown = set(document) - known
        if unknown:
            raise SpecInvalid('unknown grid spec keys {}'.format(
                sorted(unknown)))
        return cls(**document)


def grid_index(spec, cell):
    '''State index of a (row, col) cell.'''
    cell = tuple(int(x) for x in cell)
    if spec.in_band(cell):
        return (cell[0] - 1) * spec.width + (cell[1] - 1)
    outer = spec.outer_cliff_cells()
    if cell in outer:
        return spec.width * spec.height + outer.index(cell)
    raise IndexOutOfRange('cell {} is not part of the grid'.format(cell))


def grid_cell(spec, state):
    '''(row, col) cell of a state index.'''
    state = int(state)
    n_band = spec.width * spec.height
    if 0 <= state < n_band:
        return (state // spec.width + 1, state % spec.width + 1)
    outer = spec.outer_cliff_cells()
    if n_band <= state < n_band + len(outer):
        return outer[state - n_band]
    raise IndexOutOfRange('state {} is not part of the grid'.format(state))


def _target_cell(spec, cell, action, cliffs):
    '''Cell reached by a move, clamped to the band unless the move
    drops into a cliff cell below it.'''
    d_row, d_col = _MOVES[action]
    target = (cell[0] + d_row, cell[1] + d_col)
    if spec.in_band(target) or target in cliffs:
        return target
    return cell


def _build_grid(spec, name):
    cliffs = set(spec.cliff_cells)
    wind = set(spec.effective_wind_cells())
    goal = grid_index(spec, spec.goal)
    terminals = {goal} | {grid_index(spec, c) for c in spec.cliff_cells}

    def reward_of(cell):
        if cell == spec.goal:
            return spec.goal_reward
        if cell in cliffs:
            return spec.cliff_reward
        return spec.step_reward

    entries = []
    coords = [grid_cell(spec, s) for s in range(spec.n_states)]
    for state, cell in enumerate(coords):
        for action in range(4):
            if state in terminals:
                entries.append((state, action, state, 1., 0.))
                continue
            target = _target_cell(spec, cell, action, cliffs)
            p_move = 1.
            # the move resolves first, the wind then acts on the landing cell
            if (target in wind and target != spec.goal and
                    spec.wind_prob > 0.):
                below = (target[0] + 1, target[1])
                entries.append((state, action, grid_index(spec, below),
                                spec.wind_prob, reward_of(below)))
                p_move = 1. - spec.wind_prob
            if p_move > 0.:
                entries.append((state, action, grid_index(spec, target),
                                p_move, reward_of(target)))
    return TabularMdp(spec.n_states, 4, entries, spec.gamma,
                      initial_state=grid_index(spec, spec.start),
                      terminals=terminals, coords=coords, name=name)


def along_edge_policy(spec):
    '''Per-state action array that walks along the row towards the goal
    column, then along the goal column to the goal. Started on the
    cliff grid it follows the cliff edge. Terminal states get action 0.
    '''
    actions = np.zeros(spec.n_states, dtype=np.int64)
    goal_row, goal_col = spec.goal
    for state in range(spec.width * spec.height):
        row, col = grid_cell(spec, state)
        if col != goal_col:
            actions[state] = RIGHT if col < goal_col else LEFT
        elif row != goal_row:
            actions[state] = DOWN if row < goal_row else UP
    cliffs = set(spec.cliff_cells)
    for state in range(spec.width * spec.height):
        if grid_cell(spec, state) in cliffs:
            actions[state] = 0
    return actions


def build_open_grid(spec):
    '''Deterministic grid: boundary clamp, the goal is terminal and
    entered with goal_reward, every other move yields step_reward.'''
    spec.validate()
    if spec.cliff_cells or spec.wind_prob > 0. or spec.wind_cells:
        raise SpecInvalid('build_open_grid: the open grid has neither '
                          'cliffs nor wind')
    return _build_grid(spec, 'open grid {:d}x{:d}'.format(spec.height,
                                                          spec.width))


def build_cliff_grid(spec):
    '''Grid with absorbing cliff cells entered with cliff_reward. The
    chosen move resolves first; if it ends in a wind cell, the wind
    pushes the agent into the cliff cell below with probability
    wind_prob, whatever the action was. Walking along d wind cells thus
    survives with probability (1 - wind_prob)**d.
    '''
    spec.validate()
    if not spec.cliff_cells:
        raise SpecInvalid('build_cliff_grid: no cliff cells given')
    return _build_grid(spec, 'cliff grid {:d}x{:d}'.format(spec.height,
                                                           spec.width))


__all__ = ['GridSpec', 'SpecInvalid', 'build_open_grid', 'build_cliff_grid',
           'along_edge_policy', 'grid_index', 'grid_cell', 'starve', 'UP',
           'DOWN', 'LEFT', 'RIGHT', 'ACTION_NAMES']
