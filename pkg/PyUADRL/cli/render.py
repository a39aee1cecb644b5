'''
@date:    19/10/2026
@brief:   Text rendering of grid uncertainty maps.

Every band cell prints as "EE/AA", the normalised epistemic and
aleatoric values times 99 as two digits; the goal prints as G and cliff
cells as X. One line per grid row, top row first. Cliff cells below the
band get a last line of their own, blank where the row has no cliff.
'''

import numpy as np

from PyUADRL.envs.gridworlds import grid_index
from PyUADRL.uncertainty.maps import minmax


class ShapeMismatch(ValueError):
    '''Raise if an uncertainty map does not fit the grid it is rendered
    on.'''
    def __init__(self, message):
        super(ShapeMismatch, self).__init__(message)
        self.message = message


CELL_WIDTH = 5


def _two_digits(value):
    return '{:02d}'.format(int(round(float(np.clip(value, 0., 1.)) * 99)))


def render_ascii(umap, grid, aleatoric=None):
    '''Render umap on the GridSpec grid. Uses the normalised components
    of umap (min-max normalising the raw ones if umap is not
    normalised); aleatoric overrides the aleatoric column, e.g. with
    reference-scaled values.'''
    if umap.n_states != grid.n_states:
        raise ShapeMismatch('map of {:d} states does not fit a {:d}x{:d} '
                            'grid of {:d} states'.format(
                                umap.n_states, grid.height, grid.width,
                                grid.n_states))
    epistemic = (umap.epistemic_norm if umap.epistemic_norm is not None
                 else minmax(umap.epistemic_raw))
    if aleatoric is None:
        aleatoric = (umap.aleatoric_norm if umap.aleatoric_norm is not None
                     else minmax(umap.aleatoric_raw))
    cliffs = set(grid.cliff_cells)
    n_rows = grid.height + (1 if grid.outer_cliff_cells() else 0)
    lines = []
    for row in range(1, n_rows + 1):
        cells = []
        for col in range(1, grid.width + 1):
            cell = (row, col)
            if cell == grid.goal:
                text = 'G'
            elif cell in cliffs:
                text = 'X'
            elif not grid.in_band(cell):
                text = ''
            else:
                state = grid_index(grid, cell)
                text = _two_digits(epistemic[state]) + '/' + \
                    _two_digits(aleatoric[state])
            cells.append(text.ljust(CELL_WIDTH))
        lines.append(' '.join(cells).rstrip())
    return '\n'.join(lines)
