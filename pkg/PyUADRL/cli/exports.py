'''
@date:    19/10/2026
@brief:   CSV artifacts and file hashes.

Floats are written with repr so that identical values give identical
bytes.
'''

import csv
import hashlib

import numpy as np


MAP_COLUMNS = ['state', 'row', 'col', 'action', 'epistemic_raw',
               'aleatoric_raw', 'epistemic_norm', 'aleatoric_norm']


def sha256_file(filename, chunk_size=1 << 20):
    digest = hashlib.sha256()
    with open(filename, 'rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _float(value):
    return repr(float(value))


def write_map_csv(umap, filename):
    '''One row per state. row and col stay empty for maps without grid
    coordinates; an aleatoric_scaled column is appended when the map
    carries a reference scale.'''
    epistemic_norm = (umap.epistemic_norm if umap.epistemic_norm is not None
                      else umap.epistemic_raw)
    aleatoric_norm = (umap.aleatoric_norm if umap.aleatoric_norm is not None
                      else umap.aleatoric_raw)
    scaled = umap.aleatoric_scaled
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(MAP_COLUMNS +
                        ([] if scaled is None else ['aleatoric_scaled']))
        for state in range(umap.n_states):
            row, col = ('', '') if umap.coords is None else umap.coords[state]
            line = [state, row, col, int(umap.actions[state]),
                    _float(umap.epistemic_raw[state]),
                    _float(umap.aleatoric_raw[state]),
                    _float(epistemic_norm[state]),
                    _float(aleatoric_norm[state])]
            if scaled is not None:
                line.append(_float(scaled[state]))
            writer.writerow(line)


def write_scatter_csv(correlation, terminal, filename):
    '''Visits and epistemic variance of every non-terminal state,
    unvisited states included with 0 visits.'''
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['state', 'visits', 'epistemic'])
        for state in np.nonzero(~np.asarray(terminal))[0]:
            writer.writerow([int(state), int(correlation.visits[state]),
                             _float(correlation.epistemic[state])])


def write_histogram_csv(histograms, filename):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['component', 'bin_left', 'bin_right', 'count'])
        for component in sorted(histograms):
            counts, edges = histograms[component]
            for k, count in enumerate(counts):
                writer.writerow([component, _float(edges[k]),
                                 _float(edges[k + 1]), int(count)])
