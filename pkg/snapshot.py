"""
Particle snapshots and time series on disk.

CSV is the canonical format: comment lines starting with '#' carry the run
configuration, then one header line and one row per particle (or sample).
Legacy VTK point clouds are written for viewers.
"""
import logging
import os

import numpy as np
import pandas as pd

from diagnostics import von_mises_strain, von_mises_stress

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'vtk')


def snapshot_columns(dim):
    axes = 'xyz'[:dim]
    return (['id', 'body'] + list(axes) + ['v%s' % a for a in axes]
            + ['rho', 'p', 'vm_stress', 'vm_strain', 'gamma', 'failed'])


def snapshot_frame(system):
    """per-particle output fields in the fixed column order"""
    axes = 'xyz'[:system.dim]
    data = {'id': np.arange(len(system)), 'body': system.body}
    for a, axis in enumerate(axes):
        data[axis] = system.position[:, a]
    for a, axis in enumerate(axes):
        data['v' + axis] = system.velocity[:, a]
    data['rho'] = system.density
    data['p'] = system.pressure
    data['vm_stress'] = np.atleast_1d(von_mises_stress(system.stress)) if len(system) else np.zeros(0)
    data['vm_strain'] = np.atleast_1d(von_mises_strain(system.strain)) if len(system) else np.zeros(0)
    data['gamma'] = system.gamma
    data['failed'] = system.failed.astype(int)
    return pd.DataFrame(data, columns=snapshot_columns(system.dim))


def provenance(header):
    """comment lines for a {key: value} mapping"""
    if not header:
        return ''
    return ''.join('# %s = %s\n' % (key, value) for key, value in header.items())


def _write_csv(frame, path, header):
    with open(path, 'w', newline='') as f:
        f.write(provenance(header))
        frame.to_csv(f, index=False, float_format='%.10g')


def _write_vtk(frame, system, path, header):
    n = len(system)
    pos = np.zeros((n, 3))
    pos[:, :system.dim] = system.position
    vel = np.zeros((n, 3))
    vel[:, :system.dim] = system.velocity
    title = 'snapshot' if not header else ' '.join('%s=%s' % kv for kv in header.items())
    lines = ['# vtk DataFile Version 3.0', title[:255], 'ASCII', 'DATASET POLYDATA',
             'POINTS %d double' % n]
    lines += ['%.10g %.10g %.10g' % tuple(p) for p in pos]
    lines.append('VERTICES %d %d' % (n, 2 * n))
    lines += ['1 %d' % k for k in range(n)]
    lines.append('POINT_DATA %d' % n)
    for name in ('body', 'rho', 'p', 'vm_stress', 'vm_strain', 'gamma', 'failed'):
        kind = 'int' if name in ('body', 'failed') else 'double'
        lines += ['SCALARS %s %s 1' % (name, kind), 'LOOKUP_TABLE default']
        lines += ['%.10g' % v for v in frame[name].to_numpy()]
    lines.append('VECTORS velocity double')
    lines += ['%.10g %.10g %.10g' % tuple(v) for v in vel]
    with open(path, 'w') as f:
        f.write('\n'.join(lines) + '\n')


def write_snapshot(system, path, fmt='csv', header=None):
    """
    write one particle snapshot
    :param fmt: 'csv' or 'vtk'
    :param header: {key: value} provenance written as comments (title line for vtk)
    :return: the path written
    """
    if fmt not in FORMATS:
        raise ValueError('unknown snapshot format %r, choose one of %s' % (fmt, ', '.join(FORMATS)))
    frame = snapshot_frame(system)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    try:
        if fmt == 'csv':
            _write_csv(frame, path, header)
        else:
            _write_vtk(frame, system, path, header)
    except OSError as e:
        raise OSError('could not write snapshot %s: %s' % (path, e)) from e
    logger.debug('snapshot written to %s', path)
    return path


def read_snapshot(path):
    return pd.read_csv(path, comment='#')


def read_header(path):
    """provenance comments of a CSV file as {key: value strings}"""
    header = {}
    with open(path) as f:
        for line in f:
            if not line.startswith('#'):
                break
            key, _, value = line[1:].partition('=')
            header[key.strip()] = value.strip()
    return header


class TimeSeries:
    """rows of sampled scalars, written as one CSV"""

    def __init__(self):
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def append(self, row):
        self.rows.append(dict(row))

    def frame(self):
        frame = pd.DataFrame(self.rows)
        if 'time' in frame.columns:
            frame = frame[['time'] + [c for c in frame.columns if c != 'time']]
        return frame

    def write(self, path, header=None):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        _write_csv(self.frame(), path, header)
        logger.info('time series with %d samples written to %s', len(self.rows), path)
        return path


def read_time_series(path):
    return pd.read_csv(path, comment='#')
