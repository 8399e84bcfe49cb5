import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def visualize(frame, columns, path, title=None):
    """
    draw the given time-series columns against time and save the figure to path
    input -- frame = pandas DataFrame with a 'time' column, columns = names to plot
    """
    columns = [c for c in columns if c in frame.columns]
    fig, ax = plt.subplots()
    for c in columns:
        ax.plot(frame['time'].to_numpy(), np.squeeze(frame[c].to_numpy()), label=c)
    ax.set_xlabel('time')
    if title:
        ax.set_title(title)
    if columns:
        ax.legend()
    fig.savefig(path)
    plt.close(fig)
    return path


def energy_columns(frame):
    """kinetic, strain and total energy columns of every body found in the frame"""
    return [c for c in frame.columns if c.endswith(('_kinetic', '_strain', '_energy'))]


def plot_history(frame, path, scene=None):
    """energies (and observer channels when there are no energies) of a run"""
    columns = energy_columns(frame)
    if not columns:
        columns = [c for c in frame.columns if c != 'time']
    return visualize(frame, columns, path, title=scene)
