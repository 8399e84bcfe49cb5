import numpy as np


def lattice(lower, upper, dp):
    '''
    cell-centred regular lattice filling the box [lower, upper]
    :param lower: lower corner, length d
    :param upper: upper corner, length d
    :param dp: particle spacing
    :return: (n, d) array of positions, lower + (k + 1/2) dp along every axis
    '''
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not dp > 0:
        raise ValueError('dp must be positive, got %r' % (dp,))
    counts = np.rint((upper - lower) / dp).astype(int)
    if np.any(counts <= 0):
        return np.zeros((0, len(lower)))
    axes = [lower[a] + (np.arange(counts[a]) + 0.5) * dp for a in range(len(lower))]
    grid = np.meshgrid(*axes, indexing='ij')
    return np.stack([g.ravel() for g in grid], axis=1)


def crop(points, inside):
    '''
    :param points: (n, d) positions
    :param inside: predicate mapping (n, d) positions to a boolean mask
    :return: the points for which the predicate holds
    '''
    return points[inside(points)]


def in_annulus(center, r_inner, r_outer):
    center = np.asarray(center, dtype=float)

    def inside(points):
        r = np.linalg.norm(points[:, :len(center)] - center, axis=1)
        return (r >= r_inner) & (r <= r_outer)
    return inside


def in_disk(center, radius):
    return in_annulus(center, 0.0, radius)


def in_cylinder(axis_point, radius, z_range):
    '''cylinder with vertical axis through axis_point (x, y) spanning z_range'''
    axis_point = np.asarray(axis_point, dtype=float)

    def inside(points):
        r = np.linalg.norm(points[:, :2] - axis_point, axis=1)
        return (r <= radius) & (points[:, 2] >= z_range[0]) & (points[:, 2] <= z_range[1])
    return inside


def ring_lattice(center, r_inner, r_outer, dp):
    '''annulus cut from a lattice aligned with the ring's bounding box'''
    center = np.asarray(center, dtype=float)
    points = lattice(center - r_outer, center + r_outer, dp)
    return crop(points, in_annulus(center, r_inner, r_outer))


def rotate_velocity(points, center, omega):
    '''rigid rotation about center with angular velocity omega (scalar, 2D)'''
    rel = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    return omega * np.stack([-rel[:, 1], rel[:, 0]], axis=1)


def zigzag_rows(points, dp, amplitude, axis=1):
    '''shift alternate lattice rows along `axis` by +/- amplitude dp (rows counted along `axis`)'''
    points = np.array(points, dtype=float)
    row = np.floor((points[:, axis] - points[:, axis].min()) / dp + 0.5).astype(int)
    points[:, axis] += np.where(row % 2 == 0, amplitude * dp, -amplitude * dp)
    return points


def jitter(points, dp, amplitude, seed=0):
    '''uniform random perturbation of +/- amplitude dp per coordinate'''
    rng = np.random.default_rng(seed)
    return points + rng.uniform(-amplitude * dp, amplitude * dp, size=np.shape(points))
