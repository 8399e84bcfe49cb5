import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# smoothing length and support radius in units of the particle spacing
H_FACTOR = 1.3
SUPPORT_FACTOR = 2.0

# moment matrices worse than this are not inverted
MAX_CONDITION = 1e6


@dataclass(frozen=True)
class KernelSpec:
    """
    dp  -- initial particle spacing
    dim -- spatial dimension, 2 or 3
    h and cutoff are derived: h = 1.3 dp, cutoff = 2 h
    """
    dp: float
    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError('dim must be 2 or 3, got %r' % (self.dim,))
        if not self.dp > 0:
            raise ValueError('dp must be positive, got %r' % (self.dp,))

    @property
    def h(self):
        return H_FACTOR * self.dp

    @property
    def cutoff(self):
        return SUPPORT_FACTOR * self.h

    @property
    def alpha(self):
        """normalization of the Wendland C2 kernel on a 2h support"""
        h = self.h
        if self.dim == 2:
            return 7.0 / (4.0 * np.pi * h ** 2)
        return 21.0 / (16.0 * np.pi * h ** 3)


def _as_distance(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError('kernel evaluated at negative distance %r' % (r.min(),))
    return r


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def kernel_value(r, spec):
    """
    quintic Wendland kernel
    input -- r = distance (scalar or array, r >= 0), spec = KernelSpec
    Returns:
    return -- W(r) = alpha (1 - q/2)^4 (2q + 1) for q = r/h <= 2, 0 outside
    """
    r = _as_distance(r)
    q = r / spec.h
    inside = q < 2.0
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    w = spec.alpha * t ** 4 * (2.0 * q + 1.0)
    return _scalar_or_array(np.where(inside, w, 0.0))


def kernel_grad_mag(r, spec):
    """
    radial derivative of the kernel
    input -- r = distance (scalar or array, r >= 0), spec = KernelSpec
    Returns:
    return -- dW/dr = -5 q alpha (1 - q/2)^3 / h, never positive
    """
    r = _as_distance(r)
    q = r / spec.h
    inside = q < 2.0
    t = np.where(inside, 1.0 - 0.5 * q, 0.0)
    dw = -5.0 * q * spec.alpha * t ** 3 / spec.h
    return _scalar_or_array(np.where(inside, dw, 0.0))


def _moment_matrices(table, volumes, mask=None):
    # M_i = sum_j r_ij (x) grad_i W_ij V_j
    weight = table.dWdr * volumes[table.j]
    if mask is not None:
        weight = weight * mask
    terms = np.einsum('pa,pb->pab', table.r, table.e * weight[:, None])
    return table.gather(terms)


def _invert(moments):
    n, dim = moments.shape[0], moments.shape[1]
    B = np.broadcast_to(np.eye(dim), (n, dim, dim)).copy()
    with np.errstate(divide='ignore', invalid='ignore'):
        cond = np.linalg.cond(moments) if n else np.zeros(0)
    ok = np.isfinite(cond) & (cond <= MAX_CONDITION)
    if ok.any():
        # transpose so that sum_j r_ij (x) (B_i grad W_ij) V_j = -I holds exactly
        B[ok] = -np.linalg.inv(np.transpose(moments[ok], (0, 2, 1)))
    return B, int(n - ok.sum())


def correction_matrices(table, volumes, mask=None):
    """
    kernel-gradient correction matrix for every particle
    :param table: NeighborTable at the current configuration
    :param volumes: particle volumes, shape (n,)
    :param mask: optional per-pair weights (0/1) selecting the pairs that take part
    :return: (B of shape (n, d, d), number of particles that fell back to the identity)
    """
    B, uncorrected = _invert(_moment_matrices(table, volumes, mask))
    if uncorrected:
        logger.debug('%d particles left uncorrected (ill-conditioned or empty support)', uncorrected)
    return B, uncorrected


def correction_matrix(i, table, volumes, mask=None):
    """
    correction matrix of a single particle i, identity when its moment matrix
    is empty or ill-conditioned
    """
    start, end = table.offsets[i], table.offsets[i + 1]
    weight = table.dWdr[start:end] * volumes[table.j[start:end]]
    if mask is not None:
        weight = weight * mask[start:end]
    moment = np.einsum('pa,pb->ab', table.r[start:end], table.e[start:end] * weight[:, None])
    B, _ = _invert(moment[None])
    return B[0]
