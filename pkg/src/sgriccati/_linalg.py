"""Small batched linear-algebra helpers.

Every helper accepts a single matrix or a stack with leading axes.
"""
import numpy as np

PIVOT_RTOL = 1e-12
DEF_RTOL = 1e-10


def tr(a):
    return np.swapaxes(a, -1, -2)


def sym(a):
    return 0.5 * (a + tr(a))


def fro(a):
    """Frobenius norm over the last two axes."""
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))


def checked_solve(a, b, exc, what="matrix"):
    """Solve ``a @ x = b``, raising ``exc`` instead of returning garbage.

    The matrix is declared singular when its smallest singular value falls
    below ``PIVOT_RTOL`` times the largest one.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise exc(f"{what} has non-finite entries")
    s = np.linalg.svd(a, compute_uv=False)
    if np.any(s[..., -1] <= PIVOT_RTOL * s[..., 0]) or np.any(s[..., 0] == 0):
        raise exc(f"{what} is numerically singular")
    return np.linalg.solve(a, b)


def min_eig(a):
    return np.linalg.eigvalsh(sym(a))[..., 0]


def max_eig(a):
    return np.linalg.eigvalsh(sym(a))[..., -1]


def is_pd(a, rtol=DEF_RTOL):
    """``a`` succ 0 with the relative threshold used throughout the package."""
    return bool(np.all(min_eig(a) > rtol * (1.0 + fro(a))))


def is_nd(a, rtol=DEF_RTOL):
    return is_pd(-np.asarray(a), rtol)


def vec(a):
    """Column-stacking vectorization over the last two axes."""
    a = np.asarray(a)
    return tr(a).reshape(a.shape[:-2] + (-1,))


def unvec(v, n):
    v = np.asarray(v)
    return tr(v.reshape(v.shape[:-1] + (n, n)))


def kron(a, b):
    """Batched Kronecker product over the last two axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    lead = out.shape[:-4]
    return out.reshape(lead + (a.shape[-2] * b.shape[-2], a.shape[-1] * b.shape[-1]))
