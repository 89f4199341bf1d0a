"""Dense least-squares and truncated SVD kernels."""
import numpy as np

__all__ = ["least_squares_solve", "solve_normal_equations", "truncated_svd"]

RCOND = 1e-12


def solve_normal_equations(gram, rhs):
    """Solve ``result @ gram = rhs`` for symmetric PSD `gram`.

    Falls back to a pseudoinverse when `gram` is numerically rank deficient
    at relative tolerance 1e-12.
    """
    gram = np.asarray(gram, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    w, q = np.linalg.eigh(gram)
    top = w[-1] if w.size else 0.0
    if top > 0 and w[0] > RCOND * top:
        return np.linalg.solve(gram, rhs.T).T
    keep = w > RCOND * top if top > 0 else np.zeros_like(w, dtype=bool)
    inv = (q[:, keep] / w[keep]) @ q[:, keep].T
    return rhs @ inv


def least_squares_solve(coefficient, rhs):
    """Minimize ``||rhs - result @ coefficient.T||_F`` over `result`.

    Parameters
    ----------
    coefficient : ndarray of shape (n, R)
    rhs : ndarray of shape (m, n)

    Returns
    -------
    ndarray of shape (m, R)
    """
    coefficient = np.atleast_2d(np.asarray(coefficient, dtype=float))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=float))
    if rhs.shape[1] != coefficient.shape[0]:
        raise ValueError(
            f"rhs has {rhs.shape[1]} columns but coefficient has {coefficient.shape[0]} rows"
        )
    return solve_normal_equations(coefficient.T @ coefficient, rhs @ coefficient)


def truncated_svd(y, k):
    """Leading `k` singular triplets of `y`.

    Returns
    -------
    u : ndarray of shape (rows, k)
    s : ndarray of shape (k,), descending
    v : ndarray of shape (cols, k)
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError("truncated_svd expects a matrix")
    if not 1 <= k <= min(y.shape):
        raise ValueError(f"k={k} out of range for a {y.shape[0]}x{y.shape[1]} matrix")
    u, s, vt = np.linalg.svd(y, full_matrices=False)
    return u[:, :k], s[:k], vt[:k].T
