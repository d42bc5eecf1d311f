import warnings
from typing import Tuple

import numpy as np
from scipy import linalg

from src.core.config import get_settings
from src.core.errors import SingularSystem


def solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Partial-pivot LU solve. Works for b of shape (n,) or (n, k).
    Raises SingularSystem when a pivot vanishes relative to the matrix scale.
    """
    a = np.asarray(a, dtype=float)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        raise SingularSystem("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            lu, piv = linalg.lu_factor(a, check_finite=True)
        except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
            raise SingularSystem(str(e)) from e
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) <= np.finfo(float).eps * scale * a.shape[0]:
        raise SingularSystem(f"pivot {np.min(pivots):.3e} at matrix scale {scale:.3e}")
    return linalg.lu_solve((lu, piv), np.asarray(b, dtype=float))


def singular_value_ratio(a: np.ndarray) -> float:
    """
    smallest / largest singular value. 0 for the zero matrix and for wide
    matrices, whose null space is never trivial.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[0] < a.shape[1]:
        return 0.0
    s = linalg.svdvals(a)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def is_rank_deficient(a: np.ndarray, rtol: float = None) -> Tuple[bool, float]:
    rtol = get_settings().rank_tol if rtol is None else rtol
    ratio = singular_value_ratio(a)
    return ratio < rtol, ratio


def null_space(a: np.ndarray, rtol: float = None) -> np.ndarray:
    rtol = get_settings().rank_tol if rtol is None else rtol
    return linalg.null_space(np.asarray(a, dtype=float), rcond=rtol)


def projection_residual(basis: np.ndarray, y: np.ndarray) -> float:
    """Relative least-squares residual of y against the columns of basis."""
    coef, *_ = linalg.lstsq(basis, y)
    norm = np.linalg.norm(y)
    return float(np.linalg.norm(basis @ coef - y) / (norm if norm else 1.0))


def equilibrate(a: np.ndarray) -> np.ndarray:
    """Scale rows, then columns, to unit max-abs. Zero rows and columns stay zero."""
    a = np.asarray(a, dtype=float)
    rows = np.max(np.abs(a), axis=1, keepdims=True)
    a = a / np.where(rows == 0.0, 1.0, rows)
    cols = np.max(np.abs(a), axis=0, keepdims=True)
    return a / np.where(cols == 0.0, 1.0, cols)
