"""Dense phase-1 simplex feasibility solver with Farkas certificates.

The solver decides whether ``{x : A x = b, lower <= x <= upper}`` is empty.
It returns either a feasible point or a dual vector ``y`` with

    y.b - sum_j sup_{lower_j <= x_j <= upper_j} (A^T y)_j x_j  >  0,

which proves that no feasible point exists.  The same code path runs on
``float64`` arrays and on ``object`` arrays of :class:`~fractions.Fraction`;
in exact mode every comparison is against literal zero and the certificate
is a proof.

Bland's rule is used for both entering and leaving variables, so the method
cannot cycle.  Problems here are tiny (a few hundred columns, a few dozen
rows), so a dense tableau is fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import IllFormedProblem, Unsolved

EPS_LP = 1e-9
DELTA_SEP = 1e-9
MAX_ITER = 10**6
_PIVOT_TOL = 1e-11
_HARRIS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FeasibilityProblem:
    A: np.ndarray
    b: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.asarray(self.A)
        b = np.asarray(self.b)
        if A.ndim != 2:
            raise IllFormedProblem("constraint matrix must be 2-D")
        m, n = A.shape
        if b.shape != (m,):
            raise IllFormedProblem(f"rhs has shape {b.shape}, expected ({m},)")
        lower = np.zeros(n, dtype=object) if self.lower is None else np.asarray(self.lower, dtype=object)
        upper = np.full(n, math.inf, dtype=object) if self.upper is None else np.asarray(self.upper, dtype=object)
        if lower.shape != (n,) or upper.shape != (n,):
            raise IllFormedProblem("bounds must have one entry per variable")
        for lo, up in zip(lower, upper):
            if lo > up:
                raise IllFormedProblem(f"lower bound {lo} exceeds upper bound {up}")
            if lo == math.inf or up == -math.inf:
                raise IllFormedProblem("a variable cannot be pinned at infinity")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(frozen=True, eq=False)
class Certificate:
    """Outcome of a feasibility solve.

    ``point`` is set when feasible; ``dual`` (one entry per equality row,
    scaled to unit max-norm) when infeasible.  ``margin`` is the verified
    separation ``y.b - sup y.A x`` for infeasible results and the negated
    worst residual for feasible ones.
    """

    feasible: bool
    mode: str
    point: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    margin: float = 0.0
    iterations: int = 0
    note: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    def to_dict(self) -> dict:
        d = {"status": self.status, "mode": self.mode, "margin": _jsonable(self.margin),
             "iterations": self.iterations}
        if self.point is not None:
            d["point"] = [_jsonable(v) for v in self.point]
        if self.dual is not None:
            d["dual"] = [_jsonable(v) for v in self.dual]
        if self.note:
            d["note"] = self.note
        d.update({k: v for k, v in self.meta.items()})
        return d


def _jsonable(v):
    if isinstance(v, Fraction):
        return {"num": v.numerator, "den": v.denominator, "float": float(v)}
    if isinstance(v, (float, np.floating)) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _to_exact(arr) -> np.ndarray:
    out = np.empty(np.shape(arr), dtype=object)
    flat_in = np.asarray(arr, dtype=object).ravel()
    flat_out = out.ravel()
    for i, v in enumerate(flat_in):
        if isinstance(v, Fraction):
            flat_out[i] = v
        elif isinstance(v, (float, np.floating)) and math.isinf(v):
            flat_out[i] = math.inf if v > 0 else -math.inf
        else:
            flat_out[i] = Fraction(v) if not isinstance(v, (int, np.integer)) else Fraction(int(v))
    return out


def _to_float(arr) -> np.ndarray:
    return np.array([float(v) for v in np.asarray(arr, dtype=object).ravel()]).reshape(np.shape(arr))


def _standard_form(p: FeasibilityProblem, exact: bool):
    """Rewrite bounds so every variable is >= 0.

    Returns (A_std, b_std, recover) where ``recover(xs)`` maps a standard-form
    point back to the original variables.  The first ``m`` standard rows are
    the original equality rows, so a Farkas vector restricted to them is a
    certificate for the original problem.
    """
    conv = _to_exact if exact else _to_float
    A = conv(p.A)
    b = conv(p.b)
    m, n = A.shape
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    cols = []           # standard-form columns
    recover_terms = []  # (orig var, std col, sign)
    shifts = np.array([zero] * n, dtype=object if exact else float)
    box_rows = []       # (std col, width)
    for j in range(n):
        lo, up = p.lower[j], p.upper[j]
        lo_inf, up_inf = lo == -math.inf, up == math.inf
        if not lo_inf:
            shifts[j] = Fraction(lo) if exact else float(lo)
            cols.append(A[:, j])
            recover_terms.append((j, len(cols) - 1, 1))
            if not up_inf:
                width = (Fraction(up) - Fraction(lo)) if exact else float(up) - float(lo)
                box_rows.append((len(cols) - 1, width))
        elif not up_inf:
            shifts[j] = Fraction(up) if exact else float(up)
            cols.append(-A[:, j])
            recover_terms.append((j, len(cols) - 1, -1))
        else:
            cols.append(A[:, j])
            recover_terms.append((j, len(cols) - 1, 1))
            cols.append(-A[:, j])
            recover_terms.append((j, len(cols) - 1, -1))
    n_struct = len(cols)
    n_slack = len(box_rows)
    dtype = object if exact else float
    A_std = np.empty((m + n_slack, n_struct + n_slack), dtype=dtype)
    A_std[...] = zero
    if n_struct:
        A_std[:m, :n_struct] = np.stack(cols, axis=1)
    b_std = np.empty(m + n_slack, dtype=dtype)
    b_std[:m] = b - A.dot(shifts) if n else b
    for r, (c, width) in enumerate(box_rows):
        A_std[m + r, c] = one
        A_std[m + r, n_struct + r] = one
        b_std[m + r] = width

    def recover(xs):
        x = shifts.copy()
        for j, c, sign in recover_terms:
            x[j] = x[j] + sign * xs[c]
        return x

    return A_std, b_std, recover


def _phase_one(A: np.ndarray, b: np.ndarray, exact: bool, max_iter: int):
    """Minimize the sum of artificials.

    Returns ``(candidates, iterations)``; each candidate is
    ``(objective, x_std, artificials, y)``.  Float mode yields the basis
    refresh first and the raw tableau values second.
    """
    m, n = A.shape
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    tol = 0 if exact else _PIVOT_TOL
    sign = np.array([one if v >= 0 else -one for v in b], dtype=object if exact else float)
    A = A * sign[:, None]
    b = b * sign
    dtype = object if exact else float
    T = np.empty((m + 1, n + m + 1), dtype=dtype)
    T[...] = zero
    T[:m, :n] = A
    for i in range(m):
        T[i, n + i] = one
    T[:m, -1] = b
    # objective row: reduced costs of phase-1 cost (1 on artificials) w.r.t. the artificial basis
    T[m, :n] = -A.sum(axis=0) if m else zero
    T[m, -1] = -b.sum() if m else zero
    basis = list(range(n, n + m))
    it = 0
    while True:
        red = T[m, :-1]
        entering = -1
        for j in range(n + m):
            if red[j] < -tol:
                entering = j
                break
        if entering < 0:
            break
        it += 1
        if it > max_iter:
            raise Unsolved(f"simplex iteration cap {max_iter} reached")
        col = T[:m, entering]
        leaving = _leaving_row(col, T[:m, -1], basis, tol, exact)
        if leaving < 0:
            raise Unsolved("phase-1 objective unbounded below; tableau corrupted")
        piv = T[leaving, entering]
        T[leaving, :] = T[leaving, :] / piv
        prow = T[leaving, :]
        for i in range(m + 1):
            if i != leaving:
                f = T[i, entering]
                if f != 0:
                    T[i, :] = T[i, :] - f * prow
        if not exact:
            T[leaving, entering] = 1.0
        basis[leaving] = entering
    objective = -T[m, -1]
    x = np.empty(n + m, dtype=dtype)
    x[...] = zero
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    # Dual of the sign-flipped system: y_k = c_art_k - reduced cost of artificial k.
    y_flipped = np.array([one - T[m, n + k] for k in range(m)], dtype=dtype)
    candidates = [(objective, x[:n], x[n:], y_flipped * sign)]
    if not exact:
        refreshed = _refresh_from_basis(A, b, basis)
        if refreshed is not None:
            xr, yr, obj_r = refreshed
            candidates.insert(0, (obj_r, xr[:n], xr[n:], yr * sign))
    return candidates, it


def _leaving_row(col, rhs, basis, tol, exact) -> int:
    """Ratio test.  Exact mode: Bland's smallest index among ties.

    Float mode uses a two-pass Harris test: among rows whose ratio is within
    a small tolerance of the minimum, take the largest pivot, which keeps the
    tableau well conditioned.
    """
    rows = [i for i in range(len(col)) if col[i] > tol]
    if not rows:
        return -1
    if exact:
        best = min(rhs[i] / col[i] for i in rows)
        return min((i for i in rows if rhs[i] / col[i] == best), key=lambda i: basis[i])
    cap = min((max(rhs[i], 0.0) + _HARRIS_TOL) / col[i] for i in rows)
    near = [i for i in rows if max(rhs[i], 0.0) / col[i] <= cap]
    return max(near, key=lambda i: (col[i], -basis[i]))


def _refresh_from_basis(A, b, basis):
    """Recompute the basic solution and phase-1 duals from the original data.

    Pivoting accumulates rounding error in the tableau; solving ``B x_B = b``
    and ``B^T y = c_B`` once at the end usually removes it.  None when the
    basis matrix is singular.
    """
    m, n = A.shape
    full = np.hstack([A, np.eye(m)])
    B = full[:, basis]
    cost = np.array([1.0 if j >= n else 0.0 for j in basis])
    try:
        xb = np.linalg.solve(B, b)
        y_new = np.linalg.solve(B.T, cost)
    except np.linalg.LinAlgError:
        return None
    x_new = np.zeros(n + m)
    x_new[basis] = xb
    return x_new, y_new, float(cost @ xb)


def solve_feasibility(p: FeasibilityProblem, mode: str = "float", *,
                      eps_lp: float = EPS_LP, delta_sep: float = DELTA_SEP,
                      max_iter: int = MAX_ITER) -> Certificate:
    """Decide feasibility of ``p``; every returned certificate has passed :func:`verify_certificate`."""
    if mode not in ("float", "exact"):
        raise ValueError(f"mode must be 'float' or 'exact', got {mode!r}")
    exact = mode == "exact"
    m, n = p.shape
    A_std, b_std, recover = _standard_form(p, exact)
    candidates, it = _phase_one(A_std, b_std, exact, max_iter)

    def as_feasible(xs, y):
        x = recover(xs)
        margin = verify_certificate(p, Certificate(True, mode, point=x), eps_lp=eps_lp, delta_sep=delta_sep)
        return Certificate(True, mode, point=x, margin=margin, iterations=it)

    def as_infeasible(xs, y):
        y = y[:m]
        scale = max(abs(v) for v in y) if m else 0
        if scale == 0:
            raise CertificateError("phase-1 produced a zero dual vector")
        yn = y / scale
        margin = verify_certificate(p, Certificate(False, mode, dual=yn), eps_lp=eps_lp, delta_sep=delta_sep)
        return Certificate(False, mode, dual=yn, margin=margin, iterations=it)

    if exact:
        objective, xs, _, y = candidates[0]
        return as_feasible(xs, y) if objective == 0 else as_infeasible(xs, y)
    errors = []
    for objective, xs, _, y in candidates:
        order = (as_feasible, as_infeasible) if objective <= eps_lp else (as_infeasible, as_feasible)
        for attempt in order:
            try:
                return attempt(xs, y)
            except CertificateError as exc:
                errors.append(str(exc))
    raise Unsolved("float solve produced no verifiable certificate: " + "; ".join(errors))


class CertificateError(Exception):
    pass


def verify_certificate(p: FeasibilityProblem, cert: Certificate, *,
                       eps_lp: float = EPS_LP, delta_sep: float = DELTA_SEP):
    """Re-check a certificate from the problem data alone.

    Returns the margin (see :class:`Certificate`) or raises
    :class:`CertificateError`.  In exact mode the checks are literal:
    ``A x == b`` and separation ``> 0``.
    """
    exact = cert.mode == "exact"
    conv = _to_exact if exact else _to_float
    A, b = conv(p.A), conv(p.b)
    if cert.feasible:
        x = conv(cert.point)
        resid = A.dot(x) - b if A.size else np.zeros(0)
        worst = max([abs(r) for r in resid], default=0)
        viol = 0
        for j, v in enumerate(x):
            lo, up = p.lower[j], p.upper[j]
            if lo != -math.inf:
                viol = max(viol, conv([lo])[0] - v)
            if up != math.inf:
                viol = max(viol, v - conv([up])[0])
        if exact:
            if worst != 0 or viol > 0:
                raise CertificateError(f"exact point violates constraints (residual {worst}, bounds {viol})")
        elif worst > eps_lp or viol > eps_lp:
            raise CertificateError(f"point residual {float(worst):.3g}, bound violation {float(viol):.3g}")
        return -max(worst, viol) if not exact else 0
    y = conv(cert.dual)
    c = A.T.dot(y) if A.size else np.zeros(A.shape[1])
    sup = Fraction(0) if exact else 0.0
    for j, cj in enumerate(c):
        lo, up = p.lower[j], p.upper[j]
        if cj > 0:
            if up == math.inf:
                if exact or cj > eps_lp:
                    raise CertificateError(f"dual leaves variable {j} unbounded above (coef {float(cj):.3g})")
                continue
            sup += cj * conv([up])[0]
        elif cj < 0:
            if lo == -math.inf:
                if exact or -cj > eps_lp:
                    raise CertificateError(f"dual leaves variable {j} unbounded below (coef {float(cj):.3g})")
                continue
            sup += cj * conv([lo])[0]
    margin = y.dot(b) - sup
    if exact:
        if not margin > 0:
            raise CertificateError(f"exact separation {margin} is not positive")
    elif margin <= delta_sep:
        raise CertificateError(f"separation {float(margin):.3g} below delta_sep {delta_sep:g}")
    return margin


def convex_hull_problem(points: np.ndarray, target: np.ndarray) -> FeasibilityProblem:
    """``target`` as a convex combination of the rows of ``points``."""
    points = np.asarray(points)
    target = np.asarray(target)
    k = points.shape[0]
    ones = np.ones((1, k), dtype=points.dtype)
    if points.dtype == object:
        ones = np.array([[Fraction(1)] * k], dtype=object)
    A = np.vstack([points.T, ones])
    b = np.concatenate([target, np.array([1], dtype=target.dtype) if target.dtype != object
                        else np.array([Fraction(1)], dtype=object)])
    return FeasibilityProblem(A, b)
