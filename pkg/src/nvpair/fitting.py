"""Least-squares fits for ESR doublets and relaxation curves.

Both models are separable: given the nonlinear parameters (centers, widths, or
the decay time) the remaining amplitudes and offsets follow from a linear
solve. The Nelder-Mead simplex therefore only searches the nonlinear
coordinates. Uncertainties come from the Gauss-Newton covariance with a
finite-difference Jacobian over all parameters.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

MAX_ITER = 500
SIMPLEX_XTOL = 1e-10
JAC_REL_STEP = 1e-6
OVERLAP_RATIO = 1.0


class FitError(ValueError):
    """Input data cannot support the requested fit."""


@dataclass
class FitResult:
    model: str
    params: dict
    stderr: dict
    sse: float
    converged: bool
    iterations: int
    unreliable: bool = False
    warnings: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.params[name]


def double_lorentzian(x, b, a1, c1, w1, a2, c2, w2):
    x = np.asarray(x, dtype=float)
    return (b - a1 * w1**2 / (w1**2 + (x - c1) ** 2)
            - a2 * w2**2 / (w2**2 + (x - c2) ** 2))


def exp_decay(t, y0, y_inf, t1):
    return y_inf + (y0 - y_inf) * np.exp(-np.asarray(t, dtype=float) / t1)


def _smooth3(y):
    s = y.copy()
    s[1:-1] = (y[:-2] + y[1:-1] + y[2:]) / 3.0
    return s


def _half_depth_width(x, s, i, base):
    """Half width at half depth around index ``i`` of the smoothed curve."""
    half = base - 0.5 * (base - s[i])
    lo = i
    while lo > 0 and s[lo] < half:
        lo -= 1
    hi = i
    while hi < len(s) - 1 and s[hi] < half:
        hi += 1
    width = 0.5 * (x[hi] - x[lo])
    return width if width > 0 else np.median(np.diff(x))


def initial_guess(x, y):
    """Centers and widths (c1, w1, c2, w2) for the doublet from the data."""
    s = _smooth3(y)
    base = np.median(np.concatenate([s[:3], s[-3:]]))
    interior = np.arange(1, len(s) - 1)
    minima = [i for i in interior if s[i] <= s[i - 1] and s[i] < s[i + 1]]
    # deepest first, leftmost on ties
    minima.sort(key=lambda i: (s[i], x[i]))
    if not minima:
        minima = [int(np.argmin(s))]
    first = minima[0]
    w1 = _half_depth_width(x, s, first, base)
    if len(minima) > 1:
        second = minima[1]
        w2 = _half_depth_width(x, s, second, base)
        return x[first], w1, x[second], w2
    # one resolved minimum: split it symmetrically
    return x[first] - 0.5 * w1, 0.5 * w1, x[first] + 0.5 * w1, 0.5 * w1


def _nonneg_amplitudes(design, y, nonneg):
    """Least squares with the columns in ``nonneg`` constrained to be >= 0."""
    best = None
    for zeroed in itertools.chain.from_iterable(
        itertools.combinations(nonneg, k) for k in range(len(nonneg) + 1)
    ):
        keep = [j for j in range(design.shape[1]) if j not in zeroed]
        coef = np.zeros(design.shape[1])
        if keep:
            coef[keep] = np.linalg.lstsq(design[:, keep], y, rcond=None)[0]
        if np.any(coef[list(nonneg)] < 0):
            continue
        sse = float(np.sum((design @ coef - y) ** 2))
        if best is None or sse < best[1]:
            best = (coef, sse)
    return best


def _covariance_stderr(fun, p, n_points, sse):
    p = np.asarray(p, dtype=float)
    jac = np.empty((n_points, p.size))
    f0 = fun(p)
    for k in range(p.size):
        step = JAC_REL_STEP * max(abs(p[k]), 1e-3)
        dp = np.zeros_like(p)
        dp[k] = step
        jac[:, k] = (fun(p + dp) - f0) / step
    dof = max(n_points - p.size, 1)
    cov = sse / dof * np.linalg.pinv(jac.T @ jac)
    return np.sqrt(np.clip(np.diag(cov), 0, None))


def _nelder_mead(objective, z0, scale=0.5, max_iter=MAX_ITER):
    z0 = np.asarray(z0, dtype=float)
    simplex = np.vstack([z0] + [z0 + scale * e for e in np.eye(z0.size)])
    res = minimize(
        objective, z0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": SIMPLEX_XTOL, "fatol": np.inf,
                 "maxiter": max_iter, "maxfev": 20 * max_iter},
    )
    return res


def _last_step_small(res):
    # relative parameter change across the final simplex
    sim = res.final_simplex[0]
    spread = np.max(np.abs(sim - sim[0]))
    return spread < 1e-8


def fit_double_lorentzian(x, y, shared_width=False, max_iter=MAX_ITER):
    """Fit two Lorentzian dips on a flat baseline.

    Model: ``b - a1 w1^2 / (w1^2 + (x - c1)^2) - a2 w2^2 / (w2^2 + (x - c2)^2)``,
    with a1, a2 >= 0 and w1, w2 > 0 (half widths). On output c1 < c2. The fit is
    flagged ``unreliable`` when the dips sit closer than one line width.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be 1-D series of equal length")
    if x.size < 12:
        raise FitError("double-Lorentzian fit needs at least 12 points")
    order = np.argsort(x)
    x, y = x[order], y[order]

    c1, w1, c2, w2 = initial_guess(x, y)
    cscale = max(w1, w2)
    ones = np.ones_like(x)

    def unpack(z):
        if shared_width:
            zc1, zc2, zw = z
            zw1 = zw2 = zw
        else:
            zc1, zc2, zw1, zw2 = z
        return (c1 + cscale * zc1, w1 * np.exp(zw1), c2 + cscale * zc2, w2 * np.exp(zw2))

    def linear(z):
        cc1, ww1, cc2, ww2 = unpack(z)
        design = np.column_stack([
            ones,
            -ww1**2 / (ww1**2 + (x - cc1) ** 2),
            -ww2**2 / (ww2**2 + (x - cc2) ** 2),
        ])
        return _nonneg_amplitudes(design, y, (1, 2))

    def objective(z):
        return linear(z)[1]

    z0 = np.zeros(3 if shared_width else 4)
    if shared_width:
        w2 = w1
    res = _nelder_mead(objective, z0, max_iter=max_iter)
    cc1, ww1, cc2, ww2 = unpack(res.x)
    (b, a1, a2), sse = linear(res.x)
    if cc1 > cc2:
        a1, cc1, ww1, a2, cc2, ww2 = a2, cc2, ww2, a1, cc1, ww1
    names = ("b", "a1", "c1", "w1", "a2", "c2", "w2")
    values = (b, a1, cc1, ww1, a2, cc2, ww2)
    stderr = _covariance_stderr(lambda p: double_lorentzian(x, *p), values, x.size, sse)

    converged = bool(res.success and _last_step_small(res) and np.isfinite(sse))
    separation = cc2 - cc1
    unreliable = bool(separation < OVERLAP_RATIO * max(ww1, ww2))
    warnings = []
    if unreliable:
        warnings.append("dips overlap: separation below one line width")
    if not converged:
        warnings.append(f"no convergence within {max_iter} iterations")
    return FitResult(
        "double-lorentzian",
        dict(zip(names, map(float, values))),
        dict(zip(names, map(float, stderr))),
        float(sse), converged, int(res.nit), unreliable, warnings,
    )


def polarization_from_amplitudes(dI_minus, dI_plus):
    """(dI[-1/2] - dI[+1/2]) / (dI[-1/2] + dI[+1/2])."""
    if dI_minus < 0 or dI_plus < 0:
        raise ValueError("dip amplitudes must be non-negative")
    total = dI_minus + dI_plus
    if total == 0:
        raise ValueError("polarization undefined: both dip amplitudes are zero")
    return (dI_minus - dI_plus) / total


def doublet_polarization(fit, lower_is_plus):
    """Polarization from a doublet fit, given which line belongs to m_N = +1/2."""
    if lower_is_plus:
        return polarization_from_amplitudes(fit["a2"], fit["a1"])
    return polarization_from_amplitudes(fit["a1"], fit["a2"])


def _initial_t1(t, y):
    falling = y[0] >= y[-1]
    resid = y - y.min() if falling else y.max() - y
    sel = resid > 1e-3 * resid.max()
    if sel.sum() < 2:
        return (t.max() - t.min()) / 3.0
    slope = np.polyfit(t[sel], np.log(resid[sel]), 1)[0]
    if not slope < 0:
        return (t.max() - t.min()) / 3.0
    return -1.0 / slope


def fit_exp_decay(t, y, max_iter=MAX_ITER):
    """Fit ``y_inf + (y0 - y_inf) exp(-t / T1)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("t and y must be 1-D series of equal length")
    if t.size < 6:
        raise FitError("exponential fit needs at least 6 points")
    span = y.max() - y.min()
    if not span > 1e-12 * max(1.0, np.max(np.abs(y))):
        raise FitError("no dynamic range in the data")

    t1_0 = _initial_t1(t, y)

    def linear(z):
        e = np.exp(-t / (t1_0 * np.exp(z[0])))
        design = np.column_stack([e, 1.0 - e])
        coef = np.linalg.lstsq(design, y, rcond=None)[0]
        return coef, float(np.sum((design @ coef - y) ** 2))

    res = _nelder_mead(lambda z: linear(z)[1], [0.0], max_iter=max_iter)
    (y0, y_inf), sse = linear(res.x)
    t1 = float(t1_0 * np.exp(res.x[0]))
    names = ("y0", "y_inf", "t1")
    values = (y0, y_inf, t1)
    stderr = _covariance_stderr(lambda p: exp_decay(t, *p), values, t.size, sse)
    converged = bool(res.success and _last_step_small(res) and np.isfinite(sse) and t1 > 0)
    warnings = [] if converged else [f"no convergence within {max_iter} iterations"]
    return FitResult("exp-decay", dict(zip(names, map(float, values))),
                     dict(zip(names, map(float, stderr))), sse, converged,
                     int(res.nit), False, warnings)
