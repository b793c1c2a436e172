"""Distances between laws, path distances, rate regression, and
distributional tests."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import linprog


def dbl_distance(p, q, ground_metric) -> float:
    """Bounded-Lipschitz distance between two laws on a common finite
    support: the exact optimum of
        max sum_x f(x) (p(x) - q(x))
        s.t. |f(x)| <= 1,  |f(x) - f(y)| <= d(x, y).
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    d = np.asarray(ground_metric, dtype=np.float64)
    m = p.size
    if q.size != m or d.shape != (m, m):
        raise ValueError("mismatched support sizes")
    if np.any(np.abs(d - d.T) > 1e-12) or np.any(np.abs(np.diag(d)) > 1e-12):
        raise ValueError("ground metric must be symmetric with zero diagonal")
    if np.any(d < 0):
        raise ValueError("ground metric must be nonnegative")
    viol = d[:, :, None] + d[None, :, :] - d[:, None, :]
    if viol.min() < -1e-9:
        raise ValueError("ground metric violates the triangle inequality")

    c = q - p  # linprog minimizes; max <f, p-q> = -min <f, q-p>
    rows = []
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            row = np.zeros(m)
            row[i] = 1.0
            row[j] = -1.0
            rows.append((row, d[i, j]))
    A_ub = np.array([r[0] for r in rows])
    b_ub = np.array([r[1] for r in rows])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(-1.0, 1.0)] * m,
                  method="highs")
    if not res.success:
        raise ArithmeticError(f"bounded-Lipschitz LP failed: {res.message}")
    return float(min(2.0, max(0.0, -res.fun)))


def sup_path_distance(a, b) -> float:
    """sup_t |a(t) - b(t)| for right-continuous piecewise-constant paths
    given as (times, values) with times[0] equal for both; exact on the
    merged jump partition."""
    ta, va = np.asarray(a[0], dtype=np.float64), np.asarray(a[1], dtype=np.float64)
    tb, vb = np.asarray(b[0], dtype=np.float64), np.asarray(b[1], dtype=np.float64)
    if ta[0] != tb[0]:
        raise ValueError("paths must start at the same time")
    grid = np.union1d(ta, tb)
    ia = np.searchsorted(ta, grid, side="right") - 1
    ib = np.searchsorted(tb, grid, side="right") - 1
    return float(np.abs(va[ia] - vb[ib]).max())


@dataclass
class RateFit:
    xs: np.ndarray
    errors: np.ndarray
    ses: np.ndarray
    slope: float
    slope_ci: tuple
    intercept: float

    def to_json_dict(self) -> dict:
        return {
            "xs": self.xs.tolist(),
            "errors": self.errors.tolist(),
            "ses": self.ses.tolist(),
            "slope": self.slope,
            "ci_low": self.slope_ci[0],
            "ci_high": self.slope_ci[1],
            "intercept": self.intercept,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "error", "se"])
            for k in range(self.xs.size):
                w.writerow([repr(float(self.xs[k])), repr(float(self.errors[k])),
                            repr(float(self.ses[k]))])


def fit_rate(xs, errors, ses=None) -> RateFit:
    """OLS of log(error) on log(x); slope with a 95% t-interval."""
    xs = np.asarray(xs, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if ses is None:
        ses = np.zeros_like(errors)
    ses = np.asarray(ses, dtype=np.float64)
    if xs.size < 4:
        raise ValueError("need at least 4 sweep points for a rate fit")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive for a log-log fit")
    if np.unique(xs).size != xs.size:
        raise ValueError("sweep points must be distinct")
    lx = np.log(xs)
    ly = np.log(errors)
    n = xs.size
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        se_slope = np.sqrt(s2 / sxx)
        tq = stats.t.ppf(0.975, n - 2)
        ci = (slope - tq * se_slope, slope + tq * se_slope)
    else:
        ci = (-np.inf, np.inf)
    return RateFit(xs, errors, ses, slope, ci, intercept)


def ks_normal_test(samples, mean: float, sd: float):
    """One-sample Kolmogorov-Smirnov statistic against Normal(mean, sd^2)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 50:
        raise ValueError("need at least 50 samples")
    if sd <= 0:
        raise ValueError("sd must be positive")
    res = stats.kstest(samples, "norm", args=(mean, sd))
    return float(res.statistic), float(res.pvalue)


def excess_kurtosis(samples):
    """Sample excess kurtosis with a jackknife standard error."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < 100:
        raise ValueError("need at least 100 samples")
    est = float(stats.kurtosis(samples, fisher=True, bias=True))
    s1 = samples.sum()
    s2 = (samples**2).sum()
    s3 = (samples**3).sum()
    s4 = (samples**4).sum()
    nm1 = n - 1
    m1 = (s1 - samples) / nm1
    p2 = (s2 - samples**2) / nm1
    p3 = (s3 - samples**3) / nm1
    p4 = (s4 - samples**4) / nm1
    c2 = p2 - m1**2
    c4 = p4 - 4 * m1 * p3 + 6 * m1**2 * p2 - 3 * m1**4
    loo = c4 / c2**2 - 3.0
    se = float(np.sqrt((nm1 / n) * np.sum((loo - loo.mean()) ** 2)))
    return est, se
