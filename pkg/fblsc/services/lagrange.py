"""
Maximisation of concave Lagrange duals over nonnegative multipliers.

`evaluate(m)` returns the dual value and its gradient (achieved constraint
values minus targets). Warm starts live inside the caller's closure.
"""
import logging

import numpy as np
from scipy.optimize import minimize, root

logger = logging.getLogger(__name__)

SNAP_TOL = 1e-9


class DualResult:
    __slots__ = ('multipliers', 'value', 'gradient', 'evaluations')

    def __init__(self, multipliers, value, gradient, evaluations):
        self.multipliers = multipliers
        self.value = value
        self.gradient = gradient
        self.evaluations = evaluations


class _Cached:
    def __init__(self, evaluate):
        self._evaluate = evaluate
        self._cache = {}
        self.calls = 0

    def __call__(self, m):
        key = tuple(np.round(np.asarray(m, dtype=float), 15))
        hit = self._cache.get(key)
        if hit is None:
            self.calls += 1
            value, grad = self._evaluate(np.asarray(m, dtype=float))
            hit = (float(value), np.asarray(grad, dtype=float))
            self._cache[key] = hit
        return hit


def _solve(fn, start, fixed):
    bounds = [(0.0, 0.0) if f else (0.0, None) for f in fixed]
    x0 = np.where(fixed, 0.0, np.maximum(start, 0.0))

    def objective(m):
        value, grad = fn(m)
        return -value, -grad

    res = minimize(objective, x0, jac=True, method='L-BFGS-B', bounds=bounds,
                   options={'ftol': 1e-16, 'gtol': 1e-11, 'maxiter': 500})
    m = np.where(fixed, 0.0, np.maximum(res.x, 0.0))
    value, grad = fn(m)

    active = ~np.asarray(fixed) & (m > 1e-10)
    if active.any() and np.max(np.abs(grad[active])) > 1e-13:
        def residual(z):
            trial = m.copy()
            trial[active] = np.maximum(z, 0.0)
            return fn(trial)[1][active]

        refined = root(residual, m[active], method='hybr', options={'xtol': 1e-14})
        if np.all(refined.x >= 0):
            trial = m.copy()
            trial[active] = refined.x
            t_value, t_grad = fn(trial)
            if np.max(np.abs(t_grad[active])) < np.max(np.abs(grad[active])):
                m, value, grad = trial, t_value, t_grad
    return m, value, grad


def maximize_dual(evaluate, start, clamp_patterns=()):
    """Maximise a concave dual, preferring the most clamped optimal pattern.

    `clamp_patterns` lists boolean masks of multipliers that may be pinned to
    zero; the first pattern whose dual value matches the free optimum wins.
    """
    fn = _Cached(evaluate)
    start = np.asarray(start, dtype=float)
    free = np.zeros(start.size, dtype=bool)
    m, value, grad = _solve(fn, start, free)

    for pattern in clamp_patterns:
        pattern = np.asarray(pattern, dtype=bool)
        if np.all(m[pattern] == 0.0):
            continue
        pm, pvalue, pgrad = _solve(fn, m, pattern)
        if pvalue >= value - SNAP_TOL * (1.0 + abs(value)):
            logger.debug(f"Dual snapped to clamped pattern {pattern.tolist()}")
            m, value, grad = pm, pvalue, pgrad
            break

    logger.debug(f"Dual optimum {m.tolist()} after {fn.calls} evaluations")
    return DualResult(m, value, grad, fn.calls)
