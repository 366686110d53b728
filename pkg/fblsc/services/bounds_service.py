"""
Exact non-asymptotic bounds for memoryless discrete sources.

Every bound reduces to the law of an n-fold sum of a finitely valued
per-symbol quantity, obtained by enumerating types with multinomial weights.
"""
import logging
import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb, gammaln, logsumexp
from scipy.stats import binom

from config import Config
from fblsc.errors import BudgetExceeded, DomainError
from fblsc.models import BoundPoint, TailDistribution
from fblsc.services.prob_service import ProbService

logger = logging.getLogger(__name__)

TYPE_BUDGET = Config.TYPE_BUDGET
MERGE_TOL = 1e-12


def _merge(points, probs):
    """Group symbols whose value vectors agree within MERGE_TOL"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    keep = probs > 0
    points, probs = points[keep], probs[keep]
    order = np.lexsort(points.T[::-1])
    points, probs = points[order], probs[order]
    merged_points, merged_probs = [points[0]], [probs[0]]
    for row, mass in zip(points[1:], probs[1:]):
        if np.all(np.abs(row - merged_points[-1]) <= MERGE_TOL * np.maximum(1.0, np.abs(row))):
            merged_probs[-1] += mass
        else:
            merged_points.append(row)
            merged_probs.append(mass)
    return np.array(merged_points), np.array(merged_probs)


def _compositions(n, m):
    """All nonnegative integer vectors of length m summing to n"""
    partial = np.zeros((1, 0), dtype=np.int64)
    for _ in range(m - 1):
        remaining = n - partial.sum(axis=1)
        reps = remaining + 1
        expanded = np.repeat(partial, reps, axis=0)
        starts = np.repeat(np.cumsum(reps) - reps, reps)
        values = np.arange(expanded.shape[0]) - starts
        partial = np.hstack([expanded, values[:, None]])
    last = n - partial.sum(axis=1)
    return np.hstack([partial, last[:, None]])


def _types(points, probs, n, budget):
    """Sums over every type of the n-fold product and their log-probabilities"""
    m = probs.size
    if m == 1:
        return n * points, np.zeros(1)
    count = comb(n + m - 1, m - 1, exact=True)
    if count > budget:
        raise BudgetExceeded(f"{count} types exceed the budget of {budget}")
    counts = _compositions(n, m)
    log_probs = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1) + counts @ np.log(probs)
    return counts @ points, log_probs


@lru_cache(maxsize=128)
def _tail_distribution(values_key, probs_key, n, budget):
    points, probs = _merge(np.array(values_key)[:, None], np.array(probs_key))
    values = points[:, 0]
    if values.size == 1:
        return TailDistribution(n, np.array([n * values[0]]), np.zeros(1))
    if values.size == 2:
        k = np.arange(n + 1)
        sums = (n - k) * values[0] + k * values[1]
        log_probs = binom.logpmf(k, n, probs[1] / probs.sum())
    else:
        sums, log_probs = _types(values[:, None], probs, n, budget)
        sums = sums[:, 0]
    order = np.argsort(sums, kind='stable')
    sums, log_probs = sums[order], log_probs[order]
    # collapse atoms that coincide up to rounding
    breaks = np.flatnonzero(np.diff(sums) > MERGE_TOL * np.maximum(1.0, np.abs(sums[1:])))
    starts = np.concatenate([[0], breaks + 1])
    merged = np.logaddexp.reduceat(log_probs, starts)
    return TailDistribution(n, sums[starts], merged - logsumexp(merged))


@lru_cache(maxsize=32)
def _joint_types(points_key, probs_key, n, budget):
    points, probs = _merge(np.array(points_key), np.array(probs_key))
    if probs.size == 2:
        k = np.arange(n + 1)
        sums = np.outer(n - k, points[0]) + np.outer(k, points[1])
        return sums, binom.logpmf(k, n, probs[1] / probs.sum())
    return _types(points, probs, n, budget)


def _key(array):
    return tuple(np.asarray(array, dtype=float).ravel().tolist())


def _clamp(value, what):
    clamped = min(1.0, max(0.0, value))
    if clamped != value:
        logger.debug(f"{what} clamped from {value:.6g}")
    return clamped


def _default_gamma(n, gamma):
    if gamma is None:
        gamma = math.log(n) / n
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma} (n={n})", key='gamma')
    return gamma


class BoundsService:
    @staticmethod
    def tail_distribution(values, probs, n, budget=TYPE_BUDGET):
        """Exact law of sum_i V(X_i) for X_i i.i.d. probs"""
        values = np.asarray(values, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        if n < 1:
            raise DomainError(f"blocklength must be positive, got {n}", key='n')
        if values.size != probs.size:
            raise DomainError("values and probs differ in length", key='values')
        return _tail_distribution(_key(values), _key(probs), int(n), int(budget))

    @staticmethod
    def exact_sum_tail(values, probs, n, t, budget=TYPE_BUDGET):
        """Pr{sum_i V(X_i) >= t}"""
        return BoundsService.tail_distribution(values, probs, n, budget).tail(t)

    @staticmethod
    def union_tail(points, probs, n, thresholds, budget=TYPE_BUDGET):
        """Pr{some coordinate k of sum_i V(X_i) reaches thresholds[k]}"""
        points = np.asarray(points, dtype=float).reshape(len(probs), -1)
        probs = np.asarray(probs, dtype=float).ravel()
        sums, log_probs = _joint_types(tuple(map(tuple, points.tolist())), _key(probs), int(n), int(budget))
        sums = sums.reshape(log_probs.size, -1)
        thresholds = np.asarray(thresholds, dtype=float)
        tol = MERGE_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(thresholds), thresholds, 0.0)))
        hit = np.any(sums >= (thresholds - tol)[None, :], axis=1)
        if not np.any(hit):
            return 0.0
        return float(min(1.0, math.exp(logsumexp(log_probs[hit]) - logsumexp(log_probs))))

    @staticmethod
    def lossless_bounds(p, n, log_m, gamma=None, budget=TYPE_BUDGET):
        """Achievability and converse on the error probability of an (n, M) lossless code"""
        gamma = _default_gamma(n, gamma)
        info = ProbService.information_density(p)
        dist = BoundsService.tail_distribution(info, p.probs, n, budget)
        ach = dist.tail(log_m)
        raw = dist.tail(log_m + n * gamma) - math.exp(-n * gamma)
        return BoundPoint(n, log_m, ach, _clamp(raw, 'lossless converse'), raw)

    @staticmethod
    def rd_converse(tilted, p, n, log_m, gamma=None, budget=TYPE_BUDGET):
        """Lower bound on the excess-distortion probability from the tilted density"""
        gamma = _default_gamma(n, gamma)
        dist = BoundsService.tail_distribution(tilted.values, p.probs, n, budget)
        raw = dist.tail(log_m + n * gamma) - math.exp(-n * gamma)
        return _clamp(raw, 'rate-distortion converse')

    @staticmethod
    def kaspi_converse(tilted_xy, j, n, log_m, gamma=None, budget=TYPE_BUDGET):
        """Lower bound on the joint excess-distortion probability of a Kaspi code"""
        gamma = _default_gamma(n, gamma)
        dist = BoundsService.tail_distribution(tilted_xy.values, j.probs.ravel(), n, budget)
        raw = dist.tail(log_m + n * gamma) - math.exp(-n * gamma)
        return _clamp(raw, 'Kaspi converse')

    @staticmethod
    def sr_converse(tilted_d1, tilted_sr, xi_star, p, n, log_m1, log_m12, gamma=None, slack_count=4,
                    budget=TYPE_BUDGET):
        """Union-tail lower bound for successive refinement codes; slack_count is 2 or 4"""
        if slack_count not in (2, 4):
            raise DomainError(f"slack_count must be 2 or 4, got {slack_count}", key='slack_count')
        gamma = _default_gamma(n, gamma)
        points = np.column_stack([tilted_d1.values, tilted_sr.values])
        thresholds = [log_m1 + n * gamma, log_m12 + xi_star * log_m1 + (1 + xi_star) * n * gamma]
        raw = BoundsService.union_tail(points, p.probs, n, thresholds, budget) - slack_count * math.exp(-n * gamma)
        return _clamp(raw, 'successive refinement converse')

    @staticmethod
    def fy_converse(fy, p, g, n, log_m1, log_m2, gamma=None, budget=TYPE_BUDGET):
        """Union-tail lower bound for Fu-Yeung codes"""
        gamma = _default_gamma(n, gamma)
        points = np.column_stack([fy.tilted_d1.values, fy.neg_log_py, fy.tilted.values])
        thresholds = [
            log_m1 + n * gamma,
            log_m2 + n * gamma,
            log_m1 + log_m2 + fy.xi_star * log_m1 + (1 + fy.xi_star) * n * gamma,
        ]
        raw = BoundsService.union_tail(points, p.probs, n, thresholds, budget) - 4 * math.exp(-n * gamma)
        return _clamp(raw, 'Fu-Yeung converse')

    @staticmethod
    def _ball_probs(p, D, n):
        """Pr of the Hamming D-ball around a sequence with k ones under the optimal output law"""
        q = (p - D) / (1 - 2 * D)
        radius = int(math.floor(n * D + 1e-9))
        balls = np.empty(n + 1)
        for k in range(n + 1):
            flips_ones = binom.pmf(np.arange(k + 1), k, 1 - q)
            flips_zeros = binom.pmf(np.arange(n - k + 1), n - k, q)
            mismatches = np.convolve(flips_ones, flips_zeros)
            balls[k] = min(1.0, float(mismatches[:radius + 1].sum()))
        return balls

    @staticmethod
    def _check_bms(p, D):
        if not 0 < p < 1:
            raise DomainError(f"p must lie in (0,1), got {p}", key='p')
        if not 0 <= D < min(p, 1 - p):
            raise DomainError(f"D must lie in [0, min(p,1-p)), got {D}", key='D')

    @staticmethod
    def rd_achievability_bms(p, D, n, log_m):
        """Random-coding upper bound on the excess-distortion probability of a binary Hamming source"""
        BoundsService._check_bms(p, D)
        balls = BoundsService._ball_probs(p, D, n)
        weights = binom.pmf(np.arange(n + 1), n, p)
        m = math.exp(log_m) if log_m < 700 else math.inf
        with np.errstate(divide='ignore', invalid='ignore'):
            miss = np.where(balls >= 1.0, 0.0,
                            np.where(balls <= 0.0, 1.0, np.exp(m * np.log1p(-balls))))
        return _clamp(float(weights @ miss), 'random-coding bound')

    @staticmethod
    def epsilon_cutoff_mean(dist, eps):
        """Mean of the variable with the top eps of its mass set to zero"""
        if not 0.0 <= eps <= 1.0:
            raise DomainError(f"eps must lie in [0,1], got {eps}", key='eps')
        if isinstance(dist, TailDistribution):
            values, probs = dist.values, dist.probs
        else:
            values, probs = (np.asarray(a, dtype=float).ravel() for a in dist)
        order = np.argsort(values, kind='stable')
        values, probs = values[order], probs[order] / probs.sum()
        remaining = eps
        top = values.size
        alpha = 0.0
        for i in range(values.size - 1, -1, -1):
            if probs[i] <= remaining + 1e-15:
                remaining -= probs[i]
                top = i
            else:
                alpha = remaining / probs[i]
                top = i + 1
                break
        kept = float(values[:top] @ probs[:top])
        if top > 0 and alpha > 0:
            kept -= alpha * values[top - 1] * probs[top - 1]
        return kept

    @staticmethod
    def vl_achievability_bms(p, D, n, eps):
        """Upper bound on the minimal average length of variable-length codes for a binary Hamming source"""
        BoundsService._check_bms(p, D)
        balls = BoundsService._ball_probs(p, D, n)
        lengths = -np.log(np.maximum(balls, 1e-300))
        weights = binom.pmf(np.arange(n + 1), n, p)
        return BoundsService.epsilon_cutoff_mean((lengths, weights), eps)

    @staticmethod
    def _crossing(dist, level):
        """Largest t with Pr{S >= t} > level; every log M above it meets the level"""
        suffix = np.exp(np.logaddexp.accumulate(dist.log_probs[::-1])[::-1])
        below = np.flatnonzero(suffix <= level)
        if below.size == 0:
            return float(dist.values[-1])
        first = below[0]
        return float(dist.values[first - 1]) if first > 0 else -math.inf

    @staticmethod
    def lossless_crossings(p, n, eps, gamma=None, budget=TYPE_BUDGET):
        """log M where the converse and the achievability bounds reach eps"""
        gamma = _default_gamma(n, gamma)
        info = ProbService.information_density(p)
        dist = BoundsService.tail_distribution(info, p.probs, n, budget)
        ach = BoundsService._crossing(dist, eps)
        conv = BoundsService._crossing(dist, eps + math.exp(-n * gamma)) - n * gamma
        return conv, ach

    @staticmethod
    def rd_crossings_bms(tilted, p, D, n, eps, gamma=None, budget=TYPE_BUDGET):
        """log M where the converse and the random-coding bound reach eps for a binary Hamming source"""
        gamma = _default_gamma(n, gamma)
        dist = BoundsService.tail_distribution(tilted.values, p.probs, n, budget)
        conv = BoundsService._crossing(dist, eps + math.exp(-n * gamma)) - n * gamma
        hi = n * math.log(2) + 50.0
        f = lambda log_m: BoundsService.rd_achievability_bms(p.probs[1], D, n, log_m) - eps
        if f(0.0) <= 0:
            return conv, 0.0
        ach = brentq(f, 0.0, hi, xtol=1e-9)
        return conv, ach
