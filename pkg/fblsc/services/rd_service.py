import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root
from scipy.special import logsumexp

from config import Config
from fblsc.errors import ConvergenceFailure, InfeasibleDistortion
from fblsc.models import (
    ChannelSolution, CondPmf, ConditionalRdSolution, DistortionMatrix,
    JointRdSolution, NoisyRdSolution, Pmf, RdSolution, TiltedTable,
)
from fblsc.services.lagrange import maximize_dual

logger = logging.getLogger(__name__)

MAX_ITER = Config.BA_MAX_ITER
GAP_TOL = Config.BA_TOL
RATE_TOL = 1e-11
LAMBDA_CAP = Config.LAMBDA_CAP
SUPPORT_FLOOR = 1e-12
DEGENERATE_TOL = 1e-12
KINK_TOL = 1e-8
POLISH_EVERY = 50


@dataclass
class _FixedPoint:
    """Converged reproduction marginals of a fixed-cost alternating minimisation"""
    log_q: np.ndarray        # [S, A]
    log_z: np.ndarray        # [S, X]
    channel: np.ndarray      # [S, X, A]
    expected_cost: np.ndarray  # [S]
    iterations: int

    @property
    def q(self):
        return np.exp(self.log_q)


def _log(a):
    with np.errstate(divide='ignore'):
        return np.log(a)


def _log_ratio(log_px, cost, log_q):
    """log Z[s,x] and log c[s,a] for the current marginals"""
    log_z = logsumexp(log_q[:, None, :] - cost[None, :, :], axis=2)
    log_c = logsumexp(log_px[:, :, None] - cost[None, :, :] - log_z[:, :, None], axis=1)
    return log_z, log_c


def _polish_slice(px, cost, log_q):
    """Newton solve of the optimality conditions on the current support"""
    q = np.exp(log_q)
    support = q > 1e-10 * q.max()
    if support.sum() < 1:
        return None
    x_mask = px > 0
    sub = cost[np.ix_(x_mask, support)]
    kernel = np.exp(-(sub - sub.min(axis=1, keepdims=True)))
    weights = px[x_mask]

    def equations(u):
        z = kernel @ u
        c = (weights / z) @ kernel
        jac = -(kernel * (weights / z ** 2)[:, None]).T @ kernel
        return c - 1.0, jac

    try:
        sol = root(equations, q[support], jac=True, method='hybr', options={'xtol': 1e-15})
    except (ValueError, np.linalg.LinAlgError):
        return None
    if not sol.success or np.any(sol.x <= 0) or np.max(np.abs(sol.fun)) > 1e-12:
        return None
    polished = np.full(q.shape, -np.inf)
    polished[support] = np.log(sol.x / sol.x.sum())
    return polished


def _fixed_cost(px, cost, log_q0, max_iter=MAX_ITER, tol=GAP_TOL):
    """Alternating minimisation at fixed cost matrix for every slice of px.

    px: [S, X] conditional source pmfs; cost: [X, A]; log_q0: [S, A].
    """
    log_px = _log(px)
    log_q = log_q0.copy()
    prev_rate = math.inf
    for it in range(1, max_iter + 1):
        log_z, log_c = _log_ratio(log_px, cost, log_q)
        gap = max(float(np.max(log_c)), 0.0)
        rate = float(np.sum(-px * np.where(px > 0, log_z, 0.0)))
        if gap < tol and abs(rate - prev_rate) < RATE_TOL:
            break
        prev_rate = rate
        log_q = log_q + log_c
        log_q -= logsumexp(log_q, axis=1, keepdims=True)
        if it % POLISH_EVERY == 0:
            for s in range(px.shape[0]):
                polished = _polish_slice(px[s], cost, log_q[s])
                if polished is None:
                    continue
                _, c_check = _log_ratio(log_px[s:s + 1], cost, polished[None, :])
                if np.max(c_check) < 0.1 * tol:
                    log_q[s] = polished
    else:
        raise ConvergenceFailure(
            f"alternating minimisation did not converge in {max_iter} iterations",
            iterations=max_iter, residual=gap)

    log_z, _ = _log_ratio(log_px, cost, log_q)
    channel = np.exp(log_q[:, None, :] - cost[None, :, :] - log_z[:, :, None])
    expected_cost = np.einsum('sx,sxa,xa->s', px, channel, cost)
    logger.debug(f"Fixed-cost solve converged in {it} iterations (gap {gap:.2e})")
    return _FixedPoint(log_q, log_z, channel, expected_cost, it)


def _warm(log_q):
    """Revive pruned symbols before a solve at a new slope"""
    q = np.exp(log_q)
    q = (1.0 - 1e-6) * q + 1e-6 / q.shape[1]
    return np.log(q / q.sum(axis=1, keepdims=True))


class _SlopeSearch:
    """Bisection on the shared slope of a multi-slice rate-distortion problem"""

    def __init__(self, px, weights, d, max_iter, tol=GAP_TOL):
        self.px = px
        self.weights = weights
        self.d = d
        self.max_iter = max_iter
        self.tol = tol
        self.log_q = np.full((px.shape[0], d.shape[1]), -math.log(d.shape[1]))
        self.cache = {}

    def solve(self, lam):
        hit = self.cache.get(lam)
        if hit is None:
            hit = _fixed_cost(self.px, lam * self.d, _warm(self.log_q), self.max_iter, self.tol)
            self.log_q = hit.log_q
            self.cache[lam] = hit
        return hit

    def distortion(self, lam):
        fp = self.solve(lam)
        per_slice = np.einsum('sx,sxa,xa->s', self.px, fp.channel, self.d)
        return float(self.weights @ per_slice)


class RdService:
    @staticmethod
    def d_range(p, d):
        """Smallest and largest meaningful distortion levels"""
        dm = d.d if isinstance(d, DistortionMatrix) else np.asarray(d, dtype=float)
        probs = p.probs
        d_min = float(probs @ dm.min(axis=1))
        d_max = float((probs @ dm).min())
        return d_min, d_max

    @staticmethod
    def _search(px, weights, d, D, lambda_cap, max_iter, tol=GAP_TOL):
        """Slope, distortion and fixed point meeting E[d] = D"""
        search = _SlopeSearch(px, weights, d, max_iter, tol)
        lo, hi = 0.0, 1.0
        while search.distortion(hi) > D:
            lo, hi = hi, 2.0 * hi
            if hi > lambda_cap:
                logger.warning(f"Slope exceeded cap {lambda_cap} at D={D}; returning the capped solution")
                return lambda_cap, search.solve(lambda_cap), f"slope capped at {lambda_cap}"

        def residual(lam):
            if lam == 0.0:
                d_top = float(weights @ (px @ d).min(axis=1))
                return d_top - D
            return search.distortion(lam) - D

        try:
            lam = brentq(residual, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=300)
        except ValueError as e:
            logger.error(f"Slope bracketing failed on [{lo}, {hi}]: {e}")
            raise ConvergenceFailure(f"slope search failed: {e}")

        achieved = search.distortion(lam) if lam > 0 else D
        if abs(achieved - D) <= KINK_TOL:
            return lam, search.solve(lam), None

        # linear segment: mix the solutions on both sides of the jump
        step = max(1e-9 * lam, 1e-12)
        left, right = max(lam - step, 0.0), lam + step
        d_left, d_right = search.distortion(left), search.distortion(right)
        fp_left, fp_right = search.solve(left), search.solve(right)
        theta = (D - d_right) / (d_left - d_right) if d_left != d_right else 0.5
        theta = min(1.0, max(0.0, theta))
        q = theta * fp_left.q + (1 - theta) * fp_right.q
        channel = theta * fp_left.channel + (1 - theta) * fp_right.channel
        log_q = _log(q)
        log_z = logsumexp(log_q[:, None, :] - lam * d[None, :, :], axis=2)
        mixed = _FixedPoint(log_q, log_z, channel,
                            np.einsum('sx,sxa,xa->s', px, channel, lam * d), fp_right.iterations)
        logger.warning(f"Rate-distortion curve is linear around D={D}; slope {lam:.6g}")
        return lam, mixed, f"linear segment at D={D}"

    @staticmethod
    def _slice_rates(px, fp):
        """I(X;Xhat) per slice from the converged channels"""
        q = np.einsum('sx,sxa->sa', px, fp.channel)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(fp.channel > 0, np.log(fp.channel / q[:, None, :]), 0.0)
        return np.maximum(np.einsum('sx,sxa,sxa->s', px, fp.channel, ratio), 0.0)

    @staticmethod
    def rate_distortion(p, d, D, lambda_cap=LAMBDA_CAP, max_iter=MAX_ITER, tol=GAP_TOL):
        """Rate-distortion function with its slope and optimal test channel"""
        dm = d.d
        d_min, d_max = RdService.d_range(p, d)
        if D < d_min - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D={D} is below d_min={d_min}", key='D')
        if D >= d_max - DEGENERATE_TOL:
            best = int(np.argmin(p.probs @ dm))
            rows = np.zeros_like(dm)
            rows[:, best] = 1.0
            marginal = np.zeros(dm.shape[1])
            marginal[best] = 1.0
            return RdSolution(0.0, 0.0, CondPmf(rows, p.labels, d.repro_labels),
                              Pmf(marginal, d.repro_labels), d_max)

        px = p.probs[None, :]
        lam, fp, warning = RdService._search(px, np.ones(1), dm, D, lambda_cap, max_iter, tol)
        channel = fp.channel[0]
        marginal = p.probs @ channel
        rate = float(RdService._slice_rates(px, fp)[0])
        achieved = float(p.probs @ np.sum(channel * dm, axis=1))
        logger.debug(f"R({D}) = {rate:.12g} with slope {lam:.12g}")
        return RdSolution(rate, float(lam), CondPmf(channel, p.labels, d.repro_labels),
                          Pmf(marginal / marginal.sum(), d.repro_labels), achieved,
                          warning=warning, iterations=fp.iterations)

    @staticmethod
    def tilted_density(sol, p, d, D):
        """D-tilted information density of every source symbol"""
        q = sol.repro_marginal.probs
        keep = q > SUPPORT_FLOOR
        lam = sol.lambda_star
        exponent = np.log(q[keep])[None, :] + lam * D - lam * d.d[:, keep]
        values = -logsumexp(exponent, axis=1)
        return TiltedTable.from_values(values, p.probs, p.labels)

    @staticmethod
    def tilted_condition(sol, p, d, D):
        """E over P* of exp(lam*D - lam*d(X, xhat) + j(X)) for every xhat"""
        table = RdService.tilted_density(sol, p, d, D)
        lam = sol.lambda_star
        return np.exp(lam * D - lam * d.d + table.values[:, None]).T @ p.probs

    @staticmethod
    def conditional_rate_distortion(j, d, D, lambda_cap=LAMBDA_CAP, max_iter=MAX_ITER, tol=GAP_TOL):
        """min I(X;Xhat|Y) under E[d(X,Xhat)] <= D, side information at both ends"""
        dm = d.d
        py = j.probs.sum(axis=0)
        keep = py > 0
        px_y = (j.probs[:, keep] / py[keep]).T
        weights = py[keep]
        per_slice_max = (px_y @ dm).min(axis=1)
        d_min = float(j.probs.sum(axis=1) @ dm.min(axis=1))
        d_max = float(weights @ per_slice_max)
        if D < d_min - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D={D} is below the conditional d_min={d_min}", key='D')

        labels = [lab for lab, k in zip(j.col_labels, keep) if k]
        if D >= d_max - DEGENERATE_TOL:
            slices = []
            for s in range(px_y.shape[0]):
                best = int(np.argmin(px_y[s] @ dm))
                rows = np.zeros_like(dm)
                rows[:, best] = 1.0
                marginal = np.zeros(dm.shape[1])
                marginal[best] = 1.0
                slices.append(RdSolution(0.0, 0.0, CondPmf(rows), Pmf(marginal),
                                         float(per_slice_max[s])))
            return ConditionalRdSolution(0.0, 0.0, tuple(slices), weights, d_max)

        lam, fp, warning = RdService._search(px_y, weights, dm, D, lambda_cap, max_iter, tol)
        rates = RdService._slice_rates(px_y, fp)
        slices = []
        for s in range(px_y.shape[0]):
            channel = fp.channel[s]
            marginal = px_y[s] @ channel
            slices.append(RdSolution(
                float(rates[s]), float(lam), CondPmf(channel), Pmf(marginal / marginal.sum()),
                float(px_y[s] @ np.sum(channel * dm, axis=1)), iterations=fp.iterations))
        achieved = float(sum(w * sl.distortion_achieved for w, sl in zip(weights, slices)))
        rate = float(weights @ rates)
        logger.debug(f"Conditional R({D}) = {rate:.12g} over {len(labels)} slices")
        return ConditionalRdSolution(rate, float(lam), tuple(slices), weights, achieved, warning)

    @staticmethod
    def conditional_tilted(csol, j, d, D, slope=None):
        """Values -log E_{q_y}[exp(s*D - s*d(x, Xhat))] over (x, y); y off support gives 0"""
        lam = csol.lambda_star if slope is None else slope
        py = j.probs.sum(axis=0)
        values = np.zeros(j.shape)
        for slot, y in enumerate(np.flatnonzero(py > 0)):
            q = csol.slices[slot].repro_marginal.probs
            keep = q > SUPPORT_FLOOR
            exponent = np.log(q[keep])[None, :] + lam * D - lam * d.d[:, keep]
            values[:, y] = -logsumexp(exponent, axis=1)
        return values

    @staticmethod
    def joint_rate_distortion(j, d1, d2, D1, D2, max_iter=MAX_ITER, tol=GAP_TOL):
        """min I(XY; Xhat Yhat) under both distortion constraints"""
        nx, ny = j.shape
        na, nb = d1.shape[1], d2.shape[1]
        flat = j.probs.ravel()
        cost1 = np.repeat(np.repeat(d1.d, ny, axis=0), nb, axis=1)
        cost2 = np.tile(np.tile(d2.d, (nx, 1)), (1, na))
        d_min = (float(j.probs.sum(axis=1) @ d1.d.min(axis=1)),
                 float(j.probs.sum(axis=0) @ d2.d.min(axis=1)))
        if D1 < d_min[0] - DEGENERATE_TOL or D2 < d_min[1] - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"(D1, D2)=({D1}, {D2}) below ({d_min[0]}, {d_min[1]})", key='D')

        d_max1 = float((j.probs.sum(axis=1) @ d1.d).min())
        d_max2 = float((j.probs.sum(axis=0) @ d2.d).min())
        if D1 >= d_max1 - DEGENERATE_TOL and D2 >= d_max2 - DEGENERATE_TOL:
            best = int(np.argmin(j.probs.sum(axis=1) @ d1.d)) * nb + int(np.argmin(j.probs.sum(axis=0) @ d2.d))
            channel = np.zeros((nx * ny, na * nb))
            channel[:, best] = 1.0
            marginal = channel[0].copy()
            tilted = TiltedTable.from_values(np.zeros(nx * ny), flat)
            return JointRdSolution(0.0, 0.0, 0.0, channel, marginal, tilted, (d_max1, d_max2))

        px = flat[None, :]
        state = {'log_q': np.full((1, na * nb), -math.log(na * nb))}
        targets = np.array([D1, D2])

        def evaluate(m):
            cost = m[0] * cost1 + m[1] * cost2
            fp = _fixed_cost(px, cost, _warm(state['log_q']), max_iter, tol)
            state['log_q'] = fp.log_q
            state['fp'] = fp
            achieved = np.array([
                np.sum(flat[:, None] * fp.channel[0] * cost1),
                np.sum(flat[:, None] * fp.channel[0] * cost2),
            ])
            value = float(-flat @ np.where(flat > 0, fp.log_z[0], 0.0) - m @ targets)
            return value, achieved - targets

        result = maximize_dual(evaluate, np.array([1.0, 1.0]))
        nu = result.multipliers
        value, _ = evaluate(nu)
        fp = state['fp']
        channel = fp.channel[0]
        marginal = flat @ channel
        keep = marginal > SUPPORT_FLOOR
        exponent = (np.log(marginal[keep])[None, :]
                    + nu[0] * (D1 - cost1[:, keep]) + nu[1] * (D2 - cost2[:, keep]))
        tilted = TiltedTable.from_values(-logsumexp(exponent, axis=1), flat)
        achieved = (float(np.sum(flat[:, None] * channel * cost1)),
                    float(np.sum(flat[:, None] * channel * cost2)))
        rate = float(RdService._slice_rates(px, fp)[0])
        logger.debug(f"Joint R({D1},{D2}) = {rate:.12g}, multipliers {nu.tolist()}")
        return JointRdSolution(rate, float(nu[0]), float(nu[1]), channel, marginal, tilted, achieved)

    @staticmethod
    def noisy_rate_distortion(px, ch, d, D, lambda_cap=LAMBDA_CAP, max_iter=MAX_ITER, tol=GAP_TOL):
        """Noisy rate-distortion through the surrogate distortion d_bar(y, xhat)"""
        joint = ch.joint(px).probs
        py = joint.sum(axis=0)
        with np.errstate(invalid='ignore', divide='ignore'):
            post = np.where(py > 0, joint / np.where(py > 0, py, 1.0), 1.0 / joint.shape[0])
        d_bar = post.T @ d.d
        surrogate_d = DistortionMatrix(d_bar, ch.output_labels, d.repro_labels)
        p_y = Pmf(py / py.sum(), ch.output_labels)

        sol = RdService.rate_distortion(p_y, surrogate_d, D, lambda_cap, max_iter, tol)
        lam = sol.lambda_star
        tilted_y = RdService.tilted_density(sol, p_y, surrogate_d, D)
        tilted_xy = (tilted_y.values[None, :, None]
                     + lam * (d.d[:, None, :] - d_bar[None, :, :]))

        # conditional variance of d(X, Xhat) given (Y, Xhat), Xhat drawn from P*(.|y)
        second = post.T @ (d.d ** 2)
        cond_var = np.maximum(second - d_bar ** 2, 0.0)
        extra = float(np.sum(p_y.probs[:, None] * sol.test_channel.rows * cond_var))
        surrogate_dispersion = tilted_y.variance
        dispersion_tilde = surrogate_dispersion + lam ** 2 * extra
        return NoisyRdSolution(sol.rate, lam, surrogate_d, sol, tilted_y, tilted_xy,
                               dispersion_tilde, surrogate_dispersion)

    @staticmethod
    def channel_capacity(ch, max_iter=MAX_ITER, tol=1e-11):
        """Capacity, capacity-achieving distributions and channel dispersion"""
        w = ch.rows
        log_w = _log(w)
        r = np.full(w.shape[0], 1.0 / w.shape[0])
        for it in range(1, max_iter + 1):
            q = r @ w
            with np.errstate(divide='ignore', invalid='ignore'):
                div = np.sum(np.where(w > 0, w * (log_w - _log(q)[None, :]), 0.0), axis=1)
            lower = float(r @ div)
            upper = float(div.max())
            if upper - lower < tol:
                break
            r = r * np.exp(div - upper)
            r /= r.sum()
        else:
            raise ConvergenceFailure("capacity iteration did not converge", iterations=max_iter,
                                     residual=upper - lower)

        capacity = max(lower, 0.0)
        q = r @ w
        with np.errstate(divide='ignore', invalid='ignore'):
            dens = np.where(w > 0, log_w - _log(q)[None, :], 0.0)
        joint = r[:, None] * w
        dispersion = float(np.sum(joint * (dens - capacity) ** 2))
        logger.debug(f"Capacity {capacity:.12g} after {it} iterations")
        return ChannelSolution(capacity, Pmf(q / q.sum(), ch.output_labels),
                               Pmf(r, ch.input_labels), max(dispersion, 0.0))
