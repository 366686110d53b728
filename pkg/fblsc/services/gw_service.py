import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.optimize import brentq
from scipy.special import logsumexp

from config import Config
from fblsc.errors import (
    ConvergenceFailure, InfeasibleDistortion, InfeasibleRate, SearchBudgetExceeded,
)
from fblsc.models import (
    ConditionalRdSolution, CondPmf, GwSolution, JointPmf, PanglossRecord, TiltedTable,
)
from fblsc.services.prob_service import ProbService
from fblsc.services.rd_service import RdService, DEGENERATE_TOL

logger = logging.getLogger(__name__)

EVAL_BUDGET = Config.GW_EVAL_BUDGET
FEASIBLE_TOL = 1e-9
CERTIFY_TOL = 1e-7
PANGLOSS_TOL = 1e-6
IDENTITY_TOL = 1e-5
FD_STEP = 1e-4
MIN_STEP = 1e-4


@dataclass
class _Candidate:
    index: int
    channel: np.ndarray
    rate: float
    feasible: bool
    cond1: Optional[ConditionalRdSolution] = None
    cond2: Optional[ConditionalRdSolution] = None
    joint_xw: Optional[np.ndarray] = None
    joint_yw: Optional[np.ndarray] = None


class _Search:
    """Candidate evaluation for the common-rate minimisation over P(w|x,y)"""

    def __init__(self, j, d1, d2, D1, D2, R1, R2, budget, workers):
        self.j, self.d1, self.d2 = j, d1, d2
        self.D1, self.D2, self.R1, self.R2 = D1, D2, R1, R2
        self.budget = budget
        self.workers = max(1, workers)
        self.flat = j.probs.ravel()
        self.nx, self.ny = j.shape
        self.evaluations = 0
        self.counter = 0
        self._lock = threading.Lock()

    def _normalise(self, channel):
        channel = np.asarray(channel, dtype=float)
        channel = np.maximum(channel, 0.0)
        channel /= channel.sum(axis=1, keepdims=True)
        used = (self.flat @ channel) > 1e-14
        return channel[:, used]

    def _reserve(self, count):
        """First index and number of evaluations granted out of the remaining budget"""
        with self._lock:
            granted = max(0, min(count, self.budget - self.evaluations))
            start = self.counter
            self.evaluations += granted
            self.counter += granted
        return start, granted

    def evaluate(self, channel):
        index, granted = self._reserve(1)
        if not granted:
            return None
        return self._run(channel, index)

    def _run(self, channel, index):
        channel = self._normalise(channel)
        joint = self.flat[:, None] * channel
        rate = ProbService.mutual_information(joint)
        cube = joint.reshape(self.nx, self.ny, -1)
        joint_xw = cube.sum(axis=1)
        joint_yw = cube.sum(axis=0)
        try:
            cond1 = RdService.conditional_rate_distortion(JointPmf(joint_xw / joint_xw.sum()), self.d1, self.D1)
            cond2 = RdService.conditional_rate_distortion(JointPmf(joint_yw / joint_yw.sum()), self.d2, self.D2)
        except ConvergenceFailure as e:
            logger.warning(f"Candidate {index} skipped: {e}")
            return _Candidate(index, channel, rate, False)
        feasible = cond1.rate <= self.R1 + FEASIBLE_TOL and cond2.rate <= self.R2 + FEASIBLE_TOL
        return _Candidate(index, channel, rate, feasible, cond1, cond2, joint_xw, joint_yw)

    def evaluate_many(self, channels):
        start, granted = self._reserve(len(channels))
        if granted < len(channels):
            logger.debug(f"Evaluation budget admits {granted} of {len(channels)} candidates")
        indexed = list(enumerate(channels[:granted], start=start))
        if self.workers == 1 or len(indexed) <= 1:
            return [self._run(ch, idx) for idx, ch in indexed]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(lambda item: self._run(item[1], item[0]), indexed))

    def violation(self, cand):
        if cand.cond1 is None:
            return math.inf
        return max(cand.cond1.rate - self.R1, cand.cond2.rate - self.R2)


def _best(candidates):
    feasible = [c for c in candidates if c.feasible]
    if not feasible:
        return None
    return sorted(feasible, key=lambda c: (c.rate, c.index))[0]


class GwService:
    @staticmethod
    def _clusterings(j, max_groups):
        """Deterministic partitions of the (x, y) pairs"""
        nx, ny = j.shape
        pairs = nx * ny
        features = np.hstack([np.repeat(np.eye(nx), ny, axis=0), np.tile(np.eye(ny), (nx, 1))])
        channels = [
            np.repeat(np.eye(nx), ny, axis=0),        # W = X
            np.tile(np.eye(ny), (nx, 1)),             # W = Y
        ]
        for k in range(2, min(pairs, max_groups) + 1):
            _, labels = kmeans2(features, k, minit='++', seed=np.random.default_rng(k))
            channel = np.zeros((pairs, k))
            channel[np.arange(pairs), labels] = 1.0
            channels.append(channel)
            channels.append(0.9 * channel + 0.1 / k)
        channels.append(np.eye(pairs))                # W = (X, Y)
        return channels

    @staticmethod
    def _path_channel(j, d1, d2, D1, D2, t, d_max):
        delta1 = D1 + t * (d_max[0] - D1)
        delta2 = D2 + t * (d_max[1] - D2)
        return RdService.joint_rate_distortion(j, d1, d2, delta1, delta2).test_channel

    @staticmethod
    def _refine(search, best):
        """Coordinate descent over P(w|x,y) with a shrinking transfer step"""
        pairs = search.nx * search.ny
        cols = min(pairs + 2, best.channel.shape[1] + 2)
        channel = np.zeros((pairs, cols))
        channel[:, :best.channel.shape[1]] = best.channel
        step = 0.25
        while step >= MIN_STEP and search.evaluations < search.budget:
            improved = False
            for r in np.flatnonzero(search.flat > 0):
                for src in np.flatnonzero(channel[r] > 0):
                    for dst in range(cols):
                        if dst == src or channel[r, src] <= 0:
                            continue
                        trial = channel.copy()
                        amount = min(step, trial[r, src])
                        trial[r, src] -= amount
                        trial[r, dst] += amount
                        cand = search.evaluate(trial)
                        if cand is None:
                            return best
                        if cand.feasible and cand.rate < best.rate - 1e-12:
                            best, channel = cand, trial
                            improved = True
            if not improved:
                step /= 2
        return best

    @staticmethod
    def _search(j, d1, d2, D1, D2, R1, R2, budget, workers, lower_bound, d_max):
        search = _Search(j, d1, d2, D1, D2, R1, R2, budget, workers)
        pairs = search.nx * search.ny
        certify = lambda c: c is not None and c.rate <= lower_bound + CERTIFY_TOL

        trivial = search.evaluate(np.ones((pairs, 1)))
        if trivial is not None and trivial.feasible:
            return trivial, True, search

        candidates = [c for c in [trivial] if c is not None]
        start = search.evaluate(GwService._path_channel(j, d1, d2, D1, D2, 0.0, d_max))
        if start is not None:
            candidates.append(start)
            if start.feasible and certify(start):
                return start, True, search

        # walk the joint rate-distortion path until a private-rate constraint binds
        path_cache = {}

        def path_violation(t):
            cand = search.evaluate(GwService._path_channel(j, d1, d2, D1, D2, t, d_max))
            if cand is None:
                raise SearchBudgetExceeded("evaluation budget exhausted on the Pangloss path")
            path_cache[t] = cand
            return search.violation(cand)

        try:
            if path_violation(1.0) > 0:
                t_star = brentq(path_violation, 0.0, 1.0, xtol=1e-12, rtol=1e-12, maxiter=60)
                cand = path_cache.get(t_star) or search.evaluate(
                    GwService._path_channel(j, d1, d2, D1, D2, t_star, d_max))
                feasible_side = [c for t, c in path_cache.items() if c.feasible]
                candidates.extend(feasible_side)
                if cand is not None:
                    candidates.append(cand)
        except (ValueError, SearchBudgetExceeded) as e:
            logger.debug(f"Path search stopped: {e}")
        best = _best(candidates)
        if certify(best):
            return best, True, search

        max_groups = min(pairs, 6)
        candidates.extend(search.evaluate_many(GwService._clusterings(j, max_groups)))
        best = _best(candidates)
        if best is None:
            raise SearchBudgetExceeded(
                f"no feasible auxiliary channel within {search.evaluations} evaluations")
        if certify(best):
            return best, True, search

        best = GwService._refine(search, best)
        return best, certify(best), search

    @staticmethod
    def _common_rate(j, d1, d2, D1, D2, R1, R2, budget, workers):
        px = j.marginal_x()
        py = j.marginal_y()
        rx = RdService.rate_distortion(px, d1, D1).rate
        ry = RdService.rate_distortion(py, d2, D2).rate
        jrd = RdService.joint_rate_distortion(j, d1, d2, D1, D2)
        lower = max(0.0, jrd.rate - R1 - R2, rx - R1, ry - R2)
        d_max = (float((px.probs @ d1.d).min()), float((py.probs @ d2.d).min()))
        best, certified, search = GwService._search(j, d1, d2, D1, D2, R1, R2, budget, workers,
                                                    lower, d_max)
        return best, certified, search, jrd

    @staticmethod
    def _tilted(j, best, d1, d2, D1, D2, R1, R2, xi1, xi2, s1, s2):
        """Rates-distortions tilted density over (x, y)"""
        p_w = j.probs.ravel() @ best.channel
        joint_xw = JointPmf(best.joint_xw / best.joint_xw.sum())
        joint_yw = JointPmf(best.joint_yw / best.joint_yw.sum())
        j1 = RdService.conditional_tilted(best.cond1, joint_xw, d1, D1, slope=s1)
        j2 = RdService.conditional_tilted(best.cond2, joint_yw, d2, D2, slope=s2)
        keep = p_w > 0
        exponent = (np.log(p_w[keep])[None, None, :]
                    + xi1 * (R1 - j1[:, None, keep])
                    + xi2 * (R2 - j2[None, :, keep]))
        return -logsumexp(exponent, axis=2)

    @staticmethod
    def _slopes(j, d1, d2, D1, D2, R1, R2, budget, workers):
        """Negative partial derivatives of the common rate by Richardson-extrapolated differences"""
        base = (D1, D2, R1, R2)
        px, py = j.marginal_x(), j.marginal_y()
        lower_limits = (RdService.d_range(px, d1)[0], RdService.d_range(py, d2)[0], 0.0, 0.0)

        def rate_at(args):
            return GwService._common_rate(j, d1, d2, *args, budget, workers)[0].rate

        def derivative(k, h):
            up = list(base)
            down = list(base)
            up[k] += h
            if base[k] - h >= lower_limits[k]:
                down[k] -= h
                return (rate_at(up) - rate_at(down)) / (2 * h)
            return (rate_at(up) - rate_at(base)) / h

        slopes = []
        for k in range(4):
            coarse = derivative(k, FD_STEP)
            fine = derivative(k, FD_STEP / 2)
            slopes.append(max(0.0, -(4 * fine - coarse) / 3))
        lam1, lam2, xi1, xi2 = slopes
        return xi1, xi2, lam1, lam2

    @staticmethod
    def gw_common_rate(j, d1, d2, D1, D2, R1, R2, budget=EVAL_BUDGET, workers=1, with_slopes=True):
        """Minimal common rate of the lossy Gray-Wyner system"""
        if R1 < 0 or R2 < 0:
            raise InfeasibleRate(f"private rates must be nonnegative, got ({R1}, {R2})", key='R')
        px, py = j.marginal_x(), j.marginal_y()
        if D1 < RdService.d_range(px, d1)[0] - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D1={D1} is below d_min", key='D1')
        if D2 < RdService.d_range(py, d2)[0] - DEGENERATE_TOL:
            raise InfeasibleDistortion(f"D2={D2} is below d_min", key='D2')

        best, certified, search, jrd = GwService._common_rate(j, d1, d2, D1, D2, R1, R2, budget, workers)
        common = max(best.rate, 0.0)
        if not certified:
            logger.warning(f"Common rate {common:.8g} not certified after {search.evaluations} evaluations")

        pangloss = None
        flat = j.probs.ravel()
        if common > PANGLOSS_TOL and abs(common + R1 + R2 - jrd.rate) < PANGLOSS_TOL:
            xi1 = xi2 = 1.0
            lam1, lam2 = jrd.nu1, jrd.nu2
            values = GwService._tilted(j, best, d1, d2, D1, D2, R1, R2, 1.0, 1.0, lam1, lam2)
            target = jrd.tilted.values.reshape(j.shape) - R1 - R2
            residual = float(np.max(np.abs(values - target)[j.probs > 0]))
            if residual > IDENTITY_TOL:
                logger.warning(f"Pangloss identity residual {residual:.3g} exceeds {IDENTITY_TOL}")
            pangloss = PanglossRecord(jrd.rate, jrd.nu1, jrd.nu2, jrd.tilted, residual)
        elif common <= PANGLOSS_TOL:
            xi1 = xi2 = lam1 = lam2 = 0.0
            values = np.zeros(j.shape)
        else:
            if with_slopes:
                xi1, xi2, lam1, lam2 = GwService._slopes(j, d1, d2, D1, D2, R1, R2, budget, workers)
            else:
                xi1 = xi2 = lam1 = lam2 = 0.0
            s1 = lam1 / xi1 if xi1 > 0 else best.cond1.lambda_star
            s2 = lam2 / xi2 if xi2 > 0 else best.cond2.lambda_star
            values = GwService._tilted(j, best, d1, d2, D1, D2, R1, R2, xi1, xi2, s1, s2)

        tilted = TiltedTable.from_values(values.ravel(), flat)
        if with_slopes and abs(tilted.mean - common) > 1e-6:
            logger.warning(f"Tilted mean {tilted.mean:.8g} differs from common rate {common:.8g}")
        aux = CondPmf(best.channel)
        logger.info(f"Gray-Wyner common rate {common:.10g} (certified={certified}, "
                    f"evaluations={search.evaluations})")
        return GwSolution(common, xi1, xi2, lam1, lam2, aux, tilted, pangloss, certified,
                          search.evaluations)
