"""
Monte Carlo simulation of random-codebook lossy codes.

Trials are split in fixed-size blocks; block b draws from the stream keyed by
(seed, b), so the sample set never depends on the number of workers.
Whenever codewords are independent of each other the coverage event is
sampled exactly: given the source sequence, no codeword covers it with
probability (1 - ball)^M.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.special import betainc
from scipy.stats import ncx2

from config import Config
from fblsc.errors import BudgetExceeded, DomainError, MomentOrderViolation
from fblsc.models import CodebookKind, SimResult, SourceSampler

logger = logging.getLogger(__name__)

TRIAL_CHUNK = 4096
DIRECT_CODEBOOK_LIMIT = Config.DIRECT_CODEBOOK_LIMIT
LATTICE = 1e9
LOW_COUNT = 30


# ---------------------------------------------------------------- lattice laws


def _atoms(values, probs):
    """Distribution of one distortion value on the 1e-9 lattice"""
    keys = np.rint(np.asarray(values, dtype=float) * LATTICE).astype(np.int64)
    keep = np.asarray(probs) > 0
    uniq, inverse = np.unique(keys[keep], return_inverse=True)
    return uniq, np.bincount(inverse, weights=np.asarray(probs, dtype=float)[keep])


def _convolve(a, b, budget):
    keys = (a[0][:, None] + b[0][None, :]).ravel()
    probs = (a[1][:, None] * b[1][None, :]).ravel()
    uniq, inverse = np.unique(keys, return_inverse=True)
    if uniq.size > budget:
        raise BudgetExceeded(f"lattice of {uniq.size} atoms exceeds the budget of {budget}")
    return uniq, np.bincount(inverse, weights=probs)


def _sum_law(parts, counts, budget):
    """Law of a sum with counts[k] independent copies of parts[k]"""
    law = (np.zeros(1, dtype=np.int64), np.ones(1))
    for part, count in zip(parts, counts):
        for _ in range(int(count)):
            law = _convolve(law, part, budget)
    return law


def _at_most(law, threshold):
    keys, probs = law
    return float(probs[keys <= int(math.floor(threshold * LATTICE + 0.5))].sum())


# ---------------------------------------------------------------- result assembly


def _result(failures, trials):
    p_hat = failures / trials
    half = 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / trials)
    low = failures < LOW_COUNT
    if low:
        logger.warning(f"Only {failures} failures in {trials} trials; the normal interval is unreliable")
    return SimResult(p_hat, half, trials, failures, low)


def _run_blocks(cfg, block_fn, chunk=TRIAL_CHUNK):
    starts = list(range(0, cfg.trials, chunk))

    def run(index):
        size = min(chunk, cfg.trials - starts[index])
        rng = np.random.default_rng([cfg.seed, index])
        return int(block_fn(rng, size))

    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            failures = sum(pool.map(run, range(len(starts))))
    else:
        failures = sum(run(i) for i in range(len(starts)))
    logger.debug(f"{failures} failures in {cfg.trials} trials over {len(starts)} blocks")
    return _result(failures, cfg.trials)


def _miss(ball, m):
    """(1 - ball)^m without underflow surprises"""
    ball = np.asarray(ball, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.exp(m * np.log1p(-np.minimum(ball, 1.0)))
    return np.where(ball >= 1.0, 0.0, np.where(ball <= 0.0, 1.0, out))


def _type_counts(samples, size):
    return np.stack([(samples == k).sum(axis=1) for k in range(size)], axis=1)


class SimulationService:
    @staticmethod
    def simulate_rd(p, d, D, codebook, cfg, budget=Config.LATTICE_BUDGET,
                    direct_limit=DIRECT_CODEBOOK_LIMIT):
        """Excess-distortion frequency of minimum-distortion encoding with an i.i.d. codebook"""
        dm = d.d
        n, m = cfg.n, cfg.m
        if codebook.size != dm.shape[1]:
            raise DomainError("codebook alphabet does not match the distortion matrix", key='codebook')
        limit = n * D + 1e-9

        parts = [_atoms(dm[x], codebook.probs) for x in range(p.size)]

        @lru_cache(maxsize=None)
        def ball(counts):
            return _at_most(_sum_law(parts, counts, budget), n * D)

        def block(rng, size):
            sources = rng.choice(p.size, size=(size, n), p=p.probs)
            if m <= direct_limit:
                failures = 0
                for x in sources:
                    words = rng.choice(codebook.size, size=(m, n), p=codebook.probs)
                    best = dm[x[None, :], words].sum(axis=1).min()
                    failures += best > limit
                return failures
            counts = _type_counts(sources, p.size)
            balls = np.array([ball(tuple(row)) for row in counts])
            return int(np.sum(rng.random(size) < _miss(balls, m)))

        logger.info(f"Simulating rate-distortion code n={n}, M={m}, trials={cfg.trials}")
        return _run_blocks(cfg, block)

    @staticmethod
    def ball_spherical(n, norm2, sigma2, D):
        """Probability that a codeword uniform on the sphere of radius sqrt(n(sigma2-D)) lies within nD"""
        r2 = n * (sigma2 - D)
        norm2 = np.asarray(norm2, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            t = (norm2 + r2 - n * D) / (2.0 * np.sqrt(norm2 * r2))
        t = np.where(norm2 > 0, t, np.where(r2 <= n * D, -np.inf, np.inf))
        half = (n - 1) / 2.0
        return np.where(t <= -1.0, 1.0,
                        np.where(t >= 1.0, 0.0, betainc(half, half, np.clip((1.0 - t) / 2.0, 0.0, 1.0))))

    @staticmethod
    def ball_iid(n, norm2, sigma2, D):
        """Probability that an i.i.d. N(0, sigma2-D) codeword lies within nD"""
        scale = sigma2 - D
        return ncx2.cdf(n * D / scale, n, np.asarray(norm2, dtype=float) / scale)

    @staticmethod
    def _sample_norms(rng, sampler, size, n, sigma2, zeta):
        """Squared norms of source sequences with second moment sigma2"""
        if sampler is SourceSampler.GAUSSIAN:
            x = rng.standard_normal((size, n)) * math.sqrt(sigma2)
        elif sampler is SourceSampler.UNIFORM_DISCRETE:
            x = rng.choice([-1.0, 1.0], size=(size, n)) * math.sqrt(sigma2)
        else:
            # symmetric three-point law {-c, 0, c} matching sigma2 and zeta
            c = math.sqrt(zeta / sigma2)
            q = sigma2 ** 2 / zeta
            x = rng.choice([-c, 0.0, c], size=(size, n), p=[q / 2, 1 - q, q / 2])
        return np.sum(x * x, axis=1)

    @staticmethod
    def simulate_mismatch(source_sampler, sigma2, D, codebook_kind, cfg, zeta=None):
        """Excess-distortion frequency of a Gaussian codebook on a source with second moment sigma2"""
        sampler = SourceSampler(source_sampler)
        kind = CodebookKind(codebook_kind)
        if sigma2 <= 0 or D <= 0:
            raise DomainError("sigma2 and D must be positive", key='D')
        if sampler is SourceSampler.CUSTOM_MOMENTS:
            if zeta is None:
                raise DomainError("custom moments need zeta", key='zeta')
            if zeta < sigma2 ** 2:
                raise MomentOrderViolation(f"zeta={zeta} is below sigma2^2", key='zeta')
        n, m = cfg.n, cfg.m

        def block(rng, size):
            norms = SimulationService._sample_norms(rng, sampler, size, n, sigma2, zeta)
            if D >= sigma2:
                # the zero codeword
                return int(np.sum(norms > n * D))
            if kind is CodebookKind.SPHERICAL:
                balls = SimulationService.ball_spherical(n, norms, sigma2, D)
            else:
                balls = SimulationService.ball_iid(n, norms, sigma2, D)
            return int(np.sum(rng.random(size) < _miss(balls, m)))

        logger.info(f"Simulating {kind.value} codebook on a {sampler.value} source, n={n}, M={m}")
        return _run_blocks(cfg, block)

    @staticmethod
    def simulate_noisy(px, ch, d, D, codebook, cfg, budget=Config.LATTICE_BUDGET,
                       direct_limit=DIRECT_CODEBOOK_LIMIT):
        """Excess-distortion frequency when the encoder sees the source through a channel"""
        n, m = cfg.n, cfg.m
        if m > direct_limit:
            raise BudgetExceeded(f"M={m} exceeds the explicit codebook limit {direct_limit}")
        dm = d.d
        na = dm.shape[1]
        joint = ch.joint(px).probs
        py = joint.sum(axis=0)
        ny = py.size
        post = joint / np.where(py > 0, py, 1.0)
        parts = [_atoms(dm[:, a], post[:, y]) if py[y] > 0 else (np.zeros(1, dtype=np.int64), np.ones(1))
                 for y in range(ny) for a in range(na)]
        limit = n * D + 1e-9

        @lru_cache(maxsize=None)
        def excess_given_y(counts):
            return 1.0 - _at_most(_sum_law(parts, counts, budget), n * D)

        def block(rng, size):
            failures = 0
            for _ in range(size):
                x = rng.choice(px.size, size=n, p=px.probs)
                u = rng.random(n)
                y = (u[:, None] > np.cumsum(ch.rows[x], axis=1)).sum(axis=1)
                y = np.minimum(y, ny - 1)
                words = rng.choice(na, size=(m, n), p=codebook.probs)
                pair = y[None, :] * na + words
                counts = _type_counts(pair, ny * na)
                uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
                pis = np.array([excess_given_y(tuple(row)) for row in uniq])
                chosen = int(np.argmin(pis[inverse.ravel()]))
                failures += dm[x, words[chosen]].sum() > limit
            return failures

        logger.info(f"Simulating noisy code n={n}, M={m}, trials={cfg.trials}")
        return _run_blocks(cfg, block)
