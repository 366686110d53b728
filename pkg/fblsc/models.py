"""
Domain types shared by the solvers, the bounds and the command line.

Probability objects validate themselves on construction; solver outputs are
plain frozen records.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from fblsc.errors import DomainError

PROB_TOL = 1e-12
ZERO_MASS = 1e-15


class Units(enum.Enum):
    NATS = 'nats'
    BITS = 'bits'


class CodebookKind(enum.Enum):
    SPHERICAL = 'spherical'
    IID_GAUSSIAN = 'iid_gaussian'


class SourceSampler(enum.Enum):
    GAUSSIAN = 'gaussian'
    UNIFORM_DISCRETE = 'uniform-discrete'
    CUSTOM_MOMENTS = 'custom'


class RegionKind(enum.Enum):
    HALFSPACE = 'halfspace'
    UNIVARIATE = 'univariate'
    BIVARIATE_TRACED = 'bivariate-traced'


class SrCase(enum.Enum):
    I = 'i'
    II = 'ii'
    III = 'iii'


class FyCase(enum.Enum):
    I = 'i'
    II = 'ii'
    III = 'iii'
    IV = 'iv'
    V = 'v'


class ExampleId(enum.Enum):
    BMS = 'bms'
    NOISY_BEC = 'noisy_bec'
    KASPI_BEC = 'kaspi_bec'
    KASPI_DSBS = 'kaspi_dsbs'
    SR_BINARY = 'sr_binary'
    FY_EXAMPLE = 'fy_example'
    GW_DSBS = 'gw_dsbs'


def _labels(labels, size):
    if labels is None:
        return tuple(range(size))
    labels = tuple(labels)
    if len(labels) != size:
        raise DomainError(f"expected {size} labels, got {len(labels)}", key='labels')
    if len(set(labels)) != size:
        raise DomainError("labels must be distinct", key='labels')
    return labels


def _check_simplex(probs, what, axis=None):
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise DomainError(f"{what} has negative or non-finite entries", key=what)
    total = probs.sum(axis=axis)
    if np.any(np.abs(total - 1.0) > PROB_TOL * max(1, probs.shape[-1])):
        raise DomainError(f"{what} does not sum to one", key=what)


# ---------------------------------------------------------------- probability


@dataclass(frozen=True, eq=False)
class Pmf:
    probs: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).ravel()
        _check_simplex(probs, 'pmf')
        probs = np.where(probs < ZERO_MASS, 0.0, probs)
        object.__setattr__(self, 'probs', probs)
        object.__setattr__(self, 'labels', _labels(self.labels, probs.size))

    @classmethod
    def bernoulli(cls, p):
        """Binary pmf with P(1) = p"""
        return cls([1.0 - p, p], labels=(0, 1))

    @classmethod
    def uniform(cls, size):
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self):
        return self.probs.size

    @property
    def support(self):
        return self.probs > 0


@dataclass(frozen=True, eq=False)
class JointPmf:
    probs: np.ndarray
    row_labels: tuple = None
    col_labels: tuple = None

    def __post_init__(self):
        probs = np.atleast_2d(np.asarray(self.probs, dtype=float))
        _check_simplex(probs.ravel(), 'joint')
        probs = np.where(probs < ZERO_MASS, 0.0, probs)
        object.__setattr__(self, 'probs', probs)
        object.__setattr__(self, 'row_labels', _labels(self.row_labels, probs.shape[0]))
        object.__setattr__(self, 'col_labels', _labels(self.col_labels, probs.shape[1]))

    @classmethod
    def product(cls, px, py):
        return cls(np.outer(px.probs, py.probs), px.labels, py.labels)

    @classmethod
    def dsbs(cls, p):
        """Doubly symmetric binary source with crossover p"""
        return cls([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])

    @property
    def shape(self):
        return self.probs.shape

    def marginal_x(self):
        return Pmf(self.probs.sum(axis=1), self.row_labels)

    def marginal_y(self):
        return Pmf(self.probs.sum(axis=0), self.col_labels)

    def flat(self):
        """The pair (X, Y) as a single source over row-major pairs"""
        labels = tuple((a, b) for a in self.row_labels for b in self.col_labels)
        return Pmf(self.probs.ravel(), labels)


@dataclass(frozen=True, eq=False)
class CondPmf:
    rows: np.ndarray
    input_labels: tuple = None
    output_labels: tuple = None

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        _check_simplex(rows, 'channel', axis=1)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'input_labels', _labels(self.input_labels, rows.shape[0]))
        object.__setattr__(self, 'output_labels', _labels(self.output_labels, rows.shape[1]))

    @classmethod
    def bsc(cls, q):
        return cls([[1 - q, q], [q, 1 - q]])

    @classmethod
    def bec(cls, delta):
        """Binary erasure channel; output labels (0, 'e', 1)"""
        return cls([[1 - delta, delta, 0.0], [0.0, delta, 1 - delta]],
                   input_labels=(0, 1), output_labels=(0, 'e', 1))

    @classmethod
    def identity(cls, size):
        return cls(np.eye(size))

    def joint(self, pmf):
        return JointPmf(pmf.probs[:, None] * self.rows, pmf.labels, self.output_labels)

    def output(self, pmf):
        return Pmf(pmf.probs @ self.rows, self.output_labels)


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    d: np.ndarray
    source_labels: tuple = None
    repro_labels: tuple = None

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.d, dtype=float))
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise DomainError("distortion entries must be finite and nonnegative", key='distortion')
        object.__setattr__(self, 'd', d)
        object.__setattr__(self, 'source_labels', _labels(self.source_labels, d.shape[0]))
        object.__setattr__(self, 'repro_labels', _labels(self.repro_labels, d.shape[1]))

    @classmethod
    def hamming(cls, size, repro_size=None):
        repro_size = size if repro_size is None else repro_size
        return cls(1.0 - np.eye(size, repro_size))

    @property
    def shape(self):
        return self.d.shape


@dataclass(frozen=True)
class Covariance2:
    v11: float
    v22: float
    v12: float

    def __post_init__(self):
        if self.v11 < -PROB_TOL or self.v22 < -PROB_TOL:
            raise DomainError("variances must be nonnegative", key='cov')
        if self.v12 ** 2 > self.v11 * self.v22 + PROB_TOL:
            raise DomainError("covariance is not positive semidefinite", key='cov')

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        v11, v22 = max(m[0, 0], 0.0), max(m[1, 1], 0.0)
        v12 = float(np.clip(m[0, 1], -math.sqrt(v11 * v22), math.sqrt(v11 * v22)))
        return cls(v11, v22, v12)

    @property
    def matrix(self):
        return np.array([[self.v11, self.v12], [self.v12, self.v22]])

    def rank(self, threshold=1e-9):
        eig = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(eig > threshold))


# ---------------------------------------------------------------- solver outputs


@dataclass(frozen=True, eq=False)
class TiltedTable:
    values: np.ndarray
    probs: np.ndarray
    mean: float
    variance: float
    third_abs_moment: float
    labels: tuple = None

    @classmethod
    def from_values(cls, values, probs, labels=None):
        values = np.asarray(values, dtype=float).ravel()
        probs = np.asarray(probs, dtype=float).ravel()
        # off-support values never enter a moment
        safe = np.where(probs > 0, values, 0.0)
        mean = float(np.dot(probs, safe))
        centered = np.where(probs > 0, safe - mean, 0.0)
        variance = float(np.dot(probs, centered ** 2))
        third = float(np.dot(probs, np.abs(centered) ** 3))
        return cls(values, probs, mean, variance, third, labels)

    @property
    def berry_esseen_ratio(self):
        if self.variance <= 0:
            return None
        return self.third_abs_moment / self.variance ** 1.5


@dataclass(frozen=True, eq=False)
class RdSolution:
    rate: float
    lambda_star: float
    test_channel: CondPmf
    repro_marginal: Pmf
    distortion_achieved: float
    warning: Optional[str] = None
    iterations: int = 0


@dataclass(frozen=True, eq=False)
class ConditionalRdSolution:
    rate: float
    lambda_star: float
    slices: tuple
    condition_probs: np.ndarray
    distortion_achieved: float
    warning: Optional[str] = None


@dataclass(frozen=True, eq=False)
class JointRdSolution:
    rate: float
    nu1: float
    nu2: float
    test_channel: np.ndarray
    repro_marginal: np.ndarray
    tilted: TiltedTable
    distortions_achieved: tuple


@dataclass(frozen=True, eq=False)
class NoisyRdSolution:
    rate: float
    lambda_star: float
    surrogate_distortion: DistortionMatrix
    surrogate: RdSolution
    tilted_y: TiltedTable
    tilted_xy: np.ndarray
    dispersion_tilde: float
    surrogate_dispersion: float


@dataclass(frozen=True, eq=False)
class ChannelSolution:
    capacity: float
    caod: Pmf
    caid: Pmf
    dispersion_vc: float


@dataclass(frozen=True, eq=False)
class KaspiSolution:
    rate: float
    lambda1_star: float
    lambda2_star: float
    alpha2: np.ndarray
    alpha: np.ndarray
    tilted: TiltedTable
    q1: np.ndarray
    q2: np.ndarray
    residuals: tuple = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class SrSolution:
    sum_rate: float
    xi_star: float
    nu1_star: float
    nu2_star: float
    tilted: TiltedTable
    tilted_d1: TiltedTable
    cov: Covariance2
    r1: float
    rate_d1: float
    rate_d2: float

    @property
    def rank(self):
        return self.cov.rank()


@dataclass(frozen=True, eq=False)
class FySolution:
    sum_rate_excess: float
    xi_star: float
    lambda1_star: float
    lambda2_star: float
    beta: np.ndarray
    beta2: np.ndarray
    tilted: TiltedTable
    tilted_d1: TiltedTable
    neg_log_py: np.ndarray
    entropy_y: float
    var_y: float
    cov1: Covariance2
    cov2: Covariance2
    r1: float
    rate_d1: float
    residuals: tuple = (0.0, 0.0)


@dataclass(frozen=True, eq=False)
class FyBoundaryRates:
    rate_d1: float
    r1_star: float
    r2_star: float
    entropy_y: float


@dataclass(frozen=True, eq=False)
class PanglossRecord:
    joint_rd_rate: float
    nu1: float
    nu2: float
    tilted_ixy: TiltedTable
    residual: float


@dataclass(frozen=True, eq=False)
class GwSolution:
    common_rate: float
    xi1_star: float
    xi2_star: float
    lambda1_star: float
    lambda2_star: float
    aux_channel: CondPmf
    tilted: TiltedTable
    pangloss: Optional[PanglossRecord] = None
    certified: bool = False
    evaluations: int = 0


@dataclass(frozen=True)
class ClosedFormResult:
    example: ExampleId
    params: dict
    values: dict


# ---------------------------------------------------------------- bounds


@dataclass(frozen=True, eq=False)
class TailDistribution:
    """Exact law of an n-fold sum; atoms sorted by value"""
    n: int
    values: np.ndarray
    log_probs: np.ndarray

    @property
    def probs(self):
        return np.exp(self.log_probs)

    def tail(self, t):
        """Pr{S >= t} with values equal to t up to rounding counted in"""
        if t == -math.inf:
            return 1.0
        tol = 1e-12 * max(1.0, abs(t))
        start = int(np.searchsorted(self.values, t - tol, side='left'))
        if start >= self.values.size:
            return 0.0
        return float(min(1.0, math.exp(logsumexp(self.log_probs[start:]))))


@dataclass(frozen=True)
class BoundPoint:
    n: int
    log_m: float
    ach_upper: float
    conv_lower: float
    conv_raw: float


# ---------------------------------------------------------------- second order


@dataclass(frozen=True)
class Expansion:
    n: int
    first_order: float
    dispersion: float
    eps: float
    log_n_coeff: float
    value: float
    remainder_flag: Optional[str] = None

    @property
    def rate(self):
        return self.value / self.n


@dataclass(frozen=True, eq=False)
class ExponentResult:
    error_exponent: float
    csiszar_longo: float
    moderate_constant: float
    rho: float
    tilted: Optional[Pmf] = None
    infinite_exponent: bool = False
    infinite_moderate: bool = False


@dataclass(frozen=True)
class JsccResult:
    n_star_approx: float
    l_jscc: float
    l_sscc: float
    eps1_star: float


@dataclass(frozen=True, eq=False)
class RegionBoundary:
    kind: RegionKind
    coeffs: Optional[tuple] = None
    threshold: Optional[float] = None
    points: Optional[np.ndarray] = None
    label: str = ''


@dataclass(frozen=True)
class GmSolution:
    a: float
    sigma2: float
    distortion: float
    theta_d: float
    rate_gm: float
    v_gm: float
    d_c: float
    d_max: float

    def spectrum(self, w):
        return self.sigma2 / (1.0 + self.a ** 2 - 2.0 * self.a * np.cos(w))

    def error_spectrum(self, w):
        """Reconstruction error spectrum min(theta_D, h(w))"""
        return np.minimum(self.theta_d, self.spectrum(w))


# ---------------------------------------------------------------- simulation / cli


@dataclass(frozen=True)
class SimConfig:
    n: int
    log_m: float
    trials: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be at least 1", key='trials')
        if self.n < 1:
            raise DomainError("n must be at least 1", key='n')
        if self.log_m < 0:
            raise DomainError("log_M must be nonnegative", key='log_M')

    @property
    def m(self):
        return max(1, int(round(math.exp(self.log_m))))


@dataclass(frozen=True)
class SimResult:
    p_hat: float
    ci_half_width: float
    trials_used: int
    failures: int
    low_count: bool = False


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    sweep: Optional[tuple] = None
    eps: Optional[float] = None
    output_path: Optional[str] = None
    seed: Optional[int] = None
    units: Units = Units.NATS


@dataclass
class CurveRow:
    x: float
    columns: dict = field(default_factory=dict)
