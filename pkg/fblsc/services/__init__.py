"""
Services Package
================

This package contains the numerical services of the fblsc toolkit.

Services:
- ProbService: entropies, information densities, Gaussian tails, bivariate normal CDF
- RdService: rate-distortion, conditional, joint and noisy problems, channel capacity
- KaspiService: rate-distortion with side information possibly absent
- SrService: successive refinement and the Fu-Yeung problem
- GwService: Gray-Wyner common rate search
- BoundsService: exact non-asymptotic bounds by type enumeration
- ExpansionService: second-order expansions, exponents and the JSCC tradeoff
- RegionService: second-order coding regions
- GaussMarkovService: reverse waterfilling for Gauss-Markov sources
- OracleService: closed forms of the worked examples
- SimulationService: Monte Carlo random-codebook simulation

These services are used by the command handlers to separate numerics from the CLI.
"""

from .prob_service import ProbService
from .rd_service import RdService
from .kaspi_service import KaspiService
from .sr_service import SrService
from .gw_service import GwService
from .bounds_service import BoundsService
from .expansion_service import ExpansionService
from .region_service import RegionService
from .gauss_markov_service import GaussMarkovService
from .oracle_service import OracleService
from .simulation_service import SimulationService

# Export all services for easy access
__all__ = [
    'ProbService', 'RdService', 'KaspiService', 'SrService', 'GwService', 'BoundsService',
    'ExpansionService', 'RegionService', 'GaussMarkovService', 'OracleService', 'SimulationService',
]

# Package metadata
__version__ = '1.0.0'
__author__ = 'fblsc developers'
__description__ = 'Finite-blocklength lossy source coding services'

# Service instances for easy access
prob_service = ProbService()
rd_service = RdService()
kaspi_service = KaspiService()
sr_service = SrService()
gw_service = GwService()
bounds_service = BoundsService()
expansion_service = ExpansionService()
region_service = RegionService()
gauss_markov_service = GaussMarkovService()
oracle_service = OracleService()
simulation_service = SimulationService()
