"""Truss equilibrium and compliance minimisation by QUBO-based sequential programming."""
from .encoding import EncodingSpec, QuboProblem, decode, qubo_from_quadratic, qubo_to_ising
from .optimizer import OptConfig, optimize, solve_equilibrium, update_design
from .qasp import QaspConfig, QaspProblem, QaspResult, run_qasp
from .quadform import QuadraticForm, penalty_augment, taylor2
from .samplers import ExhaustiveSampler, SamplerConfig, SimulatedAnnealingSampler, make_sampler
from .truss import TrussModel, TrussSystem, make_model

__version__ = "0.1.0"
