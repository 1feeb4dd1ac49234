"""QUBO samplers behind one contract.

``sampler.sample(problem, seed=None)`` returns a non-empty list of
:class:`Sample` sorted by ascending energy (offset excluded), ties broken
towards the lexicographically smallest bit vector.
"""
from .base import Sample, SamplerConfig, derive_seed
from .local import (
    MAX_EXHAUSTIVE_BITS,
    ExhaustiveSampler,
    SimulatedAnnealingSampler,
    TooManyBitsError,
    exhaustive_sample,
    simulated_annealing_sample,
)
from .remote import (
    RemoteHTTPError,
    RemoteProtocolError,
    RemoteSampler,
    RemoteSamplerError,
    RemoteTransportError,
    make_server,
    remote_sample,
)


def sample(problem, config=None, backend="exhaustive", endpoint=None):
    """Dispatch to a backend by name."""
    config = config or SamplerConfig()
    if backend == "exhaustive":
        return exhaustive_sample(problem, config)
    if backend == "sa":
        return simulated_annealing_sample(problem, config)
    if backend == "remote":
        if not endpoint:
            raise ValueError("remote backend needs an endpoint")
        return remote_sample(problem, config, endpoint)
    raise ValueError(f"unknown sampler backend {backend!r}")


def make_sampler(backend: str, config=None, endpoint=None):
    config = config or SamplerConfig()
    if backend == "exhaustive":
        return ExhaustiveSampler(config)
    if backend == "sa":
        return SimulatedAnnealingSampler(config)
    if backend == "remote":
        if not endpoint:
            raise ValueError("remote backend needs an endpoint")
        return RemoteSampler(endpoint, config)
    raise ValueError(f"unknown sampler backend {backend!r}")


__all__ = [
    "MAX_EXHAUSTIVE_BITS",
    "ExhaustiveSampler",
    "RemoteHTTPError",
    "RemoteProtocolError",
    "RemoteSampler",
    "RemoteSamplerError",
    "RemoteTransportError",
    "Sample",
    "SamplerConfig",
    "SimulatedAnnealingSampler",
    "TooManyBitsError",
    "derive_seed",
    "exhaustive_sample",
    "make_sampler",
    "make_server",
    "remote_sample",
    "sample",
    "simulated_annealing_sample",
]
