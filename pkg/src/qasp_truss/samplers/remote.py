"""HTTP JSON sampler protocol: client and a small reference server.

Request ``POST {endpoint}/v1/sample``::

    {"n_bits": int, "qubo": [[i, j, value], ...], "num_reads": int, "seed": int}

Response (HTTP 200 only)::

    {"samples": [{"bits": [0|1, ...], "energy": float, "occurrences": int}, ...]}

with samples sorted by ascending energy.
"""
from __future__ import annotations

import json
import logging
import socket
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from ..encoding import QuboProblem
from .base import Sample, SamplerConfig, empty_result
from .local import exhaustive_sample, simulated_annealing_sample

log = logging.getLogger(__name__)

ENERGY_TOLERANCE = 1e-9
SAMPLE_PATH = "/v1/sample"


class RemoteSamplerError(RuntimeError):
    pass


class RemoteTransportError(RemoteSamplerError):
    """Endpoint unreachable or timed out."""


class RemoteHTTPError(RemoteSamplerError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"sampler returned HTTP {status}: {body[:200]}")
        self.status = status


class RemoteProtocolError(RemoteSamplerError):
    """Response does not follow the wire protocol."""


def encode_request(problem: QuboProblem, config: SamplerConfig) -> dict:
    return {
        "n_bits": problem.n_bits,
        "qubo": problem.triplets(),
        "num_reads": config.num_reads,
        "seed": int(config.seed),
    }


def decode_request(payload: dict) -> tuple[QuboProblem, int, int]:
    try:
        n_bits = int(payload["n_bits"])
        problem = QuboProblem.from_triplets(n_bits, payload["qubo"])
        num_reads = int(payload.get("num_reads", 1))
        seed = int(payload.get("seed", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed request: {exc}") from exc
    if any(int(i) > int(j) for i, j, _ in payload["qubo"]):
        raise ValueError("qubo triplets must have i <= j")
    return problem, num_reads, seed


def parse_response(problem: QuboProblem, payload) -> list[Sample]:
    """Validate a response body and recompute every energy locally."""
    try:
        raw = payload["samples"]
        if not isinstance(raw, list) or not raw:
            raise RemoteProtocolError("response has no samples")
        samples = []
        for item in raw:
            bits = np.asarray(item["bits"])
            if bits.shape != (problem.n_bits,) or not np.isin(bits, (0, 1)).all():
                raise RemoteProtocolError(f"sample bits malformed: {item['bits']!r}")
            energy = float(item["energy"])
            local = float(problem.energies(bits[None, :])[0])
            if abs(energy - local) > ENERGY_TOLERANCE * max(1.0, abs(local)):
                raise RemoteProtocolError(f"reported energy {energy} but bits give {local}")
            samples.append(Sample(bits, local, int(item.get("occurrences", 1))))
    except RemoteProtocolError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise RemoteProtocolError(f"malformed response: {exc}") from exc
    energies = [s.energy for s in samples]
    if any(b < a - ENERGY_TOLERANCE * max(1.0, abs(a)) for a, b in zip(energies, energies[1:])):
        raise RemoteProtocolError("samples not sorted by energy")
    return samples


def remote_sample(problem: QuboProblem, config: SamplerConfig, endpoint: str) -> list[Sample]:
    if problem.n_bits == 0:
        return empty_result()
    body = json.dumps(encode_request(problem, config)).encode()
    url = endpoint.rstrip("/") + SAMPLE_PATH
    attempts = 1 + max(0, config.retries)
    for attempt in range(attempts):
        req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=config.timeout) as resp:
                status, text = resp.status, resp.read().decode()
        except urllib.error.HTTPError as exc:
            raise RemoteHTTPError(exc.code, exc.read().decode(errors="replace")) from exc
        except (urllib.error.URLError, socket.timeout, ConnectionError, TimeoutError) as exc:
            if attempt + 1 < attempts:
                log.warning("sampler request to %s failed (%s); retrying", url, exc)
                continue
            raise RemoteTransportError(f"cannot reach sampler at {url}: {exc}") from exc
        if status != 200:
            raise RemoteHTTPError(status, text)
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RemoteProtocolError(f"response is not JSON: {exc}") from exc
        return parse_response(problem, payload)
    raise AssertionError("unreachable")


class RemoteSampler:
    name = "remote"

    def __init__(self, endpoint: str, config: SamplerConfig | None = None):
        self.endpoint = endpoint
        self.config = config or SamplerConfig()

    def sample(self, problem: QuboProblem, seed: int | None = None) -> list[Sample]:
        cfg = self.config if seed is None else self.config.with_seed(seed)
        return remote_sample(problem, cfg, self.endpoint)


def _make_handler(backend: str, sa_sweeps: int):
    solve = {"sa": simulated_annealing_sample, "exhaustive": exhaustive_sample}[backend]

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path.rstrip("/") != SAMPLE_PATH:
                self._reply(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                problem, num_reads, seed = decode_request(json.loads(self.rfile.read(length)))
            except (ValueError, json.JSONDecodeError) as exc:
                self._reply(400, {"error": str(exc)})
                return
            try:
                cfg = SamplerConfig(num_reads=max(1, num_reads), seed=seed, sa_sweeps=sa_sweeps)
                samples = solve(problem, cfg)
            except ValueError as exc:
                self._reply(422, {"error": str(exc)})
                return
            self._reply(200, {"samples": [s.as_dict() for s in samples]})

        def _reply(self, status, payload):
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, fmt, *args):
            log.debug("%s - " + fmt, self.address_string(), *args)

    return Handler


def make_server(host: str = "127.0.0.1", port: int = 0, backend: str = "sa", sa_sweeps: int = 1000):
    """A ``ThreadingHTTPServer`` answering the sampler protocol with a local backend."""
    return ThreadingHTTPServer((host, port), _make_handler(backend, sa_sweeps))


def serve_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
