import itertools
import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from qasp_truss.encoding import QuboProblem
from qasp_truss.samplers import (
    MAX_EXHAUSTIVE_BITS,
    ExhaustiveSampler,
    RemoteHTTPError,
    RemoteProtocolError,
    RemoteSampler,
    RemoteTransportError,
    SamplerConfig,
    SimulatedAnnealingSampler,
    TooManyBitsError,
    make_sampler,
    make_server,
    sample,
)
from qasp_truss.samplers.base import Sample, derive_seed, rank_states
from qasp_truss.samplers.remote import decode_request, encode_request, parse_response, serve_in_thread


def brute_force(q: QuboProblem):
    bits = np.array(list(itertools.product([0, 1], repeat=q.n_bits)), dtype=np.int8)
    return bits, q.energies(bits)


def random_qubo(rng, n):
    return QuboProblem.from_matrix(rng.normal(size=(n, n)))


def test_exhaustive_finds_minimum(rng):
    for n in (1, 3, 6, 9):
        q = random_qubo(rng, n)
        bits, e = brute_force(q)
        best = ExhaustiveSampler(SamplerConfig(num_reads=5)).sample(q)
        assert best[0].energy == pytest.approx(e.min(), abs=1e-12)
        ref = np.sort(e)[: min(5, e.size)]
        np.testing.assert_allclose([s.energy for s in best], ref, atol=1e-12)


def test_exhaustive_tie_break_is_lexicographic():
    q = QuboProblem(np.zeros((3, 3)))
    out = ExhaustiveSampler(SamplerConfig(num_reads=8)).sample(q)
    assert [tuple(s.bits) for s in out] == list(itertools.product([0, 1], repeat=3))


def test_exhaustive_limit():
    q = QuboProblem(np.zeros((MAX_EXHAUSTIVE_BITS + 1,) * 2))
    with pytest.raises(TooManyBitsError):
        ExhaustiveSampler().sample(q)


def test_empty_problem():
    q = QuboProblem(np.zeros((0, 0)))
    for backend in ("exhaustive", "sa"):
        out = sample(q, backend=backend)
        assert out[0].bits.size == 0 and out[0].energy == 0.0


def test_sa_finds_minimum_small(rng):
    for n in (2, 5, 8, 12):
        q = random_qubo(rng, n)
        _, e = brute_force(q)
        out = SimulatedAnnealingSampler(SamplerConfig(num_reads=20, sa_sweeps=300)).sample(q, seed=7)
        assert out[0].energy == pytest.approx(e.min(), abs=1e-12)
        assert sum(s.occurrences for s in out) == 20
        energies = [s.energy for s in out]
        assert energies == sorted(energies)
        for s in out:
            assert s.energy == pytest.approx(q.energy(s.bits), abs=1e-12)


def test_sa_deterministic(rng):
    q = random_qubo(rng, 10)
    smp = SimulatedAnnealingSampler(SamplerConfig(num_reads=10, sa_sweeps=50))
    a, b = smp.sample(q, seed=3), smp.sample(q, seed=3)
    assert [(s.bits.tobytes(), s.energy, s.occurrences) for s in a] == [
        (s.bits.tobytes(), s.energy, s.occurrences) for s in b
    ]


def test_sa_seed_changes_stream(rng):
    q = QuboProblem(np.zeros((16, 16)))  # flat landscape: result is the random start
    smp = SimulatedAnnealingSampler(SamplerConfig(num_reads=1, sa_sweeps=1))
    assert smp.sample(q, seed=1)[0].bits.tobytes() != smp.sample(q, seed=2)[0].bits.tobytes()


def test_derive_seed():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert derive_seed(0, 1) != derive_seed(0, 2)
    assert derive_seed(0, 1, 0) != derive_seed(0, 1, 1)
    assert 0 <= derive_seed(-5, 3) < 2**64


def test_rank_states_order():
    q = QuboProblem(np.diag([1.0, 1.0]))
    out = rank_states(q, [[1, 1], [0, 1], [1, 0], [0, 0]])
    assert [tuple(s.bits) for s in out] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(rank_states(q, [[1, 1], [0, 0]], limit=1)) == 1


def test_sample_validation():
    with pytest.raises(ValueError):
        Sample(np.zeros(2), 0.0, 0)
    with pytest.raises(ValueError):
        SamplerConfig(num_reads=0)


def test_make_sampler():
    assert make_sampler("exhaustive").name == "exhaustive"
    assert make_sampler("sa").name == "sa"
    with pytest.raises(ValueError):
        make_sampler("remote")
    with pytest.raises(ValueError):
        make_sampler("dwave")


# -- remote protocol --------------------------------------------------------

@pytest.fixture(scope="module")
def loopback():
    server = make_server(backend="exhaustive")
    serve_in_thread(server)
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_request_roundtrip(rng):
    q = random_qubo(rng, 4)
    payload = json.loads(json.dumps(encode_request(q, SamplerConfig(num_reads=7, seed=11))))
    again, reads, seed = decode_request(payload)
    np.testing.assert_array_equal(again.q, q.q)
    assert (reads, seed) == (7, 11)


def test_remote_matches_local(loopback, rng):
    q = random_qubo(rng, 6)
    cfg = SamplerConfig(num_reads=4)
    remote = RemoteSampler(loopback, cfg).sample(q, seed=5)
    local = ExhaustiveSampler(cfg).sample(q, seed=5)
    assert [s.bits.tolist() for s in remote] == [s.bits.tolist() for s in local]
    np.testing.assert_allclose([s.energy for s in remote], [s.energy for s in local], rtol=0, atol=0)


def test_remote_via_dispatch(loopback):
    q = QuboProblem(np.array([[-1.0]]))
    out = sample(q, SamplerConfig(num_reads=1), backend="remote", endpoint=loopback)
    assert out[0].bits.tolist() == [1]


def test_remote_server_errors(loopback):
    import urllib.error
    import urllib.request

    def post(path, body):
        req = urllib.request.Request(loopback + path, data=body, method="POST")
        with pytest.raises(urllib.error.HTTPError) as exc:
            urllib.request.urlopen(req, timeout=5)
        return exc.value.code

    assert post("/nope", b"{}") == 404
    assert post("/v1/sample", b"not json") == 400
    assert post("/v1/sample", json.dumps({"n_bits": 1, "qubo": [[0, 5, 1.0]]}).encode()) == 400
    big = {"n_bits": 30, "qubo": [[0, 0, 1.0]], "num_reads": 1}
    assert post("/v1/sample", json.dumps(big).encode()) == 422


class _Canned(BaseHTTPRequestHandler):
    status = 200
    body = b"{}"

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        self.send_response(self.status)
        self.send_header("Content-Length", str(len(self.body)))
        self.end_headers()
        self.wfile.write(self.body)

    def log_message(self, *args):
        pass


def canned_server(status, payload):
    body = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
    handler = type("H", (_Canned,), {"status": status, "body": body})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server, f"http://127.0.0.1:{server.server_address[1]}"


Q1 = QuboProblem(np.array([[-1.0, 0.5], [0.0, 2.0]]))


@pytest.mark.parametrize(
    "status,payload,error",
    [
        (500, b"boom", RemoteHTTPError),
        (200, b"not json", RemoteProtocolError),
        (200, {"samples": []}, RemoteProtocolError),
        (200, {"samples": [{"bits": [1], "energy": -1.0}]}, RemoteProtocolError),
        (200, {"samples": [{"bits": [1, 2], "energy": -1.0}]}, RemoteProtocolError),
        (200, {"samples": [{"bits": [1, 0], "energy": -5.0}]}, RemoteProtocolError),
        (200, {"samples": [{"bits": [0, 0], "energy": 0.0}, {"bits": [1, 0], "energy": -1.0}]}, RemoteProtocolError),
        (200, {"oops": 1}, RemoteProtocolError),
    ],
)
def test_remote_client_errors(status, payload, error):
    server, url = canned_server(status, payload)
    try:
        with pytest.raises(error):
            RemoteSampler(url).sample(Q1)
    finally:
        server.shutdown()
        server.server_close()


def test_remote_http_status_recorded():
    server, url = canned_server(503, b"busy")
    try:
        with pytest.raises(RemoteHTTPError) as exc:
            RemoteSampler(url).sample(Q1)
        assert exc.value.status == 503
    finally:
        server.shutdown()
        server.server_close()


def test_remote_valid_canned_response():
    server, url = canned_server(200, {"samples": [{"bits": [1, 0], "energy": -1.0, "occurrences": 3}]})
    try:
        out = RemoteSampler(url).sample(Q1)
        assert out[0].bits.tolist() == [1, 0] and out[0].occurrences == 3
    finally:
        server.shutdown()
        server.server_close()


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_remote_unreachable():
    url = f"http://127.0.0.1:{free_port()}"
    with pytest.raises(RemoteTransportError):
        RemoteSampler(url, SamplerConfig(timeout=1.0, retries=1)).sample(Q1)


def test_remote_timeout():
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    try:
        url = f"http://127.0.0.1:{listener.getsockname()[1]}"
        with pytest.raises(RemoteTransportError):
            RemoteSampler(url, SamplerConfig(timeout=0.3)).sample(Q1)
    finally:
        listener.close()


def test_parse_response_recomputes_energy():
    out = parse_response(Q1, {"samples": [{"bits": [1, 1], "energy": 1.5 + 1e-12}]})
    assert out[0].energy == 1.5
