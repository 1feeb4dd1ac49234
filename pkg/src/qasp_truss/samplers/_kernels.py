"""Hot loops for the QUBO samplers.

Each kernel has a numba loop version and a vectorised numpy version. Both
draw random numbers from the same counter-based generator (splitmix64 of
``key + counter * golden``), so the two paths follow the same random stream.
"""
import numpy as np

from .._accel import USE_NUMBA, njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


def _uniform_np(keys, counter):
    """Uniform [0, 1) for an array of uint64 keys at one counter value."""
    with np.errstate(over="ignore"):
        z = keys + np.uint64(counter) * _GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        z = z ^ (z >> _S31)
    return (z >> _S11).astype(np.float64) * _INV53


@njit
def _uniform_nb(key, counter):
    z = key + np.uint64(counter) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def _schedule(q, sweeps):
    t0 = np.abs(q).max(initial=0.0)
    if t0 == 0.0:
        t0 = 1.0
    if sweeps == 1:
        return np.array([t0 * 1e-3])
    return t0 * (1e-3) ** (np.arange(sweeps) / (sweeps - 1))


@njit
def _anneal_nb(diag, coupling, temps, keys):
    n_reads = keys.size
    n = diag.size
    out = np.zeros((n_reads, n), dtype=np.int8)
    b = np.zeros(n, dtype=np.int8)
    field = np.zeros(n)
    for r in range(n_reads):
        key = keys[r]
        for i in range(n):
            b[i] = 1 if _uniform_nb(key, i) < 0.5 else 0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if b[j]:
                    acc += coupling[i, j]
            field[i] = acc
        energy = 0.0
        for i in range(n):
            if b[i]:
                energy += diag[i] + 0.5 * field[i]
        best = energy
        for i in range(n):
            out[r, i] = b[i]
        for s in range(temps.size):
            t = temps[s]
            base = n + s * n
            for i in range(n):
                step = 1 - 2 * b[i]
                de = (diag[i] + field[i]) * step
                # Counter-based draws: skipping one leaves the stream unchanged.
                if de <= 0.0 or _uniform_nb(key, base + i) < np.exp(-de / t):
                    b[i] = 1 - b[i]
                    for j in range(n):
                        field[j] += coupling[i, j] * step
                    energy += de
                    if energy < best:
                        best = energy
                        for j in range(n):
                            out[r, j] = b[j]
    return out


def _anneal_np(diag, coupling, temps, keys):
    n = diag.size
    rows = np.arange(keys.size)
    b = np.stack([_uniform_np(keys, i) < 0.5 for i in range(n)], axis=1).astype(np.int8)
    # Same summation order as the loop kernel.
    field = np.zeros((keys.size, n))
    for j in range(n):
        field += b[:, j : j + 1] * coupling[:, j]
    energy = np.zeros(keys.size)
    for i in range(n):
        energy += b[:, i] * (diag[i] + 0.5 * field[:, i])
    best = energy.copy()
    out = b.copy()
    for s, t in enumerate(temps):
        base = n + s * n
        for i in range(n):
            step = 1 - 2 * b[:, i]
            de = (diag[i] + field[:, i]) * step
            u = _uniform_np(keys, base + i)
            with np.errstate(over="ignore"):
                acc = (de <= 0.0) | (u < np.exp(-de / t))
            if not acc.any():
                continue
            flip = rows[acc]
            b[flip, i] = 1 - b[flip, i]
            field[flip] += np.outer(step[flip], coupling[:, i])
            energy[flip] += de[flip]
            improved = flip[energy[flip] < best[flip]]
            best[improved] = energy[improved]
            out[improved] = b[improved]
    return out


def anneal(q, sweeps, keys, use_numba=None):
    """Best state of each restart; one restart per uint64 key."""
    q = np.asarray(q, dtype=np.float64)
    keys = np.asarray(keys, dtype=np.uint64)
    diag = np.ascontiguousarray(np.diag(q))
    upper = np.triu(q, 1)
    coupling = np.ascontiguousarray(upper + upper.T)
    temps = _schedule(q, sweeps)
    if USE_NUMBA if use_numba is None else use_numba:
        return _anneal_nb(diag, coupling, temps, keys)
    return _anneal_np(diag, coupling, temps, keys)


@njit
def _enumerate_nb(diag, coupling):
    """Energies of all 2**n states by Gray-code traversal, indexed by state."""
    n = diag.size
    total = 1 << n
    out = np.empty(total)
    b = np.zeros(n, dtype=np.int8)
    field = np.zeros(n)
    energy = 0.0
    state = 0
    out[0] = 0.0
    for g in range(1, total):
        i = 0
        while not (g >> i) & 1:
            i += 1
        step = 1 - 2 * b[i]
        energy += (diag[i] + field[i]) * step
        b[i] = 1 - b[i]
        for j in range(n):
            field[j] += coupling[j, i] * step
        state ^= 1 << i
        out[state] = energy
    return out


def _enumerate_np(q, chunk=1 << 16):
    n = q.shape[0]
    total = 1 << n
    out = np.empty(total)
    shifts = np.arange(n)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        bits = ((idx[:, None] >> shifts) & 1).astype(np.float64)
        out[start : start + idx.size] = np.einsum("ri,ij,rj->r", bits, q, bits)
    return out


def enumerate_energies(q, use_numba=None):
    """``b'Qb`` for every state; bit ``i`` of the state index is ``b_i``."""
    q = np.asarray(q, dtype=np.float64)
    if USE_NUMBA if use_numba is None else use_numba:
        diag = np.ascontiguousarray(np.diag(q))
        upper = np.triu(q, 1)
        return _enumerate_nb(diag, np.ascontiguousarray(upper + upper.T))
    return _enumerate_np(q)
