"""Independent reference computations used only by the tests."""
import itertools

import numpy as np
import scipy.linalg

from qasp_truss.truss import TrussSystem


def dense_stiffness(model):
    """Full (unreduced) stiffness at alpha = 1, assembled bar by bar from scratch."""
    d = model.dimension
    k = np.zeros((model.n_dofs, model.n_dofs))
    for b in model.bars:
        x = model.nodes[b.j] - model.nodes[b.i]
        length = np.sqrt(x @ x)
        c = x / length
        blk = b.E * b.area0 / length * np.outer(c, c)
        ii = slice(d * b.i, d * b.i + d)
        jj = slice(d * b.j, d * b.j + d)
        k[ii, ii] += blk
        k[jj, jj] += blk
        k[ii, jj] -= blk
        k[jj, ii] -= blk
    return k


def fd_compliance_gradient(system: TrussSystem, alpha, rel_step=1e-6):
    """Central differences of C(alpha) through the direct solve."""
    alpha = np.asarray(alpha, dtype=float)
    grad = np.zeros_like(alpha)
    for i in range(alpha.size):
        h = rel_step * alpha[i]
        up, dn = alpha.copy(), alpha.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (system.compliance(up) - system.compliance(dn)) / (2 * h)
    return grad


def grid_minimisers(form, d_min, eps, L):
    """Brute-force minimum of the form over the decoded grid, plus all argmins (as index tuples)."""
    levels = [d_min[i] + eps[i] * np.arange(2**L) if eps[i] > 0 else np.array([d_min[i]])
              for i in range(len(d_min))]
    best, arg = np.inf, []
    for idx in itertools.product(*[range(len(lv)) for lv in levels]):
        x = np.array([levels[i][j] for i, j in enumerate(idx)])
        v = form.evaluate(x)
        if not arg or v < best - 1e-12 * max(1, abs(best)):
            best, arg = v, [idx]
        elif abs(v - best) <= 1e-12 * max(1, abs(best)):
            arg.append(idx)
    return best, arg


def oc_reference(system: TrussSystem, v_target, alpha0, alpha_min=0.02, alpha_max=1.1,
                 move=0.2, iters=5000, tol=1e-12):
    """Optimality-criteria sizing with exact bisection on the volume multiplier.

    Truss compliance is convex in the area ratios, so the fixed point is the
    global optimum of the volume-constrained problem.
    """
    d = system.d
    alpha = np.asarray(alpha0, dtype=float).copy()
    for _ in range(iters):
        u = system.solve(alpha)
        sens = np.einsum("i,kij,j->k", u, system.units.stacked(), u)  # -omega >= 0
        lo, hi = 1e-20, 1e20
        for _ in range(200):
            mu = np.sqrt(lo * hi)
            new = alpha * np.sqrt(np.maximum(sens, 0) / (mu * d))
            new = np.clip(new, np.maximum(alpha_min, alpha - move), np.minimum(alpha_max, alpha + move))
            if new @ d > v_target:
                lo = mu
            else:
                hi = mu
            if hi / lo < 1 + 1e-15:
                break
        change = np.abs(new - alpha).max()
        alpha = new
        if change < tol:
            break
    return alpha, system.compliance(alpha)
