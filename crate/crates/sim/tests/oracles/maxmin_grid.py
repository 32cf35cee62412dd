"""Grid oracle for two-user, two-AP, single-antenna max-min beamforming.

For each hard-coded instance the script scans the SINR grid {0.001 j} and
reports the largest grid point at which the per-AP-power-constrained SINR
targets are feasible, using CVXPY (Clarabel) as an independent conic solver.
Feasibility is monotone in the target, so the scan bisects over grid indices.

The printed values are pinned in the acceptance test; rerun with
`python3 maxmin_grid.py` to regenerate them.
"""

import cvxpy as cp
import numpy as np

STEP = 1e-3

INSTANCES = [
    # (channels h_k as rows, per-AP budget, noise power)
    (np.array([[1.0 + 0.2j, 0.3 - 0.5j], [0.4 + 0.1j, -0.9 + 0.6j]]), 2.0, 0.5),
    (np.array([[1.0 + 0.0j, 0.8j], [0.9 + 0.0j, 0.1 + 0.7j]]), 1.0, 0.1),
    (np.array([[2.0 + 0.0j, 0.1 + 0.0j], [0.05j, 0.5 + 0.0j]]), 1.0, 1.0),
]


def feasible(h, p_max, noise, gamma):
    k, n = h.shape
    w = cp.Variable((n, k), complex=True)
    cons = []
    for i in range(k):
        gains = h[i].conj() @ w  # h_iᴴ w_j for every j
        others = [gains[j] for j in range(k) if j != i]
        cons.append(cp.imag(gains[i]) == 0)
        cons.append(
            cp.norm(cp.hstack(others + [np.sqrt(noise)])) <= cp.real(gains[i]) / np.sqrt(gamma)
        )
    for b in range(n):
        cons.append(cp.sum_squares(w[b, :]) <= p_max)
    prob = cp.Problem(cp.Minimize(0), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.status in ("optimal", "optimal_inaccurate")


def grid_optimum(h, p_max, noise):
    # no user can beat its single-user maximum-ratio SINR
    cap = min(p_max * np.sum(np.abs(row)) ** 2 / noise for row in h)
    lo, hi = 0, int(np.ceil(cap / STEP)) + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(h, p_max, noise, mid * STEP):
            lo = mid
        else:
            hi = mid
    return lo * STEP


if __name__ == "__main__":
    for h, p_max, noise in INSTANCES:
        print(f"{grid_optimum(h, p_max, noise):.3f}")
