#!/usr/bin/env python3
"""Generate certified optimal solutions of the MaxCut SDP relaxation for the
desk-scale oracle fixtures under crates/lowmem-sdp/tests/fixtures/.

For each graph we solve  max <C, X>  s.t. diag(X) = 1, X >= 0  with C = L/4
(cvxpy + SCS at tight tolerance), extract the dual variable y of the diagonal
constraints, and verify the optimality certificate before writing:

    diag(X) = 1,  X >= 0,  diag*(y) - C >= 0,  sum(y) = <C, X>.

The fixture consumer re-verifies the same certificate, so the numbers are
trusted only up to the stated tolerance, independent of the solver used here.
"""
import numpy as np
import cvxpy as cp

def make_graph(n, m, seed):
    rng = np.random.default_rng(seed)
    edges = set()
    while len(edges) < m:
        i, j = rng.integers(0, n, 2)
        if i != j:
            edges.add((min(i, j), max(i, j)))
    return sorted(edges)

def solve_fixture(name, n, m, seed):
    edges = make_graph(n, m, seed)
    L = np.zeros((n, n))
    for i, j in edges:
        L[i, i] += 1; L[j, j] += 1
        L[i, j] -= 1; L[j, i] -= 1
    C = L / 4.0
    X = cp.Variable((n, n), symmetric=True)
    constraints = [X >> 0, cp.diag(X) == 1]
    prob = cp.Problem(cp.Maximize(cp.trace(C @ X)), constraints)
    prob.solve(solver=cp.SCS, eps_abs=1e-11, eps_rel=1e-11, max_iters=2_000_000)
    Xv = X.value
    y = np.asarray(constraints[1].dual_value).flatten()
    # cvxpy sign convention check: want diag*(y) - C >= 0 and sum(y) = <C,X>.
    if np.sum(y) < 0:
        y = -y
    val = float(np.sum(C * Xv))
    gap = abs(np.sum(y) - val)
    lam_x = np.linalg.eigvalsh(Xv).min()
    lam_s = np.linalg.eigvalsh(np.diag(y) - C).min()
    dg = np.abs(np.diag(Xv) - 1).max()
    print(f"{name}: n={n} m={len(edges)} val={val:.8f} dualgap={gap:.2e} "
          f"lam_min(X)={lam_x:.2e} lam_min(S)={lam_s:.2e} |diag-1|={dg:.2e}")
    assert gap < 1e-7 and lam_x > -1e-7 and lam_s > -1e-7 and dg < 1e-7
    with open(f"/root/crate/crates/lowmem-sdp/tests/fixtures/{name}.txt", "w") as f:
        f.write("# certified MaxCut SDP optimum, generated by tools/gen_sdp_fixtures.py\n")
        f.write("# (cvxpy + SCS, eps 1e-11); consumer re-verifies the certificate\n")
        f.write(f"graph {n} {len(edges)}\n")
        for i, j in edges:
            f.write(f"{i} {j} 1.0\n")
        f.write(f"sdp_value {val!r}\n")
        f.write("X\n")
        for row in Xv:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")
        f.write("y\n")
        f.write(" ".join(repr(float(v)) for v in y) + "\n")

solve_fixture("sdp_n10", 10, 22, 1)
solve_fixture("sdp_n12", 12, 30, 2)
