"""Re-solve an exported LMI triplet file with an external conic solver.

Maximizes s subject to sense(F_j(x)) - margin I >= s I and |x|_inf <= bound,
and prints the optimal s. A positive value means strictly feasible.
"""
import argparse
import sys

import cvxpy as cp
import numpy as np
import scipy.sparse as sp


def read_triplets(path):
    with open(path) as fh:
        tok = fh.read().split()
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return tok[pos - 1]

    assert take() == "dnnstab-lmi" and take() == "1"
    assert take() == "num_vars"
    nv = int(take())
    assert take() == "margin"
    margin = float(take())
    assert take() == "meta"
    meta = [take() for _ in range(5)]
    assert take() == "constraints"
    cons = []
    for _ in range(int(take())):
        assert take() == "constraint"
        name, dim, sense, nc, nt = take(), int(take()), take(), int(take()), int(take())
        c0 = np.zeros((dim, dim))
        for _ in range(nc):
            assert take() == "c"
            r, c, v = int(take()), int(take()), float(take())
            c0[r, c] = c0[c, r] = v
        terms = []
        for _ in range(nt):
            assert take() == "t"
            terms.append((int(take()), int(take()), int(take()), float(take())))
        cons.append((name, dim, sense, c0, terms))
    assert take() == "end"
    return nv, margin, meta, cons


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("path")
    ap.add_argument("--solver", default="CLARABEL")
    ap.add_argument("--bound", type=float, default=1e4)
    args = ap.parse_args()
    nv, margin, meta, cons = read_triplets(args.path)
    x = cp.Variable(nv)
    s = cp.Variable()
    constraints = [cp.norm(x, "inf") <= args.bound]
    for name, dim, sense, c0, terms in cons:
        sign = 1.0 if sense == "geq" else -1.0
        scale = 1.0 + np.linalg.norm(c0)
        rows, cols, vals = [], [], []
        for var, r, c, v in terms:
            rows.append(r * dim + c)
            cols.append(var)
            vals.append(v)
            if r != c:
                rows.append(c * dim + r)
                cols.append(var)
                vals.append(v)
        a = sp.csr_matrix((vals, (rows, cols)), shape=(dim * dim, nv))
        fx = cp.reshape(a @ x, (dim, dim), order="C") + c0
        g = (sign * fx - margin * np.eye(dim)) / scale
        constraints.append(0.5 * (g + g.T) - s * np.eye(dim) >> 0)
    prob = cp.Problem(cp.Maximize(s), constraints)
    prob.solve(solver=args.solver)
    print(f"status={prob.status} s*={prob.value:.6e} meta={' '.join(meta)}")
    return 0 if prob.value is not None and prob.value > 0 else 1


if __name__ == "__main__":
    sys.exit(main())
