"""Independent reference values for the C++ test suite (numpy/scipy only)."""
import itertools
import math

import numpy as np
from scipy import stats
from scipy.special import logsumexp

LN2 = math.log(2)


def gate_table(fn, latent=False):
    p = np.zeros((2, 2, 2))
    for a, b in itertools.product((0, 1), repeat=2):
        if latent:
            for coin in (0, 1):
                p[a, b, fn(a, b, coin)] += 0.125
        else:
            p[a, b, fn(a, b)] += 0.25
    return p


def lsmi_table(p):
    px1, px2, py = p.sum((1, 2)), p.sum((0, 2)), p.sum((0, 1))
    px1y, px2y, px12 = p.sum(1), p.sum(0), p.sum(2)
    rows = []
    for a, b, y in itertools.product(range(2), repeat=3):
        if p[a, b, y] == 0:
            continue
        h1, h2, hy = -math.log(px1[a]), -math.log(px2[b]), -math.log(py[y])
        h1y = -math.log(px1y[a, y] / py[y])
        h2y = -math.log(px2y[b, y] / py[y])
        i1, i2 = h1 - h1y, h2 - h2y
        i12 = math.log(p[a, b, y] / (px12[a, b] * py[y]))
        r = min(h1, h2) - min(h1y, h2y)
        u1, u2 = i1 - r, i2 - r
        rows.append((p[a, b, y], y, np.array([r, u1, u2, i12 - r - u1 - u2])))
    avg = sum(w * v for w, _, v in rows)
    by_class = {}
    for y in (0, 1):
        sel = [v for _, yy, v in rows if yy == y]
        by_class[y] = np.mean(sel, axis=0)
    return avg, by_class, rows


def main():
    gates = {
        "XOR": gate_table(lambda a, b: a ^ b),
        "OR": gate_table(lambda a, b: a | b),
        "AND": gate_table(lambda a, b: a & b),
        "NOT2": gate_table(lambda a, b: 1 - b),
        "XOR_PLUS_NOT": gate_table(lambda a, b, c: (a ^ b) if c == 0 else 1 - b,
                                   latent=True),
    }
    for name, p in gates.items():
        avg, by_class, rows = lsmi_table(p)
        py = p.sum((0, 1))
        hy = -(py * np.log(py)).sum()
        print(name, "average", np.round(avg, 6), "sum", round(avg.sum(), 6),
              "H(Y)", round(hy, 6))
        print(name, "per-event-unweighted class means",
              {k: np.round(v, 4) for k, v in by_class.items()})
        mi1 = sum(p[a, b, y] * math.log(p.sum(1)[a, y] / (p.sum((1, 2))[a] * py[y]))
                  for a, b, y in itertools.product(range(2), repeat=3) if p[a, b, y] > 0)
        print(name, "I(X1;Y)", round(mi1, 6))

    print("logpdf N(0;0,1)", stats.norm.logpdf(0))
    print("log mix +-1 at 0", logsumexp([stats.norm.logpdf(0, 1), stats.norm.logpdf(0, -1)],
                                        b=[0.5, 0.5]))
    print("posterior mu=+-1 x=1", 1 / (1 + math.exp(-2)))
    print("entropy 1-D normal", 0.5 * math.log(2 * math.pi * math.e))
    print("entropy separated", 0.5 * math.log(2 * math.pi * math.e) + LN2)

    # Joint MoG posterior via the full 2d covariance, for a spot check.
    rho = 0.5
    mu = np.array([1.0, 1.0])
    sig = np.array([[1.0, 0.3], [0.3, 2.0]])
    x1, x2 = np.array([0.2, -0.4]), np.array([0.7, 0.1])
    big = np.block([[sig, rho * sig], [rho * sig, sig]])
    terms = [math.log(0.3) + stats.multivariate_normal.logpdf(np.r_[x1, x2], np.r_[mu, mu], big),
             math.log(0.7) + stats.multivariate_normal.logpdf(np.r_[x1, x2], np.r_[-mu, -mu], big)]
    print("joint posterior spot", np.exp(np.array(terms) - logsumexp(terms)))
    print("joint log density spot class0", terms[0] - math.log(0.3))


if __name__ == "__main__":
    main()
