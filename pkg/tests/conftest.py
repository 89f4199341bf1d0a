import itertools

import numpy as np
import pytest


def brute_matricize(x, mode):
    """Unfolding by explicit index arithmetic: lower modes vary fastest."""
    shape = x.shape
    rest = [k for k in range(x.ndim) if k != mode]
    cols = int(np.prod([shape[k] for k in rest]))
    out = np.zeros((shape[mode], cols))
    for idx in itertools.product(*[range(s) for s in shape]):
        j, stride = 0, 1
        for k in rest:
            j += idx[k] * stride
            stride *= shape[k]
        out[idx[mode], j] = x[idx]
    return out


def brute_khatri_rao(a, b):
    return np.column_stack([np.kron(a[:, r], b[:, r]) for r in range(a.shape[1])])


def brute_kruskal(factors, weights=None):
    rank = factors[0].shape[1]
    weights = np.ones(rank) if weights is None else weights
    shape = tuple(f.shape[0] for f in factors)
    out = np.zeros(shape)
    for idx in itertools.product(*[range(s) for s in shape]):
        out[idx] = sum(weights[r] * np.prod([f[i, r] for f, i in zip(factors, idx)]) for r in range(rank))
    return out


def finite_difference_gradient(fun, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def brute_fms(truth, est, relaxed=False):
    """Direct score: unit-normalize every column, weights as norm products, best permutation."""
    def parts(model):
        mats = list(model.factors) + [v for vs in model.side_factors for v in vs]
        norms = [np.linalg.norm(m, axis=0) for m in mats]
        lam = np.prod(norms[:len(model.factors)], axis=0)
        weights = lam.copy()
        pos = len(model.factors)
        for s, vs in enumerate(model.side_factors):
            a = norms[model.modes[s]].copy()
            for _ in vs:
                a = a * norms[pos]
                pos += 1
            weights = weights + a
        return [m / n for m, n in zip(mats, norms)], weights

    tf, tw = parts(truth)
    ef, ew = parts(est)
    r, q = tf[0].shape[1], ef[0].shape[1]
    best = -np.inf
    for perm in itertools.permutations(range(q), r):
        vals = []
        for i, j in enumerate(perm):
            cong = abs(np.prod([t[:, i] @ e[:, j] for t, e in zip(tf, ef)]))
            pen = 1.0 if relaxed else 1 - abs(tw[i] - ew[j]) / max(tw[i], ew[j])
            vals.append(pen * cong)
        best = max(best, min(vals))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
