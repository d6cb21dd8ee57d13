"""Independent reference implementations used to check the library.

Each one recomputes from definitions with no shared code path: no prefix
sums, no sorting tricks, no shared helpers from the package.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

TIE = 1e-9


def exhaustive_split(X, y, features, min_samples_leaf=1):
    """Try every (feature, midpoint) pair; child SSE from two-pass variance."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if np.all(y == y[0]):
        return None
    parent_sse = float(np.sum((y - y.mean()) ** 2))
    found = []
    for j in features:
        values = sorted(set(X[:, j].tolist()))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            mask = X[:, j] <= thr
            nl, nr = int(mask.sum()), int((~mask).sum())
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            yl, yr = y[mask], y[~mask]
            sse = float(np.var(yl) * nl + np.var(yr) * nr)
            found.append((j, thr, sse))
    if not found:
        return None
    floor = min(s for _, _, s in found) + TIE * parent_sse
    j, thr, sse = min((f for f in found if f[2] <= floor), key=lambda f: (f[0], f[1]))
    return j, thr, sse / n


def adjacency_recount(num_states, edges):
    """Features from a dense adjacency matrix."""
    m = np.zeros((num_states, num_states), dtype=np.int64)
    for s, t, *_ in edges:
        m[s, t] += 1
    out = m.sum(axis=1)
    inc = m.sum(axis=0)
    return {
        "num_states": num_states,
        "num_edges": int(m.sum()),
        "max_fan_out": int(out.max()) if num_states else 0,
        "max_fan_in": int(inc.max()) if num_states else 0,
        "avg_fan_out": Fraction(int(m.sum()), num_states) if num_states else Fraction(0),
    }


def spreadsheet_estimate(num_ste, fanout_limit, coeffs):
    """Closed-form cost model evaluated with decimal strings, one cell at a time."""
    from decimal import ROUND_CEILING, Decimal

    c = {k: Decimal(repr(v)) for k, v in coeffs.items()}
    n, f = Decimal(num_ste), Decimal(fanout_limit)

    def up(d):
        return int(d.to_integral_value(rounding=ROUND_CEILING))

    return {
        "luts": up(c["base_luts"] + n * c["luts_per_ste"] + n * f * c["luts_per_fanout"]),
        "ffs": up(c["base_ffs"] + n * c["ffs_per_ste"]),
        "mem_bits": up(c["base_mem_bits"] + n * c["mem_bits_per_ste"]),
        "wires": up(n * f * c["wires_per_fanout"]),
    }


def gate_check(required, available, ceiling):
    """Each inequality 100*req/avail <= ceiling as integer cross-multiplication."""
    c = Fraction(ceiling)
    return all(100 * r * c.denominator <= c.numerator * a for r, a in zip(required, available))


def gate_limiting(required, available):
    names = ["logic_cells", "flip_flops", "dist_mem_bits"]
    best = 0
    for i in range(1, 3):
        # a/b > c/d  <=>  a*d > c*b
        if required[i] * available[best] > required[best] * available[i]:
            best = i
    return names[best]


def metrics_from_definitions(pred, actual):
    n = len(pred)
    abs_err = [abs(p - a) for p, a in zip(pred, actual)]
    mae = sum(abs_err) / n
    rmse = math.sqrt(sum(e * e for e in abs_err) / n)
    pct = [abs(p - a) / abs(a) * 100 for p, a in zip(pred, actual) if a != 0]
    mape = sum(pct) / len(pct) if pct else None
    return mae, rmse, mape


def tree_route(tree, x):
    """Walk a tree node by node."""
    k = 0
    while tree.feature[k] >= 0:
        k = tree.left[k] if x[tree.feature[k]] <= tree.threshold[k] else tree.right[k]
    return float(tree.value[k])


def scan_recommend(candidates, bundle, profile, ceiling):
    """Gate every candidate independently and keep the largest that fits."""
    import math as _m

    best = None
    for cfg in candidates:
        p = {t: bundle.forests[t].predict(cfg.features()) for t in ("luts", "ffs", "mem_bits")}
        req = [max(0, _m.ceil(p["luts"])), max(0, _m.ceil(p["ffs"])), max(0, _m.ceil(p["mem_bits"]))]
        cap = [profile.logic_cells, profile.flip_flops, profile.dist_mem_bits]
        if gate_check(req, cap, ceiling):
            key = (cfg.num_ste, -cfg.fanout_limit)
            if best is None or key > best[0]:
                best = (key, cfg)
    return None if best is None else best[1]
