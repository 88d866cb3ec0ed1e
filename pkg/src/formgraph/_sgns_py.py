"""Pure-Python random-walk + skip-gram training kernel.

Fallback for the compiled extension. Every arithmetic operation happens in
the same order as in the compiled kernel, so both produce bitwise-identical
weights for the same inputs; only the speed differs.
"""

from array import array
from math import exp

_MASK64 = 0xFFFFFFFFFFFFFFFF
_TO_FLOAT = 1.0 / 9007199254740992.0  # 2^-53

BACKEND = "python"


def train_embeddings(
    indptr,
    indices,
    n_nodes: int,
    dims: int,
    walks_per_node: int,
    walk_length: int,
    p: float,
    q: float,
    window: int,
    epochs: int,
    negative: int,
    learning_rate: float,
    seed: int,
):
    """Train node embeddings over biased random walks.

    indptr/indices form a CSR adjacency with sorted neighbor lists.
    Returns the flat input-weight matrix as array('d') of n_nodes * dims.
    """
    state = seed & _MASK64

    def next_float() -> float:
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        return (z >> 11) * _TO_FLOAT

    def has_edge(a: int, b: int) -> bool:
        lo = indptr[a]
        hi = indptr[a + 1]
        while lo < hi:
            mid = (lo + hi) // 2
            value = indices[mid]
            if value == b:
                return True
            if value < b:
                lo = mid + 1
            else:
                hi = mid
        return False

    inv_p = 1.0 / p
    inv_q = 1.0 / q

    # --- walk generation ---
    walks = array("q", [0]) * 0
    for _ in range(walks_per_node):
        for start in range(n_nodes):
            cur = start
            prev = -1
            walks.append(cur)
            for _ in range(walk_length - 1):
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                if deg == 0:
                    nxt = cur
                elif prev < 0:
                    nxt = indices[lo + int(next_float() * deg)]
                else:
                    total = 0.0
                    for i in range(lo, lo + deg):
                        nb = indices[i]
                        if nb == prev:
                            total += inv_p
                        elif has_edge(prev, nb):
                            total += 1.0
                        else:
                            total += inv_q
                    r = next_float() * total
                    acc = 0.0
                    nxt = indices[lo + deg - 1]
                    for i in range(lo, lo + deg):
                        nb = indices[i]
                        if nb == prev:
                            acc += inv_p
                        elif has_edge(prev, nb):
                            acc += 1.0
                        else:
                            acc += inv_q
                        if r < acc:
                            nxt = nb
                            break
                walks.append(nxt)
                prev = cur
                cur = nxt

    # --- skip-gram with negative sampling ---
    w_in = [0.0] * (n_nodes * dims)
    for i in range(n_nodes * dims):
        w_in[i] = (next_float() - 0.5) / dims
    w_out = [0.0] * (n_nodes * dims)
    ebuf = [0.0] * dims
    lr = learning_rate
    n_walks = len(walks) // walk_length

    for _ in range(epochs):
        for w in range(n_walks):
            base = w * walk_length
            for i in range(walk_length):
                center = walks[base + i]
                cbase = center * dims
                j_lo = i - window if i - window > 0 else 0
                j_hi = i + window + 1 if i + window + 1 < walk_length else walk_length
                for j in range(j_lo, j_hi):
                    if j == i:
                        continue
                    ctx = walks[base + j]
                    for d in range(dims):
                        ebuf[d] = 0.0
                    for k in range(negative + 1):
                        if k == 0:
                            target = ctx
                            label = 1.0
                        else:
                            target = int(next_float() * n_nodes)
                            if target == ctx:
                                continue
                            label = 0.0
                        tbase = target * dims
                        f = 0.0
                        for d in range(dims):
                            f += w_in[cbase + d] * w_out[tbase + d]
                        if f > 37.0:
                            s = 1.0
                        elif f < -37.0:
                            s = 0.0
                        else:
                            s = 1.0 / (1.0 + exp(-f))
                        g = (label - s) * lr
                        for d in range(dims):
                            ebuf[d] += g * w_out[tbase + d]
                            w_out[tbase + d] += g * w_in[cbase + d]
                    for d in range(dims):
                        w_in[cbase + d] += ebuf[d]

    return array("d", w_in)
