"""Loop-based re-implementations of the scheme pipelines, used as cross-checks.

Only the primitive SINR formulas from ``oracles`` and the AMC lookup are
shared with the package; grouping, pairing, power-fraction search and
scheduling are rewritten from the textual rules.
"""

import math

import oracles

GRID = [k / 100 for k in range(1, 50)]
LINK = 12 * 14 * 100 / 1e-3


class Instance:
    def __init__(self, gain, labels, P, N0, eff, gap_db=10.0):
        self.g = [list(map(float, row)) for row in gain]
        self.labels = [int(x) for x in labels]
        self.P, self.N0, self.eff, self.gap = P, N0, eff, gap_db
        self.U = len(self.g)
        self.B = len(self.g[0])
        self.serving = []
        for row in self.g:
            best = 0
            for b in range(self.B):
                if row[b] > row[best]:
                    best = b
            self.serving.append(best)
        self.oma = [oracles.oma(self.g[u], self.serving[u], P, N0) for u in range(self.U)]
        self.comp = [
            oracles.comp(self.g[u], self.cluster_bs(self.cluster_of(u)), P, N0) for u in range(self.U)
        ]

    def cluster_of(self, u):
        return self.labels[self.serving[u]]

    def cluster_bs(self, c):
        return {b for b in range(self.B) if self.labels[b] == c}

    def clusters(self):
        return sorted(set(self.labels))

    def gate(self, s_ref, w_ref, s_fn, w_fn):
        if not (s_ref > w_ref and 10 * math.log10(s_ref) - 10 * math.log10(w_ref) >= self.gap):
            return None
        for z in reversed(GRID):
            if self.eff(w_fn(z)) >= self.eff(w_ref) and self.eff(s_fn(z)) >= self.eff(s_ref):
                return z
        return None


def match(inst, strong, weak, admit):
    strong = sorted(strong, key=lambda c: (-c[1], c[0]))
    weak = sorted(weak, key=lambda c: (-c[1], c[0]))
    pairs, left = [], []
    for i in range(min(len(strong), len(weak))):
        s, w = strong[i][0], weak[i][0]
        z = inst.gate(strong[i][1], weak[i][1], *admit(s, w))
        if z is None:
            left += [s, w]
        else:
            pairs.append((s, w, z))
    left += [u for u, _ in strong[len(weak):]] + [u for u, _ in weak[len(strong):]]
    return pairs, left


def aup(inst, cands, admit):
    ordered = sorted(cands, key=lambda c: (-c[1], c[0]))
    n, half = len(ordered), len(ordered) // 2
    if n < 2:
        return [], [u for u, _ in ordered]
    pairs, left = match(inst, ordered[:half], ordered[n - half:], admit)
    if n % 2:
        left.append(ordered[half][0])
    return pairs, left


def _nc_nc(inst, bs, users):
    P, N0 = inst.P, inst.N0

    def admit(s, w):
        return (
            lambda z: oracles.noma_strong(inst.g[s], bs, z, P, N0),
            lambda z: oracles.noma_weak(inst.g[w], bs, z, P, N0),
        )

    pairs, left = aup(inst, [(u, inst.oma[u]) for u in users], admit)
    out = [
        (s, w, oracles.noma_strong(inst.g[s], bs, z, P, N0), oracles.noma_weak(inst.g[w], bs, z, P, N0))
        for s, w, z in pairs
    ]
    return out, left


def _c_c(inst, c, users):
    P, N0, cl = inst.P, inst.N0, inst.cluster_bs(c)

    def admit(s, w):
        return (
            lambda z: oracles.cc_strong(inst.g[s], cl, z, P, N0),
            lambda z: oracles.cc_weak(inst.g[w], cl, z, P, N0),
        )

    pairs, left = aup(inst, [(u, inst.comp[u]) for u in users], admit)
    out = [
        (s, w, oracles.cc_strong(inst.g[s], cl, z, P, N0), oracles.cc_weak(inst.g[w], cl, z, P, N0))
        for s, w, z in pairs
    ]
    return out, left


class Schedule:
    def __init__(self, U):
        self.share = [0.0] * U
        self.sinr = [None] * U

    def serve(self, entities, phase):
        for entity in entities:
            for u, s in entity:
                self.share[u] += phase / len(entities)
                self.sinr[u] = s

    def rates(self, inst):
        return [self.share[u] * inst.eff(self.sinr[u]) * LINK for u in range(inst.U)]


def scheme_a(inst):
    sched = Schedule(inst.U)
    counts = {"nc_nc": 0, "c_c": 0, "comp_oma": 0}
    promoted = []
    nc_entities = {}
    nc_pairs_in = {c: 0 for c in inst.clusters()}
    for b in range(inst.B):
        users = [u for u in range(inst.U) if inst.serving[u] == b]
        pairs, left = _nc_nc(inst, b, users)
        promoted += left
        nc_entities[b] = [[(s, ss), (w, ws)] for s, w, ss, ws in pairs]
        nc_pairs_in[inst.labels[b]] += len(pairs)
        counts["nc_nc"] += len(pairs)
    theta = {}
    for c in inst.clusters():
        users = sorted(u for u in promoted if inst.cluster_of(u) == c)
        pairs, left = _c_c(inst, c, users)
        counts["c_c"] += len(pairs)
        counts["comp_oma"] += len(left)
        comp_n = len(pairs) + len(left)
        theta[c] = comp_n / (comp_n + nc_pairs_in[c]) if comp_n + nc_pairs_in[c] else 0.0
        entities = [[(s, ss), (w, ws)] for s, w, ss, ws in pairs] + [[(u, inst.comp[u])] for u in left]
        if entities:
            sched.serve(entities, theta[c])
    for b, entities in nc_entities.items():
        if entities:
            sched.serve(entities, 1 - theta[inst.labels[b]])
    return sched.rates(inst), counts


def scheme_c(inst, gamma_th):
    sched = Schedule(inst.U)
    counts = {"nc_nc": 0, "c_c": 0, "comp_oma": 0, "nc_oma": 0}
    is_comp = [inst.oma[u] < gamma_th for u in range(inst.U)]
    nc_n = {c: 0 for c in inst.clusters()}
    nc_entities = {}
    for b in range(inst.B):
        users = [u for u in range(inst.U) if inst.serving[u] == b and not is_comp[u]]
        pairs, left = _nc_nc(inst, b, users)
        nc_entities[b] = [[(s, ss), (w, ws)] for s, w, ss, ws in pairs] + [[(u, inst.oma[u])] for u in left]
        nc_n[inst.labels[b]] += len(pairs) + len(left)
        counts["nc_nc"] += len(pairs)
        counts["nc_oma"] += len(left)
    theta = {}
    for c in inst.clusters():
        users = [u for u in range(inst.U) if is_comp[u] and inst.cluster_of(u) == c]
        pairs, left = _c_c(inst, c, users)
        counts["c_c"] += len(pairs)
        counts["comp_oma"] += len(left)
        comp_n = len(pairs) + len(left)
        theta[c] = comp_n / (comp_n + nc_n[c]) if comp_n + nc_n[c] else 0.0
        entities = [[(s, ss), (w, ws)] for s, w, ss, ws in pairs] + [[(u, inst.comp[u])] for u in left]
        if entities:
            sched.serve(entities, theta[c])
    for b, entities in nc_entities.items():
        if entities:
            sched.serve(entities, 1 - theta[inst.labels[b]])
    return sched.rates(inst), counts


def scheme_b(inst, gamma_th):
    P, N0 = inst.P, inst.N0
    sched = Schedule(inst.U)
    counts = {"nc_nc": 0, "nc_c": 0, "comp_oma": 0, "nc_oma": 0}
    is_comp = [inst.oma[u] < gamma_th for u in range(inst.U)]
    ncc_log = []
    for c in inst.clusters():
        cl = sorted(inst.cluster_bs(c))
        comp_users = [u for u in range(inst.U) if is_comp[u] and inst.cluster_of(u) == c]
        remaining = {b: [u for u in range(inst.U) if inst.serving[u] == b and not is_comp[u]] for b in cl}
        zetas = {w: {} for w in comp_users}
        pairs = []
        if comp_users:
            for _ in range(len(cl)):
                admitted = 0
                for b in cl:
                    g2 = [(u, inst.oma[u]) for u in remaining[b]]
                    if not g2:
                        continue
                    top2 = max(s for _, s in g2)
                    g1 = [(w, inst.comp[w]) for w in comp_users if inst.comp[w] < top2 and b not in zetas[w]]
                    if not g1:
                        continue
                    top1 = max(s for _, s in g1)
                    g2 = [(u, s) for u, s in g2 if s > top1]

                    def admit(s, w, b=b):
                        return (
                            lambda z: oracles.ncc_strong(inst.g[s], b, z, P, N0),
                            lambda z: oracles.ncc_weak(inst.g[w], set(cl), {**zetas[w], b: z}, P, N0),
                        )

                    got, _ = match(inst, g2, g1, admit)
                    for s, w, z in got:
                        zetas[w][b] = z
                        remaining[b].remove(s)
                        pairs.append((s, w, z, b))
                    admitted += len(got)
                if not admitted:
                    break
        paired_comp = {w for _, w, _, _ in pairs}
        left_comp = [u for u in comp_users if u not in paired_comp]
        entities = []
        for s, w, z, b in pairs:
            ss = oracles.ncc_strong(inst.g[s], b, z, P, N0)
            ws = oracles.ncc_weak(inst.g[w], set(cl), zetas[w], P, N0)
            entities.append([(s, ss), (w, ws)])
            ncc_log.append((s, w, ss, ws))
        entities += [[(u, inst.comp[u])] for u in left_comp]

        nc_entities = {}
        nc_n = 0
        for b in cl:
            got, left = _nc_nc(inst, b, remaining[b])
            nc_entities[b] = [[(s, ss), (w, ws)] for s, w, ss, ws in got] + [[(u, inst.oma[u])] for u in left]
            nc_n += len(got) + len(left)
            counts["nc_nc"] += len(got)
            counts["nc_oma"] += len(left)
        comp_n = len(pairs) + len(left_comp)
        theta = comp_n / (comp_n + nc_n) if comp_n + nc_n else 0.0
        counts["nc_c"] += len(pairs)
        counts["comp_oma"] += len(left_comp)
        if entities:
            sched.serve(entities, theta)
        for b, ent in nc_entities.items():
            if ent:
                sched.serve(ent, 1 - theta)
    return sched.rates(inst), counts, ncc_log
