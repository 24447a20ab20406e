"""Pure-Python game kernels.

Reference implementation of the tick resolution, reachability-weighted
availability and attacker legality checks.  ``_kernels.pyx`` mirrors this
module function for function and must produce identical results.
"""

HEALTHY = 0
COMPROMISED = 1
ISOLATED = 2

A_WAIT, A_SCAN, A_EXPLOIT, A_LATERAL, A_EXFIL = range(5)
D_WAIT, D_MONITOR, D_BLOCK, D_ISOLATE, D_PATCH = range(5)

IMPLEMENTATION = "python"


class Layout:
    __slots__ = (
        "n", "gateway", "weights", "vulnerable", "edge_a", "edge_b", "nbr", "nbr_edge",
        "sig_mask", "lateral_mask", "att_kind", "att_a", "att_b",
    )

    def __init__(self, n, gateway, weights, vulnerable, edge_a, edge_b, sig_mask, lateral_mask, att_kind, att_a, att_b):
        self.n = n
        self.gateway = gateway
        self.weights = tuple(float(w) for w in weights)
        self.vulnerable = tuple(bool(v) for v in vulnerable)
        self.edge_a = tuple(edge_a)
        self.edge_b = tuple(edge_b)
        nbr = [[] for _ in range(n)]
        nbr_edge = [[] for _ in range(n)]
        for e, (a, b) in enumerate(zip(edge_a, edge_b)):
            nbr[a].append(b)
            nbr_edge[a].append(e)
            nbr[b].append(a)
            nbr_edge[b].append(e)
        self.nbr = tuple(tuple(x) for x in nbr)
        self.nbr_edge = tuple(tuple(x) for x in nbr_edge)
        self.sig_mask = tuple(sig_mask)
        self.lateral_mask = lateral_mask
        self.att_kind = tuple(att_kind)
        self.att_a = tuple(att_a)
        self.att_b = tuple(att_b)


def make_layout(n, gateway, weights, vulnerable, edge_a, edge_b, sig_mask, lateral_mask, att_kind, att_a, att_b):
    return Layout(n, gateway, weights, vulnerable, edge_a, edge_b, sig_mask, lateral_mask, att_kind, att_a, att_b)


def availability(layout, status, blocked):
    """Sum of host weights that are healthy and reachable from the gateway."""
    gw = layout.gateway
    if status[gw] == ISOLATED:
        return 0.0
    seen = [False] * layout.n
    seen[gw] = True
    stack = [gw]
    nbr, nbr_edge = layout.nbr, layout.nbr_edge
    while stack:
        h = stack.pop()
        for v, e in zip(nbr[h], nbr_edge[h]):
            if not seen[v] and not (blocked >> e) & 1 and status[v] != ISOLATED:
                seen[v] = True
                stack.append(v)
    total = 0.0
    w = layout.weights
    for h in range(layout.n):
        if seen[h] and status[h] == HEALTHY:
            total += w[h]
    return total


def _edge_between(layout, a, b):
    for v, e in zip(layout.nbr[a], layout.nbr_edge[a]):
        if v == b:
            return e
    return -1


def attacker_ok(layout, kind, a, b, status, blocked, patched):
    if kind == A_WAIT or kind == A_SCAN:
        return True
    if kind == A_EXFIL:
        return status[a] == COMPROMISED
    if kind == A_EXPLOIT:
        if status[a] != HEALTHY or not layout.vulnerable[a] or (patched >> a) & 1:
            return False
        for v, e in zip(layout.nbr[a], layout.nbr_edge[a]):
            if status[v] == COMPROMISED and not (blocked >> e) & 1:
                return True
        return False
    if kind == A_LATERAL:
        # a -> b along an edge
        if status[a] != COMPROMISED or status[b] != HEALTHY or (patched >> b) & 1:
            return False
        e = _edge_between(layout, a, b)
        return e >= 0 and not (blocked >> e) & 1
    return False


def legal_attacker(layout, status, blocked, patched):
    kinds, aa, bb = layout.att_kind, layout.att_a, layout.att_b
    return [i for i in range(len(kinds)) if attacker_ok(layout, kinds[i], aa[i], bb[i], status, blocked, patched)]


def resolve(layout, status, blocked, patched, monitored, indicators, akind, aa, ab, dkind, da, db):
    """Resolve one simultaneous tick, defender first.

    Returns ``(status, blocked, patched, monitored, indicators,
    newly_compromised, detections, attempted_intrusions,
    detected_intrusions, attacker_legal, attack_succeeded)``.
    """
    st = list(status)
    legal = attacker_ok(layout, akind, aa, ab, status, blocked, patched)
    if not legal:
        akind = A_WAIT

    if dkind == D_MONITOR:
        monitored |= 1 << da
    elif dkind == D_BLOCK:
        blocked |= 1 << da
    elif dkind == D_ISOLATE:
        st[da] = ISOLATED
    elif dkind == D_PATCH:
        patched |= 1 << da
        if st[da] != HEALTHY:
            st[da] = HEALTHY

    attempted = 1 if akind == A_EXPLOIT or akind == A_LATERAL else 0
    newly = 0
    succeeded = 0
    if attempted and attacker_ok(layout, akind, aa, ab, st, blocked, patched):
        target = aa if akind == A_EXPLOIT else ab
        st[target] = COMPROMISED
        newly = 1
        succeeded = 1

    detected = 0
    if monitored:
        nbr = layout.nbr
        sig = layout.sig_mask
        for m in range(layout.n):
            if not (monitored >> m) & 1 or st[m] == ISOLATED:
                continue
            # an intrusion attempt touching a sensor is a detection
            if akind == A_EXPLOIT and aa == m:
                detected = 1
                indicators |= sig[m]
            elif akind == A_LATERAL and (aa == m or ab == m):
                detected = 1
                indicators |= layout.lateral_mask
            # the sensor also sees compromise on m and its direct neighbours
            if st[m] == COMPROMISED:
                indicators |= sig[m]
            for v in nbr[m]:
                if st[v] == COMPROMISED:
                    indicators |= sig[v]
    return tuple(st), blocked, patched, monitored, indicators, newly, detected, attempted, detected, legal, succeeded
