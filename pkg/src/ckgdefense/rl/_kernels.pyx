# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled game kernels; mirrors ``_kernels_py`` function for function."""

from libc.stdlib cimport malloc, free

cdef enum:
    MAXN = 64

cdef int HEALTHY = 0
cdef int COMPROMISED = 1
cdef int ISOLATED = 2

cdef int A_WAIT = 0
cdef int A_SCAN = 1
cdef int A_EXPLOIT = 2
cdef int A_LATERAL = 3
cdef int A_EXFIL = 4
cdef int D_WAIT = 0
cdef int D_MONITOR = 1
cdef int D_BLOCK = 2
cdef int D_ISOLATE = 3
cdef int D_PATCH = 4

IMPLEMENTATION = "cython"

ctypedef unsigned long long u64


cdef class Layout:
    cdef public int n
    cdef public int gateway
    cdef double weights[MAXN]
    cdef int vulnerable[MAXN]
    cdef int n_edges
    cdef int *edge_a
    cdef int *edge_b
    # adjacency in CSR form: neighbours of h are nbr[off[h]:off[h+1]]
    cdef int off[MAXN + 1]
    cdef int *nbr
    cdef int *nbr_edge
    cdef u64 sig_mask[MAXN]
    cdef u64 lateral_mask
    cdef int n_att
    cdef int *att_kind
    cdef int *att_a
    cdef int *att_b

    def __cinit__(self):
        self.edge_a = self.edge_b = self.nbr = self.nbr_edge = NULL
        self.att_kind = self.att_a = self.att_b = NULL

    def __dealloc__(self):
        free(self.edge_a); free(self.edge_b)
        free(self.nbr); free(self.nbr_edge)
        free(self.att_kind); free(self.att_a); free(self.att_b)


cdef int *_ints(seq) except NULL:
    cdef Py_ssize_t i, m = len(seq)
    cdef int *out = <int *>malloc(max(m, 1) * sizeof(int))
    if out == NULL:
        raise MemoryError()
    for i in range(m):
        out[i] = seq[i]
    return out


def make_layout(n, gateway, weights, vulnerable, edge_a, edge_b, sig_mask, lateral_mask, att_kind, att_a, att_b):
    if n > MAXN:
        raise ValueError(f"at most {MAXN} hosts are supported")
    cdef Layout L = Layout()
    cdef int h, e, a, b
    L.n = n
    L.gateway = gateway
    for h in range(n):
        L.weights[h] = float(weights[h])
        L.vulnerable[h] = 1 if vulnerable[h] else 0
        L.sig_mask[h] = sig_mask[h]
    L.lateral_mask = lateral_mask
    L.n_edges = len(edge_a)
    L.edge_a = _ints(edge_a)
    L.edge_b = _ints(edge_b)
    # same neighbour order as the Python layout: edges in index order, both directions
    nbr = [[] for _ in range(n)]
    nbr_edge = [[] for _ in range(n)]
    for e in range(L.n_edges):
        a = edge_a[e]
        b = edge_b[e]
        nbr[a].append(b)
        nbr_edge[a].append(e)
        nbr[b].append(a)
        nbr_edge[b].append(e)
    flat, flat_e = [], []
    L.off[0] = 0
    for h in range(n):
        flat.extend(nbr[h])
        flat_e.extend(nbr_edge[h])
        L.off[h + 1] = len(flat)
    L.nbr = _ints(flat)
    L.nbr_edge = _ints(flat_e)
    L.n_att = len(att_kind)
    L.att_kind = _ints(att_kind)
    L.att_a = _ints(att_a)
    L.att_b = _ints(att_b)
    return L


cdef inline bint _bit(u64 mask, int i) nogil:
    return (mask >> i) & 1


cdef double _availability(Layout L, int *st, u64 blocked):
    cdef int seen[MAXN]
    cdef int stack[MAXN]
    cdef int top = 0, h, v, k, e
    cdef double total = 0.0
    if st[L.gateway] == ISOLATED:
        return 0.0
    for h in range(L.n):
        seen[h] = 0
    seen[L.gateway] = 1
    stack[top] = L.gateway
    top += 1
    while top > 0:
        top -= 1
        h = stack[top]
        for k in range(L.off[h], L.off[h + 1]):
            v = L.nbr[k]
            e = L.nbr_edge[k]
            if not seen[v] and not _bit(blocked, e) and st[v] != ISOLATED:
                seen[v] = 1
                stack[top] = v
                top += 1
    for h in range(L.n):
        if seen[h] and st[h] == HEALTHY:
            total += L.weights[h]
    return total


cdef int _edge_between(Layout L, int a, int b):
    cdef int k
    for k in range(L.off[a], L.off[a + 1]):
        if L.nbr[k] == b:
            return L.nbr_edge[k]
    return -1


cdef bint _attacker_ok(Layout L, int kind, int a, int b, int *st, u64 blocked, u64 patched):
    cdef int k, e
    if kind == A_WAIT or kind == A_SCAN:
        return True
    if kind == A_EXFIL:
        return st[a] == COMPROMISED
    if kind == A_EXPLOIT:
        if st[a] != HEALTHY or not L.vulnerable[a] or _bit(patched, a):
            return False
        for k in range(L.off[a], L.off[a + 1]):
            if st[L.nbr[k]] == COMPROMISED and not _bit(blocked, L.nbr_edge[k]):
                return True
        return False
    if kind == A_LATERAL:
        if st[a] != COMPROMISED or st[b] != HEALTHY or _bit(patched, b):
            return False
        e = _edge_between(L, a, b)
        return e >= 0 and not _bit(blocked, e)
    return False


cdef int _load_status(Layout L, status, int *st) except -1:
    cdef int h
    if len(status) != L.n:
        raise ValueError("status length does not match the layout")
    for h in range(L.n):
        st[h] = status[h]
    return 0


def availability(Layout layout, status, blocked):
    """Sum of host weights that are healthy and reachable from the gateway."""
    cdef int st[MAXN]
    _load_status(layout, status, st)
    return _availability(layout, st, blocked)


def attacker_ok(Layout layout, int kind, int a, int b, status, blocked, patched):
    cdef int st[MAXN]
    _load_status(layout, status, st)
    return bool(_attacker_ok(layout, kind, a, b, st, blocked, patched))


def legal_attacker(Layout layout, status, blocked, patched):
    cdef int st[MAXN]
    cdef int i
    cdef u64 bl = blocked, pa = patched
    _load_status(layout, status, st)
    out = []
    for i in range(layout.n_att):
        if _attacker_ok(layout, layout.att_kind[i], layout.att_a[i], layout.att_b[i], st, bl, pa):
            out.append(i)
    return out


def resolve(Layout layout, status, blocked, patched, monitored, indicators, int akind, int aa, int ab, int dkind, int da, int db):
    """Resolve one simultaneous tick, defender first (see ``_kernels_py.resolve``)."""
    cdef int st[MAXN]
    cdef int st0[MAXN]
    cdef u64 bl = blocked, pa = patched, mon = monitored, ind = indicators
    cdef int h, m, k, target
    cdef bint legal
    cdef int attempted = 0, newly = 0, succeeded = 0, detected = 0
    _load_status(layout, status, st)
    for h in range(layout.n):
        st0[h] = st[h]
    legal = _attacker_ok(layout, akind, aa, ab, st0, bl, pa)
    if not legal:
        akind = A_WAIT

    if dkind == D_MONITOR:
        mon |= (<u64>1) << da
    elif dkind == D_BLOCK:
        bl |= (<u64>1) << da
    elif dkind == D_ISOLATE:
        st[da] = ISOLATED
    elif dkind == D_PATCH:
        pa |= (<u64>1) << da
        if st[da] != HEALTHY:
            st[da] = HEALTHY

    if akind == A_EXPLOIT or akind == A_LATERAL:
        attempted = 1
        if _attacker_ok(layout, akind, aa, ab, st, bl, pa):
            target = aa if akind == A_EXPLOIT else ab
            st[target] = COMPROMISED
            newly = 1
            succeeded = 1

    if mon:
        for m in range(layout.n):
            if not _bit(mon, m) or st[m] == ISOLATED:
                continue
            if akind == A_EXPLOIT and aa == m:
                detected = 1
                ind |= layout.sig_mask[m]
            elif akind == A_LATERAL and (aa == m or ab == m):
                detected = 1
                ind |= layout.lateral_mask
            if st[m] == COMPROMISED:
                ind |= layout.sig_mask[m]
            for k in range(layout.off[m], layout.off[m + 1]):
                if st[layout.nbr[k]] == COMPROMISED:
                    ind |= layout.sig_mask[layout.nbr[k]]
    new_status = tuple([st[h] for h in range(layout.n)])
    return new_status, int(bl), int(pa), int(mon), int(ind), newly, detected, attempted, detected, bool(legal), succeeded
