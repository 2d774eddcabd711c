"""Bytecode interpreter kernel.

Written in the numba-compatible subset: flat int64 tables, no helper calls,
no Python objects.  The same function runs interpreted when JIT is disabled.
"""

from __future__ import annotations

import numpy as np

from .._accel import kernel

ST_COMPLETED, ST_FAULT, ST_BUDGET, ST_DEPTH, ST_DECISIONS = 0, 1, 2, 3, 4

W = 12
I32_MAX = 2147483647
I32_MIN = -2147483648
REF_MASK = (1 << 33) - 1
REF_BIAS = 1 << 32


@kernel
def run_vm(code, call_args, fn_entry, fn_nslots, fn_nparams, fn_heap, fn_arr_start,
           arr_off, arr_size, entry, data, step_budget, max_depth,
           slots, heap, fr_func, fr_base, fr_hbase, fr_ret, fr_dst, decisions, edge_hits):
    ndata = len(data)
    ndec_cap = len(decisions)
    for e in range(len(edge_hits)):
        edge_hits[e] = 0
    depth = 1
    fr_func[0] = entry
    fr_base[0] = 0
    fr_hbase[0] = 0
    fr_ret[0] = -1
    fr_dst[0] = -1
    for s in range(fn_nslots[entry]):
        slots[s] = 0
    for s in range(fn_heap[entry]):
        heap[s] = 0
    base = 0
    hbase = 0
    func = entry
    pc = fn_entry[entry]
    steps = 0
    ndec = 0
    cursor = 0
    retval = 0
    while True:
        if steps >= step_budget:
            return ST_BUDGET, 0, pc, steps, ndec, 0, cursor, depth
        steps += 1
        r = pc * W
        op = code[r]
        # operand a
        if code[r + 2] == 0:
            a = code[r + 3]
        else:
            a = slots[base + code[r + 3]]
        if code[r + 4] == 0:
            b = code[r + 5]
        else:
            b = slots[base + code[r + 5]]
        if op <= 21:
            v = 0
            chk = False
            if op == 0:
                v = a
            elif op == 1:
                v = a + b
                chk = True
            elif op == 2:
                v = a - b
                chk = True
            elif op == 3:
                v = a * b
                chk = True
            elif op == 4 or op == 5:
                if b == 0:
                    return ST_FAULT, 3, pc, steps, ndec, 0, cursor, depth
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                if op == 4:
                    v = q
                    chk = True
                else:
                    v = a - q * b
            elif op == 6:
                v = a & b
            elif op == 7:
                v = a | b
            elif op == 8:
                v = a ^ b
            elif op == 9:
                v = a << (b & 31)
                chk = True
            elif op == 10:
                v = a >> (b & 31)
            elif op == 11:
                v = 1 if a == b else 0
            elif op == 12:
                v = 1 if a != b else 0
            elif op == 13:
                v = 1 if a < b else 0
            elif op == 14:
                v = 1 if a <= b else 0
            elif op == 15:
                v = 1 if a > b else 0
            elif op == 16:
                v = 1 if a >= b else 0
            elif op == 17:
                v = 1 if (a != 0 and b != 0) else 0
            elif op == 18:
                v = 1 if (a != 0 or b != 0) else 0
            elif op == 19:
                v = -a
                chk = True
            elif op == 20:
                v = 1 if a == 0 else 0
            else:
                v = ~a
            if chk:
                if v > I32_MAX:
                    return ST_FAULT, 4, pc, steps, ndec, 0, cursor, depth
                if v < I32_MIN:
                    return ST_FAULT, 5, pc, steps, ndec, 0, cursor, depth
            slots[base + code[r + 1]] = v
            pc += 1
        elif op == 22:  # input
            width = code[r + 6]
            if width == 1:
                v = 0
                if cursor < ndata:
                    v = data[cursor]
                cursor += 1
            else:
                v = 0
                for k in range(4):
                    byte = 0
                    if cursor + k < ndata:
                        byte = data[cursor + k]
                    v = v | (byte << (8 * k))
                if v > I32_MAX:
                    v = v - 4294967296
                cursor += 4
            slots[base + code[r + 1]] = v
            pc += 1
        elif op == 23 or op == 24 or op == 25:  # load / store / addr
            k = fn_arr_start[func] + code[r + 6]
            size = arr_size[k]
            if op == 25:
                slots[base + code[r + 1]] = ((code[r + 6] + 1) << 33) + a + REF_BIAS
                pc += 1
                continue
            if a < 0 or a >= size:
                return ST_FAULT, 2, pc, steps, ndec, 0, cursor, depth
            if op == 23:
                slots[base + code[r + 1]] = heap[hbase + arr_off[k] + a]
            else:
                heap[hbase + arr_off[k] + a] = b
            pc += 1
        elif op == 26:
            slots[base + code[r + 1]] = 0
            pc += 1
        elif op == 27:
            slots[base + code[r + 1]] = slots[base + code[r + 6]]
            pc += 1
        elif op == 28 or op == 29:  # deref load / store
            rv = slots[base + code[r + 6]]
            region = rv >> 33
            if region == 0:
                return ST_FAULT, 6, pc, steps, ndec, 0, cursor, depth
            off = (rv & REF_MASK) - REF_BIAS
            k = fn_arr_start[func] + region - 1
            if off < 0 or off >= arr_size[k]:
                return ST_FAULT, 2, pc, steps, ndec, 0, cursor, depth
            if op == 28:
                slots[base + code[r + 1]] = heap[hbase + arr_off[k] + off]
            else:
                heap[hbase + arr_off[k] + off] = b
            pc += 1
        elif op == 30:
            if a == 0:
                return ST_FAULT, 1, pc, steps, ndec, 0, cursor, depth
            pc += 1
        elif op == 31:  # call
            if depth >= max_depth:
                return ST_DEPTH, 0, pc, steps, ndec, 0, cursor, depth
            callee = code[r + 6]
            nbase = base + fn_nslots[func]
            nhbase = hbase + fn_heap[func]
            for s in range(fn_nslots[callee]):
                slots[nbase + s] = 0
            for s in range(fn_heap[callee]):
                heap[nhbase + s] = 0
            astart = code[r + 7]
            for j in range(code[r + 8]):
                m = call_args[2 * (astart + j)]
                x = call_args[2 * (astart + j) + 1]
                if m != 0:
                    x = slots[base + x]
                slots[nbase + j] = x
            fr_func[depth] = callee
            fr_base[depth] = nbase
            fr_hbase[depth] = nhbase
            fr_ret[depth] = pc + 1
            fr_dst[depth] = code[r + 1]
            depth += 1
            func = callee
            base = nbase
            hbase = nhbase
            pc = fn_entry[callee]
        elif op == 32:  # goto
            edge_hits[code[r + 7]] = 1
            pc = code[r + 6]
        elif op == 33:  # branch
            if ndec >= ndec_cap:
                return ST_DECISIONS, 0, pc, steps, ndec, 0, cursor, depth
            taken = 1 if a != 0 else 0
            decisions[ndec] = code[r + 10] * 2 + taken
            ndec += 1
            if taken == 1:
                edge_hits[code[r + 8]] = 1
                pc = code[r + 6]
            else:
                edge_hits[code[r + 9]] = 1
                pc = code[r + 7]
        else:  # return
            edge_hits[code[r + 7]] = 1
            v = a
            depth -= 1
            if depth == 0:
                retval = v
                return ST_COMPLETED, 0, pc, steps, ndec, retval, cursor, depth
            dst = fr_dst[depth]
            pc = fr_ret[depth]
            func = fr_func[depth - 1]
            base = fr_base[depth - 1]
            hbase = fr_hbase[depth - 1]
            if dst >= 0:
                slots[base + dst] = v


def empty_outputs(bc, max_depth: int, decision_cap: int = 256):
    frames = max_depth + 1
    return (np.zeros(frames * max(bc.max_slots, 1), dtype=np.int64),
            np.zeros(frames * max(bc.max_heap, 1), dtype=np.int64),
            np.zeros(frames, dtype=np.int64), np.zeros(frames, dtype=np.int64),
            np.zeros(frames, dtype=np.int64), np.zeros(frames, dtype=np.int64),
            np.zeros(frames, dtype=np.int64),
            np.zeros(decision_cap, dtype=np.int64),
            np.zeros(max(bc.n_edges, 1), dtype=np.uint8))
