"""Flattening of a Program into integer tables for the interpreter kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..minir import ir

W = 12  # fields per instruction row

# row layout: op, dst, a_mode, a, b_mode, b, c, d, e, f, g, unused
OP_COPY, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_MOD = 0, 1, 2, 3, 4, 5
OP_AND, OP_OR, OP_XOR, OP_SHL, OP_SHR = 6, 7, 8, 9, 10
OP_EQ, OP_NE, OP_LT, OP_LE, OP_GT, OP_GE, OP_LAND, OP_LOR = 11, 12, 13, 14, 15, 16, 17, 18
OP_NEG, OP_NOT, OP_BNOT = 19, 20, 21
OP_INPUT, OP_LOAD, OP_STORE, OP_ADDR, OP_NULL, OP_RCOPY, OP_DLOAD, OP_DSTORE = 22, 23, 24, 25, 26, 27, 28, 29
OP_ASSERT, OP_CALL, OP_GOTO, OP_BR, OP_RET = 30, 31, 32, 33, 34

ALU_CODES = {"copy": OP_COPY, "add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV,
             "mod": OP_MOD, "and": OP_AND, "or": OP_OR, "xor": OP_XOR, "shl": OP_SHL,
             "shr": OP_SHR, "eq": OP_EQ, "ne": OP_NE, "lt": OP_LT, "le": OP_LE, "gt": OP_GT,
             "ge": OP_GE, "land": OP_LAND, "lor": OP_LOR, "neg": OP_NEG, "not": OP_NOT,
             "bnot": OP_BNOT}

# fault codes shared with the kernel
FAULT_CODES = {1: ir.FaultKind.ASSERT, 2: ir.FaultKind.BUFFER_OVERFLOW, 3: ir.FaultKind.DIV_BY_ZERO,
               4: ir.FaultKind.OVERFLOW, 5: ir.FaultKind.UNDERFLOW, 6: ir.FaultKind.NULL_DEREF}

REF_SHIFT = 33
REF_BIAS = 1 << 32


def encode_ref(region: int, offset: int) -> int:
    return 0 if region == 0 else (region << REF_SHIFT) + offset + REF_BIAS


def decode_ref(value: int) -> tuple[int, int]:
    region = value >> REF_SHIFT
    return region, (value & ((1 << REF_SHIFT) - 1)) - REF_BIAS


@dataclass
class Bytecode:
    code: np.ndarray  # int64 [n * W]
    call_args: np.ndarray  # int64 pairs (mode, value)
    fn_entry: np.ndarray
    fn_nslots: np.ndarray
    fn_nparams: np.ndarray
    fn_heap: np.ndarray
    fn_arr_start: np.ndarray
    arr_off: np.ndarray
    arr_size: np.ndarray
    n_edges: int
    pc_loc: list  # pc -> Location (terminators use index == len(instructions))
    slot_names: list  # per function: list of slot names (scalars then refs)
    func_ids: dict
    max_slots: int
    max_heap: int
    entry_id: int

    def tables(self):
        return (self.code, self.call_args, self.fn_entry, self.fn_nslots, self.fn_nparams,
                self.fn_heap, self.fn_arr_start, self.arr_off, self.arr_size)


def compile_program(program: ir.Program) -> Bytecode:
    func_ids = {f.name: i for i, f in enumerate(program.functions)}
    slot_maps, arr_maps = [], []
    block_pc: dict[tuple[str, int], int] = {}
    pc = 0
    for f in program.functions:
        for b, block in enumerate(f.blocks):
            block_pc[(f.name, b)] = pc
            pc += len(block.instructions) + 1
    rows: list[list[int]] = []
    call_args: list[int] = []
    pc_loc = []
    fn_entry, fn_nslots, fn_nparams, fn_heap, fn_arr_start = [], [], [], [], []
    arr_off, arr_size, slot_names = [], [], []

    for f in program.functions:
        slots = {name: i for i, name in enumerate(f.scalars + f.refs)}
        arrays = {name: k for k, (name, _) in enumerate(f.arrays)}
        slot_maps.append(slots)
        arr_maps.append(arrays)
        slot_names.append(list(f.scalars + f.refs))
        fn_entry.append(block_pc[(f.name, 0)])
        fn_nslots.append(len(slots))
        fn_nparams.append(len(f.params))
        fn_arr_start.append(len(arr_off))
        heap = 0
        for _, size in f.arrays:
            arr_off.append(heap)
            arr_size.append(size)
            heap += size
        fn_heap.append(heap)

        def operand(op: ir.Operand) -> tuple[int, int]:
            if isinstance(op, ir.Const):
                return 0, op.value
            return 1, slots[op.name]

        for b, block in enumerate(f.blocks):
            for i, ins in enumerate(block.instructions):
                row = [0] * W
                if isinstance(ins, ir.Assign):
                    row[0] = ALU_CODES[ins.op]
                    row[1] = slots[ins.dest]
                    row[2], row[3] = operand(ins.args[0])
                    if len(ins.args) > 1:
                        row[4], row[5] = operand(ins.args[1])
                elif isinstance(ins, ir.Input):
                    row[0], row[1], row[6] = OP_INPUT, slots[ins.dest], ins.width
                elif isinstance(ins, ir.Load):
                    row[0], row[1] = OP_LOAD, slots[ins.dest]
                    row[2], row[3] = operand(ins.index)
                    row[6] = arrays[ins.array]
                elif isinstance(ins, ir.Store):
                    row[0] = OP_STORE
                    row[2], row[3] = operand(ins.index)
                    row[4], row[5] = operand(ins.value)
                    row[6] = arrays[ins.array]
                elif isinstance(ins, ir.RefAddr):
                    row[0], row[1] = OP_ADDR, slots[ins.dest]
                    row[2], row[3] = operand(ins.index)
                    row[6] = arrays[ins.array]
                elif isinstance(ins, ir.RefNull):
                    row[0], row[1] = OP_NULL, slots[ins.dest]
                elif isinstance(ins, ir.RefCopy):
                    row[0], row[1], row[6] = OP_RCOPY, slots[ins.dest], slots[ins.src]
                elif isinstance(ins, ir.DerefLoad):
                    row[0], row[1], row[6] = OP_DLOAD, slots[ins.dest], slots[ins.ref]
                elif isinstance(ins, ir.DerefStore):
                    row[0], row[6] = OP_DSTORE, slots[ins.ref]
                    row[4], row[5] = operand(ins.value)
                elif isinstance(ins, ir.Assert):
                    row[0] = OP_ASSERT
                    row[2], row[3] = operand(ins.cond)
                elif isinstance(ins, ir.Call):
                    row[0] = OP_CALL
                    row[1] = -1 if ins.dest is None else slots[ins.dest]
                    row[6] = func_ids[ins.func]
                    row[7] = len(call_args) // 2
                    row[8] = len(ins.args)
                    for a in ins.args:
                        call_args.extend(operand(a))
                else:  # pragma: no cover
                    raise TypeError(ins)
                rows.append(row)
                pc_loc.append(ir.Location(f.name, b, i))
            t = block.terminator
            row = [0] * W
            if isinstance(t, ir.Goto):
                row[0], row[6], row[7] = OP_GOTO, block_pc[(f.name, t.target)], \
                    program.edge_ids[(f.name, b, t.target)]
            elif isinstance(t, ir.Branch):
                row[0] = OP_BR
                row[2], row[3] = operand(t.cond)
                row[6] = block_pc[(f.name, t.then)]
                row[7] = block_pc[(f.name, t.else_)]
                row[8] = program.edge_ids[(f.name, b, t.then)]
                row[9] = program.edge_ids[(f.name, b, t.else_)]
                row[10] = t.site
            else:
                row[0] = OP_RET
                if t.value is not None:
                    row[2], row[3] = operand(t.value)
                row[7] = program.edge_ids[(f.name, b, ir.EXIT)]
            rows.append(row)
            pc_loc.append(ir.Location(f.name, b, len(block.instructions)))

    as64 = lambda xs: np.asarray(xs, dtype=np.int64).reshape(-1)
    return Bytecode(
        code=as64(rows) if rows else np.zeros(0, dtype=np.int64),
        call_args=as64(call_args) if call_args else np.zeros(2, dtype=np.int64),
        fn_entry=as64(fn_entry), fn_nslots=as64(fn_nslots), fn_nparams=as64(fn_nparams),
        fn_heap=as64(fn_heap), fn_arr_start=as64(fn_arr_start),
        arr_off=as64(arr_off) if arr_off else np.zeros(1, dtype=np.int64),
        arr_size=as64(arr_size) if arr_size else np.zeros(1, dtype=np.int64),
        n_edges=len(program.edges), pc_loc=pc_loc, slot_names=slot_names, func_ids=func_ids,
        max_slots=max(fn_nslots, default=1), max_heap=max(fn_heap, default=0),
        entry_id=func_ids[program.entry],
    )
