from __future__ import annotations

import dataclasses
import random
import struct

import numpy as np
import pytest
from conftest import BUGGY, program
from hypothesis import given
from hypothesis import strategies as st
from oracles import (I32_MAX, I32_MIN, i32_pred, i32_word, model_satisfies, random_3cnf,
                     sat_brute)

from uavfuzz.bmc import (Blaster, CnfFormula, EncodeError, SatStatus, Solver, SymbolicPath,
                         TermBuilder,
                         UnknownReason, VerdictKind, brute_force, check, default_k, encode,
                         enumerate_paths, read_dimacs, solve, solve_vc)
from uavfuzz.fuzz import campaign
from uavfuzz.minir import FaultKind, parse_program
from uavfuzz.vm import reference, replay, run

# -- solver ------------------------------------------------------------------------------------


def _solve(num_vars, clauses, **kw):
    s = Solver(num_vars)
    for c in clauses:
        s.add_clause(c)
    return s.solve(**kw)


def test_trivial_unsat():
    assert _solve(2, [[1, 2], [-1], [-2]]).status is SatStatus.UNSAT


def test_unit_clause_sat():
    r = _solve(1, [[1]])
    assert r.sat and r.model == {1: True}


def test_random_3cnf_against_oracle():
    rng = random.Random(2024)
    for n in (5, 8, 12):
        for _ in range(40):
            cl = random_3cnf(rng, n, rng.randint(2 * n, 6 * n))
            r = _solve(n, cl)
            assert r.sat == sat_brute(n, cl)
            if r.sat:
                assert model_satisfies(r.model, cl)


@given(st.lists(st.lists(st.integers(1, 7).flatmap(lambda v: st.sampled_from([v, -v])),
                         min_size=1, max_size=4), max_size=30))
def test_solver_matches_oracle_property(clauses):
    r = _solve(7, clauses)
    assert r.sat == sat_brute(7, clauses)
    if r.sat:
        assert model_satisfies(r.model, clauses)


def test_brute_force_backends_match_oracle():
    rng = random.Random(7)
    for _ in range(20):
        cl = random_3cnf(rng, 10, 45)
        expect = sat_brute(10, cl)
        for backend in ("jit", "py"):
            m = brute_force(10, cl, backend=backend)
            assert (m is not None) == expect
            if m is not None:
                assert model_satisfies(m, cl)


def test_incremental_assumptions():
    s = Solver(3)
    s.add_clause([1, 2])
    s.add_clause([-1, 3])
    assert s.solve(assumptions=[-2]).model[1] is True
    assert s.solve(assumptions=[-2, -3]).status is SatStatus.UNSAT
    assert s.solve().sat  # assumptions are not permanent


def test_timeout():
    # pigeonhole 9 into 8 is hard for resolution
    n, h = 9, 8
    var = lambda i, j: i * h + j + 1
    cl = [[var(i, j) for j in range(h)] for i in range(n)]
    cl += [[-var(i, j), -var(k, j)] for j in range(h) for i in range(n) for k in range(i + 1, n)]
    assert _solve(n * h, cl, timeout=0.05).status is SatStatus.TIMEOUT


def test_dimacs_round_trip():
    f = CnfFormula(3, [[1, -2], [2, 3], [-1]])
    text = f.to_dimacs()
    assert text.splitlines()[0] == "p cnf 3 3"
    back = read_dimacs(text)
    assert back.num_vars == 3 and back.clauses == f.clauses
    assert solve(back).sat == sat_brute(3, f.clauses)
    with pytest.raises(ValueError):
        read_dimacs("1 2 0\n")


# -- bit-blasting ----------------------------------------------------------------------------------

N_PAIRS = 10_000
WORD = ["add", "sub", "mul", "div", "mod", "and", "or", "xor", "shl", "shr"]
PRED = ["eq", "lt", "le", "add_ovf", "add_unf", "sub_ovf", "sub_unf", "mul_ovf", "mul_unf",
        "shl_ovf", "shl_unf", "div_ovf"]
SPECIAL = np.array([0, 1, -1, 2, -2, I32_MAX, I32_MIN, 65535, 46341, -46341, 31, 32])


def _operands(rng, divisor=False):
    a = rng.integers(I32_MIN, I32_MAX + 1, N_PAIRS, dtype=np.int64)
    m = rng.random(N_PAIRS) < 0.3
    a[m] = rng.choice(SPECIAL, m.sum())
    small = rng.random(N_PAIRS) < 0.2
    a[small] = rng.integers(-40, 41, small.sum())
    return a


def _bits(values, lits, inputs):
    u = np.asarray(values, dtype=np.int64) & 0xFFFFFFFF
    for i, lit in enumerate(lits):
        inputs[lit] = ((u >> i) & 1).astype(bool)


@pytest.mark.parametrize("op", WORD + PRED)
def test_bit_blasting_matches_reference_semantics(op):
    rng = np.random.default_rng(abs(hash(op)) % 2 ** 32)
    A, B = _operands(rng), _operands(rng)
    if op in ("div", "mod"):
        B[B == 0] = 3
        clash = (A == I32_MIN) & (B == -1)
        B[clash & (op == "div")] = 5  # MIN / -1 faults; its value is never observed
    tb = TermBuilder()
    bl = Blaster(tb)
    x, y = tb.inword(0), tb.inword(4)
    if op in WORD:
        t = tb.binop(op, x, y)
    elif op in ("eq", "lt", "le"):
        t = tb.cmp(op, x, y)
    else:
        t = tb.fault(op, x, y)
    out = bl.blast(t)
    inputs = {}
    _bits(A, [v for k in range(4) for v in bl.byte_vars[k]], inputs)
    _bits(B, [v for k in range(4, 8) for v in bl.byte_vars[k]], inputs)
    if op in ("div", "mod"):
        # quotient/remainder are solver variables: supply the reference values
        q = [i32_word("div", int(a), int(b)) if not (a == I32_MIN and b == -1) else 0
             for a, b in zip(A, B)]
        r = [i32_word("mod", int(a), int(b)) for a, b in zip(A, B)]
        (qv, rv), = bl._divrel.values()
        _bits(q, qv, inputs)
        _bits(r, rv, inputs)
    get = bl.g.simulate(inputs, N_PAIRS)
    for clause in bl.g.clauses:  # the assignment is a model of the CNF
        sat = np.zeros(N_PAIRS, dtype=bool)
        for lit in clause:
            sat |= get(lit)
        assert sat.all(), op
    if isinstance(out, list):
        val = sum(get(l).astype(np.int64) << i for i, l in enumerate(out))
        got = np.where(val >= 2 ** 31, val - 2 ** 32, val)
        expect = np.array([i32_word(op, int(a), int(b)) for a, b in zip(A, B)])
    else:
        got = get(out)
        expect = np.array([i32_pred(op, int(a), int(b)) for a, b in zip(A, B)])
    assert np.array_equal(got, expect), op


@pytest.mark.parametrize("op", ["div", "mod"])
def test_division_relation_forces_unique_result(op):
    rng = random.Random(op)
    pairs = [(I32_MIN, -1), (7, -2), (-7, 2), (I32_MIN, 1), (0, 5)]
    # moderate magnitudes keep the pure-Python solver fast; the corners are above
    pairs += [(rng.randint(-5000, 5000), rng.choice([-1, 1]) * rng.randint(1, 100))
              for _ in range(6)]
    for a, b in pairs:
        if op == "div" and (a, b) == (I32_MIN, -1):
            continue
        tb = TermBuilder()
        t = tb.binop(op, tb.inword(0), tb.inword(4))
        target = tb.cmp("eq", t, tb.const(i32_word(op, a, b)))
        bl = Blaster(tb)
        goal = bl.blast(tb.not_(target))
        f = bl.formula()
        assumptions = [goal]
        for k, byte in enumerate(struct.pack("<ii", a, b)):
            assumptions += [v if (byte >> i) & 1 else -v for i, v in enumerate(bl.byte_vars[k])]
        assert solve(f, assumptions=assumptions, timeout=60).status is SatStatus.UNSAT, (a, b)


# -- path enumeration ---------------------------------------------------------------------------------

RETURN_LOOP = parse_program("""
fn main() {
  i = 0;
  while (i < 10) {
    if (input_byte() == 0) { return; }
    i = i + 1;
  }
}""")


def test_straight_line_one_path():
    paths = list(enumerate_paths(program("safe_line"), k=1))
    assert len(paths) == 1 and paths[0].decisions == ()


def test_full_exclusion_empty():
    p = program("safe_abs")
    both = [pp.codes for pp in enumerate_paths(p, k=1)]
    assert len(both) == 2
    assert list(enumerate_paths(p, k=1, exclude=both)) == []


@pytest.mark.parametrize("k", [5, 10])
def test_loop_paths_match_concrete_enumeration(k):
    # oracle: all 0/1 byte strings of length 10 drive every path; keep those within k iterations
    expect = set()
    for m in range(1 << 10):
        data = bytes((m >> j) & 1 for j in range(10))
        res = reference.execute(RETURN_LOOP, data)
        if max(res.loop_iterations.values(), default=0) <= k:
            expect.add(res.outcome.path.codes)
    got = {pp.codes for pp in enumerate_paths(RETURN_LOOP, k=k)}
    assert got == expect
    assert len(got) == (5 if k == 5 else 11)


def test_paths_depth_bounded():
    for pp in enumerate_paths(program("loop_iter10"), k=4):
        assert pp.depth <= 4


# -- encode --------------------------------------------------------------------------------------------

def _only_path(p, k=1):
    (path,) = list(enumerate_paths(p, k))
    return path


def _prop(p, kind):
    return next(pr for pr in p.properties if pr.kind is kind)


def test_encode_assert_eq_5():
    p = parse_program("fn main() { x = input(); assert(x == 5); }")
    vc = encode(p, _only_path(p), _prop(p, FaultKind.ASSERT))
    res, data = solve_vc(vc)
    assert res.sat and struct.unpack("<i", data[:4])[0] != 5
    tb = vc.terms
    forced = dataclasses.replace(vc, goal=tb.and_(vc.goal, tb.cmp("eq", tb.inword(0), tb.const(5))))
    assert solve_vc(forced)[0].status is SatStatus.UNSAT


def test_encode_tautology_unsat():
    p = parse_program("fn main() { assert(1); }")
    vc = encode(p, _only_path(p), _prop(p, FaultKind.ASSERT))
    assert solve_vc(vc)[0].status is SatStatus.UNSAT


def test_encode_increment_overflow_unique_model():
    p = parse_program("fn main() { x = input(); y = x + 1; }")
    vc = encode(p, _only_path(p), _prop(p, FaultKind.OVERFLOW))
    res, data = solve_vc(vc)
    assert res.sat and struct.unpack("<i", data[:4])[0] == I32_MAX
    tb = vc.terms
    other = dataclasses.replace(
        vc, goal=tb.and_(vc.goal, tb.cmp("ne", tb.inword(0), tb.const(I32_MAX))))
    assert solve_vc(other)[0].status is SatStatus.UNSAT


def test_encode_rejects_foreign_property():
    p = parse_program("fn main() { x = input(); y = x + 1; }")
    with pytest.raises(EncodeError):
        encode(p, _only_path(p), dataclasses.replace(_prop(p, FaultKind.OVERFLOW),
                                                     kind=FaultKind.DIV_BY_ZERO))


def test_cnf_var_map_total():
    p = program("checksum_pair")
    path = SymbolicPath(tuple((site, 1) for site in sorted(p.branch_sites)), 0)
    vc = encode(p, path, _prop(p, FaultKind.ASSERT))
    f, _ = vc.to_cnf()
    assert all(len(bits) == 8 for bits in f.var_map.values())
    assert all(1 <= abs(l) <= f.num_vars for c in f.clauses for l in c)


# -- check ---------------------------------------------------------------------------------------------

def test_check_assert_false():
    v = check(program("assert_false"), k=1)
    assert v.kind is VerdictKind.FALSE and v.counterexample.depth == 1


def test_check_loop_free_safe_complete():
    v = check(program("safe_line"), k=1)
    assert v.kind is VerdictKind.TRUE and v.complete


def test_check_iteration_ten_bug():
    p = program("loop_iter10")
    shallow = check(p, k=5)
    assert shallow.kind is VerdictKind.TRUE and not shallow.complete
    deep = check(p, k=10)
    assert deep.kind is VerdictKind.FALSE
    assert deep.counterexample.depth == 10
    assert replay(p, deep.counterexample).fault.kind is FaultKind.BUFFER_OVERFLOW


def test_check_unknown_threshold():
    p = parse_program("fn main() { while (input_byte() != 0) { } }")
    assert default_k(p) == 10
    v = check(p)
    assert v.kind is VerdictKind.TRUE and not v.complete and v.threshold is None


def test_check_timeout():
    p = parse_program("fn main() { x = input(); y = input(); "
                      "if (x * y == 1073741827) { if (x > 1) { if (y > 1) { assert(0); } } } }")
    v = check(p, timeout=0.01, total_timeout=0.5, properties=[_prop(p, FaultKind.ASSERT)])
    assert v.kind is VerdictKind.UNKNOWN and v.reason is UnknownReason.TIMEOUT


def test_verdict_invariants():
    for name in ("safe_abs", "safe_loop"):
        v = check(program(name))
        assert v.kind is VerdictKind.TRUE and v.complete and v.k >= v.threshold


@pytest.mark.parametrize("name", BUGGY)
def test_false_verdicts_replay(name):
    p = program(name)
    v = check(p)
    assert v.kind is VerdictKind.FALSE
    cex = v.counterexample
    out = replay(p, cex)
    assert out.fault == cex.property
    assert len(cex.trace) <= max(1, len(cex.trace)) and cex.trace[-1].pc == cex.property.location
    assert cex.depth <= v.k


def test_min_mod_minus_one_is_safe():
    p = parse_program("fn main() { x = input(); y = input(); if (x == -2147483648) { "
                      "if (y == -1) { z = x % y; assert(z == 0); } } }")
    v = check(p)
    assert v.kind is VerdictKind.TRUE and v.complete


@pytest.mark.parametrize("name", ["div_by_zero", "checksum_pair", "null_deref", "call_div",
                                  "signed_overflow", "safe_abs"])
def test_exclusion_consistency(name):
    p = program(name)
    res = campaign(p, [], 2000, rng_seed=9)
    excluded = res.corpus.decision_lists()
    v = check(p, exclude=excluded)
    if v.kind is VerdictKind.FALSE:
        assert run(p, v.counterexample.inputs).path.codes not in excluded
    else:
        assert v.kind is VerdictKind.TRUE
        assert v.stats.paths + v.stats.excluded_paths == len(list(enumerate_paths(p, v.k)))
