"""The oracles themselves, checked on hand-worked cases."""

from __future__ import annotations

import math

from oracles import (I32_MAX, I32_MIN, edges_of_decisions, fspl_physics_db, i32_pred, i32_word,
                     model_satisfies, sat_brute)

from uavfuzz.minir import parse_program


def test_sat_brute_small_cases():
    assert sat_brute(1, [[1]])
    assert not sat_brute(2, [[1, 2], [-1], [-2]])
    assert sat_brute(2, [[1, 2], [-1]])
    # pigeonhole: 3 pigeons, 2 holes (var = 2 * pigeon + hole + 1)
    p = lambda i, h: 2 * i + h + 1
    clauses = [[p(i, 0), p(i, 1)] for i in range(3)]
    clauses += [[-p(i, h), -p(j, h)] for h in range(2) for i in range(3) for j in range(i + 1, 3)]
    assert not sat_brute(6, clauses)
    assert sat_brute(3, [])


def test_model_satisfies():
    assert model_satisfies({1: True, 2: False}, [[1, 2], [-2]])
    assert not model_satisfies({1: False, 2: False}, [[1, 2]])


def test_twos_complement_by_hand():
    assert i32_word("add", I32_MAX, 1) == I32_MIN
    assert i32_word("mul", 65536, 65536) == 0
    assert i32_word("div", -7, 2) == -3
    assert i32_word("mod", -7, 2) == -1
    assert i32_word("mod", 7, -2) == 1
    assert i32_word("div", I32_MIN, -1) == I32_MIN
    assert i32_word("shl", 1, 33) == 2
    assert i32_word("shr", -8, 1) == -4
    assert i32_pred("add_ovf", I32_MAX, 1)
    assert i32_pred("sub_unf", I32_MIN, 1)
    assert i32_pred("mul_unf", -65536, 65537)
    assert i32_pred("div_ovf", I32_MIN, -1)
    assert not i32_pred("shl_ovf", 1, 30)
    assert i32_pred("shl_ovf", 1, 31)


def test_friis_constant_matches_textbook_value():
    # the MHz/km constant is 20 log10(4 pi 1e9 / c) = 32.45 dB
    assert math.isclose(fspl_physics_db(1000.0, 1.0), 32.447, abs_tol=1e-3)


def test_edge_walker_hand_counted():
    # blocks: 0 entry/branch, 1 then, 2 join; edges 0->1, 0->2, 1->2, 2->exit
    p = parse_program("fn main() { x = input_byte(); if (x < 5) { y = 1; } }")
    assert len(p.edges) == 4
    site = next(iter(p.branch_sites))
    assert len(edges_of_decisions(p, [site * 2 + 1])) == 3
    assert len(edges_of_decisions(p, [site * 2])) == 2
