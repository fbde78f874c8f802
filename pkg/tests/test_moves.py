import random

import pytest
from hypothesis import given, settings, strategies as st

from fccfold.chain import Conformation, Sequence, initialise, is_valid, zigzag
from fccfold.energy import Energy, default_matrix
from fccfold.moves import (
    Guidance,
    MoveKind,
    PullSpec,
    apply_pull,
    crossover,
    diagonal_candidates,
    diagonal_move,
    macro_mutation,
    pull_candidates,
    pull_move,
    rotation,
    tilt_move,
)


def _check(c, n):
    assert len(c) == n
    assert c.coords[0] == (0, 0, 0)
    assert is_valid(c.coords)
    assert Conformation.from_directions(c.directions).coords == c.coords


def test_crossover_swaps_tails():
    a = zigzag(6)
    b = Conformation.from_directions((0, 0, 0, 0, 0))
    c1, c2 = crossover(a, b, 2)
    assert c1.directions == a.directions[:2] + b.directions[2:]
    assert c2.directions == b.directions[:2] + a.directions[2:]
    with pytest.raises(ValueError):
        crossover(a, b, 0)
    with pytest.raises(ValueError):
        crossover(a, b, 5)




def test_rotation_identity_and_validity(rng):
    c = initialise(30, rng)
    assert rotation(c, 5, 0).result.key == c.key
    for k in range(24):
        out = rotation(c, 10, k)
        if out.ok:
            _check(out.result, 30)
            assert out.result.directions[:9] == c.directions[:9]


def test_diagonal_single_site():
    c = Conformation.from_directions((0, 3))  # straight zigzag of 3
    cands = diagonal_candidates(c.coords, 1)
    assert len(cands) == 3
    out = diagonal_move(c, 1)
    assert out.ok and out.result.coords[1] == cands[0]
    assert not diagonal_move(c, 0).ok
    assert not diagonal_move(c, 2).ok


def test_pull_inverse_replay(rng):
    for _ in range(300):
        c = initialise(rng.randint(3, 40), rng)
        pos = rng.randrange(len(c))
        out = pull_move(c, pos, rng)
        if not out.ok:
            continue
        _check(out.result, len(c))
        back = apply_pull(out.result, out.inverse)
        assert back is not None and back.key == c.key


def test_pull_candidates_are_valid(rng):
    c = initialise(25, rng)
    for pos in range(25):
        for spec in pull_candidates(c, pos):
            r = apply_pull(c, spec)
            assert r is not None
            _check(r, 25)




def test_tilt_validity_and_length_rule(rng):
    z = zigzag(10)
    # alternate directions: no two consecutive equal, so explicit length 3 is not collinear
    assert not tilt_move(z, 2, rng, length=3).ok
    straight = Conformation.from_directions((0,) * 9)
    out = tilt_move(straight, 3, rng, length=3)
    assert out.ok
    _check(out.result, 10)
    for _ in range(200):
        c = initialise(20, rng)
        out = tilt_move(c, rng.randrange(19), rng)
        if out.ok:
            _check(out.result, 20)


def test_macro_mutation_hcc_never_moves_h_outward(rng):
    seq = Sequence("MKVLAGHTEWRFPQISNDYCGAVL")
    events = []
    for _ in range(50):
        c = initialise(seq, rng)
        m = macro_mutation(c, seq, rng=rng, on_accept=lambda j, k, a, b: events.append((k, a, b)))
        _check(m, len(seq))
    assert events
    assert all(b <= a for k, a, b in events if k == "H")


def test_macro_mutation_energy_guidance(rng):
    seq = Sequence("MKVLAGHTEWRFPQISNDYC")
    f = Energy(seq, "BM", default_matrix())
    with pytest.raises(ValueError):
        macro_mutation(initialise(seq, rng), seq, guidance=Guidance.ENERGY)
    c = initialise(seq, rng)
    m = macro_mutation(c, seq, rng=rng, guidance=Guidance.ENERGY, energy=f)
    _check(m, len(seq))


def test_macro_mutation_unchanged_returns_input():
    # three residues: the middle one is P, so p=0 (H only) finds no interior H
    seq = Sequence("AKA")
    c = zigzag(3)
    assert macro_mutation(c, seq, p=0.0, rng=random.Random(0)) is c


OPS = ["rotation", "diagonal", "pull", "tilt"]


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**32), st.sampled_from(OPS))
def test_operators_preserve_validity(n, seed, op):
    rng = random.Random(seed)
    c = initialise(n, rng)
    pos = rng.randrange(n)
    if op == "rotation":
        out = rotation(c, max(1, pos), rng.randrange(24))
    elif op == "diagonal":
        out = diagonal_move(c, pos)
    elif op == "pull":
        out = pull_move(c, pos, rng)
    else:
        out = tilt_move(c, pos, rng)
    if out.ok:
        _check(out.result, n)
    assert is_valid(c.coords)  # input untouched
