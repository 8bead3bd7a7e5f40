"""Group enumeration, subsets, congruence layers, table cache."""

import itertools
import pathlib

import numpy as np
import pytest

from specgap.errors import BudgetExceeded, CorruptCache
from specgap.exact import RationalMatrix, ResidueMatrix, reduce_mod
from specgap.groups import (
    GroupTable,
    SubsetHandle,
    cache_key,
    congruence_kernel,
    enumerate_group,
    kernel_table_from_basis,
    load_table,
    make_right_inverse_maps,
    prime_power,
    product_fold,
    save_table,
    subset_mul,
)

A = RationalMatrix([[1, 2], [0, 1]])
B = RationalMatrix([[1, 0], [2, 1]])


def sl2_table(m):
    gens = [reduce_mod(g, m) for g in (A, A.inverse(), B, B.inverse())]
    return enumerate_group(gens)


def brute_sl2_f3():
    """All 2x2 matrices over F3 with det 1, by exhaustive filter."""
    out = set()
    for a, b, c, d in itertools.product(range(3), repeat=4):
        if (a * d - b * c) % 3 == 1:
            out.add(((a, b), (c, d)))
    return out


def test_sl2_f3_order_and_elements():
    table = sl2_table(3)
    brute = brute_sl2_f3()
    assert table.size == len(brute) == 24
    got = {tuple(map(tuple, m.tolist())) for m in table.mats}
    assert got == brute


def test_identity_is_id_zero_and_closure():
    table = sl2_table(5)
    assert table.size == 120
    assert (table.mats[0] == np.eye(2, dtype=np.int64)).all()
    inv = table.inverse_ids()
    assert (inv[inv] == np.arange(table.size)).all()
    # translations are permutations
    rt = table.right_translation(table.mats[7])
    assert sorted(rt.tolist()) == list(range(table.size))


def test_unipotent_cyclic_order():
    gens = [reduce_mod(A, 5), reduce_mod(A.inverse(), 5)]
    assert enumerate_group(gens).size == 5


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        enumerate_group([reduce_mod(g, 5) for g in (A, A.inverse(), B, B.inverse())], budget=10)


def test_prime_power():
    from specgap.errors import BadModulus

    assert prime_power(125) == (5, 3)
    assert prime_power(8) == (2, 3)
    with pytest.raises(BadModulus):
        prime_power(12)


def brute_kernel_count(p, k, n=2):
    """|{I + p^k M mod p^(k+1) : det = 1}| by direct filter, SL2 only."""
    count = 0
    q = p ** (k + 1)
    for a, b, c, d in itertools.product(range(p), repeat=4):
        m = [[1 + p**k * a, p**k * b], [p**k * c, 1 + p**k * d]]
        det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) % q
        if det == 1:
            count += 1
    return count


@pytest.mark.parametrize("p,k", [(3, 1), (3, 2), (5, 1), (5, 2)])
def test_congruence_kernel_order_is_p_cubed(p, k):
    # oracle: direct filter over candidate layer matrices
    assert brute_kernel_count(p, k) == p**3
    # the enumerated table agrees (mod p^(k+1), layer at level k)
    table = sl2_table(p ** (k + 1))
    layer = congruence_kernel(table, k)
    assert layer.order == p**3
    assert layer.verify_normal()


def test_congruence_kernel_is_normal():
    table = sl2_table(9)
    layer = congruence_kernel(table, 1)
    ids = layer.handle.ids()
    rng = np.random.default_rng(3)
    for g in rng.integers(0, table.size, 8):
        cmap = table.conjugation_map(table.mats[g], table.mats[table.inverse_ids()[g]])
        assert (np.sort(cmap[ids]) == ids).all()


def test_kernel_table_from_basis_matches_enumeration():
    # independent construction of the level-1 layer mod 9, cross-checked
    # against the kernel cut out of the fully enumerated table
    full = sl2_table(9)
    layer = congruence_kernel(full, 1)
    sl2_basis = [
        (0, 1, 0, 0),
        (0, 0, 1, 0),
        (1, 0, 0, -1),
    ]
    built = kernel_table_from_basis(sl2_basis, 3, 1, 2, budget=10**6)
    assert built.size == layer.order == 27
    enc_layer = {full.encode_element(int(i)) for i in layer.handle.ids()}
    enc_built = {built.encode_element(i) for i in range(built.size)}
    assert enc_layer == enc_built
    from specgap.errors import BadModulus

    with pytest.raises(BadModulus):
        kernel_table_from_basis(sl2_basis, 3, 1, 3)


def test_subset_algebra_and_lagrange():
    table = sl2_table(5)
    rng = np.random.default_rng(11)
    for seed in rng.integers(1, table.size, 6):
        mask = table.closure_mask([int(seed)])
        h = SubsetHandle(table, mask)
        assert table.size % h.size == 0
        assert h.verify_subgroup() in ("full", "sampled")


def test_product_fold_monotone_fixed_point():
    table = sl2_table(5)
    ids = [table.id_of(reduce_mod(A, 5)), table.id_of(reduce_mod(A.inverse(), 5)), 0]
    s = SubsetHandle.from_ids(table, np.array(ids, dtype=np.int32))
    prev = 0
    for c in range(1, 8):
        size = product_fold(s, c).size
        assert size >= prev
        prev = size
    # fixed point is the subgroup generated by S (cyclic of order 5)
    assert prev == 5


def test_subset_mul_matches_brute():
    table = sl2_table(3)
    rng = np.random.default_rng(5)
    xs = rng.integers(0, table.size, 6)
    ys = rng.integers(0, table.size, 4)
    x = SubsetHandle.from_ids(table, np.unique(xs).astype(np.int32))
    y = SubsetHandle.from_ids(table, np.unique(ys).astype(np.int32))
    got = subset_mul(x, y)
    brute = set()
    for i in x.ids():
        for j in y.ids():
            prod = (table.mats[int(i)] @ table.mats[int(j)]) % 3
            brute.add(int(table.ids_of(prod[None])[0]))
    assert set(got.ids().tolist()) == brute


def test_conjugation_map_with_external_matrix():
    # gamma need not be a member: conjugate the mod-9 layer by an elementary
    # matrix living in the full group
    full = sl2_table(9)
    layer = congruence_kernel(full, 1)
    ids = layer.handle.ids()
    gam = np.array([[1, 1], [0, 1]], dtype=np.int64)
    gam_inv = np.array([[1, 8], [0, 1]], dtype=np.int64)
    cmap = full.conjugation_map(gam, gam_inv)
    assert (np.sort(cmap[ids]) == ids).all()  # layer is normal


def test_cache_roundtrip_and_corruption(tmp_path):
    table = sl2_table(9)
    path = tmp_path / "t.bin"
    save_table(table, path)
    loaded = load_table(path)
    assert loaded.m == table.m and loaded.size == table.size
    assert (loaded.mats == table.mats).all()
    assert loaded.gen_ids == table.gen_ids

    raw = path.read_bytes()
    (tmp_path / "bad1.bin").write_bytes(b"XXXXX" + raw[5:])
    with pytest.raises(CorruptCache):
        load_table(tmp_path / "bad1.bin")
    (tmp_path / "bad2.bin").write_bytes(raw[:-7])
    with pytest.raises(CorruptCache):
        load_table(tmp_path / "bad2.bin")


def test_cache_key_stability():
    gens = [reduce_mod(g, 9) for g in (A, A.inverse())]
    k1 = cache_key(gens)
    k2 = cache_key(list(gens))
    assert k1 == k2
    k3 = cache_key([reduce_mod(B, 9), reduce_mod(B.inverse(), 9)])
    assert k1 != k3


def test_make_right_inverse_maps_contract():
    table = sl2_table(3)
    s_ids = np.array([1, 2], dtype=np.int64)
    maps = make_right_inverse_maps(table, s_ids)
    inv = table.inverse_ids()
    for r, s in enumerate(s_ids):
        si = table.mats[inv[int(s)]]
        for t in range(0, table.size, 5):
            expect = int(table.ids_of((table.mats[t] @ si % 3)[None])[0])
            assert maps[r, t] == expect
