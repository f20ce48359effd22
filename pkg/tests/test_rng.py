"""Determinism and distribution checks for the counter-based generator."""

import numpy as np

from famnov.rng import Rng, derive_seed

# Frozen reference draws for seed 42, computed once from the documented
# algorithm (splitmix64 finalizer over a golden-ratio Weyl counter).
SEED42_RAW = [
    0xBDD732262FEB6E95,
    0x28EFE333B266F103,
    0x47526757130F9F52,
    0x581CE1FF0E4AE394,
]


class TestRawStream:
    def test_frozen_reference_values(self):
        assert [int(v) for v in Rng(42).raw(4)] == SEED42_RAW

    def test_bit_identical_across_instances(self):
        a = Rng(123456789).raw(1000)
        b = Rng(123456789).raw(1000)
        assert np.array_equal(a, b)

    def test_scalar_and_bulk_agree(self):
        bulk = Rng(7).raw(16)
        scalar = Rng(7)
        assert [scalar.next_u64() for _ in range(16)] == [int(v) for v in bulk]

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).raw(64), Rng(2).raw(64))

    def test_counter_advances(self):
        rng = Rng(42)
        first = rng.raw(2)
        second = rng.raw(2)
        assert [int(v) for v in first] == SEED42_RAW[:2]
        assert [int(v) for v in second] == SEED42_RAW[2:]


class TestUniforms:
    def test_range(self):
        u = Rng(99).uniforms(10000)
        assert u.min() >= 0.0
        assert u.max() < 1.0

    def test_scalar_matches_bulk(self):
        bulk = Rng(5).uniforms(8)
        scalar = Rng(5)
        got = np.array([scalar.uniform() for _ in range(8)])
        assert np.array_equal(got, bulk)

    def test_mean_is_centered(self):
        u = Rng(2024).uniforms(50000)
        assert abs(u.mean() - 0.5) < 0.01


class TestNormals:
    def test_two_draws_per_deviate(self):
        rng = Rng(42)
        rng.normals(3)
        assert rng._index == 6

    def test_scalar_matches_bulk(self):
        bulk = Rng(5).normals(6)
        scalar = Rng(5)
        got = np.array([scalar.normal() for _ in range(6)])
        np.testing.assert_allclose(got, bulk, rtol=1e-12)

    def test_moments(self):
        z = Rng(31337).normals(50000)
        assert abs(z.mean()) < 0.02
        assert abs(z.std() - 1.0) < 0.02

    def test_deterministic(self):
        assert np.array_equal(Rng(8).normals(100), Rng(8).normals(100))


class TestDerivedStreams:
    def test_derive_seed_deterministic(self):
        assert derive_seed(42, 0) == derive_seed(42, 0)
        assert derive_seed(42, 0) != derive_seed(42, 1)
        assert derive_seed(42, 0) != derive_seed(43, 0)

    def test_spawn_matches_derive(self):
        assert Rng(42).spawn(3).seed == derive_seed(42, 3)

    def test_child_streams_differ_from_parent(self):
        parent = Rng(42)
        child = parent.spawn(0)
        assert not np.array_equal(Rng(42).raw(32), child.raw(32))


class TestPermutation:
    def test_is_permutation(self):
        perm = Rng(17).permutation(50)
        assert sorted(perm.tolist()) == list(range(50))

    def test_deterministic(self):
        assert np.array_equal(Rng(17).permutation(50), Rng(17).permutation(50))

    def test_successive_draws_differ(self):
        rng = Rng(17)
        assert not np.array_equal(rng.permutation(50), rng.permutation(50))

    def test_trivial_sizes(self):
        assert Rng(0).permutation(0).tolist() == []
        assert Rng(0).permutation(1).tolist() == [0]
