import unittest

import numpy as np
from numpy.testing import assert_allclose

from utils.bits import all_bitstrings, bits_index, check_bits, hamming, to_bits
from utils.common import (DEFAULT_DIM_CAP, DimensionCapError, LayoutError, ProtocolError, check_dimension, dim_cap,
                          fmt, get_dim_cap, set_dim_cap)
from utils.rng import random_density_matrix, random_state_vector, reseed_everything, spawn_generators


class TestBits(unittest.TestCase):
    def test_to_bits(self):
        self.assertEqual(to_bits(5, 3), "101")
        self.assertEqual(to_bits(0, 0), "")
        self.assertEqual(bits_index("101"), 5)
        self.assertEqual(bits_index(""), 0)
        with self.assertRaises(ValueError):
            to_bits(8, 3)

    def test_all_bitstrings(self):
        self.assertEqual(list(all_bitstrings(2)), ["00", "01", "10", "11"])
        self.assertEqual(list(all_bitstrings(0)), [""])

    def test_check_bits(self):
        self.assertEqual(check_bits("", 0), "")
        with self.assertRaises(ValueError):
            check_bits("012")
        with self.assertRaises(ValueError):
            check_bits("01", 3)

    def test_hamming(self):
        self.assertEqual(hamming("0110", "0011"), 2)
        with self.assertRaises(ValueError):
            hamming("01", "0")


class TestCommon(unittest.TestCase):
    def test_dim_cap_context(self):
        self.assertEqual(get_dim_cap(), DEFAULT_DIM_CAP)
        with dim_cap(8):
            check_dimension(8)
            with self.assertRaises(DimensionCapError):
                check_dimension(9, "register")
        self.assertEqual(get_dim_cap(), DEFAULT_DIM_CAP)
        with self.assertRaises(ValueError):
            set_dim_cap(0)

    def test_error_hierarchy(self):
        self.assertTrue(issubclass(LayoutError, ValueError))
        self.assertTrue(issubclass(ProtocolError, ValueError))
        self.assertFalse(issubclass(DimensionCapError, ValueError))

    def test_fmt(self):
        self.assertEqual(fmt(1 / 3), 0.333333333333)
        self.assertEqual(fmt(0.9999999999999), 1.0)


class TestRng(unittest.TestCase):
    def test_reseed_is_reproducible(self):
        a = reseed_everything(11).random(4)
        b = reseed_everything(11).random(4)
        assert_allclose(a, b)

    def test_spawned_streams(self):
        first = [g.random() for g in spawn_generators(3, 4)]
        second = [g.random() for g in spawn_generators(3, 4)]
        self.assertEqual(first, second)
        self.assertEqual(len(set(first)), 4)

    def test_random_states(self):
        rng = np.random.default_rng(0)
        v = random_state_vector(5, rng)
        self.assertAlmostEqual(np.linalg.norm(v), 1.0, places=12)
        rho = random_density_matrix(4, rng, mixture=2)
        self.assertAlmostEqual(np.trace(rho).real, 1.0, places=12)
        assert_allclose(rho, rho.conj().T, atol=1e-12)
        self.assertGreaterEqual(np.linalg.eigvalsh(rho).min(), -1e-12)


if __name__ == "__main__":
    unittest.main()
