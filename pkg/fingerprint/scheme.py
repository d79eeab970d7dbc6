import itertools
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional

import numpy as np

from qcore.layout import RegisterLayout
from qcore.states import StateVector
from utils.bits import check_bits
from utils.common import ProtocolError, check_dimension

logger = logging.getLogger(__name__)

MAX_CODE_BITS = 8
MIN_RELATIVE_DISTANCE = 1 / 3
MAX_SQUARED_OVERLAP = 1 / 3


class SchemeKind(IntEnum):
    HADAMARD = 0
    CODE_BASED = 1


def default_code_length(n: int) -> int:
    return max(6, 4 * n)


def _is_prime(q: int) -> bool:
    return q >= 2 and all(q % p for p in range(2, int(q ** 0.5) + 1))


@dataclass(frozen=True)
class FingerprintScheme:
    """
    Fingerprint family |h_x⟩ for x ∈ {0,1}^n.

    hadamard:   (1/√2ⁿ) Σ_a (-1)^{x·a} |a⟩, pairwise orthogonal.
    code_based: a linear code E over GF(q). Binary codes use the phase encoding
                (1/√m) Σ_i (-1)^{E(x)_i} |i⟩ with overlap 1 - 2·wt(E(x)-E(y))/m;
                prime q > 2 uses (1/√m) Σ_i |i⟩|E(x)_i⟩ with overlap 1 - wt/m.
    """
    kind: SchemeKind
    n: int
    code_length: int = 0
    alphabet: int = 2
    generator: Optional[np.ndarray] = field(default=None, compare=False)
    seed: int = 0
    overlap_bound: float = 0.0

    @classmethod
    def hadamard(cls, n: int) -> "FingerprintScheme":
        if n < 0:
            raise ValueError("n must be non-negative")
        return cls(SchemeKind.HADAMARD, n)

    @classmethod
    def code_based(cls, n: int, code_length: int | None = None, alphabet: int = 2, seed: int = 0,
                   attempts: int = 256) -> "FingerprintScheme":
        """
        Seeded systematic random linear code [I_n | R] over GF(alphabet), retried until its
        relative distance is at least 1/3 and the squared overlap bound at most 1/3.
        """
        if not 0 <= n <= MAX_CODE_BITS:
            raise ProtocolError(f"code-based fingerprints are enumerated for n <= {MAX_CODE_BITS}, got {n}")
        if not _is_prime(alphabet):
            raise ProtocolError(f"alphabet size {alphabet} is not prime")
        m = code_length or default_code_length(n)
        if m < n:
            raise ProtocolError(f"code length {m} shorter than message length {n}")
        rng = np.random.default_rng(seed)
        for attempt in range(attempts):
            redundancy = rng.integers(0, alphabet, size=(n, m - n))
            generator = np.hstack([np.eye(n, dtype=np.int64), redundancy]).astype(np.int64)
            distance, delta = _code_parameters(generator, alphabet)
            if distance >= MIN_RELATIVE_DISTANCE and delta ** 2 <= MAX_SQUARED_OVERLAP:
                logger.debug("code n=%d m=%d q=%d accepted after %d attempts (distance %.3f, delta %.3f)",
                             n, m, alphabet, attempt + 1, distance, delta)
                generator.setflags(write=False)
                return cls(SchemeKind.CODE_BASED, n, m, alphabet, generator, seed, delta)
        raise ProtocolError(f"no code with relative distance >= 1/3 found for n={n}, m={m}, q={alphabet}")

    @classmethod
    def from_generator(cls, rows: List[List[int]], alphabet: int = 2, seed: int = 0) -> "FingerprintScheme":
        generator = np.array(rows, dtype=np.int64) % alphabet
        if generator.ndim != 2:
            raise ValueError("generator must be a matrix")
        _, delta = _code_parameters(generator, alphabet)
        generator.setflags(write=False)
        return cls(SchemeKind.CODE_BASED, generator.shape[0], generator.shape[1], alphabet, generator, seed, delta)

    @property
    def state_dimension(self) -> int:
        if self.kind == SchemeKind.HADAMARD:
            return 2 ** self.n
        return self.code_length if self.alphabet == 2 else self.code_length * self.alphabet

    def resized(self, n: int) -> "FingerprintScheme":
        """Same kind of scheme for another input length."""
        if self.kind == SchemeKind.HADAMARD:
            return FingerprintScheme.hadamard(n)
        return FingerprintScheme.code_based(n, alphabet=self.alphabet, seed=self.seed)

    def encode(self, x: str) -> np.ndarray:
        check_bits(x, self.n)
        if self.kind == SchemeKind.HADAMARD:
            raise ProtocolError("hadamard fingerprints have no codewords")
        if self.n == 0:
            return np.zeros(self.code_length, dtype=np.int64)
        bits = np.array([int(c) for c in x], dtype=np.int64)
        return (bits @ self.generator) % self.alphabet

    def state(self, x: str) -> np.ndarray:
        check_bits(x, self.n)
        check_dimension(self.state_dimension, "fingerprint")
        if self.kind == SchemeKind.HADAMARD:
            if self.n == 0:
                return np.ones(1, dtype=complex)
            a = np.indices([2] * self.n).reshape(self.n, -1)
            bits = np.array([int(c) for c in x])
            signs = (-1.0) ** ((bits @ a) % 2)
            return signs.astype(complex) / np.sqrt(2 ** self.n)
        word = self.encode(x)
        m = self.code_length
        if self.alphabet == 2:
            return ((-1.0) ** word).astype(complex) / np.sqrt(m)
        out = np.zeros(m * self.alphabet, dtype=complex)
        out[np.arange(m) * self.alphabet + word] = 1 / np.sqrt(m)
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind.name.lower(), "n": self.n}
        if self.kind == SchemeKind.CODE_BASED:
            d.update({
                "code_length": self.code_length,
                "alphabet": self.alphabet,
                "seed": self.seed,
                "encoder": ["".join(str(int(v)) for v in row) for row in self.generator],
            })
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FingerprintScheme":
        kind = d.get("kind", "hadamard")
        if kind == "hadamard":
            return cls.hadamard(int(d["n"]))
        if kind != "code_based":
            raise ValueError(f"unknown fingerprint kind {kind!r}")
        if "encoder" in d:
            rows = [[int(c) for c in row] for row in d["encoder"]]
            scheme = cls.from_generator(rows, int(d.get("alphabet", 2)), int(d.get("seed", 0)))
            if scheme.n != int(d["n"]):
                raise ValueError("encoder rows do not match n")
            return scheme
        return cls.code_based(int(d["n"]), d.get("code_length"), int(d.get("alphabet", 2)), int(d.get("seed", 0)))


def _code_parameters(generator: np.ndarray, q: int) -> tuple[float, float]:
    """Relative distance and the largest |⟨h_x|h_y⟩| over distinct messages."""
    n, m = generator.shape
    if n == 0:
        return 1.0, 0.0
    # differences of two bit vectors have entries in {-1, 0, 1}
    steps = (0, 1) if q == 2 else (-1, 0, 1)
    min_weight = m
    delta = 0.0
    for diff in itertools.product(steps, repeat=n):
        if not any(diff):
            continue
        word = (np.array(diff) @ generator) % q
        weight = int(np.count_nonzero(word))
        min_weight = min(min_weight, weight)
        overlap = abs(1 - 2 * weight / m) if q == 2 else 1 - weight / m
        delta = max(delta, overlap)
    return min_weight / m, delta


def fingerprint_state(scheme: FingerprintScheme, x: str) -> StateVector:
    layout = RegisterLayout.of(("h", scheme.state_dimension))
    return StateVector(layout, scheme.state(x))
