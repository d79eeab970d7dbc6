from typing import Iterator


def check_bits(x: str, n: int | None = None) -> str:
    if any(c not in "01" for c in x):
        raise ValueError(f"not a bitstring: {x!r}")
    if n is not None and len(x) != n:
        raise ValueError(f"expected {n} bits, got {len(x)} ({x!r})")
    return x


def to_bits(value: int, n: int) -> str:
    """MSB-first n-bit representation of a non-negative integer."""
    if value < 0 or value >= 2 ** n:
        raise ValueError(f"{value} does not fit in {n} bits")
    return format(value, f"0{n}b") if n > 0 else ""


def bits_index(x: str) -> int:
    return int(x, 2) if x else 0


def all_bitstrings(n: int) -> Iterator[str]:
    for value in range(2 ** n):
        yield to_bits(value, n)


def hamming(x: str, y: str) -> int:
    if len(x) != len(y):
        raise ValueError("hamming distance needs equal lengths")
    return sum(a != b for a, b in zip(x, y))
