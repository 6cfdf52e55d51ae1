"""Affine maps j -> m + k*j on truncated d-adic integers.

Through the a-orbit of the all-zeros vertex, V_n is identified with Z/d^n, the
base odometer a becomes j -> j + 1, and the normalizer of the closure of <a>
becomes the affine group. Residues are exact Python integers throughout.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from ._kernels import affine_kernels, affine_sweep_kernel
from .cycles import NotMinimal, orbit_of_root_path
from .tree import DepthError, TruncatedAutomorphism, Vertex


class PreconditionError(ValueError):
    pass


def is_prime(d: int) -> bool:
    if d < 2:
        return False
    return all(d % p for p in range(2, math.isqrt(d) + 1))


def valuation(x: int, d: int) -> int:
    """v_d(x) for a nonzero integer x."""
    if x == 0:
        raise ValueError("valuation of 0 is infinite")
    x = abs(x)
    v = 0
    while x % d == 0:
        x //= d
        v += 1
    return v


@dataclass(frozen=True)
class AffineElement:
    d: int
    N: int
    m: int
    k: int

    def __post_init__(self):
        if not is_prime(self.d):
            raise PreconditionError(f"d = {self.d} is not prime")
        if self.N < 1:
            raise PreconditionError("N must be positive")
        mod = self.d ** self.N
        object.__setattr__(self, "m", self.m % mod)
        object.__setattr__(self, "k", self.k % mod)
        if self.k % self.d == 0:
            raise PreconditionError(f"multiplier {self.k} is not a unit mod {self.d}")

    @property
    def modulus(self) -> int:
        return self.d ** self.N

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.d, self.N, self.m, self.k)


def affine_apply(aff: AffineElement, j: int, n: int) -> int:
    if n > aff.N:
        raise DepthError(f"level {n} beyond depth {aff.N}")
    return (aff.m + aff.k * j) % aff.d ** n


def _same_ring(a: AffineElement, b: AffineElement) -> None:
    if (a.d, a.N) != (b.d, b.N):
        raise PreconditionError("affine elements live over different rings")


def affine_compose(a: AffineElement, b: AffineElement) -> AffineElement:
    """a after b: j -> m_a + k_a (m_b + k_b j)."""
    _same_ring(a, b)
    return AffineElement(a.d, a.N, a.m + a.k * b.m, a.k * b.k)


def affine_inverse(a: AffineElement) -> AffineElement:
    kinv = pow(a.k, -1, a.modulus)
    return AffineElement(a.d, a.N, -kinv * a.m, kinv)


def geometric_sum(k: int, p: int, mod: int) -> int:
    """r(p) = 1 + k + ... + k^(p-1) mod `mod`, for p >= 0 and k >= 1."""
    if k == 1:
        return p % mod
    # k^p - 1 is divisible by k - 1; reducing mod (k-1)*mod keeps the quotient exact mod `mod`.
    big = (k - 1) * mod
    return (pow(k, p, big) - 1) % big // (k - 1)


def affine_power(a: AffineElement, p: int) -> AffineElement:
    if p < 0:
        return affine_power(affine_inverse(a), -p)
    if p == 0:
        return AffineElement(a.d, a.N, 0, 1)
    mod = a.modulus
    return AffineElement(a.d, a.N, a.m * geometric_sum(a.k, p, mod), pow(a.k, p, mod))


def geometric_valuation(k: int, n: int, d: int) -> int:
    """v_d(1 + k + ... + k^(n-1)) with exact big integers."""
    if k <= 1:
        raise PreconditionError("geometric_valuation needs k > 1")
    if n < 1:
        raise PreconditionError("n must be positive")
    return valuation((k ** n - 1) // (k - 1), d)


def valuation_conditions_hold(k: int, d: int) -> bool:
    """k > 1 and k = 1 mod d (odd d) or k = 1 mod 4 (d = 2)."""
    if k <= 1:
        return False
    return k % 4 == 1 if d == 2 else k % d == 1


def is_minimal_affine(m: int, k: int, d: int) -> bool:
    """Transitivity of j -> m + k*j on every Z/d^n, decided from (m, k) alone."""
    if math.gcd(k, d) != 1:
        raise PreconditionError(f"gcd({k}, {d}) != 1")
    if d == 2:
        return m % 2 == 1 and k % 4 == 1
    return m % d != 0 and k % d == 1


@dataclass(frozen=True)
class CyclePrediction:
    """Predicted cycle length of one vertex; case names which branch of the analysis applied."""

    length: int
    case: str

    @property
    def fixed_point(self) -> bool:
        return self.case == "fixed"


FIXED = "fixed"


def predicted_cycle_length(m: int, k: int, v: int, n: int, d: int) -> CyclePrediction:
    """Cycle length of v under j -> m + k*j mod d^n, for d | m and k = 1 + d*s.

    The p-th iterate moves v by r(p)((k-1)v + m), and v_d(r(p)) = v_d(p) under the
    conditions on k, so everything hinges on e = v_d(d*s*v + m) compared with n.
    """
    j = check_prediction_preconditions(m, k, n, d)
    if not 0 <= v < d ** n:
        raise PreconditionError(f"vertex {v} outside Z/{d}^{n}")
    if v == 0:
        return CyclePrediction(d ** (n - j), "zero")
    s = (k - 1) // d
    i = valuation(s * v, d)
    if i < j - 1:
        return CyclePrediction(d ** (n - 1 - i), "case1")
    if i > j - 1:
        return CyclePrediction(d ** (n - j), "case2")
    q = m // d ** j
    r = s * v // d ** (j - 1)
    t = valuation(q + r, d)
    if t < n - j:
        return CyclePrediction(d ** (n - j - t), "case3")
    return CyclePrediction(1, FIXED)


def check_prediction_preconditions(m: int, k: int, n: int, d: int) -> int:
    """Validate the inputs of the cycle-length analysis and return j = v_d(m)."""
    if not is_prime(d):
        raise PreconditionError(f"d = {d} is not prime")
    if not valuation_conditions_hold(k, d):
        raise PreconditionError(f"k = {k} violates the conditions for d = {d}")
    if m < 1 or m % d:
        raise PreconditionError(f"m = {m} must be a positive multiple of {d}")
    j = valuation(m, d)
    if n <= j:
        raise PreconditionError(f"need n > v_d(m) = {j}, got n = {n}")
    return j


def predicted_cycle_lengths(m: int, k: int, n: int, d: int) -> np.ndarray:
    """predicted_cycle_length for every vertex of V_n at once, fixed points as 1."""
    check_prediction_preconditions(m, k, n, d)
    if (k + m) * d ** n >= 2 ** 62:
        return np.array([predicted_cycle_length(m, k, v, n, d).length for v in range(d ** n)])
    return affine_kernels(d).predicted_lengths(m, k, n)


def observed_cycle_lengths(m: int, k: int, n: int, d: int) -> np.ndarray:
    """Brute-force orbit length of every residue under j -> m + k*j mod d^n."""
    size = d ** n
    if (k % size + 1) * size >= 2 ** 52:
        raise PreconditionError("residue ring too large for the orbit walk")
    return affine_kernels(d).orbit_lengths(m % size, k % size, n)


@dataclass(frozen=True)
class SweepCell:
    """Outcome of comparing predicted and walked orbit lengths on all of V_n."""

    d: int
    m: int
    k: int
    n: int
    mismatches: int
    first_mismatch: int | None
    fixed_points: int
    cycles: int


class SweepWorkspace:
    """Scratch buffers reused across sweep cells up to V_{n_max}."""

    def __init__(self, d: int, n_max: int):
        size = d ** n_max
        if size >= 2 ** 31:
            raise PreconditionError("level too large for the sweep workspace")
        self.d = d
        self.size = size
        self.seen = np.zeros((size >> 6) + 1, dtype=np.uint64)
        self.stack = np.zeros(size, dtype=np.int32)


def sweep_cell(m: int, k: int, n: int, d: int, workspace: SweepWorkspace | None = None) -> SweepCell:
    """Walk every orbit of j -> m + k*j mod d^n and check each vertex against the
    predicted length, without materializing per-vertex arrays."""
    check_prediction_preconditions(m, k, n, d)
    size = d ** n
    if (k % size + 1) * size >= 2 ** 52:
        raise PreconditionError("residue ring too large for the orbit walk")
    if workspace is None or workspace.d != d or workspace.size < size:
        workspace = SweepWorkspace(d, n)
    kernel = affine_sweep_kernel(d, size)
    mism, first, fixed, cycles = kernel(m, k, n, workspace.seen, workspace.stack)
    return SweepCell(d, m, k, n, int(mism), None if first < 0 else int(first), int(fixed), int(cycles))


def fixed_point_threshold(m: int, d: int) -> int:
    """Least n with q / d^(n-j) < 1, where m = q d^j and d does not divide q."""
    j = valuation(m, d)
    q = m // d ** j
    n = j + 1
    while q >= d ** (n - j):
        n += 1
    return n


@dataclass(frozen=True)
class ThetaSignature:
    theta1: int
    theta2: int


def theta_signature(k: int) -> ThetaSignature:
    if k % 2 == 0:
        raise PreconditionError(f"theta signature needs odd k, got {k}")
    return ThetaSignature(((k - 1) // 2) % 2, ((k * k - 1) // 8) % 2)


@dataclass(frozen=True, eq=False)
class BaseOdometerFrame:
    """phi_n: V_n -> Z/d^n with phi_n(a^j(0^n)) = j, for n = 1..N."""

    a: TruncatedAutomorphism
    d: int
    orbits: tuple[np.ndarray, ...]  # orbits[n-1][j] is the vertex a^j(0^n)
    phis: tuple[np.ndarray, ...]    # phis[n-1][v] is phi_n(v)

    @property
    def depth(self) -> int:
        return len(self.orbits)


def make_frame(a: TruncatedAutomorphism) -> BaseOdometerFrame:
    d = a.shape.constant_arity
    if d is None:
        raise PreconditionError("affine frames need a constant branching factor")
    if not is_prime(d):
        raise PreconditionError(f"d = {d} is not prime")
    orbits, phis = [], []
    for n in range(1, a.depth + 1):
        orbit = orbit_of_root_path(a, n)
        if orbit.size != d ** n:
            raise NotMinimal(f"base element is not transitive on V_{n}")
        phi = np.empty_like(orbit)
        phi[orbit] = np.arange(orbit.size)
        orbit.setflags(write=False)
        phi.setflags(write=False)
        orbits.append(orbit)
        phis.append(phi)
    return BaseOdometerFrame(a, d, tuple(orbits), tuple(phis))


def _frame_level(frame: BaseOdometerFrame, n: int) -> None:
    if not 1 <= n <= frame.depth:
        raise DepthError(f"level {n} outside 1..{frame.depth}")


def phi_level(frame: BaseOdometerFrame, v: Vertex | int, n: int) -> int:
    _frame_level(frame, n)
    code = v.encode(frame.a.shape) if isinstance(v, Vertex) else int(v)
    return int(frame.phis[n - 1][code])


def phi_inverse(frame: BaseOdometerFrame, j: int, n: int) -> Vertex:
    _frame_level(frame, n)
    code = int(frame.orbits[n - 1][j % frame.d ** n])
    return Vertex.decode(frame.a.shape, n, code)


def realize_affine(frame: BaseOdometerFrame, aff: AffineElement, N: int | None = None) -> TruncatedAutomorphism:
    """The automorphism v -> phi^-1(m + k*phi(v)) on V_1..V_N."""
    N = min(frame.depth, aff.N) if N is None else N
    if N > frame.depth or N > aff.N:
        raise DepthError(f"depth {N} beyond frame depth {frame.depth} or element depth {aff.N}")
    if aff.d != frame.d:
        raise PreconditionError("element and frame use different d")
    levels = []
    for n in range(1, N + 1):
        size = frame.d ** n
        phi = frame.phis[n - 1]
        levels.append(frame.orbits[n - 1][(aff.m % size + (aff.k % size) * phi) % size])
    return TruncatedAutomorphism(frame.a.shape.truncated(N), tuple(levels))


def affine_form_of(frame: BaseOdometerFrame, g: np.ndarray, n: int) -> tuple[int, int] | None:
    """(m, k) when the level-n table g acts affinely in the frame, otherwise None."""
    size = frame.d ** n
    in_frame = frame.phis[n - 1][g[frame.orbits[n - 1]]]
    m = int(in_frame[0])
    k = (int(in_frame[1 % size]) - m) % size
    expected = (m + k * np.arange(size, dtype=np.int64)) % size
    if not np.array_equal(in_frame, expected):
        return None
    return m, k


PREDICTION_COLUMNS = ("d", "m", "k", "n", "vertex", "predicted", "observed")


def cycle_prediction_rows(d: int, m: int, k: int, n: int) -> Iterator[tuple]:
    observed = observed_cycle_lengths(m, k, n, d)
    for v in range(d ** n):
        pred = predicted_cycle_length(m, k, v, n, d)
        yield (d, m, k, n, v, pred.length, int(observed[v]))


VALUATION_COLUMNS = ("d", "k", "n", "v_r", "v_n")


def valuation_rows(d: int, k: int, ns: Iterable[int]) -> Iterator[tuple]:
    for n in ns:
        yield (d, k, n, geometric_valuation(k, n, d), valuation(n, d))


def to_csv(columns: tuple[str, ...], rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()
