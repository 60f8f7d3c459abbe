"""Building-block curves, scale-homogeneous Koch curves and snowflake polygons.

A block with parameter ``a`` replaces a unit segment by 3a+1 segments of
length 1/(2a+1): the odd-indexed of the 2a+1 cells carry an equilateral spike,
the even-indexed cells stay flat.  a=1 gives the classic triadic generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidParameterError, ResourceCapError
from .geometry import Polyline

DEFAULT_SEGMENT_CAP = 10**8

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class BlockParam:
    """Alphabet element a with its derived segment counts."""

    a: int

    def __post_init__(self):
        if not isinstance(self.a, (int, np.integer)) or self.a < 1:
            raise InvalidParameterError(f"block parameter must be a positive integer, got {self.a!r}")

    @property
    def m(self) -> int:
        return 3 * self.a + 1

    @property
    def ell(self) -> int:
        return 2 * self.a + 1


def block_generator(a: int) -> Polyline:
    """The open block curve from (0,0) to (1,0) with ``a`` upward spikes."""
    p = BlockParam(a)
    return Polyline(_block_template(p.a), closed=False)


def _block_template(a: int) -> np.ndarray:
    """Vertices of K(a) on [0,1]: 3a+1 segments of length 1/(2a+1)."""
    w = 1.0 / (2 * a + 1)
    pts = [(0.0, 0.0)]
    x = 0.0
    for cell in range(2 * a + 1):
        if cell % 2 == 0:
            x += w
            pts.append((x, 0.0))
        else:
            pts.append((x + w / 2.0, _SQRT3 / 2.0 * w))
            x += w
            pts.append((x, 0.0))
    return np.array(pts)


@dataclass(frozen=True)
class Counts:
    """Exact combinatorics of the first n construction levels."""

    n: int
    M: int
    L: int

    @property
    def eps(self) -> float:
        return 1.0 / self.L


@dataclass
class ScaleSequence:
    """The sequence xi driving the construction.

    kinds:
      - "explicit": ``values`` lists xi_1, xi_2, ... (cycled if a level beyond
        the list is requested only when ``cycle`` is set; otherwise error);
      - "constant": xi_n == values[0] for all n;
      - "iid": xi_n i.i.d. over ``alphabet`` with ``probs``, counter-based on
        ``seed`` so xi_n is a pure function of (seed, n);
      - "rule": a named deterministic rule; currently "example33".
    """

    kind: str
    values: tuple = ()
    alphabet: tuple = ()
    probs: tuple = ()
    rule: str = ""
    seed: int = 0
    _cum: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("explicit", "constant", "iid", "rule"):
            raise InvalidParameterError(f"unknown sequence kind {self.kind!r}")
        self.values = tuple(int(v) for v in self.values)
        self.alphabet = tuple(int(a) for a in self.alphabet)
        for a in self.values + self.alphabet:
            BlockParam(a)
        if self.kind in ("explicit", "constant") and not self.values:
            raise InvalidParameterError("explicit/constant sequence needs values")
        if self.kind == "iid":
            if not self.alphabet:
                raise InvalidParameterError("iid sequence needs an alphabet")
            probs = np.asarray(self.probs, dtype=np.float64)
            if probs.shape != (len(self.alphabet),) or np.any(probs < 0):
                raise InvalidParameterError("probs must be nonnegative, one per letter")
            if abs(probs.sum() - 1.0) > 1e-12:
                raise InvalidParameterError("probs must sum to 1 within 1e-12")
            self.probs = tuple(float(p) for p in probs)
            self._cum = np.cumsum(probs)
        if self.kind == "rule" and self.rule != "example33":
            raise InvalidParameterError(f"unknown rule {self.rule!r}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, a: int) -> "ScaleSequence":
        return cls("constant", values=(a,))

    @classmethod
    def explicit(cls, values) -> "ScaleSequence":
        return cls("explicit", values=tuple(values))

    @classmethod
    def iid(cls, alphabet, probs, seed: int) -> "ScaleSequence":
        return cls("iid", alphabet=tuple(alphabet), probs=tuple(probs), seed=int(seed))

    @classmethod
    def example33(cls) -> "ScaleSequence":
        return cls("rule", rule="example33", alphabet=(1, 2))

    # -- evaluation ----------------------------------------------------------

    def term(self, n: int) -> int:
        """xi_n, 1-indexed."""
        if n < 1:
            raise InvalidParameterError("sequence index starts at 1")
        if self.kind == "constant":
            return self.values[0]
        if self.kind == "explicit":
            if n > len(self.values):
                raise InvalidParameterError(f"explicit sequence has only {len(self.values)} terms")
            return self.values[n - 1]
        if self.kind == "rule":
            return example_33_sequence(n)
        idx = int(rng.choice(self._cum, self.seed, 0x51D, n))
        return self.alphabet[idx]

    def prefix(self, n: int) -> list[int]:
        if self.kind == "iid":
            ns = np.arange(1, n + 1, dtype=np.uint64)
            idx = rng.choice(self._cum, self.seed, 0x51D, ns)
            alpha = np.asarray(self.alphabet)
            return [int(a) for a in alpha[idx]]
        return [self.term(i) for i in range(1, n + 1)]

    def descriptor(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("explicit", "constant"):
            d["values"] = list(self.values)
        if self.kind == "iid":
            d.update(alphabet=list(self.alphabet), probs=list(self.probs), seed=self.seed)
        if self.kind == "rule":
            d["rule"] = self.rule
        return d


def example_33_sequence(n: int) -> int:
    """1 on the blocks (2^{2k}, 2^{2k+1}] for k >= 1, else 2."""
    if n < 1:
        raise InvalidParameterError("index must be >= 1")
    # n lies in (2^{b-1}, 2^b] with b = bit_length(n-1); blocks have b-1 = 2k, k >= 1
    b = (n - 1).bit_length()
    return 1 if b >= 3 and (b - 1) % 2 == 0 else 2


def counts(seq: ScaleSequence, n: int) -> Counts:
    """Exact M_n = prod m(xi_i), L_n = prod l(xi_i) as big integers."""
    if n < 0:
        raise InvalidParameterError("level must be >= 0")
    M = L = 1
    for a in seq.prefix(n):
        M *= 3 * a + 1
        L *= 2 * a + 1
    return Counts(n, M, L)


def koch_curve(seq: ScaleSequence, n: int, segment_cap: int = DEFAULT_SEGMENT_CAP) -> Polyline:
    """The n-th iteration of K(xi): an open chain from (0,0) to (1,0)."""
    if n < 0:
        raise InvalidParameterError("level must be >= 0")
    xi = seq.prefix(n)
    M = 1
    for a in xi:
        M *= 3 * a + 1
        if M > segment_cap:
            raise ResourceCapError(f"curve would need {M} > {segment_cap} segments")
    pts = np.array([0.0 + 0.0j, 1.0 + 0.0j])
    for a in xi:
        tpl = _block_template(a)
        tpl = tpl[:, 0] + 1j * tpl[:, 1]
        starts = pts[:-1]
        deltas = np.diff(pts)
        # every segment maps the template by z -> start + delta * z
        new = starts[:, None] + deltas[:, None] * tpl[None, 1:]
        pts = np.concatenate([pts[:1], new.ravel()])
    out = np.column_stack([pts.real, pts.imag])
    p = Polyline(out, closed=False)
    p.meta = {"seq": seq.descriptor(), "level": n}
    return p


def snowflake(seq: ScaleSequence, n: int, segment_cap: int = DEFAULT_SEGMENT_CAP) -> Polyline:
    """Closed snowflake polygon: three copies of the curve on a unit triangle.

    Base triangle (0,0), (1,0), (1/2, -sqrt(3)/2), traversed clockwise so the
    spikes (left of each directed side) point outward.
    """
    side = koch_curve(seq, n, segment_cap=segment_cap)
    z = side.vertices[:, 0] + 1j * side.vertices[:, 1]
    corners = [0.0 + 0.0j, 1.0 + 0.0j, 0.5 - 1j * _SQRT3 / 2.0]
    chains = []
    for k in range(3):
        p1, p2 = corners[k], corners[(k + 1) % 3]
        w = p1 + z * (p2 - p1)
        chains.append(w[:-1])  # drop the shared corner; next chain starts there
    pts = np.concatenate(chains)
    p = Polyline(np.column_stack([pts.real, pts.imag]), closed=True)
    p.meta = {"seq": seq.descriptor(), "level": n}
    return p
