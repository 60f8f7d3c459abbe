"""Minkowski dimension estimators: exact ratios, ergodic formula, profile
regression and iterated-logarithm envelopes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, TooFewSamplesError
from .generator import ScaleSequence
from .tubular import TubularProfile

_E_E = math.exp(math.e)


@dataclass
class DimEstimate:
    lower: float
    upper: float
    method: str
    point: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "lower": self.lower,
                "upper": self.upper,
                "method": self.method,
                "point": self.point,
                "windows": self.diagnostics.get("windows", []),
            }
        )


def _log_sums(seq: ScaleSequence, n: int):
    """Cumulative sums of log m(xi_i) and log ell(xi_i), i = 1..n."""
    xi = np.asarray(seq.prefix(n), dtype=np.float64)
    lm = np.cumsum(np.log(3.0 * xi + 1.0))
    ll = np.cumsum(np.log(2.0 * xi + 1.0))
    return lm, ll


def dim_ratio(seq: ScaleSequence, n: int) -> float:
    """log M_n / log L_n from the exact per-level factors."""
    if n < 1:
        raise InvalidParameterError("dim_ratio needs n >= 1")
    lm, ll = _log_sums(seq, n)
    return float(lm[-1] / ll[-1])


def liminf_limsup_dim(seq: ScaleSequence, N: int) -> DimEstimate:
    """Finite-N liminf/limsup proxies over the tail window [N/2, N].

    For the example33 rule the window is augmented with the block endpoints
    n = 2^{2k}, 2^{2k+1}, where the empirical distribution is extremal.
    """
    if N < 2:
        raise InvalidParameterError("N must be >= 2")
    lm, ll = _log_sums(seq, N)
    ratios = lm / ll
    window = ratios[N // 2 - 1 :]
    candidates = [window.min(), window.max()]
    if seq.kind == "rule" and seq.rule == "example33":
        # block endpoints inside the tail window, where the letter mix is extremal
        k = 1
        while (1 << (2 * k)) <= N:
            for b in (2 * k, 2 * k + 1):
                if N // 2 <= (1 << b) <= N:
                    candidates.append(ratios[(1 << b) - 1])
            k += 1
    lower, upper = float(min(candidates)), float(max(candidates))
    return DimEstimate(lower, upper, "exact-ratio", point=float(ratios[-1]),
                       diagnostics={"window": [N // 2, N]})


def ergodic_dim(alphabet, probs) -> float:
    """Sum_a p_a log m(a) / Sum_a p_a log ell(a)."""
    alphabet = list(alphabet)
    if not alphabet:
        raise InvalidParameterError("alphabet must be nonempty")
    p = np.asarray(list(probs), dtype=np.float64)
    a = np.asarray(alphabet, dtype=np.float64)
    if p.shape != a.shape:
        raise InvalidParameterError("probs and alphabet must align")
    num = float(np.dot(p, np.log(3 * a + 1)))
    den = float(np.dot(p, np.log(2 * a + 1)))
    return num / den


def profile_dim(profile: TubularProfile, d: int = 2) -> DimEstimate:
    """Dimension from local log-log slopes of a tubular profile.

    Point estimate uses the median local slope; lower/upper come from the
    max/min slope (dimension = d - slope).
    """
    prof = profile.sorted()
    eps = prof.eps()
    mu = prof.mu()
    if len(eps) < 8:
        raise TooFewSamplesError("profile_dim needs >= 8 samples")
    if eps[-1] / eps[0] < 99.0:
        raise TooFewSamplesError("profile must span >= 2 decades of eps")
    le, lmu = np.log(eps), np.log(mu)
    slopes = np.diff(lmu) / np.diff(le)
    return DimEstimate(
        lower=float(d - slopes.max()),
        upper=float(d - slopes.min()),
        method="profile-regression",
        point=float(d - np.median(slopes)),
        diagnostics={"windows": [
            {"eps": [float(eps[i]), float(eps[i + 1])], "slope": float(s)}
            for i, s in enumerate(slopes)
        ]},
    )


def lil_envelope(x: float) -> float:
    """psi(x) = sqrt(log x * log log log x); needs x > e^e."""
    if x <= _E_E:
        raise InvalidParameterError("lil_envelope needs x > e^e")
    return math.sqrt(math.log(x) * math.log(math.log(math.log(x))))


def lil_path(seq: ScaleSequence, n: int, gamma: float) -> np.ndarray:
    """log(M_k L_k^{-gamma}) for k = 1..n."""
    lm, ll = _log_sums(seq, n)
    return lm - gamma * ll


def lil_fit(path: np.ndarray, gamma: float | None = None) -> dict:
    """Fit the smallest C with |path_n| <= C sqrt(n log log n) on the tail.

    Reports excursion counts beyond +-1/2 and +-1/4 of the fitted envelope.
    """
    path = np.asarray(path, dtype=np.float64)
    n = len(path)
    if n < 1000:
        raise TooFewSamplesError("lil_fit needs a path of length >= 1000")
    ks = np.arange(1, n + 1, dtype=np.float64)
    start = 16  # log log k defined and > 0 from here
    env = np.sqrt(ks[start:] * np.log(np.log(ks[start:])))
    tail = path[start:]
    ratios = np.abs(tail) / env
    C = float(ratios.max())
    report = {"C": C, "n": n, "gamma": gamma, "argmax": int(np.argmax(ratios)) + start + 1}
    for frac, name in ((0.5, "half"), (0.25, "quarter")):
        thr = frac * C * env
        report[f"excursions_{name}_up"] = int(np.sum(tail > thr))
        report[f"excursions_{name}_down"] = int(np.sum(tail < -thr))
    return report
