"""
Decreasing continuous curves of order quantity.

Wholesale prices w(q) and expected consumer prices p_i(q) are represented as
ordered segments of the form ``alpha + beta*q + gamma/q``. That family is
closed under the operations the solvers need: evaluation, differentiation,
level inversion (linear or quadratic) and the revenue transform
``q * f(q) = alpha*q + beta*q**2 + gamma``.

A curve whose first segment starts above zero is extended constantly to the
left down to q = 0; every computation works on that normalized tiling of
[0, inf).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from rs_chain.core.config import settings
from rs_chain.exceptions import DomainError, NoCrossingError

INF = math.inf


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    alpha: float
    beta: float = 0.0
    gamma: float = 0.0

    def value(self, q: float) -> float:
        if self.gamma == 0.0:
            return self.alpha + self.beta * q
        return self.alpha + self.beta * q + self.gamma / q

    def value_at_hi(self) -> float:
        """Value at the right end; the limit when the segment is unbounded."""
        if self.hi != INF:
            return self.value(self.hi)
        if self.beta < 0:
            return -INF
        if self.beta > 0:
            return INF
        return self.alpha

    def slope(self, q: float) -> float:
        if self.gamma == 0.0:
            return self.beta
        if q == INF:
            return self.beta
        return self.beta - self.gamma / (q * q)

    def stationary_point(self) -> Optional[float]:
        """Interior point where the slope vanishes, if any."""
        if self.beta == 0.0 or self.gamma == 0.0 or self.gamma / self.beta <= 0:
            return None
        q = math.sqrt(self.gamma / self.beta)
        if self.lo < q < self.hi:
            return q
        return None

    def root(self, level: float, tol: float) -> Optional[float]:
        """Smallest q in [lo, hi] with value(q) == level, if any."""
        a, b, g = self.alpha, self.beta, self.gamma
        candidates: List[float] = []
        if g == 0.0:
            if b == 0.0:
                if abs(a - level) <= tol * max(1.0, abs(level)):
                    return self.lo
                return None
            candidates.append((level - a) / b)
        elif b == 0.0:
            if level != a:
                candidates.append(g / (level - a))
        else:
            # beta*q^2 + (alpha - level)*q + gamma = 0
            lin = a - level
            disc = lin * lin - 4.0 * b * g
            if disc >= 0:
                sq = math.sqrt(disc)
                candidates.extend([(-lin - sq) / (2.0 * b), (-lin + sq) / (2.0 * b)])
        slack = tol * max(1.0, abs(self.lo))
        inside = [q for q in candidates if self.lo - slack <= q <= self.hi + slack]
        if not inside:
            return None
        return min(max(min(inside), self.lo), self.hi)


def _constant_extension(first: Segment, domain_lo: float) -> Segment:
    return Segment(lo=0.0, hi=domain_lo, alpha=first.value(domain_lo))


@dataclass(frozen=True)
class PiecewiseCurve:
    segments: Tuple[Segment, ...]
    domain_lo: float = 0.0

    def __post_init__(self):
        if not isinstance(self.segments, tuple):
            object.__setattr__(self, "segments", tuple(self.segments))

    @cached_property
    def pieces(self) -> Tuple[Segment, ...]:
        """Segments tiling [0, inf), including the constant left extension."""
        segments = tuple(sorted(self.segments, key=lambda s: s.lo))
        if segments and segments[0].lo > 0:
            return (_constant_extension(segments[0], segments[0].lo),) + segments
        return segments

    @cached_property
    def _arrays(self) -> Tuple[np.ndarray, ...]:
        pieces = self.pieces
        return (
            np.array([s.hi for s in pieces], dtype=float),
            np.array([s.alpha for s in pieces], dtype=float),
            np.array([s.beta for s in pieces], dtype=float),
            np.array([s.gamma for s in pieces], dtype=float),
        )

    @cached_property
    def _his(self) -> List[float]:
        return [s.hi for s in self.pieces]

    @property
    def breakpoints(self) -> List[float]:
        """Finite interior breakpoints of the normalized tiling."""
        return [s.hi for s in self.pieces[:-1]]

    def piece_at(self, q: float) -> Segment:
        idx = bisect.bisect_left(self._his, q)
        return self.pieces[min(idx, len(self.pieces) - 1)]

    def __call__(self, q: float) -> float:
        return evaluate(self, q)


def constant_curve(value: float) -> PiecewiseCurve:
    return PiecewiseCurve(segments=(Segment(lo=0.0, hi=INF, alpha=float(value)),))


def affine_curve(intercept: float, slope: float) -> PiecewiseCurve:
    return PiecewiseCurve(segments=(Segment(lo=0.0, hi=INF, alpha=float(intercept), beta=float(slope)),))


def marginal_revenue(curve: PiecewiseCurve) -> PiecewiseCurve:
    """d/dq [q * f(q)] piece by piece: alpha + 2*beta*q (the gamma term is constant revenue)."""
    return PiecewiseCurve(
        segments=tuple(Segment(lo=s.lo, hi=s.hi, alpha=s.alpha, beta=2.0 * s.beta) for s in curve.pieces)
    )


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def evaluate(curve: PiecewiseCurve, q: float) -> float:
    """Value of the segment containing q (constant extension below domain_lo)."""
    if not q >= 0:
        raise DomainError(q)
    return curve.piece_at(q).value(q)


def evaluate_many(curve: PiecewiseCurve, qs: np.ndarray) -> np.ndarray:
    """Vectorized evaluate for non-negative quantities."""
    qs = np.asarray(qs, dtype=float)
    if np.any(qs < 0) or np.any(np.isnan(qs)):
        bad = float(qs[(qs < 0) | np.isnan(qs)].flat[0])
        raise DomainError(bad)
    his, alphas, betas, gammas = curve._arrays
    idx = np.minimum(np.searchsorted(his, qs, side="left"), len(his) - 1)
    g = gammas[idx]
    recip = np.divide(g, qs, out=np.zeros_like(qs), where=g != 0.0)
    return alphas[idx] + betas[idx] * qs + recip


def validate(curve: PiecewiseCurve) -> List[str]:
    """Every violated curve invariant, named by breakpoint or segment. Empty when valid."""
    eps = settings.continuity_tolerance
    violations: List[str] = []
    segments = curve.segments
    if not segments:
        return ["curve has no segments"]
    if curve.domain_lo < 0:
        violations.append(f"domain_lo {curve.domain_lo} is negative")

    for k, seg in enumerate(segments):
        if not all(math.isfinite(v) for v in (seg.alpha, seg.beta, seg.gamma, seg.lo)):
            violations.append(f"segment {k}: coefficients and lo must be finite")
            continue
        if not seg.lo < seg.hi:
            violations.append(f"segment {k}: lo {seg.lo} must be below hi {seg.hi}")
        if seg.gamma != 0.0 and seg.lo <= 0:
            violations.append(f"segment {k}: reciprocal term requires lo > 0")
    if violations:
        return violations

    if abs(segments[0].lo - curve.domain_lo) > eps:
        violations.append(f"gap at q={curve.domain_lo}: first segment starts at {segments[0].lo}")
    if segments[-1].hi != INF:
        violations.append(f"gap after q={segments[-1].hi}: last segment must extend to inf")

    for k in range(len(segments) - 1):
        left, right = segments[k], segments[k + 1]
        if abs(left.hi - right.lo) > eps:
            kind = "gap" if right.lo > left.hi else "overlap"
            violations.append(f"{kind} between segments {k} and {k + 1} at q={left.hi}")
            continue
        q = left.hi
        v_left, v_right = left.value(q), right.value(q)
        scale = max(1.0, abs(v_left))
        if abs(v_left - v_right) > eps * scale:
            violations.append(f"discontinuity at q={q}: {v_left} vs {v_right}")
        if v_right > v_left + eps * scale:
            violations.append(f"increase at q={q}: {v_left} -> {v_right}")

    for k, seg in enumerate(segments):
        stationary = seg.stationary_point()
        if stationary is not None:
            violations.append(f"segment {k}: changes direction at stationary point q={stationary}")
            continue
        start = seg.lo if seg.lo > 0 or seg.gamma == 0.0 else None
        slopes = [seg.slope(seg.hi)]
        if start is not None:
            slopes.append(seg.slope(start))
        if max(slopes) > eps:
            violations.append(f"segment {k}: increasing on [{seg.lo}, {seg.hi}]")
    return violations


def solve_level(curve: PiecewiseCurve, level: float) -> float:
    """Smallest q with curve(q) == level on a non-increasing curve."""
    eps = settings.continuity_tolerance
    v0 = curve.pieces[0].value(0.0) if curve.pieces[0].gamma == 0.0 else curve.pieces[0].value(curve.pieces[0].lo)
    scale = max(1.0, abs(level))
    if level > v0 + eps * scale:
        raise NoCrossingError(level, {"max_value": v0})
    if abs(level - v0) <= eps * scale:
        return 0.0

    for seg in curve.pieces:
        v_lo = seg.value(seg.lo) if (seg.lo > 0 or seg.gamma == 0.0) else INF
        v_hi = seg.value_at_hi()
        if not (v_hi <= level + eps * scale and v_lo >= level - eps * scale):
            continue
        q = seg.root(level, eps)
        if q is not None and abs(seg.value(q) - level) <= eps * scale:
            return q
        if v_hi <= level <= v_lo:
            return _bracketed_root(seg, level)
        # within tolerance of this piece only; the root lies in a later one
    raise NoCrossingError(level, {"inf_value": curve.pieces[-1].value_at_hi()})


def _bracketed_root(seg: Segment, level: float) -> float:
    hi = seg.hi
    if hi == INF:
        # A non-increasing piece whose limit is at or above the level only approaches it.
        if seg.value_at_hi() >= level:
            raise NoCrossingError(level, {"inf_value": seg.value_at_hi()})
        hi = max(1.0, 2.0 * seg.lo)
        while seg.value(hi) > level:
            hi *= 2.0
    lo = seg.lo if seg.lo > 0 or seg.gamma == 0.0 else 1e-12
    return float(brentq(lambda q: seg.value(q) - level, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def crossing(p: PiecewiseCurve, w: PiecewiseCurve, upper: Optional[float] = None) -> Optional[float]:
    """Supremum of {q : p(q) >= w(q)} within [0, upper].

    None when p >= w still holds at the right end of the searched window.
    """
    eps = settings.continuity_tolerance

    def gap(q: float) -> float:
        return evaluate(p, q) - evaluate(w, q)

    knots = sorted({0.0, *p.breakpoints, *w.breakpoints})
    if upper is None:
        upper = max(1.0, knots[-1] * 2.0)
        for _ in range(64):
            if gap(upper) < 0:
                break
            upper *= 2.0
    if gap(upper) >= 0:
        return None

    grid = [q for q in knots if q < upper] + [upper]
    for a, b in reversed(list(zip(grid[:-1], grid[1:]))):
        if gap(b) >= -eps:
            return b
        mid = 0.5 * (a + b)
        sp, sw = p.piece_at(mid), w.piece_at(mid)
        diff = Segment(lo=a, hi=b, alpha=sp.alpha - sw.alpha, beta=sp.beta - sw.beta, gamma=sp.gamma - sw.gamma)
        roots = _piece_roots(diff)
        if roots:
            return max(roots)
        if gap(a) >= 0:
            return float(brentq(gap, a, b, xtol=1e-14))
    return None


def _piece_roots(seg: Segment) -> List[float]:
    """All roots of a segment's expression inside [lo, hi]."""
    a, b, g = seg.alpha, seg.beta, seg.gamma
    found: List[float] = []
    if g == 0.0:
        if b != 0.0:
            found.append(-a / b)
    elif b == 0.0:
        if a != 0.0:
            found.append(-g / a)
    else:
        disc = a * a - 4.0 * b * g
        if disc >= 0:
            sq = math.sqrt(disc)
            found.extend([(-a - sq) / (2.0 * b), (-a + sq) / (2.0 * b)])
    return [q for q in found if seg.lo <= q <= seg.hi]


def sup_level_many(curve: PiecewiseCurve, levels: np.ndarray) -> np.ndarray:
    """sup{q >= 0 : curve(q) >= level} for each level; 0 when the curve starts below it.

    Works piece by piece, so it also applies to non-increasing curves with
    downward jumps (marginal revenue).
    """
    levels = np.asarray(levels, dtype=float)
    out = np.zeros_like(levels)
    for seg in curve.pieces:
        v_lo = seg.value(seg.lo) if (seg.lo > 0 or seg.gamma == 0.0) else INF
        v_hi = seg.value_at_hi()
        full = levels <= v_hi
        if np.any(full):
            out = np.where(full, np.maximum(out, seg.hi), out)
        part = (levels <= v_lo) & ~full
        if not np.any(part):
            continue
        lam = levels[part]
        roots = _level_roots(seg, lam)
        out[part] = np.maximum(out[part], roots)
    return out


def _level_roots(seg: Segment, lam: np.ndarray) -> np.ndarray:
    a, b, g = seg.alpha, seg.beta, seg.gamma
    if g == 0.0:
        roots = (lam - a) / b
    elif b == 0.0:
        roots = g / (lam - a)
    else:
        lin = a - lam
        disc = np.maximum(lin * lin - 4.0 * b * g, 0.0)
        sq = np.sqrt(disc)
        r1 = (-lin - sq) / (2.0 * b)
        r2 = (-lin + sq) / (2.0 * b)
        hi = seg.hi if seg.hi != INF else np.inf
        d1 = np.maximum(seg.lo - r1, 0.0) + np.maximum(r1 - hi, 0.0)
        d2 = np.maximum(seg.lo - r2, 0.0) + np.maximum(r2 - hi, 0.0)
        roots = np.where(d1 <= d2, r1, r2)
    return np.clip(roots, seg.lo, seg.hi)


def infimum(curve: PiecewiseCurve, upper: float = INF) -> float:
    """Infimum of a non-increasing curve over [0, upper]."""
    if upper == INF:
        return curve.pieces[-1].value_at_hi()
    return evaluate(curve, upper)


def is_concave_revenue(curve: PiecewiseCurve) -> bool:
    """True when q*f(q) is concave: non-increasing marginal revenue everywhere."""
    eps = settings.continuity_tolerance
    mr = marginal_revenue(curve)
    if any(s.beta > eps for s in mr.pieces):
        return False
    for left, right in zip(mr.pieces[:-1], mr.pieces[1:]):
        q = left.hi
        if right.value(q) > left.value(q) + eps * max(1.0, abs(left.value(q))):
            return False
    return True


def merged_breakpoints(curves: Sequence[PiecewiseCurve], upper: float) -> List[float]:
    """Sorted union of the curves' breakpoints inside (0, upper)."""
    return sorted({q for c in curves for q in c.breakpoints if 0 < q < upper})
