"""Piecewise-linear complex potentials on [-1, 1]."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

PARTITION_TOL = 1e-12
JOIN_TOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """Linear piece V(x) = m x + l on [x_lo, x_hi]."""

    x_lo: float
    x_hi: float
    m: complex
    l: complex

    def __post_init__(self):
        if not (self.x_lo < self.x_hi):
            raise ValidationError("OVERLAP", f"segment has x_lo={self.x_lo} >= x_hi={self.x_hi}")
        if self.m == 0:
            raise ValidationError("ZERO_SLOPE", f"segment [{self.x_lo}, {self.x_hi}] has zero slope")

    def __call__(self, x):
        return self.m * x + self.l

    @property
    def endpoint_values(self) -> tuple[complex, complex]:
        return complex(self(self.x_lo)), complex(self(self.x_hi))


@dataclass(frozen=True)
class PiecewiseLinearPotential:
    segments: tuple[Segment, ...]

    @property
    def n(self) -> int:
        return len(self.segments)

    @property
    def breakpoints(self) -> np.ndarray:
        """All nodes -1 = x_0 < x_1 < ... < x_n = 1."""
        return np.array([s.x_lo for s in self.segments] + [self.segments[-1].x_hi])

    @property
    def interior_breakpoints(self) -> np.ndarray:
        return self.breakpoints[1:-1]

    def segment_index(self, x):
        """Index of the segment owning x; a breakpoint belongs to the left piece."""
        return np.searchsorted(self.interior_breakpoints, np.asarray(x, dtype=float), side="left")

    def evaluate(self, x):
        """V(x), taking the left limit at interior breakpoints."""
        x = np.asarray(x, dtype=float)
        idx = self.segment_index(x)
        m = np.array([s.m for s in self.segments], dtype=complex)[idx]
        l = np.array([s.l for s in self.segments], dtype=complex)[idx]
        return m * x + l

    def __call__(self, x):
        return self.evaluate(x)

    def to_records(self) -> list[dict]:
        return [
            {"x_lo": s.x_lo, "x_hi": s.x_hi, "m_re": complex(s.m).real, "m_im": complex(s.m).imag,
             "l_re": complex(s.l).real, "l_im": complex(s.l).imag}
            for s in self.segments
        ]


@dataclass(frozen=True)
class SegmentFrame:
    """Affine normalisation taking (alpha, beta) to (-e^{i theta}, e^{i theta})."""

    center: complex
    half_span: float
    theta: float

    def to_frame(self, lam):
        return (np.asarray(lam) - self.center) / self.half_span

    def from_frame(self, mu):
        return self.center + self.half_span * np.asarray(mu)


def build_potential(raw_segments: Iterable[Sequence], strict: bool = True) -> PiecewiseLinearPotential:
    """Validate ``(x_lo, x_hi, m, l)`` tuples into a potential.

    Parameters
    ----------
    raw_segments : iterable of 4-sequences
        Pieces in any order; they are sorted by ``x_lo``.
    strict : bool
        When false, a continuous join with equal slopes is accepted.  This
        only exists so that a single line can be split artificially (useful
        for checking that the characteristic determinant does not depend on
        the split); the containment results assume ``strict=True``.
    """
    raw = list(raw_segments)
    if not raw:
        raise ValidationError("EMPTY", "no segments given")
    segs = []
    for item in raw:
        if len(item) != 4:
            raise ValidationError("BAD_RECORD", f"expected (x_lo, x_hi, m, l), got {item!r}")
        x_lo, x_hi, m, l = item
        x_lo, x_hi = float(x_lo), float(x_hi)
        if not (np.isfinite(x_lo) and np.isfinite(x_hi) and np.isfinite(complex(m)) and np.isfinite(complex(l))):
            raise ValidationError("BAD_RECORD", f"non-finite entry in {item!r}")
        segs.append(Segment(x_lo, x_hi, complex(m), complex(l)))
    segs.sort(key=lambda s: s.x_lo)

    if abs(segs[0].x_lo + 1.0) > PARTITION_TOL:
        raise ValidationError("GAP", f"first segment starts at {segs[0].x_lo}, not -1")
    if abs(segs[-1].x_hi - 1.0) > PARTITION_TOL:
        raise ValidationError("GAP", f"last segment ends at {segs[-1].x_hi}, not 1")
    for a, b in zip(segs, segs[1:]):
        if b.x_lo > a.x_hi + PARTITION_TOL:
            raise ValidationError("GAP", f"gap between {a.x_hi} and {b.x_lo}")
        if b.x_lo < a.x_hi - PARTITION_TOL:
            raise ValidationError("OVERLAP", f"segments overlap on [{b.x_lo}, {a.x_hi}]")
    # snap shared nodes so that consecutive pieces meet exactly
    fixed = []
    for i, s in enumerate(segs):
        lo = -1.0 if i == 0 else fixed[-1].x_hi
        hi = 1.0 if i == len(segs) - 1 else s.x_hi
        fixed.append(Segment(lo, hi, s.m, s.l))

    if strict:
        for a, b in zip(fixed, fixed[1:]):
            x = a.x_hi
            if abs(a(x) - b(x)) <= JOIN_TOL * (1 + abs(a(x))) and abs(a.m - b.m) <= JOIN_TOL * (1 + abs(a.m)):
                raise ValidationError(
                    "DEGENERATE_JOIN", f"continuous join at x = {x} with equal slopes {a.m}",
                    x=x)
    return PiecewiseLinearPotential(tuple(fixed))


def endpoint_values(V: PiecewiseLinearPotential) -> list[tuple[complex, complex]]:
    """One-sided values (V(x_{i-1}+), V(x_i-)) for each segment."""
    return [s.endpoint_values for s in V.segments]


def segment_frame(alpha: complex, beta: complex) -> SegmentFrame:
    alpha, beta = complex(alpha), complex(beta)
    if alpha == beta:
        raise ValidationError("DEGENERATE", f"endpoints coincide at {alpha}")
    d = beta - alpha
    theta = float(np.angle(d))
    if theta == -np.pi:
        theta = np.pi
    return SegmentFrame((alpha + beta) / 2, abs(d) / 2, theta)


# ---------------------------------------------------------------------------
# presets and files

def jump(delta: float) -> PiecewiseLinearPotential:
    """i(x - delta) on (-1, 0) and i(x + delta) on (0, 1).

    At ``delta = 0`` the two pieces coincide and the single line V = ix is
    returned instead (a two-piece version would be a degenerate join).
    """
    delta = float(delta)
    if not np.isfinite(delta) or delta < 0:
        raise ValidationError("BAD_PARAMETER", f"delta must be a finite value >= 0, got {delta}")
    if delta == 0:
        return linear(1j)
    return build_potential([(-1.0, 0.0, 1j, -1j * delta), (0.0, 1.0, 1j, 1j * delta)])


def figure3() -> PiecewiseLinearPotential:
    """Two-piece potential with a continuous join at 0."""
    return build_potential([(-1.0, 0.0, 2j, 1j), (0.0, 1.0, 1 + 1j, 0.0)])


def linear(m: complex = 1.0, l: complex = 0.0) -> PiecewiseLinearPotential:
    return build_potential([(-1.0, 1.0, m, l)])


PRESETS = {
    "jump": jump,
    "figure3": figure3,
    "airy": lambda: linear(1j),
    "selfadjoint": lambda: linear(1.0),
}


def potential_from_records(records: Sequence[dict], strict: bool = True) -> PiecewiseLinearPotential:
    raw = []
    for rec in records:
        try:
            raw.append((rec["x_lo"], rec["x_hi"],
                        complex(rec["m_re"], rec.get("m_im", 0.0)),
                        complex(rec["l_re"], rec.get("l_im", 0.0))))
        except (KeyError, TypeError) as exc:
            raise ValidationError("BAD_RECORD", f"malformed potential record {rec!r}") from exc
    return build_potential(raw, strict=strict)


def load_potential(path) -> PiecewiseLinearPotential:
    """Read a JSON list of ``{x_lo, x_hi, m_re, m_im, l_re, l_im}`` records."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError("BAD_FILE", f"cannot read potential file {path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("segments", data.get("records"))
    if not isinstance(data, list):
        raise ValidationError("BAD_FILE", f"{path} does not hold a list of segment records")
    return potential_from_records(data)


def save_potential(V: PiecewiseLinearPotential, path) -> None:
    Path(path).write_text(json.dumps(V.to_records(), indent=1))
