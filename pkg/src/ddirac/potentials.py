"""Delays, potentials and the classification of delay pairs."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gridfn import DEFAULT_N_CELLS, PI, DomainError, GridFn, from_samples, sample, zeros

# comparisons against region boundaries are made on fractions of pi
_TIE = 1e-12


@dataclass(frozen=True)
class DelayPair:
    a1: float
    a2: float

    def __post_init__(self):
        for name in ("a1", "a2"):
            a = getattr(self, name)
            if not (PI / 3 - 1e-12 <= a < PI):
                raise DomainError(f"delay out of range: {name}={a / PI:.6g}*pi "
                                  "(need pi/3 <= a < pi)")

    @classmethod
    def from_pi(cls, a1_pi: float, a2_pi: float) -> "DelayPair":
        return cls(a1_pi * PI, a2_pi * PI)

    @property
    def a1_pi(self) -> float:
        return self.a1 / PI

    @property
    def a2_pi(self) -> float:
        return self.a2 / PI


class Region(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    S1 = "S1"
    S2 = "S2"
    OUT_OF_SCOPE = "OutOfScope"


def _predicates(a1: float, a2: float) -> dict[Region, bool]:
    """Region predicates on fractions of pi, each evaluated independently."""
    lower = 1 / 3 - _TIE
    return {
        Region.R1: (lower <= a1 < 0.4 < a2 < 1 and 2 * a1 + a2 / 2 >= 1 - _TIE),
        Region.R2: (lower <= a1 < 0.4 and 1 / 3 < a2 < 2 / 3 and a1 < a2
                    and 2 * a1 + a2 / 2 < 1 - _TIE),
        Region.S1: 0.4 <= a2 < a1 < 1,
        Region.S2: lower <= a2 < 0.4 and a2 < a1 < 1,
    }


def region_predicates(delays: DelayPair) -> dict[Region, bool]:
    return _predicates(delays.a1_pi, delays.a2_pi)


def classify(delays: DelayPair) -> Region:
    if abs(delays.a1 - delays.a2) <= 1e-12:
        return Region.OUT_OF_SCOPE
    hits = [r for r, ok in region_predicates(delays).items() if ok]
    if len(hits) > 1:
        raise AssertionError(f"overlapping regions {hits} at {delays}")
    return hits[0] if hits else Region.OUT_OF_SCOPE


def boundary_margins(delays: DelayPair) -> dict[str, float]:
    """Signed distances (in units of pi) to the lines bounding the regions."""
    a1, a2 = delays.a1_pi, delays.a2_pi
    return {
        "a1-1/3": a1 - 1 / 3,
        "2/5-a1": 0.4 - a1,
        "a2-2/5": a2 - 0.4,
        "2/3-a2": 2 / 3 - a2,
        "a2-a1": a2 - a1,
        "2a1+a2/2-1": 2 * a1 + a2 / 2 - 1,
    }


@dataclass(frozen=True, eq=False)
class PotentialSet:
    delays: DelayPair
    p1: GridFn
    p2: GridFn
    q1: GridFn
    q2: GridFn

    def __post_init__(self):
        n = {f.n_cells for f in self.functions()}
        if len(n) != 1:
            raise ValueError("potentials must share one grid")
        bad = self.support_violations()
        if bad:
            raise DomainError("potential support violated: " + ", ".join(bad))

    @property
    def n_cells(self) -> int:
        return self.p1.n_cells

    def functions(self) -> tuple[GridFn, GridFn, GridFn, GridFn]:
        return (self.p1, self.p2, self.q1, self.q2)

    def support_violations(self) -> list[str]:
        out = []
        for name, f, a in (("p1", self.p1, self.delays.a1), ("p2", self.p2, self.delays.a1),
                           ("q1", self.q1, self.delays.a2), ("q2", self.q2, self.delays.a2)):
            lo, _ = f.support
            outside = f.x < a - 1e-12
            if (f.pieces and lo < a - 1e-12) or np.any(f.values[outside] != 0):
                out.append(name)
        return out

    def scale(self, c: complex) -> "PotentialSet":
        return PotentialSet(self.delays, *(f.scale(c) for f in self.functions()))


PRESETS = ("zero", "preset-A", "preset-B")


def preset(name: str, delays: DelayPair, n_cells: int = DEFAULT_N_CELLS) -> PotentialSet:
    p_sup, q_sup = (delays.a1, PI), (delays.a2, PI)
    if name == "zero":
        return PotentialSet(delays, zeros(n_cells, p_sup), zeros(n_cells, p_sup),
                            zeros(n_cells, q_sup), zeros(n_cells, q_sup))
    if name in ("preset-A", "preset-B"):
        c = 1.0 if name == "preset-A" else 0.1
        return PotentialSet(
            delays,
            sample(lambda x: c * np.sin(x), n_cells, p_sup),
            sample(lambda x: c * np.cos(x), n_cells, p_sup),
            sample(lambda x: c * x / PI, n_cells, q_sup),
            sample(lambda x: c * 0.5 + 0 * x, n_cells, q_sup),
        )
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


# ------------------------------------------------------------------ config
def _complex_array(raw) -> np.ndarray:
    out = []
    for v in raw:
        if isinstance(v, (list, tuple)):
            out.append(complex(float(v[0]), float(v[1])))
        elif isinstance(v, str):
            out.append(parse_complex(v))
        else:
            out.append(complex(v))
    return np.array(out)


def parse_complex(s: str) -> complex:
    """Parse literals such as ``1``, ``i``, ``-2.5i`` or ``1+2i``."""
    t = s.strip().replace(" ", "").replace("j", "i")
    if not t:
        raise ValueError("empty complex literal")
    if t.endswith("i"):
        body = t[:-1]
        # split at the last sign that is not an exponent sign
        k = max(body.rfind("+"), body.rfind("-"))
        while k > 0 and body[k - 1] in "eE":
            k = max(body.rfind("+", 0, k - 1), body.rfind("-", 0, k - 1))
        re_part, im_part = (body[:k], body[k:]) if k > 0 else ("", body)
        if im_part in ("", "+"):
            im = 1.0
        elif im_part == "-":
            im = -1.0
        else:
            im = float(im_part)
        return complex(float(re_part) if re_part else 0.0, im)
    return complex(float(t), 0.0)


@dataclass(frozen=True)
class ProblemConfig:
    delays: DelayPair
    n_cells: int
    potentials: PotentialSet


def load_problem(source) -> ProblemConfig:
    """Read the JSON problem config (path, JSON text or already-parsed dict)."""
    if isinstance(source, dict):
        data = source
    else:
        p = Path(source)
        data = json.loads(p.read_text())
    try:
        delays = DelayPair.from_pi(float(data["a1_pi"]), float(data["a2_pi"]))
        n_cells = int(data.get("n_cells", DEFAULT_N_CELLS))
        pots = data.get("potentials", "zero")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed problem config: {exc}") from exc
    if n_cells < 2:
        raise ValueError("n_cells must be >= 2")
    if isinstance(pots, str):
        pset = preset(pots, delays, n_cells)
    else:
        arrays = {}
        for key in ("p1", "p2", "q1", "q2"):
            arr = _complex_array(pots[key])
            if len(arr) != n_cells + 1:
                raise ValueError(f"{key} must have n_cells+1 = {n_cells + 1} samples")
            arrays[key] = arr
        p_sup, q_sup = (delays.a1, PI), (delays.a2, PI)
        pset = PotentialSet(delays, from_samples(arrays["p1"], p_sup),
                            from_samples(arrays["p2"], p_sup),
                            from_samples(arrays["q1"], q_sup),
                            from_samples(arrays["q2"], q_sup))
    return ProblemConfig(delays, n_cells, pset)


def aligned_n_cells(delays: DelayPair, at_least: int = DEFAULT_N_CELLS,
                    max_den: int = 10_000) -> int:
    """Smallest grid size >= ``at_least`` on which a1/2 and a2/2 are nodes."""
    from fractions import Fraction

    den = 1
    for a in (delays.a1_pi, delays.a2_pi):
        fr = Fraction(a / 2).limit_denominator(max_den)
        den = den * fr.denominator // math.gcd(den, fr.denominator)
    return den * math.ceil(at_least / den)
