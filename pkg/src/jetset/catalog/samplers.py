"""Rational-point parametrizations for the quadratic zero-curvature loci.

Either locus is quadratic in z2 with discriminant R1 * (perfect square),
so a rational branch exists exactly when R1 is made a rational square:

  flat case:        y1^2 + z1^2 - 1 = d^2   via the two-parameter shift
                    z1 = (p^2 + 1 - s^2)/(2p), d = (1 - s^2 - p^2)/(2p);
  space form:       e^x + 4 y1 z1 = s^2     by solving z1 with e^(x/2) free.
"""

from __future__ import annotations

import random
from fractions import Fraction

from ..chains import ChainRing, register_sampler
from ..ratcore import ext, jet

Y1, Z1 = jet(0, 1), jet(1, 1)
Y2, Z2 = jet(0, 2), jet(1, 2)


def _nz(rng: random.Random, lo: int = -9, hi: int = 9) -> Fraction:
    v = 0
    while v == 0:
        v = rng.randint(lo, hi)
    return Fraction(v)


@register_sampler("l3pi")
def sample_l3_pi(chain: ChainRing, point: dict, rng: random.Random) -> None:
    s = _nz(rng)
    p = _nz(rng)
    y2 = _nz(rng)
    eps = rng.choice((-1, 1))
    z1 = (p * p + 1 - s * s) / (2 * p)
    d = (1 - s * s - p * p) / (2 * p)
    if s * s == 1:
        raise ZeroDivisionError("degenerate y1")
    point[Y1] = s
    point[Z1] = z1
    point[Y2] = y2
    point[Z2] = y2 * (s * z1 + eps * d) / (s * s - 1)


@register_sampler("l4pi")
def sample_l4_pi(chain: ChainRing, point: dict, rng: random.Random) -> None:
    E = point[ext("E_x2")]
    s = _nz(rng)
    y1 = _nz(rng)
    y2 = _nz(rng)
    eps = rng.choice((-1, 1))
    ex = E * E
    z1 = (s * s - ex) / (4 * y1)
    point[Y1] = y1
    point[Z1] = z1
    point[Y2] = y2
    # quadratic A z2^2 + B z2 + C with A = -y1^2 e^x and
    # disc = R1 * (e^(x/2) * (2 y1^2 z1 + (y1 - y2) e^x))^2
    sqrt_disc = s * E * (2 * y1 * y1 * z1 + (y1 - y2) * ex)
    spec = chain.seeds[0]
    coeffs = spec.poly.coefficients_in(Z2)
    probe = dict(point)
    probe[Z2] = Fraction(0)
    A = coeffs[2].evaluate(probe)
    B = coeffs.get(1).evaluate(probe) if coeffs.get(1) else Fraction(0)
    point[Z2] = (-B + eps * sqrt_disc) / (2 * A)
