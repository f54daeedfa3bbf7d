"""Signed Hankel matrices and their Toeplitz column-rearrangement check.

For a coefficient stream c and indices l, m >= 1 the signed Hankel matrix
has entries (1-based)

    entry(i, j) = sign(m) * c[l + m + 1 - i - j],

i.e. the first row reads c[l+m-1] .. c[l], the last row c[l] .. c[l-m+1],
with the scalar prefactor

    sign(m) = -(-1)^((m+1)(m+2)/2)

recorded separately.  Reversing the columns of the unsigned core produces
the Toeplitz matrix entry(i, j) = c[l + j - i]; since column reversal is a
permutation of sign (-1)^(m(m-1)/2), the two determinants agree up to that
sign, which ``det_relation_check`` verifies numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mpf, workprec
from mpmath.libmp import mpf_neg

from .coeffs import CoeffStream, theta
from .mpnum import RealMatrix, det_lu, make_mpf

REL_TOL_EXP = -30   # determinant identity tolerance: 10^-30 relative


class StreamTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class HankelSpec:
    l: int
    m: int
    stream: CoeffStream

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise ValueError("l and m must be >= 1")
        top = self.l + self.m - 1
        if self.stream.max_index < top:
            raise StreamTooShortError(
                "stream ends at index %d but index %d is required"
                % (self.stream.max_index, top)
            )


@dataclass(frozen=True)
class SignedHankel:
    spec: HankelSpec
    sign: int
    matrix: RealMatrix


def sign_prefactor(m: int) -> int:
    """-(-1)^((m+1)(m+2)/2): period-4 pattern +1, -1, -1, +1 from m=1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    exponent = ((m + 1) * (m + 2) // 2) % 2
    return 1 if exponent else -1


def _coeff_by_total(stream, l, m):
    # one mpf object per index so symmetric entries are bit-identical
    return {k: theta(stream, k) for k in range(l - m + 1, l + m)}


def hankel_core(stream: CoeffStream, l: int, m: int) -> RealMatrix:
    """Unsigned core: entry(i, j) = c[l + m + 1 - i - j] (1-based)."""
    HankelSpec(l=l, m=m, stream=stream)
    coeff = _coeff_by_total(stream, l, m)
    rows = tuple(
        tuple(coeff[l + m - 1 - i - j] for j in range(m)) for i in range(m)
    )
    return RealMatrix(entries=rows, symmetric=True)


def signed_hankel(stream: CoeffStream, l: int, m: int) -> SignedHankel:
    """The signed Hankel matrix with its sign prefactor recorded."""
    spec = HankelSpec(l=l, m=m, stream=stream)
    sign = sign_prefactor(m)
    coeff = _coeff_by_total(stream, l, m)
    if sign < 0:
        coeff = {k: make_mpf(mpf_neg(v._mpf_)) for k, v in coeff.items()}
    rows = tuple(
        tuple(coeff[l + m - 1 - i - j] for j in range(m)) for i in range(m)
    )
    return SignedHankel(spec=spec, sign=sign,
                        matrix=RealMatrix(entries=rows, symmetric=True))


def raw_toeplitz(stream: CoeffStream, l: int, m: int) -> RealMatrix:
    """Unsigned Toeplitz form: entry(i, j) = c[l + j - i] (any basing)."""
    HankelSpec(l=l, m=m, stream=stream)
    coeff = _coeff_by_total(stream, l, m)
    rows = tuple(
        tuple(coeff[l + j - i] for j in range(m)) for i in range(m)
    )
    return RealMatrix(entries=rows, symmetric=False)


@dataclass(frozen=True)
class DetRelationReport:
    ok: bool
    l: int
    m: int
    det_hankel: mpf
    det_toeplitz: mpf
    expected_sign: int
    rel_error: mpf
    prec: int


def det_relation_check(stream: CoeffStream, l: int, m: int,
                       prec: int) -> DetRelationReport:
    """Verify det(core) = (-1)^(m(m-1)/2) * det(toeplitz) to 10^-30 relative.

    Returns a report either way; ``ok=False`` carries both determinants.
    """
    dh = det_lu(hankel_core(stream, l, m), prec)
    dt = det_lu(raw_toeplitz(stream, l, m), prec)
    sign = -1 if ((m * (m - 1) // 2) % 2) else 1
    with workprec(prec + 16):
        diff = abs(dh - sign * dt)
        scale = max(abs(dh), abs(dt))
        if scale == 0:
            ok, rel = True, mpf(0)
        else:
            rel = diff / scale
            ok = rel <= mpf(10) ** REL_TOL_EXP
        rel = +rel
    return DetRelationReport(ok=ok, l=l, m=m, det_hankel=dh, det_toeplitz=dt,
                             expected_sign=sign, rel_error=rel, prec=prec)
