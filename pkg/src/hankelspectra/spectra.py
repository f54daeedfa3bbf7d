"""Eigenvalue spectra of the signed Hankel matrices and sweeps over m.

``compute_spectrum`` solves one (l, m) matrix with the adaptive eigensolver
and accepts the result only after validating the product identity

    mu_1 * mu_2 * ... * mu_m  =  det(matrix)

to 10^-30 relative.  Eigenvalues whose magnitude falls below the roundoff
floor ||A||_F * 2^-(prec-16) cannot be certified nonzero at the working
precision; they are treated as zeros-at-precision.  For builtin coefficient
families (which legitimately produce rank-deficient matrices and hence
exact zeros) such records are accepted once the determinant vanishes at the
same scale.  For analytic streams a zero-at-precision instead triggers a
precision escalation until every eigenvalue is resolved, since those
spectra are expected to be nonzero and silently dropping points would
distort every downstream distribution.

Logarithmic spectra collect ln|mu| of the resolved nonzero eigenvalues
(zeros are counted, not fatal), and are split into a lower ("electrons")
and an upper ("trains") part by a configurable policy; the formal split
criterion is deliberately a policy object because no canonical definition
exists.  Figure placement contract: a point x of the m-th logarithmic
spectrum is drawn at (x, m).
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from mpmath import mp, mpf, workprec

from .coeffs import CoeffStream
from .hankel import signed_hankel
from .mpnum import (
    DEFAULT_PREC_CAP,
    DEFAULT_START_PREC,
    PrecisionCapError,
    adaptive_solve,
    det_lu,
    frobenius_norm,
    to_decimal,
)

IDENTITY_REL_EXP = -30       # product/determinant tolerance: 10^-30 relative
ZERO_FLOOR_SLACK_BITS = 16   # zero-at-precision: |mu| <= ||A||_F * 2^-(prec-16)


class IdentityError(RuntimeError):
    """Eigenvalue product and determinant disagree beyond tolerance."""


@dataclass(frozen=True)
class SpectrumRecord:
    l: int
    m: int
    function_id: str
    eigenvalues: tuple
    precision_used: int
    target_digits: int
    det: mpf
    zero_threshold: mpf
    sign: int

    @property
    def zero_count(self) -> int:
        thr = self.zero_threshold
        return sum(1 for mu in self.eigenvalues if abs(mu) <= thr)


@dataclass(frozen=True)
class LogSpectrum:
    l: int
    m: int
    points: tuple
    zero_count: int
    precision_bits: int


@dataclass(frozen=True)
class SplitSpectrum:
    electrons: tuple
    trains: tuple
    policy_id: str
    cut: mpf | None
    warning: str | None = None


@dataclass(frozen=True)
class PairingStats:
    intra_median: mpf
    inter_median: mpf
    ratio: mpf


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    failures: dict


def _identity_state(eigs, det, fnorm, prec):
    """Classify the product/determinant identity at the given precision.

    Returns (ok, zero_at_precision_count).  With no zeros-at-precision the
    check is a strict relative comparison; otherwise both sides must vanish
    below the scale reachable by a product containing a roundoff-level
    factor.
    """
    wp = prec + 32
    with workprec(wp):
        floor = fnorm * mpf(2) ** (-(prec - ZERO_FLOOR_SLACK_BITS))
        zeros = sum(1 for mu in eigs if abs(mu) <= floor)
        prod = mpf(1)
        for mu in eigs:
            prod = prod * mu
        if zeros == 0:
            scale = max(abs(prod), abs(det))
            if scale == 0:
                return True, 0, prod
            ok = abs(prod - det) <= mpf(10) ** IDENTITY_REL_EXP * scale
            return ok, 0, +prod
        bound = mpf(2) ** (2 * len(eigs))
        for mu in eigs:
            bound = bound * max(abs(mu), floor)
        ok = abs(det) <= bound and abs(prod) <= bound
        return ok, zeros, +prod


def compute_spectrum(stream: CoeffStream, l: int, m: int, target_digits: int,
                     start_prec: int = DEFAULT_START_PREC,
                     prec_cap: int = DEFAULT_PREC_CAP) -> SpectrumRecord:
    """Eigenvalues of the (l, m) signed Hankel matrix, identity-validated."""
    sh = signed_hankel(stream, l, m)
    A = sh.matrix
    fnorm = frobenius_norm(A, 64)
    analytic = stream.spec.kind == "analytic"
    prec = start_prec
    last_reason = ""
    while prec <= prec_cap:
        res = adaptive_solve(A, target_digits, start_prec=prec, prec_cap=prec_cap)
        det = det_lu(A, res.precision_used)
        ok, zeros, _ = _identity_state(res.eigenvalues, det, fnorm,
                                       res.precision_used)
        if ok and not (analytic and zeros):
            with workprec(res.precision_used):
                thr = +(fnorm * mpf(2) ** (-(res.precision_used
                                             - ZERO_FLOOR_SLACK_BITS)))
            return SpectrumRecord(
                l=l, m=m, function_id=stream.spec.name,
                eigenvalues=res.eigenvalues,
                precision_used=res.precision_used,
                target_digits=target_digits, det=det,
                zero_threshold=thr, sign=sh.sign,
            )
        if analytic and zeros:
            last_reason = ("%d eigenvalue(s) not resolvable above the "
                           "roundoff floor at %d bits" % (zeros,
                                                          res.precision_used))
        else:
            last_reason = ("eigenvalue product disagrees with the "
                           "determinant at %d bits" % res.precision_used)
        prec = max(res.precision_used * 2, prec * 2)
    raise IdentityError(
        "l=%d m=%d: %s; precision cap %d reached (insufficient precision)"
        % (l, m, last_reason, prec_cap)
    )


def log_spectrum(rec: SpectrumRecord) -> LogSpectrum:
    """ln|mu| of the nonzero eigenvalues; zeros counted, not dropped."""
    pts = []
    with workprec(rec.precision_used):
        for mu in rec.eigenvalues:
            if abs(mu) > rec.zero_threshold:
                pts.append(+mp.log(abs(mu)))
    return LogSpectrum(l=rec.l, m=rec.m, points=tuple(sorted(pts)),
                       zero_count=rec.m - len(pts),
                       precision_bits=rec.precision_used)


def split(ls: LogSpectrum, policy: str = "largest-gap",
          value=None) -> SplitSpectrum:
    """Partition a logarithmic spectrum into electrons (low) and trains (high).

    Policies: ``largest-gap`` cuts at the widest gap between consecutive
    sorted points (ties resolved at the first such gap), ``threshold`` cuts
    at fixed x = value, ``quantile`` puts the lowest floor(q*n) points into
    the electron part.  Degenerate inputs (single point, all points equal)
    land everything in the train part with a warning.
    """
    pts = ls.points
    if not pts:
        raise ValueError("cannot split an empty spectrum")
    wp = ls.precision_bits + 16

    if policy == "largest-gap":
        policy_id = "largest-gap"
        if len(pts) == 1:
            return _degenerate_split(pts, policy_id, "single point")
        with workprec(wp):
            gaps = [pts[i + 1] - pts[i] for i in range(len(pts) - 1)]
            widest = max(gaps)
            if widest == 0:
                return _degenerate_split(pts, policy_id, "all points equal")
            idx = gaps.index(widest)
            cut = +((pts[idx] + pts[idx + 1]) / 2)
        return SplitSpectrum(electrons=pts[: idx + 1], trains=pts[idx + 1:],
                             policy_id=policy_id, cut=cut)

    if policy == "threshold":
        if value is None:
            raise ValueError("threshold policy needs a cut value")
        cut = mpf(value)
        policy_id = "threshold:%s" % value
        electrons = tuple(x for x in pts if x < cut)
        trains = tuple(x for x in pts if x >= cut)
        return SplitSpectrum(electrons=electrons, trains=trains,
                             policy_id=policy_id, cut=cut)

    if policy == "quantile":
        if value is None:
            raise ValueError("quantile policy needs a fraction")
        q = float(value)
        if not 0 < q < 1:
            raise ValueError("quantile fraction must be in (0, 1)")
        policy_id = "quantile:%s" % value
        k = int(q * len(pts))
        while k > 0 and pts[k - 1] == pts[k]:
            k -= 1
        if k == 0:
            return _degenerate_split(pts, policy_id,
                                     "quantile cut collapsed to zero points")
        with workprec(wp):
            cut = +((pts[k - 1] + pts[k]) / 2)
        return SplitSpectrum(electrons=pts[:k], trains=pts[k:],
                             policy_id=policy_id, cut=cut)

    raise ValueError("unknown split policy %r" % policy)


def _degenerate_split(pts, policy_id, why):
    msg = "degenerate split (%s): all points assigned to trains" % why
    warnings.warn(msg)
    return SplitSpectrum(electrons=(), trains=tuple(pts),
                         policy_id=policy_id, cut=None, warning=msg)


def _median(vals, wp):
    vals = sorted(vals)
    n = len(vals)
    with workprec(wp):
        if n % 2:
            return +vals[n // 2]
        return +((vals[n // 2 - 1] + vals[n // 2]) / 2)


def pairing_stats(trains, prec: int = 128) -> PairingStats:
    """Quantify pair structure: consecutive disjoint pairs after sorting.

    intra gaps are within pairs (1,2), (3,4), ...; inter gaps separate
    consecutive pairs.  A ratio well below 1 means the points travel in
    pairs.
    """
    pts = sorted(trains)
    if len(pts) < 4:
        raise ValueError("pairing needs at least 4 points")
    wp = prec + 16
    with workprec(wp):
        npairs = len(pts) // 2
        intra = [pts[2 * i + 1] - pts[2 * i] for i in range(npairs)]
        inter = [pts[2 * i + 2] - pts[2 * i + 1] for i in range(npairs - 1)]
        intra_med = _median(intra, wp)
        inter_med = _median(inter, wp)
        ratio = intra_med / inter_med if inter_med != 0 else mp.inf
        return PairingStats(intra_median=intra_med, inter_median=inter_med,
                            ratio=+ratio)


def _sweep_worker(args):
    stream, l, m, target_digits, start_prec, prec_cap = args
    try:
        rec = compute_spectrum(stream, l, m, target_digits,
                               start_prec=start_prec, prec_cap=prec_cap)
        return m, rec, None
    except (IdentityError, PrecisionCapError, ValueError) as exc:
        return m, None, "%s: %s" % (type(exc).__name__, exc)


def sweep(stream: CoeffStream, l: int, m_range, target_digits: int,
          jobs: int = 1, start_prec: int = DEFAULT_START_PREC,
          prec_cap: int = DEFAULT_PREC_CAP) -> SweepResult:
    """Spectrum records for every m in m_range; failures recorded per m.

    Each (l, m) computation is pure and independent, so the work pool
    parallelises over m without affecting results; output ordering is by m
    regardless of job count.
    """
    ms = sorted(set(int(m) for m in m_range))
    if not ms:
        raise ValueError("empty m range")
    top = l + ms[-1] - 1
    if stream.max_index < top:
        raise ValueError(
            "stream ends at index %d but the sweep needs index %d"
            % (stream.max_index, top)
        )
    tasks = [(stream, l, m, target_digits, start_prec, prec_cap) for m in ms]
    results = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for m, rec, err in pool.map(_sweep_worker, tasks):
                results[m] = (rec, err)
    else:
        for task in tasks:
            m, rec, err = _sweep_worker(task)
            results[m] = (rec, err)
    records = tuple(results[m][0] for m in ms if results[m][0] is not None)
    failures = {m: results[m][1] for m in ms if results[m][1] is not None}
    return SweepResult(records=records, failures=failures)


def spectra_csv(records, fh):
    """CSV rows (l, m, n, mu, ln_abs_mu, precision_bits), one per eigenvalue.

    ``ln_abs_mu`` is the literal string ZERO for zeros-at-precision.
    Decimal serialisation is bit-exact, so repeated exports of equal data
    are byte-identical.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["l", "m", "n", "mu", "ln_abs_mu", "precision_bits"])
    for rec in records:
        with workprec(rec.precision_used):
            for n, mu in enumerate(rec.eigenvalues, start=1):
                if abs(mu) <= rec.zero_threshold:
                    lnabs = "ZERO"
                else:
                    lnabs = to_decimal(+mp.log(abs(mu)), rec.precision_used)
                w.writerow([rec.l, rec.m, n,
                            to_decimal(mu, rec.precision_used), lnabs,
                            rec.precision_used])
