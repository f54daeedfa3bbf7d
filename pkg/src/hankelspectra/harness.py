"""Trend checks over sweep outputs: growth rates, constants, divergences.

Every check is a pure function of its input sequences and the documented
thresholds, reports its estimator id, and returns a deterministic
TrendReport, so re-running a report on cached data is byte-identical.
Limits cannot be verified at a desk, only trends can: SUPPORTED always
means "the finite-m data moves the expected way across dyadic
checkpoints", never "proved".

Growth-rate extrapolation applies the Aitken delta-squared transform to
the sequence y_m = ln|d_m| / m sampled on the dyadic tail m, m/2, m/4, ...
On that grid the leading deviation of y from its limit is geometric in the
level index, which is exactly the error shape Aitken annihilates; for
perfectly geometric input d_m = c * W^m the transform recovers W to full
working precision.

Reference growth constants are external configuration (JSON); when absent
the checks that need them report UNAVAILABLE instead of guessing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from mpmath import mp, mpf, workprec

from .dist import mean, sup_distance, tail_sums
from .mpnum import to_decimal

SUPPORTED = "SUPPORTED"
INCONCLUSIVE = "INCONCLUSIVE"
CONTRADICTED = "CONTRADICTED"
UNAVAILABLE = "UNAVAILABLE"

# documented thresholds; every report embeds the ones it used
RATE_CONTRACTION_MAX = 0.75      # |second diff ratio| for a converging tail
RATE_FLAT_EPS = 1e-9             # treat smaller y-increments as converged
CONST_DRIFT_TOL = 0.01           # |ln step ratio| beyond this is geometric drift
CONST_DISPERSION_TOL = 0.05      # relative tail dispersion for a stable constant
DIVERGENCE_DELTA = 0.5           # min growth per dyadic checkpoint (2A/2B)
PRODUCT_IDENTITY_EXP = -25       # |prod mu| vs |det| cross-check: 10^-25


class ZeroDeterminantError(ValueError):
    def __init__(self, m):
        super().__init__("determinant at m=%d is zero" % m)
        self.m = m


class ProductIdentityError(RuntimeError):
    """|prod mu| and |det| disagree beyond 10^-25 (insufficient precision)."""


@dataclass(frozen=True)
class TrendReport:
    check_id: str
    l: object
    m_grid: tuple
    series: dict
    estimator_id: str
    thresholds: dict
    verdict: str
    limit: mpf | None = None
    notes: tuple = ()

    def to_json(self) -> dict:
        def dec(x):
            if isinstance(x, mpf):
                return to_decimal(x, max(64, x._mpf_[3] + 8))
            return x
        return {
            "check": self.check_id,
            "l": self.l,
            "m_grid": list(self.m_grid),
            "series": {
                name: [[m, dec(v)] for m, v in vals]
                for name, vals in sorted(self.series.items())
            },
            "estimator": self.estimator_id,
            "thresholds": {k: str(v) for k, v in sorted(self.thresholds.items())},
            "verdict": self.verdict,
            "limit": dec(self.limit) if self.limit is not None else None,
            "notes": list(self.notes),
        }


def write_report(report: TrendReport, fh):
    json.dump(report.to_json(), fh, sort_keys=True, indent=2)
    fh.write("\n")


@dataclass(frozen=True)
class ReferenceConstants:
    """Per-l reference growth rates (and optional constants), from config."""

    growth: dict = field(default_factory=dict)
    constant: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def growth_rate(self, l: int):
        return self.growth.get(l)


def load_reference_constants(path: str) -> ReferenceConstants:
    """JSON schema: {"1": {"W": "3.7", "R": "0.9", "note": "..."}, ...}."""
    with open(path) as fh:
        raw = json.load(fh)
    growth, constant, notes = {}, {}, {}
    with workprec(256):
        for key, entry in raw.items():
            l = int(key)
            if "W" in entry:
                w = mpf(entry["W"])
                if not w > 0:
                    raise ValueError("growth rate for l=%d must be positive" % l)
                growth[l] = w
            if "R" in entry:
                constant[l] = mpf(entry["R"])
            if "note" in entry:
                notes[l] = entry["note"]
    return ReferenceConstants(growth=growth, constant=constant, notes=notes)


# ---------------------------------------------------------------------------
# helpers


def _dyadic_tail(ms):
    """Longest chain m_max, m_max/2, m_max/4 ... present in ms, ascending."""
    have = set(ms)
    chain = [max(ms)]
    while chain[-1] % 2 == 0 and chain[-1] // 2 in have:
        chain.append(chain[-1] // 2)
    return list(reversed(chain))


def _sign_note(signs):
    if all(s > 0 for s in signs):
        return None
    if all(s < 0 for s in signs):
        return "all determinants negative; magnitudes used"
    flips = sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)
    if flips == len(signs) - 1:
        return "alternating determinant signs; magnitudes used"
    return "mixed determinant signs; magnitudes used"


def estimate_growth_rate(dets, min_entries: int = 4) -> TrendReport:
    """Extrapolate lim |d_m|^(1/m) from a (m, determinant) sequence."""
    dets = sorted(dets, key=lambda t: t[0])
    if len(dets) < min_entries:
        raise ValueError("need at least %d determinants" % min_entries)
    for m, d in dets:
        if d == 0:
            raise ZeroDeterminantError(m)
    wp = 64 + max(x._mpf_[3] if isinstance(x, mpf) else 53 for _, x in dets)
    notes = []
    sign_note = _sign_note([1 if d > 0 else -1 for _, d in dets])
    if sign_note:
        notes.append(sign_note)
    with workprec(wp):
        roots = [(m, +(abs(mpf(d)) ** (mpf(1) / m))) for m, d in dets]
        ys = {m: mp.log(abs(mpf(d))) / m for m, d in dets}
        chain = _dyadic_tail([m for m, _ in dets])
        thresholds = {
            "contraction_max": RATE_CONTRACTION_MAX,
            "flat_eps": RATE_FLAT_EPS,
        }
        if len(chain) < 3:
            return TrendReport(
                check_id="growth-rate", l=None,
                m_grid=tuple(m for m, _ in dets),
                series={"mth_root": tuple(roots)},
                estimator_id="aitken-d2-dyadic-log-root",
                thresholds=thresholds, verdict=INCONCLUSIVE, limit=None,
                notes=tuple(notes + ["dyadic tail too short to extrapolate"]),
            )
        y = [ys[m] for m in chain]
        d1 = y[-2] - y[-3]
        d2 = y[-1] - y[-2]
        dd = d2 - d1
        if abs(d2) <= RATE_FLAT_EPS and abs(d1) <= RATE_FLAT_EPS:
            limit, verdict = +mp.e ** y[-1], SUPPORTED
            notes.append("stability: log-root increments below %g" % RATE_FLAT_EPS)
        elif dd == 0:
            limit, verdict = None, INCONCLUSIVE
            notes.append("second difference vanished without convergence")
        else:
            limit = +mp.e ** (y[-1] - d2 * d2 / dd)
            if abs(d1) <= RATE_FLAT_EPS:
                verdict = INCONCLUSIVE
            else:
                q = abs(d2) / abs(d1)
                notes.append("stability: tail contraction ratio %s"
                             % mp.nstr(q, 6))
                if q <= RATE_CONTRACTION_MAX:
                    verdict = SUPPORTED
                else:
                    # no reference value exists to contradict; growing
                    # increments just mean no finite limit is apparent
                    verdict = INCONCLUSIVE
                    if q > 1:
                        limit = None
                        notes.append("log-root increments grow with m; "
                                     "no finite positive limit apparent")
    return TrendReport(
        check_id="growth-rate", l=None, m_grid=tuple(m for m, _ in dets),
        series={"mth_root": tuple(roots)},
        estimator_id="aitken-d2-dyadic-log-root",
        thresholds=thresholds, verdict=verdict, limit=limit,
        notes=tuple(notes),
    )


def estimate_constant_factor(dets, growth_rate) -> TrendReport:
    """Estimate the constant in d_m ~ W^m * R from the tail of d_m / W^m."""
    if growth_rate is None:
        return TrendReport(
            check_id="constant-factor", l=None, m_grid=(), series={},
            estimator_id="tail-mean-normalized", thresholds={},
            verdict=UNAVAILABLE,
            notes=("no reference growth rate configured",),
        )
    W = mpf(growth_rate) if not isinstance(growth_rate, mpf) else growth_rate
    if not W > 0:
        raise ValueError("growth rate must be positive")
    dets = sorted(dets, key=lambda t: t[0])
    if len(dets) < 4:
        raise ValueError("need at least 4 determinants")
    for m, d in dets:
        if d == 0:
            raise ZeroDeterminantError(m)
    wp = 96 + max(x._mpf_[3] if isinstance(x, mpf) else 53 for _, x in dets)
    thresholds = {"drift_tol": CONST_DRIFT_TOL,
                  "dispersion_tol": CONST_DISPERSION_TOL}
    notes = []
    with workprec(wp):
        seq = [(m, +(mpf(d) / W ** m)) for m, d in dets]
        tail = seq[-max(3, len(seq) // 4):]
        est = +(mp.fsum(v for _, v in tail) / len(tail))
        if est != 0:
            dispersion = +max(abs(v - est) / abs(est) for _, v in tail)
        else:
            dispersion = mp.inf
        m0, c0 = tail[0]
        m1, c1 = tail[-1]
        drift = None
        if c0 != 0 and c1 != 0 and m1 > m0:
            drift = +(mp.log(abs(c1) / abs(c0)) / (m1 - m0))
        if dispersion != mp.inf:
            notes.append("tail dispersion: %s" % mp.nstr(dispersion, 6))
        if drift is not None and abs(drift) > CONST_DRIFT_TOL:
            verdict = CONTRADICTED
            notes.append(
                "normalized sequence drifts geometrically (per-step log "
                "%s); the reference growth rate looks misspecified"
                % mp.nstr(drift, 6)
            )
        elif dispersion != mp.inf and dispersion <= CONST_DISPERSION_TOL:
            verdict = SUPPORTED
        else:
            verdict = INCONCLUSIVE
    return TrendReport(
        check_id="constant-factor", l=None, m_grid=tuple(m for m, _ in dets),
        series={"normalized": tuple(seq)},
        estimator_id="tail-mean-normalized", thresholds=thresholds,
        verdict=verdict, limit=est, notes=tuple(notes),
    )


def check_eigenvalue_product_rate(records) -> TrendReport:
    """Cross-check |prod mu| against |det| per record, then rate-extrapolate.

    The product/determinant equality is algebraic at every finite m; any
    violation beyond 10^-25 relative signals insufficient precision and
    raises rather than producing a misleading trend.
    """
    if not records:
        raise ValueError("no records")
    records = sorted(records, key=lambda r: r.m)
    pairs = []
    roots = []
    for rec in records:
        wp = rec.precision_used + 32
        with workprec(wp):
            prod = mpf(1)
            for mu in rec.eigenvalues:
                prod = prod * mu
            scale = max(abs(prod), abs(rec.det))
            if scale != 0:
                if abs(abs(prod) - abs(rec.det)) > mpf(10) ** PRODUCT_IDENTITY_EXP * scale:
                    raise ProductIdentityError(
                        "l=%d m=%d: |eigenvalue product| and |determinant| "
                        "disagree beyond 1e%d"
                        % (rec.l, rec.m, PRODUCT_IDENTITY_EXP)
                    )
            root = +(abs(prod) ** (mpf(1) / rec.m))
        pairs.append((rec.m, prod))
        roots.append((rec.m, root))
    if len(pairs) < 4:
        return TrendReport(
            check_id="v5", l=records[0].l,
            m_grid=tuple(m for m, _ in pairs),
            series={"product_mth_root": tuple(roots)},
            estimator_id="aitken-d2-dyadic-log-root",
            thresholds={"identity_exp": PRODUCT_IDENTITY_EXP},
            verdict=INCONCLUSIVE, limit=roots[-1][1],
            notes=("fewer than 4 records; identity verified, no trend",),
        )
    base = estimate_growth_rate(pairs)
    return TrendReport(
        check_id="v5", l=records[0].l, m_grid=base.m_grid,
        series={"product_mth_root": tuple(roots)},
        estimator_id=base.estimator_id,
        thresholds=dict(base.thresholds,
                        identity_exp=PRODUCT_IDENTITY_EXP),
        verdict=base.verdict, limit=base.limit, notes=base.notes,
    )


def check_mean_trend(dists_by_m, growth_rate, l=None) -> TrendReport:
    """Distribution means versus the log of the reference growth rate."""
    if growth_rate is None:
        return TrendReport(
            check_id="v6", l=l, m_grid=tuple(sorted(dists_by_m)), series={},
            estimator_id="dyadic-gap-monotone", thresholds={},
            verdict=UNAVAILABLE,
            notes=("no reference growth rate configured",),
        )
    W = mpf(growth_rate) if not isinstance(growth_rate, mpf) else growth_rate
    ms = sorted(dists_by_m)
    wp = 64 + max(d.precision_bits for d in dists_by_m.values())
    with workprec(wp):
        target = mp.log(W)
        means = [(m, mean(dists_by_m[m])) for m in ms]
        gaps = [(m, +abs(v - target)) for m, v in means]
        chain = _dyadic_tail(ms)
        gd = dict(gaps)
        tail = [gd[m] for m in chain]
        if len(tail) < 2:
            verdict = INCONCLUSIVE
        elif all(b <= a for a, b in zip(tail, tail[1:])):
            verdict = SUPPORTED
        elif all(b >= a for a, b in zip(tail, tail[1:])) and tail[-1] > tail[0]:
            verdict = CONTRADICTED
        else:
            verdict = INCONCLUSIVE
    return TrendReport(
        check_id="v6", l=l, m_grid=tuple(ms),
        series={"mean": tuple(means), "gap_to_log_rate": tuple(gaps)},
        estimator_id="dyadic-gap-monotone",
        thresholds={}, verdict=verdict, limit=target, notes=(),
    )


def _divergence_verdict(values, delta):
    # values on ascending dyadic checkpoints; growth by >= delta per step
    incs = [b - a for a, b in zip(values, values[1:])]
    if all(i >= delta for i in incs):
        return SUPPORTED
    if any(i <= -delta for i in incs):
        return CONTRADICTED
    return INCONCLUSIVE


def check_spectrum_divergence(log_spectra, delta=DIVERGENCE_DELTA):
    """Upper/lower divergence of log-spectra: max to +inf, min to -inf.

    Uses the last three dyadic checkpoints; each step must grow by at
    least ``delta``.  Returns (upper_report, lower_report).
    """
    by_m = {ls.m: ls for ls in log_spectra}
    usable = {m: ls for m, ls in by_m.items() if ls.points}
    if not usable:
        raise ValueError("no nonempty log spectra")
    chain = _dyadic_tail(sorted(usable))[-3:]
    thresholds = {"delta": delta}
    wp = 64 + max(ls.precision_bits for ls in usable.values())
    notes = ()
    if len(chain) < 3:
        notes = ("fewer than 3 dyadic checkpoints available",)
    with workprec(wp):
        maxs = [(m, usable[m].points[-1]) for m in sorted(usable)]
        mins = [(m, usable[m].points[0]) for m in sorted(usable)]
        ddelta = mpf(delta)
        if len(chain) >= 3:
            up = _divergence_verdict([dict(maxs)[m] for m in chain], ddelta)
            dn = _divergence_verdict([-dict(mins)[m] for m in chain], ddelta)
        else:
            up = dn = INCONCLUSIVE
    l = next(iter(usable.values())).l
    mk = lambda cid, series, verdict: TrendReport(
        check_id=cid, l=l, m_grid=tuple(sorted(usable)), series=series,
        estimator_id="dyadic-increment", thresholds=thresholds,
        verdict=verdict, notes=notes,
    )
    return (mk("2A", {"max_point": tuple(maxs)}, up),
            mk("2B", {"min_point": tuple(mins)}, dn))


def check_distribution_convergence(dists_by_m) -> TrendReport:
    """Sup distances between F_m and F_2m across dyadic levels."""
    ms = sorted(dists_by_m)
    levels = [(m, 2 * m) for m in ms if 2 * m in dists_by_m]
    if len(levels) < 3:
        raise ValueError("need distributions at m and 2m for >= 3 levels")
    seq = []
    for m, m2 in levels:
        d = sup_distance(dists_by_m[m], dists_by_m[m2])
        seq.append((m, mpf(d.numerator) / d.denominator))
    vals = [v for _, v in seq]
    if all(b <= a for a, b in zip(vals, vals[1:])):
        verdict = SUPPORTED
    elif all(b >= a for a, b in zip(vals, vals[1:])) and vals[-1] > vals[0]:
        verdict = CONTRADICTED
    else:
        verdict = INCONCLUSIVE
    return TrendReport(
        check_id="2C", l=None, m_grid=tuple(m for m, _ in levels),
        series={"sup_distance_m_2m": tuple(seq)},
        estimator_id="dyadic-sup-distance-monotone", thresholds={},
        verdict=verdict, notes=(),
    )


def check_tail_divergence(dists_by_m) -> TrendReport:
    """Both mean tails must grow in magnitude across dyadic levels."""
    ms = _dyadic_tail(sorted(dists_by_m))
    if len(ms) < 3:
        raise ValueError("need >= 3 dyadic levels")
    wp = 64 + max(d.precision_bits for d in dists_by_m.values())
    with workprec(wp):
        negs, poss = [], []
        for m in ms:
            ts = tail_sums(dists_by_m[m])
            negs.append((m, +abs(ts.neg)))
            poss.append((m, ts.pos))
        grow = lambda vals: all(b > a for a, b in zip(vals, vals[1:]))
        shrink = lambda vals: all(b < a for a, b in zip(vals, vals[1:]))
        nvals = [v for _, v in negs]
        pvals = [v for _, v in poss]
        sub = {}
        for name, vals in (("neg_tail", nvals), ("pos_tail", pvals)):
            if grow(vals):
                sub[name] = SUPPORTED
            elif shrink(vals):
                sub[name] = CONTRADICTED
            else:
                sub[name] = INCONCLUSIVE
    if all(v == SUPPORTED for v in sub.values()):
        verdict = SUPPORTED
    elif all(v == CONTRADICTED for v in sub.values()):
        verdict = CONTRADICTED
    else:
        verdict = INCONCLUSIVE
    return TrendReport(
        check_id="2D", l=None, m_grid=tuple(ms),
        series={"neg_tail_abs": tuple(negs), "pos_tail": tuple(poss)},
        estimator_id="dyadic-tail-monotone", thresholds={},
        verdict=verdict,
        notes=tuple("%s: %s" % (k, v) for k, v in sorted(sub.items())),
    )


def check_distribution_coincidence(dists_by_l) -> TrendReport:
    """Pairwise distances between the distributions of different l values.

    SUPPORTED when every pairwise sup distance shrinks along the m grid.
    """
    ls = sorted(dists_by_l)
    if len(ls) < 2:
        raise ValueError("need at least two l values")
    common = set.intersection(*(set(dists_by_l[l]) for l in ls))
    ms = sorted(common)
    if len(ms) < 2:
        raise ValueError("need at least two common m values")
    series = {}
    pair_verdicts = {}
    for i, l1 in enumerate(ls):
        for l2 in ls[i + 1:]:
            seq = []
            for m in ms:
                d = sup_distance(dists_by_l[l1][m], dists_by_l[l2][m])
                seq.append((m, mpf(d.numerator) / d.denominator))
            key = "l%d-l%d" % (l1, l2)
            series[key] = tuple(seq)
            vals = [v for _, v in seq]
            if all(b <= a for a, b in zip(vals, vals[1:])):
                pair_verdicts[key] = SUPPORTED
            elif all(b >= a for a, b in zip(vals, vals[1:])) and vals[-1] > vals[0]:
                pair_verdicts[key] = CONTRADICTED
            else:
                pair_verdicts[key] = INCONCLUSIVE
    if all(v == SUPPORTED for v in pair_verdicts.values()):
        verdict = SUPPORTED
    elif any(v == CONTRADICTED for v in pair_verdicts.values()):
        verdict = CONTRADICTED
    else:
        verdict = INCONCLUSIVE
    return TrendReport(
        check_id="2E", l=tuple(ls), m_grid=tuple(ms), series=series,
        estimator_id="pairwise-sup-distance-monotone", thresholds={},
        verdict=verdict,
        notes=tuple("%s: %s" % (k, v) for k, v in sorted(pair_verdicts.items())),
    )
