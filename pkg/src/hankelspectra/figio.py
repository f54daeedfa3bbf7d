"""SVG figure rendering, manifests, and the command-line interface.

Figures are written as plain SVG 1.1 so tests can assert structure
directly (marker counts, monotone step paths, bounding boxes) instead of
diffing raster images.  Scatter plots place one marker per logarithmic
spectrum point at data position (ln|mu|, m); distribution plots draw the
right-continuous step polyline of an empirical distribution function.

Every numeric artifact (CSV, JSON, SVG coordinates) is serialised
deterministically, and experiment manifests record content hashes of the
files they cover, so any single-byte corruption is detectable.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from xml.sax.saxutils import escape

from mpmath import workprec

from . import __version__
from .coeffs import default_cache_dir, generate, parse_func_token
from .dist import distribution_csv, from_log_spectrum
from .hankel import signed_hankel
from .harness import (
    CONTRADICTED,
    check_distribution_coincidence,
    check_distribution_convergence,
    check_eigenvalue_product_rate,
    check_mean_trend,
    check_spectrum_divergence,
    check_tail_divergence,
    estimate_constant_factor,
    estimate_growth_rate,
    load_reference_constants,
    write_report,
)
from .spectra import compute_spectrum, log_spectrum, spectra_csv, split, sweep
from .mpnum import det_lu, to_decimal

CHECK_IDS = ("2A", "2B", "2C", "2D", "2E", "v2", "v3", "v5", "v6")


@dataclass(frozen=True)
class FigureConfig:
    width: int = 1200
    height: int = 800
    margin: int = 70
    marker_radius: float = 2.0
    x_range: tuple | None = None    # (lo, hi) floats, or None for auto
    y_range: tuple | None = None
    marker_color: str = "#303030"
    electron_color: str = "#1f6fb4"
    train_color: str = "#c0392b"

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("figure dimensions must be positive")
        for rng in (self.x_range, self.y_range):
            if rng is not None:
                lo, hi = float(rng[0]), float(rng[1])
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError("fixed axis range must be finite and ordered")


def _auto_range(vals, fixed):
    if fixed is not None:
        return float(fixed[0]), float(fixed[1])
    lo, hi = min(vals), max(vals)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Canvas:
    """Tiny deterministic SVG writer with linear data-to-pixel transforms."""

    def __init__(self, cfg, xlo, xhi, ylo, yhi):
        self.cfg = cfg
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.parts = []

    def px(self, x):
        c = self.cfg
        return c.margin + (x - self.xlo) / (self.xhi - self.xlo) * (c.width - 2 * c.margin)

    def py(self, y):
        c = self.cfg
        return c.height - c.margin - (y - self.ylo) / (self.yhi - self.ylo) * (c.height - 2 * c.margin)

    def add(self, s):
        self.parts.append(s)

    def axes(self, xlabel, ylabel):
        c = self.cfg
        x0, x1 = c.margin, c.width - c.margin
        y0, y1 = c.height - c.margin, c.margin
        self.add('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#000" stroke-width="1"/>'
                 % (x0, y0, x1, y0))
        self.add('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#000" stroke-width="1"/>'
                 % (x0, y0, x0, y1))
        for i in range(6):
            xv = self.xlo + (self.xhi - self.xlo) * i / 5
            yv = self.ylo + (self.yhi - self.ylo) * i / 5
            xp, yp = self.px(xv), self.py(yv)
            self.add('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#000" stroke-width="1"/>'
                     % (xp, y0, xp, y0 + 5))
            self.add('<text x="%.2f" y="%.2f" font-size="12" text-anchor="middle">%s</text>'
                     % (xp, y0 + 20, escape("%.4g" % xv)))
            self.add('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#000" stroke-width="1"/>'
                     % (x0 - 5, yp, x0, yp))
            self.add('<text x="%.2f" y="%.2f" font-size="12" text-anchor="end">%s</text>'
                     % (x0 - 8, yp + 4, escape("%.4g" % yv)))
        self.add('<text x="%.2f" y="%.2f" font-size="14" text-anchor="middle">%s</text>'
                 % ((x0 + x1) / 2, c.height - 15, escape(xlabel)))
        self.add('<text x="%.2f" y="%.2f" font-size="14" text-anchor="middle" transform="rotate(-90 15 %.2f)">%s</text>'
                 % (15.0, (y0 + y1) / 2, (y0 + y1) / 2, escape(ylabel)))

    def tostring(self):
        c = self.cfg
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                'width="%d" height="%d" viewBox="0 0 %d %d">\n'
                % (c.width, c.height, c.width, c.height))
        return head + "\n".join(self.parts) + "\n</svg>\n"


def render_spectra(records, cfg: FigureConfig, path: str,
                   split_policy: str | None = None, split_value=None) -> str:
    """Scatter plot of logarithmic spectra: marker at (ln|mu|, m).

    With a split policy, the lower part is drawn in the electron colour
    and the upper part in the train colour.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to render")
    pts = []   # (x, m, class)
    for rec in records:
        ls = log_spectrum(rec)
        if not ls.points:
            continue
        if split_policy:
            sp = split(ls, policy=split_policy, value=split_value)
            pts.extend((float(x), ls.m, "electron") for x in sp.electrons)
            pts.extend((float(x), ls.m, "train") for x in sp.trains)
        else:
            pts.extend((float(x), ls.m, "pt") for x in ls.points)
    if not pts:
        raise ValueError("all eigenvalues were zeros-at-precision; nothing to draw")
    xlo, xhi = _auto_range([p[0] for p in pts], cfg.x_range)
    ylo, yhi = _auto_range([p[1] for p in pts], cfg.y_range)
    cv = _Canvas(cfg, xlo, xhi, ylo, yhi)
    cv.axes("log magnitude", "matrix size")
    colors = {"pt": cfg.marker_color, "electron": cfg.electron_color,
              "train": cfg.train_color}
    for x, m, cls in pts:
        cv.add('<circle class="%s" cx="%.2f" cy="%.2f" r="%.2f" fill="%s"/>'
               % (cls, cv.px(x), cv.py(m), cfg.marker_radius, colors[cls]))
    _write_text(path, cv.tostring())
    return path


def render_distribution(dist, cfg: FigureConfig, path: str) -> str:
    """Right-continuous step plot of an empirical distribution function."""
    if not dist.jumps:
        raise ValueError("empty distribution")
    xs = [float(x) for x in dist.jumps]
    xlo, xhi = _auto_range(xs, cfg.x_range)
    ylo, yhi = (0.0, 1.0) if cfg.y_range is None else \
        (float(cfg.y_range[0]), float(cfg.y_range[1]))
    cv = _Canvas(cfg, xlo, xhi, ylo, yhi)
    cv.axes("x", "cumulative weight")
    m = dist.m
    coords = [(xlo, 0.0)]
    level = 0
    for i, x in enumerate(xs):
        level += 1
        if i + 1 < len(xs) and xs[i + 1] == x:
            continue
        coords.append((x, coords[-1][1]))
        coords.append((x, level / m))
    coords.append((xhi, coords[-1][1]))
    path_pts = " ".join("%.2f,%.2f" % (cv.px(x), cv.py(y)) for x, y in coords)
    cv.add('<polyline class="step" fill="none" stroke="#1f6fb4" '
           'stroke-width="1.5" points="%s"/>' % path_pts)
    _write_text(path, cv.tostring())
    return path


def _write_text(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class Manifest:
    tool_version: str
    function_id: str
    spec_hash: str
    l_list: tuple
    m_grid: tuple
    precision_policy: str
    files: tuple   # ((relative path, sha256 hex), ...)


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(function_id, spec_hash, l_list, m_grid, precision_policy,
                   files, base_dir=".") -> Manifest:
    entries = tuple(
        (os.path.relpath(f, base_dir), _sha256_file(f)) for f in sorted(files)
    )
    return Manifest(tool_version=__version__, function_id=function_id,
                    spec_hash=spec_hash, l_list=tuple(l_list),
                    m_grid=tuple(m_grid), precision_policy=precision_policy,
                    files=entries)


def write_manifest(manifest: Manifest, path: str):
    doc = {
        "tool_version": manifest.tool_version,
        "function_id": manifest.function_id,
        "spec_hash": manifest.spec_hash,
        "l_list": list(manifest.l_list),
        "m_grid": list(manifest.m_grid),
        "precision_policy": manifest.precision_policy,
        "files": [{"path": p, "sha256": h} for p, h in manifest.files],
    }
    _write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def verify_manifest(path: str) -> list:
    """Re-hash every referenced file; returns a list of mismatch messages."""
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    problems = []
    for entry in doc.get("files", []):
        fpath = os.path.join(base, entry["path"])
        if not os.path.exists(fpath):
            problems.append("missing file: %s" % entry["path"])
        elif _sha256_file(fpath) != entry["sha256"]:
            problems.append("hash mismatch: %s" % entry["path"])
    return problems


# ---------------------------------------------------------------------------
# CLI


def _digits_to_bits(digits: int) -> int:
    return max(256, math.ceil(digits * math.log2(10)) + 64)


def _add_common(p, need_func=True):
    if need_func:
        p.add_argument("--func", required=True,
                       help="function token, e.g. geometric:1, exponential, "
                            "rational2:2,1, catalan, user-moments:v1,v2,..., "
                            "zeta-star, analytic-config:/path.json")
    p.add_argument("--l", default="1",
                   help="first matrix index (comma list allowed where "
                        "a check needs several)")
    p.add_argument("--digits", type=int, default=30,
                   help="target agreement digits for eigenvalues")
    p.add_argument("--prec-cap", type=int, default=8192,
                   help="adaptive precision cap in bits")
    p.add_argument("--cache-dir", default=None,
                   help="coefficient cache directory (default: $%s)"
                        % "HANKELSPECTRA_CACHE")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="hankelspectra",
        description="high-precision signed-Hankel spectrum laboratory",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="generate or extend a coefficient stream")
    _add_common(p)
    p.add_argument("--m-max", type=int, required=True,
                   help="largest matrix size the stream must cover")

    p = sub.add_parser("spectrum", help="spectrum of a single (l, m) matrix")
    _add_common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("sweep", help="spectra for m = 1..m-max")
    _add_common(p)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("dist", help="distribution of one logarithmic spectrum")
    _add_common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("check", help="run a trend check over sweep outputs")
    p.add_argument("check_id", choices=CHECK_IDS)
    _add_common(p)
    p.add_argument("--m-max", type=int, default=64)
    p.add_argument("--wl-file", default=None,
                   help="JSON file of reference growth rates per l")
    p.add_argument("--format", choices=("json",), default="json")

    p = sub.add_parser("figure", help="render an SVG figure")
    p.add_argument("kind", choices=("spectra", "dist"))
    _add_common(p)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--policy", default=None,
                   help="split policy: largest-gap, threshold:C, quantile:Q")
    p.add_argument("--format", choices=("svg",), default="svg")
    return ap


def _parse_l_list(s):
    return [int(tok) for tok in str(s).split(",") if tok != ""]


def _parse_policy(s):
    if s is None:
        return None, None
    head, _, tail = s.partition(":")
    if head not in ("largest-gap", "threshold", "quantile"):
        raise ValueError("unknown split policy %r" % s)
    return head, (tail or None)


def _make_stream(args, l, m_needed):
    spec = parse_func_token(args.func)
    bits = _digits_to_bits(args.digits)
    cache = args.cache_dir or default_cache_dir()
    return generate(spec, l + m_needed - 1, bits, cache_dir=cache)


def _out_handle(args):
    if args.out:
        d = os.path.dirname(args.out)
        if d:
            os.makedirs(d, exist_ok=True)
        return open(args.out, "w")
    return None


def _emit(args, text):
    fh = _out_handle(args)
    if fh is None:
        sys.stdout.write(text)
    else:
        with fh:
            fh.write(text)


def _record_json(rec):
    with workprec(rec.precision_used):
        return {
            "l": rec.l, "m": rec.m, "function": rec.function_id,
            "precision_bits": rec.precision_used,
            "target_digits": rec.target_digits,
            "det": to_decimal(rec.det, rec.precision_used),
            "eigenvalues": [to_decimal(mu, rec.precision_used)
                            for mu in rec.eigenvalues],
            "zero_count": rec.zero_count,
        }


def _dyadic_grid(m_max, floor=2):
    grid = []
    m = m_max
    while m >= floor:
        grid.append(m)
        if m % 2:
            break
        m //= 2
    return sorted(grid)


def _cmd_coeffs(args):
    ls = _parse_l_list(args.l)
    stream = _make_stream(args, max(ls), args.m_max)
    lines = [
        "function: %s" % stream.spec.name,
        "spec_hash: %s" % stream.spec.spec_hash(),
        "max_index: %d" % stream.max_index,
        "precision_bits: %d" % stream.precision_bits,
        "provenance: %s" % stream.provenance,
    ]
    if args.out:
        recs = [json.dumps({"k": k,
                            "v": to_decimal(v, stream.precision_bits),
                            "bits": stream.precision_bits}, sort_keys=True)
                for k, v in enumerate(stream.values)]
        _emit(args, "\n".join(recs) + "\n")
        print("\n".join(lines))
    else:
        print("\n".join(lines))
    return 0


def _cmd_spectrum(args):
    l = _parse_l_list(args.l)[0]
    stream = _make_stream(args, l, args.m)
    rec = compute_spectrum(stream, l, args.m, args.digits,
                           prec_cap=args.prec_cap)
    if args.format == "json":
        _emit(args, json.dumps(_record_json(rec), sort_keys=True, indent=2) + "\n")
    else:
        buf = io.StringIO()
        spectra_csv([rec], buf)
        _emit(args, buf.getvalue())
    return 0


def _cmd_sweep(args):
    l = _parse_l_list(args.l)[0]
    stream = _make_stream(args, l, args.m_max)
    result = sweep(stream, l, range(args.m_min, args.m_max + 1), args.digits,
                   jobs=args.jobs, prec_cap=args.prec_cap)
    for m, err in sorted(result.failures.items()):
        print("m=%d failed: %s" % (m, err), file=sys.stderr)
    if args.format == "json":
        doc = [_record_json(r) for r in result.records]
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        buf = io.StringIO()
        spectra_csv(result.records, buf)
        _emit(args, buf.getvalue())
    if args.out:
        man = build_manifest(
            stream.spec.name, stream.spec.spec_hash(), [l],
            [r.m for r in result.records],
            "digits=%d cap=%d" % (args.digits, args.prec_cap),
            [args.out], base_dir=os.path.dirname(args.out) or ".",
        )
        write_manifest(man, args.out + ".manifest.json")
    return 0 if not result.failures else 2


def _cmd_dist(args):
    l = _parse_l_list(args.l)[0]
    stream = _make_stream(args, l, args.m)
    rec = compute_spectrum(stream, l, args.m, args.digits,
                           prec_cap=args.prec_cap)
    F = from_log_spectrum(log_spectrum(rec))
    if args.format == "json":
        doc = {
            "l": l, "m": args.m,
            "jumps": [to_decimal(x, F.precision_bits) for x in F.jumps],
            "weight_per_jump": "1/%d" % F.m,
            "missing_mass": str(F.missing_mass),
        }
        _emit(args, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        buf = io.StringIO()
        distribution_csv(F, buf)
        _emit(args, buf.getvalue())
    return 0


def _records_for(args, l, ms):
    stream = _make_stream(args, l, max(ms))
    result = sweep(stream, l, ms, args.digits, jobs=args.jobs,
                   prec_cap=args.prec_cap)
    if result.failures:
        raise RuntimeError(
            "sweep failures at m=%s" % sorted(result.failures)
        )
    return result.records


def _dists_for(records):
    return {rec.m: from_log_spectrum(log_spectrum(rec)) for rec in records}


def _cmd_check(args):
    cid = args.check_id
    ls = _parse_l_list(args.l)
    l = ls[0]
    constants = load_reference_constants(args.wl_file) if args.wl_file else None
    W = constants.growth_rate(l) if constants else None

    if cid in ("v2", "v3"):
        stream = _make_stream(args, l, args.m_max)
        bits = _digits_to_bits(args.digits)
        dets = []
        for m in range(1, args.m_max + 1):
            dets.append((m, det_lu(signed_hankel(stream, l, m).matrix, bits)))
        if cid == "v3":
            report = replace(estimate_growth_rate(dets), check_id="v3", l=l)
        else:
            report = replace(estimate_constant_factor(dets, W),
                             check_id="v2", l=l)
    elif cid == "v5":
        records = _records_for(args, l, range(1, args.m_max + 1))
        report = check_eigenvalue_product_rate(records)
    elif cid == "v6":
        records = _records_for(args, l, _dyadic_grid(args.m_max))
        report = check_mean_trend(_dists_for(records), W, l=l)
    elif cid in ("2A", "2B"):
        records = _records_for(args, l, _dyadic_grid(args.m_max))
        upper, lower = check_spectrum_divergence(
            [log_spectrum(r) for r in records])
        report = upper if cid == "2A" else lower
    elif cid == "2C":
        records = _records_for(args, l, _dyadic_grid(args.m_max, floor=4))
        report = replace(check_distribution_convergence(_dists_for(records)),
                         l=l)
    elif cid == "2D":
        records = _records_for(args, l, _dyadic_grid(args.m_max))
        report = replace(check_tail_divergence(_dists_for(records)), l=l)
    else:   # 2E
        if len(ls) < 2:
            raise ValueError("check 2E needs --l with at least two values, "
                             "e.g. --l 1,2")
        by_l = {}
        for li in ls:
            records = _records_for(args, li, _dyadic_grid(args.m_max))
            by_l[li] = _dists_for(records)
        report = check_distribution_coincidence(by_l)

    buf = io.StringIO()
    write_report(report, buf)
    _emit(args, buf.getvalue())
    print("check %s: %s" % (cid, report.verdict), file=sys.stderr)
    return 1 if report.verdict == CONTRADICTED else 0


def _cmd_figure(args):
    l = _parse_l_list(args.l)[0]
    cfg = FigureConfig()
    policy, pvalue = _parse_policy(args.policy)
    out = args.out
    if args.kind == "spectra":
        if not args.m_max:
            raise ValueError("figure spectra needs --m-max")
        records = _records_for(args, l, range(1, args.m_max + 1))
        out = out or "spectra_l%d_m%d.svg" % (l, args.m_max)
        render_spectra(records, cfg, out, split_policy=policy,
                       split_value=pvalue)
    else:
        if not args.m:
            raise ValueError("figure dist needs --m")
        stream = _make_stream(args, l, args.m)
        rec = compute_spectrum(stream, l, args.m, args.digits,
                               prec_cap=args.prec_cap)
        F = from_log_spectrum(log_spectrum(rec))
        out = out or "dist_l%d_m%d.svg" % (l, args.m)
        render_distribution(F, cfg, out)
    man = build_manifest(args.func, parse_func_token(args.func).spec_hash(),
                         [l], [args.m or args.m_max],
                         "digits=%d cap=%d" % (args.digits, args.prec_cap),
                         [out], base_dir=os.path.dirname(out) or ".")
    write_manifest(man, out + ".manifest.json")
    print(out)
    return 0


_COMMANDS = {
    "coeffs": _cmd_coeffs,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "dist": _cmd_dist,
    "check": _cmd_check,
    "figure": _cmd_figure,
}


def cli(argv=None) -> int:
    """Entry point: exit 0 on success, 1 on CONTRADICTED checks, 2 on errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 2
    except Exception as exc:   # CLI boundary: report, do not traceback
        print("error: %s" % exc, file=sys.stderr)
        return 2


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
