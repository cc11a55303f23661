"""JSON/CSV/SVG writers and readers for partitions and reports."""
import base64
import csv
import io
import json

import numpy as np

from egp.partition import DesignMeta, Partition


def encode_bits(mask):
    return base64.b64encode(np.packbits(np.asarray(mask, dtype=bool), bitorder="little").tobytes()).decode("ascii")


def decode_bits(text, n):
    raw = np.frombuffer(base64.b64decode(text), dtype=np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little").astype(bool)


def _plain(x):
    return int(x) if isinstance(x, (int, np.integer)) else x


def partition_to_dict(g, p, sig=None):
    d = {
        "n": g.n,
        "m": g.m,
        "q": p.meta.q,
        "theta": p.meta.theta,
        "seed": p.meta.seed,
        "algorithm": p.meta.algorithm,
        "egos": [_plain(g.ids[i]) for i in p.egos],
        "treatment": encode_bits(p.treatment),
        "id_remap": [_plain(x) for x in g.ids],
        "n1": p.n1,
        "n0": p.n0,
    }
    if sig is not None:
        d["sigma_summary"] = {
            "mean_t": sig.mean_sigma_treated,
            "mean_c": sig.mean_sigma_control,
            "r": sig.r_statistic,
        }
    d["load_warnings"] = g.summary.warnings()
    return d


def partition_from_dict(d):
    n = int(d["n"])
    lookup = {ext: i for i, ext in enumerate(d["id_remap"])}
    flags = np.zeros(n, dtype=bool)
    flags[[lookup[e] for e in d["egos"]]] = True
    meta = DesignMeta(algorithm=d["algorithm"], q=d["q"], theta=d["theta"], seed=d["seed"])
    return Partition(flags, decode_bits(d["treatment"], n), True, meta)


def dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def sigma_rows(g, sig):
    return [
        (_plain(g.ids[i]), "T" if t else "C", float(s))
        for i, t, s in zip(sig.ego_ids, sig.treated, sig.sigma)
    ]


def sigma_csv(g, sig):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("ego_external_id", "arm", "sigma"))
    w.writerows(sigma_rows(g, sig))
    return buf.getvalue()


def records_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("rep", "tau_hat", "n1", "n0", "se", "ci_low", "ci_high", "mean_sigma_t", "mean_sigma_c"))
    for i, r in enumerate(records):
        w.writerow((i, repr(r.tau_hat), r.n1, r.n0, repr(r.se), repr(r.ci_low), repr(r.ci_high),
                    repr(r.mean_sigma_t), repr(r.mean_sigma_c)))
    return buf.getvalue()


def sigma_svg(sig, title="", bins=20):
    """Overlaid per-arm histograms of ego exposure with dashed mean markers."""
    W, H = 640, 360
    left, right, top, bottom = 60, 20, 40, 50
    pw, ph = W - left - right, H - top - bottom
    edges = np.linspace(0.0, 1.0, bins + 1)
    arms = [("treatment", sig.treated, "#1f77b4"), ("control", ~sig.treated, "#ff7f0e")]
    fracs = []
    for _, mask, _ in arms:
        counts, _ = np.histogram(sig.sigma[mask], bins=edges)
        fracs.append(counts / max(1, mask.sum()))
    ymax = max(0.05, max(float(f.max()) for f in fracs) * 1.1)

    def x(v):
        return left + v * pw

    def y(v):
        return top + ph - v / ymax * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{x(t):.1f}" y="{top + ph + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 8}" text-anchor="middle" '
               'font-family="sans-serif" font-size="12">treated neighbor ratio</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" transform="rotate(-90 14 {top + ph / 2:.1f})" '
               'text-anchor="middle" font-family="sans-serif" font-size="12">fraction of egos</text>')
    bw = pw / bins
    for (name, mask, color), frac in zip(arms, fracs):
        for b, f in enumerate(frac):
            if f <= 0:
                continue
            out.append(f'<rect class="{name}" x="{x(edges[b]):.2f}" y="{y(f):.2f}" width="{bw:.2f}" '
                       f'height="{y(0) - y(f):.2f}" fill="{color}" fill-opacity="0.45" stroke="{color}"/>')
    means = (sig.mean_sigma_treated, sig.mean_sigma_control)
    for (name, _, color), mu in zip(arms, means):
        out.append(f'<line class="mean-{name}" x1="{x(mu):.2f}" y1="{top}" x2="{x(mu):.2f}" y2="{top + ph}" '
                   f'stroke="gray" stroke-dasharray="4 3"/>')
    for k, ((name, _, color), mu) in enumerate(zip(arms, means)):
        ly = top + 14 + 16 * k
        out.append(f'<rect x="{left + pw - 150}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{left + pw - 135}" y="{ly}" font-family="sans-serif" font-size="11">'
                   f'{name} (mean {mu:.3f})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
