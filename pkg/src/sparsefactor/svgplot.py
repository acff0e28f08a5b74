"""Minimal self-contained SVG 1.1 figures for benchmark reports."""

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=30, bottom=50)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


def _f(x):
    return f"{x:.2f}"


def _header(title):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>\n'
    )


def _axis_label(text, x, y, rotate=False):
    tr = f' transform="rotate(-90 {x} {y})"' if rotate else ""
    return (f'<text x="{x}" y="{y}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12"{tr}>{text}</text>\n')


def mse_strip_svg(report, clip_factor=4.0):
    """Per-method strip of normalized test MSE with a median tick.

    Points beyond clip_factor times the overall median are clipped to the top
    edge and counted in an annotation, so a few wild replicates cannot flatten
    the plot.
    """
    methods = [m for m in report.methods if any(r.method == m for r in report.rows)]
    values = {m: sorted(r.normalized_test_mse for r in report.rows if r.method == m)
              for m in methods}
    all_vals = sorted(v for vs in values.values() for v in vs)
    if not all_vals:
        return _header("normalized test MSE (no data)") + "</svg>\n"
    overall_med = all_vals[len(all_vals) // 2]
    y_max = max(1.5, clip_factor * overall_med)
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"] + 10

    def ypix(v):
        return y0 - (min(v, y_max) / y_max) * (y0 - y1)

    out = [_header("normalized test MSE")]
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>\n')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>\n')
    for tick in range(5):
        v = y_max * tick / 4
        out.append(f'<line x1="{x0 - 4}" y1="{_f(ypix(v))}" x2="{x0}" '
                   f'y2="{_f(ypix(v))}" stroke="black"/>\n')
        out.append(f'<text x="{x0 - 8}" y="{_f(ypix(v) + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{v:.2f}</text>\n')
    slot = (x1 - x0) / max(1, len(methods))
    for i, m in enumerate(methods):
        cx = x0 + slot * (i + 0.5)
        color = PALETTE[i % len(PALETTE)]
        vs = values[m]
        clipped = sum(1 for v in vs if v > y_max)
        for j, v in enumerate(vs):
            # deterministic horizontal jitter from the rank
            dx = ((j * 29) % 21 - 10) * slot / 60.0
            out.append(f'<circle cx="{_f(cx + dx)}" cy="{_f(ypix(v))}" r="3" '
                       f'fill="{color}" fill-opacity="0.55"/>\n')
        med = vs[len(vs) // 2] if len(vs) % 2 else 0.5 * (
            vs[len(vs) // 2 - 1] + vs[len(vs) // 2])
        out.append(f'<line x1="{_f(cx - slot / 4)}" y1="{_f(ypix(med))}" '
                   f'x2="{_f(cx + slot / 4)}" y2="{_f(ypix(med))}" '
                   f'stroke="{color}" stroke-width="2.5"/>\n')
        if clipped:
            out.append(f'<text x="{_f(cx)}" y="{y1 - 2}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="11" '
                       f'fill="{color}">{clipped}</text>\n')
        out.append(_axis_label(m, cx, y0 + 18))
    out.append(_axis_label("normalized test MSE", 18, (y0 + y1) / 2, rotate=True))
    out.append("</svg>\n")
    return "".join(out)


def roc_scatter_svg(report):
    """Per-replicate (FPR, TPR) scatter at the CV-chosen hyperparameters."""
    methods = [m for m in report.methods if any(r.method == m for r in report.rows)]
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"] - 90
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"] + 10

    def xpix(v):
        return x0 + v * (x1 - x0)

    def ypix(v):
        return y0 - v * (y0 - y1)

    out = [_header("selection ROC (per replicate)")]
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>\n')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>\n')
    for tick in range(5):
        v = tick / 4
        out.append(f'<text x="{_f(xpix(v))}" y="{y0 + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{v:.2f}</text>\n')
        out.append(f'<text x="{x0 - 8}" y="{_f(ypix(v) + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{v:.2f}</text>\n')
    for i, m in enumerate(methods):
        color = PALETTE[i % len(PALETTE)]
        for r in report.rows:
            if r.method != m:
                continue
            out.append(f'<circle cx="{_f(xpix(r.fpr))}" cy="{_f(ypix(r.tpr))}" '
                       f'r="3.5" fill="{color}" fill-opacity="0.6"/>\n')
        ly = y1 + 14 + 16 * i
        out.append(f'<circle cx="{x1 + 16}" cy="{ly - 4}" r="4" fill="{color}"/>\n')
        out.append(f'<text x="{x1 + 26}" y="{ly}" font-family="sans-serif" '
                   f'font-size="12">{m}</text>\n')
    out.append(_axis_label("false positive rate", (x0 + x1) / 2, HEIGHT - 14))
    out.append(_axis_label("true positive rate", 18, (y0 + y1) / 2, rotate=True))
    out.append("</svg>\n")
    return "".join(out)
