"""Parametric part recipes: builders plus geometric verifiers.

A recipe builds one part's triangle surface from the shape layout and a
sampled parameter dict. Its verifier checks a generated point cloud (in
the raw assembly frame) actually exhibits the family's geometry; the
test suite runs one verifier per lexicon entry.
"""
from __future__ import annotations

import numpy as np

from . import surfaces as sf


# ---------------------------------------------------------------- measures

def _extent(pts, axis):
    return float(pts[:, axis].max() - pts[:, axis].min())


def _slice(pts, axis, lo, hi):
    sel = (pts[:, axis] >= lo) & (pts[:, axis] <= hi)
    return pts[sel]


def _fit_y_of_z(pts):
    """Least-squares y = a + b*z; returns (slope b, residual std)."""
    z = pts[:, 2]
    A = np.stack([np.ones_like(z), z], axis=1)
    coef, *_ = np.linalg.lstsq(A, pts[:, 1], rcond=None)
    resid = pts[:, 1] - A @ coef
    return float(coef[1]), float(resid.std())


def _circle_fit(u, v):
    """Kasa circle fit; returns (cu, cv, r, rms residual of radii)."""
    A = np.stack([u, v, np.ones_like(u)], axis=1)
    b = -(u**2 + v**2)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cu, cv = -sol[0] / 2, -sol[1] / 2
    r2 = cu**2 + cv**2 - sol[2]
    r = float(np.sqrt(max(r2, 0.0)))
    d = np.sqrt((u - cu) ** 2 + (v - cv) ** 2)
    return float(cu), float(cv), r, float(np.sqrt(((d - r) ** 2).mean()))


def vertical_cylinder_residual(pts) -> float:
    """RMS radial residual of the best-fit vertical cylinder."""
    return _circle_fit(pts[:, 0], pts[:, 1])[3]


def _quadrant_counts(pts_slice, center_xy):
    dx = pts_slice[:, 0] - center_xy[0]
    dy = pts_slice[:, 1] - center_xy[1]
    return np.array(
        [
            ((dx >= 0) & (dy >= 0)).sum(),
            ((dx < 0) & (dy >= 0)).sum(),
            ((dx < 0) & (dy < 0)).sum(),
            ((dx >= 0) & (dy < 0)).sum(),
        ]
    )


def _hist_gaps(vals, bins=24):
    """Count empty-bin runs strictly inside the occupied range."""
    if len(vals) == 0:
        return 0
    hist, _ = np.histogram(vals, bins=bins)
    occ = np.flatnonzero(hist > 0)
    if len(occ) == 0:
        return 0
    inner = hist[occ[0] : occ[-1] + 1]
    gaps = 0
    in_gap = False
    for h in inner:
        if h == 0 and not in_gap:
            gaps += 1
            in_gap = True
        elif h > 0:
            in_gap = False
    return gaps


def _angular_gaps(pts_slice, center_xy, bins=24):
    ang = np.arctan2(pts_slice[:, 1] - center_xy[1], pts_slice[:, 0] - center_xy[0])
    hist, _ = np.histogram(ang, bins=bins, range=(-np.pi, np.pi))
    # circular: count empty runs over the ring
    occ = hist > 0
    if occ.all():
        return 0
    if not occ.any():
        return 0
    # rotate so a gap is at the start, then count runs
    start = int(np.flatnonzero(~occ)[0])
    rolled = np.roll(occ, -start)
    gaps = 0
    in_gap = False
    for o in rolled:
        if not o and not in_gap:
            gaps += 1
            in_gap = True
        elif o:
            in_gap = False
    return gaps


def _radial_spread(pts_slice, center_xy):
    if len(pts_slice) == 0:
        return 0.0
    d = np.sqrt(
        (pts_slice[:, 0] - center_xy[0]) ** 2 + (pts_slice[:, 1] - center_xy[1]) ** 2
    )
    return float(d.mean())


def _close(a, b, rel):
    return abs(a - b) <= rel * max(abs(b), 1e-9)


# ------------------------------------------------------------- chair backs

def _back_box(layout):
    bw = layout["seat_w"]
    z0 = layout["seat_h"]
    y = -layout["seat_d"] / 2
    return bw, z0, y


def build_panel_back(layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, z0, y = _back_box(layout)
    tilt = p.get("tilt", 0.0)
    lo = lambda x: (x, y, z0)
    hi = lambda x: (x, y - tilt * bh, z0 + bh)
    return sf.quad(lo(-bw / 2), lo(bw / 2), hi(bw / 2), hi(-bw / 2))


def verify_panel_back(pts, layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    slope, resid = _fit_y_of_z(pts)
    return (
        resid < 0.015
        and abs(slope + p.get("tilt", 0.0)) < 0.06
        and _close(_extent(pts, 0), bw, 0.08)
        and _close(_extent(pts, 2), bh, 0.08)
    )


def build_arc_back(layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, z0, y = _back_box(layout)
    half = p["half_angle"]
    radius = bw / (2 * np.sin(half))
    return sf.arc_panel(radius, half, (0.0, y), z0, z0 + bh)


def verify_arc_back(pts, layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    radius = bw / (2 * np.sin(p["half_angle"]))
    _, _, r, resid = _circle_fit(pts[:, 0], pts[:, 1])
    return resid < 0.02 and _close(r, radius, 0.1)


def build_arch_back(layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, z0, y = _back_box(layout)
    n = 16
    xs = np.linspace(-bw / 2, bw / 2, n + 1)
    tris = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        xm = (x0 + x1) / 2
        h = bh * (0.35 + 0.65 * np.sqrt(max(0.0, 1 - (2 * xm / bw) ** 2)))
        tris.append(sf.quad((x0, y, z0), (x1, y, z0), (x1, y, z0 + h), (x0, y, z0 + h)))
    return sf.merge(*tris)


def verify_arch_back(pts, layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, resid = _fit_y_of_z(pts)
    mid = pts[np.abs(pts[:, 0]) < bw * 0.15]
    edge = pts[np.abs(pts[:, 0]) > bw * 0.38]
    if len(mid) == 0 or len(edge) == 0:
        return False
    return resid < 0.015 and mid[:, 2].max() - edge[:, 2].max() > 0.2 * bh


def build_slat_back(layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, z0, y = _back_box(layout)
    n = int(p["n_slats"])
    fill = p["fill"]
    stile_w = 0.05 * bw
    t = 0.02
    parts = [
        sf.box((-bw / 2, y - t / 2, z0), (-bw / 2 + stile_w, y + t / 2, z0 + bh)),
        sf.box((bw / 2 - stile_w, y - t / 2, z0), (bw / 2, y + t / 2, z0 + bh)),
    ]
    cell = bh / n
    slat_h = cell * fill
    for i in range(n):
        zc = z0 + (i + 0.5) * cell
        parts.append(
            sf.box(
                (-bw / 2 + stile_w, y - t / 2, zc - slat_h / 2),
                (bw / 2 - stile_w, y + t / 2, zc + slat_h / 2),
            )
        )
    return sf.merge(*parts)


def verify_slat_back(pts, layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    n = int(p["n_slats"])
    mid = pts[np.abs(pts[:, 0] - pts[:, 0].mean()) < bw * 0.25]
    return _hist_gaps(mid[:, 2], bins=6 * n) >= n - 1


def build_bar_back(layout, p):
    bw = layout["seat_w"] * p["width_frac"]
    bh = layout["back_h"] * p["height_frac"]
    _, z0, y = _back_box(layout)
    n = int(p["n_bars"])
    bar_w = p["bar_w"]
    t = 0.02
    rail_h = 0.08 * bh
    parts = [
        sf.box((-bw / 2, y - t / 2, z0 + bh - rail_h), (bw / 2, y + t / 2, z0 + bh)),
        sf.box((-bw / 2, y - t / 2, z0), (bw / 2, y + t / 2, z0 + rail_h)),
    ]
    xs = np.linspace(-bw / 2 + bar_w, bw / 2 - bar_w, n)
    for xc in xs:
        parts.append(
            sf.box((xc - bar_w / 2, y - t / 2, z0 + rail_h), (xc + bar_w / 2, y + t / 2, z0 + bh - rail_h))
        )
    return sf.merge(*parts)


def verify_bar_back(pts, layout, p):
    bh = _extent(pts, 2)
    z0 = pts[:, 2].min()
    n = int(p["n_bars"])
    mid = pts[(pts[:, 2] > z0 + 0.2 * bh) & (pts[:, 2] < z0 + 0.8 * bh)]
    return _hist_gaps(mid[:, 0], bins=6 * n) >= n - 1


# ------------------------------------------------------------- chair seats

def build_slab_seat(layout, p):
    w = layout["seat_w"] * p.get("w_frac", 1.0)
    d = layout["seat_d"] * p.get("d_frac", 1.0)
    t = p["thickness"]
    z1 = layout["seat_h"]
    return sf.box((-w / 2, -d / 2, z1 - t), (w / 2, d / 2, z1))


def verify_slab_seat(pts, layout, p):
    w = layout["seat_w"] * p.get("w_frac", 1.0)
    d = layout["seat_d"] * p.get("d_frac", 1.0)
    return (
        _close(_extent(pts, 2), p["thickness"], 0.25)
        and _close(_extent(pts, 0), w, 0.06)
        and _close(_extent(pts, 1), d, 0.06)
    )


def build_square_seat(layout, p):
    side = (layout["seat_w"] + layout["seat_d"]) / 2
    t = p["thickness"]
    z1 = layout["seat_h"]
    return sf.box((-side / 2, -side / 2, z1 - t), (side / 2, side / 2, z1))


def verify_square_seat(pts, layout, p):
    return _close(_extent(pts, 0), _extent(pts, 1), 0.05) and _close(
        _extent(pts, 2), p["thickness"], 0.25
    )


def build_round_seat(layout, p):
    r = min(layout["seat_w"], layout["seat_d"]) / 2 * p["r_frac"]
    t = p["thickness"]
    return sf.elliptic_slab((0, 0, layout["seat_h"] - t), r, r, t)


def verify_round_seat(pts, layout, p):
    r = min(layout["seat_w"], layout["seat_d"]) / 2 * p["r_frac"]
    cx, cy = pts[:, 0].mean(), pts[:, 1].mean()
    corner = (np.abs(pts[:, 0] - cx) > 0.75 * r) & (np.abs(pts[:, 1] - cy) > 0.75 * r)
    d = np.sqrt((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2)
    return corner.mean() < 0.02 and _close(d.max(), r, 0.08)


def build_dished_seat(layout, p):
    w, d = layout["seat_w"], layout["seat_d"]
    sag = p["sag"]
    z1 = layout["seat_h"]
    n = 14
    xs = np.linspace(-w / 2, w / 2, n + 1)
    tris = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        z_at = lambda x: z1 - sag * (1 - (2 * x / w) ** 2)
        tris.append(
            sf.quad(
                (x0, -d / 2, z_at(x0)),
                (x1, -d / 2, z_at(x1)),
                (x1, d / 2, z_at(x1)),
                (x0, d / 2, z_at(x0)),
            )
        )
    return sf.merge(*tris)


def verify_dished_seat(pts, layout, p):
    w = layout["seat_w"]
    mid = pts[np.abs(pts[:, 0]) < 0.12 * w]
    edge = pts[np.abs(pts[:, 0]) > 0.42 * w]
    if len(mid) == 0 or len(edge) == 0:
        return False
    return edge[:, 2].mean() - mid[:, 2].mean() > 0.4 * p["sag"]


def build_padded_seat(layout, p):
    w, d = layout["seat_w"], layout["seat_d"]
    base_t, cushion_t, inset = p["base_t"], p["cushion_t"], p["inset"]
    z1 = layout["seat_h"]
    base = sf.box((-w / 2, -d / 2, z1 - base_t - cushion_t), (w / 2, d / 2, z1 - cushion_t))
    cw, cd = w * (1 - inset), d * (1 - inset)
    cushion = sf.box((-cw / 2, -cd / 2, z1 - cushion_t), (cw / 2, cd / 2, z1))
    return sf.merge(base, cushion)


def verify_padded_seat(pts, layout, p):
    z0, z1 = pts[:, 2].min(), pts[:, 2].max()
    total = z1 - z0
    top = pts[pts[:, 2] > z1 - 0.6 * p["cushion_t"]]
    bottom = pts[pts[:, 2] < z0 + 0.6 * p["base_t"]]
    if len(top) < 10 or len(bottom) < 10:
        return False
    return (
        _close(total, p["base_t"] + p["cushion_t"], 0.2)
        and _extent(top, 0) < _extent(bottom, 0) * (1 - p["inset"] * 0.5)
    )


# ---------------------------------------------------------------- armrests

def _arm_geometry(layout, p):
    arm_h = p["arm_h"]
    rail_len = layout["seat_d"] * 0.75
    y0 = -layout["seat_d"] / 2 + 0.05
    x_off = layout["seat_w"] / 2 + 0.03
    z_rail = layout["seat_h"] + arm_h
    return arm_h, rail_len, y0, x_off, z_rail


def build_rail_arms(layout, p):
    arm_h, rail_len, y0, x_off, z_rail = _arm_geometry(layout, p)
    rail_w = p["rail_w"]
    slope = p.get("slope", 0.0)
    round_profile = p.get("round_profile", 0.0) >= 0.5
    parts = []
    for side in (-1, 1):
        x = side * x_off
        z_front = z_rail - slope * rail_len
        if round_profile:
            parts.append(
                sf.tube_between((x, y0, z_rail), (x, y0 + rail_len, z_front), rail_w / 2, cap_ends=True)
            )
        else:
            n = 6
            ys = np.linspace(y0, y0 + rail_len, n + 1)
            for ya, yb in zip(ys[:-1], ys[1:]):
                za = z_rail + (ya - y0) / rail_len * (z_front - z_rail)
                zb = z_rail + (yb - y0) / rail_len * (z_front - z_rail)
                parts.append(
                    sf.box((x - rail_w / 2, ya, min(za, zb) - rail_w / 2), (x + rail_w / 2, yb, max(za, zb) + rail_w / 2))
                )
        # support posts at both rail ends
        for yp, zp in ((y0 + 0.02, z_rail), (y0 + rail_len - 0.02, z_front)):
            parts.append(
                sf.box((x - 0.015, yp - 0.015, layout["seat_h"]), (x + 0.015, yp + 0.015, zp))
            )
    return sf.merge(*parts)


def verify_rail_arms(pts, layout, p):
    arm_h, rail_len, y0, x_off, z_rail = _arm_geometry(layout, p)
    left = pts[pts[:, 0] < 0]
    right = pts[pts[:, 0] >= 0]
    if len(left) < 50 or len(right) < 50:
        return False
    if not _close(pts[:, 2].max(), z_rail + p["rail_w"] / 2, 0.12):
        return False
    slope = p.get("slope", 0.0)
    if slope > 0.01:
        rail = pts[pts[:, 2] > layout["seat_h"] + arm_h * 0.6]
        if len(rail) < 20:
            return False
        coef = np.polyfit(rail[:, 1], rail[:, 2], 1)
        if not coef[0] < -slope * 0.4:
            return False
    if p.get("round_profile", 0.0) >= 0.5:
        rail = right[right[:, 2] > layout["seat_h"] + arm_h * 0.7]
        mid = rail[np.abs(rail[:, 1] - rail[:, 1].mean()) < rail_len * 0.2]
        if len(mid) < 20:
            return False
        _, _, r, resid = _circle_fit(mid[:, 0], mid[:, 2])
        if not (resid < 0.02 and _close(r, p["rail_w"] / 2, 0.5)):
            return False
    return True


def build_curved_arms(layout, p):
    arm_h, rail_len, y0, x_off, z_rail = _arm_geometry(layout, p)
    rail_w = p["rail_w"]
    droop = p["droop"]
    parts = []
    n = 10
    for side in (-1, 1):
        x = side * x_off
        ys = np.linspace(y0, y0 + rail_len, n + 1)
        for ya, yb in zip(ys[:-1], ys[1:]):
            frac = lambda y: (y - y0) / rail_len
            z_at = lambda y: z_rail - droop * frac(y) ** 2
            parts.append(
                sf.box(
                    (x - rail_w / 2, ya, z_at((ya + yb) / 2) - rail_w / 2),
                    (x + rail_w / 2, yb, z_at((ya + yb) / 2) + rail_w / 2),
                )
            )
        parts.append(sf.box((x - 0.015, y0 - 0.015, layout["seat_h"]), (x + 0.015, y0 + 0.015, z_rail)))
    return sf.merge(*parts)


def verify_curved_arms(pts, layout, p):
    arm_h, rail_len, y0, x_off, z_rail = _arm_geometry(layout, p)
    rail = pts[pts[:, 2] > layout["seat_h"] + arm_h * 0.4]
    rear = rail[rail[:, 1] < y0 + 0.25 * rail_len]
    front = rail[rail[:, 1] > y0 + 0.75 * rail_len]
    if len(rear) < 10 or len(front) < 10:
        return False
    return rear[:, 2].mean() - front[:, 2].mean() > 0.35 * p["droop"]


def build_panel_arms(layout, p):
    arm_h = p["arm_h"]
    t = p["panel_t"]
    y0 = -layout["seat_d"] / 2 + 0.05
    rail_len = layout["seat_d"] * 0.75
    parts = []
    for side in (-1, 1):
        x = side * (layout["seat_w"] / 2 + t / 2)
        parts.append(
            sf.box(
                (x - t / 2, y0, layout["seat_h"]),
                (x + t / 2, y0 + rail_len, layout["seat_h"] + arm_h),
            )
        )
    return sf.merge(*parts)


def verify_panel_arms(pts, layout, p):
    zs = pts[:, 2]
    hist, _ = np.histogram(zs, bins=12)
    return _close(_extent(pts, 2), p["arm_h"], 0.12) and (hist > 0).all()


# -------------------------------------------------------------------- legs

def _leg_top(layout):
    if "seat_h" in layout:
        return layout["seat_h"] - layout["seat_t"]
    return layout["top_h"] - layout["top_t"]


def _leg_span(layout):
    if "seat_w" in layout:
        return layout["seat_w"], layout["seat_d"]
    return layout["top_w"], layout["top_d"]


def build_post_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    thick = p["thick"]
    taper = p.get("taper", 1.0)
    splay = p.get("splay", 0.0)
    round_cross = p.get("round_cross", 0.0) >= 0.5
    inset = 0.08
    parts = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            xt = sx * (w / 2 - inset - thick / 2)
            yt = sy * (d / 2 - inset - thick / 2)
            xb = xt + sx * splay * top
            yb = yt + sy * splay * top
            if round_cross and taper != 1.0:
                # lathe legs stay vertical; taper and splay don't combine
                parts.append(sf.lathe((xt, yt, 0), thick * taper / 2, thick / 2, top, cap_bottom=True))
            elif round_cross:
                parts.append(
                    sf.tube_between((xb, yb, 0), (xt, yt, top), thick / 2, cap_ends=True)
                )
            else:
                half_b = thick * taper / 2
                half_t = thick / 2
                n = 5
                zs = np.linspace(0, top, n + 1)
                for za, zb in zip(zs[:-1], zs[1:]):
                    f = lambda z: z / top
                    ha = half_b + (half_t - half_b) * f(za)
                    hb = half_b + (half_t - half_b) * f(zb)
                    h = max(ha, hb)
                    cx = xb + (xt - xb) * f((za + zb) / 2)
                    cy = yb + (yt - yb) * f((za + zb) / 2)
                    parts.append(sf.box((cx - h, cy - h, za), (cx + h, cy + h, zb)))
    return sf.merge(*parts)


def verify_post_legs(pts, layout, p):
    top = _leg_top(layout)
    center = (pts[:, 0].mean(), pts[:, 1].mean())
    bottom = _slice(pts, 2, -0.01, 0.18 * top)
    upper = _slice(pts, 2, 0.82 * top, top + 0.01)
    if len(bottom) < 20 or len(upper) < 20:
        return False
    if (_quadrant_counts(bottom, center) < 5).any():
        return False
    taper = p.get("taper", 1.0)
    if taper < 0.85 or taper > 1.15:
        # per-quadrant cross-section size must follow the taper direction
        def qspread(sl):
            out = []
            for sx in (-1, 1):
                for sy in (-1, 1):
                    q = sl[((sl[:, 0] - center[0]) * sx > 0) & ((sl[:, 1] - center[1]) * sy > 0)]
                    if len(q) < 5:
                        return None
                    out.append(q[:, 0].std() + q[:, 1].std())
            return np.mean(out)
        sb, su = qspread(bottom), qspread(upper)
        if sb is None or su is None:
            return False
        if taper < 1.0 and not sb < su * 0.9:
            return False
        if taper > 1.0 and not sb > su * 1.1:
            return False
    splay = p.get("splay", 0.0)
    if splay > 0.01:
        rb = _radial_spread(bottom, center)
        ru = _radial_spread(upper, center)
        if not rb > ru + 0.4 * splay * top:
            return False
    if p.get("round_cross", 0.0) >= 0.5 and abs(p.get("taper", 1.0) - 1.0) < 1e-9 and splay < 0.01:
        q = upper[((upper[:, 0] - center[0]) > 0) & ((upper[:, 1] - center[1]) > 0)]
        if len(q) < 15:
            return False
        _, _, r, resid = _circle_fit(q[:, 0], q[:, 1])
        if not (resid < 0.02 and _close(r, p["thick"] / 2, 0.4)):
            return False
    return True


def build_braced_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    base = build_post_legs(layout, p)
    thick = p["thick"]
    zb = p["stretcher_h"] * top
    inset = 0.08
    xo = w / 2 - inset - thick / 2
    yo = d / 2 - inset - thick / 2
    bars = [
        sf.box((-xo, -yo - thick / 4, zb - thick / 4), (-xo + thick / 2, yo + thick / 4, zb + thick / 4)),
        sf.box((xo - thick / 2, -yo - thick / 4, zb - thick / 4), (xo, yo + thick / 4, zb + thick / 4)),
        sf.box((-xo, -thick / 4, zb - thick / 4), (xo, thick / 4, zb + thick / 4)),
    ]
    return sf.merge(base, *bars)


def verify_braced_legs(pts, layout, p):
    top = _leg_top(layout)
    zb = p["stretcher_h"] * top
    center = (pts[:, 0].mean(), pts[:, 1].mean())
    band = _slice(pts, 2, zb - 0.05, zb + 0.05)
    if len(band) < 20:
        return False
    # stretchers put points near the center between the posts
    inner = band[
        (np.abs(band[:, 0] - center[0]) < 0.2) & (np.abs(band[:, 1] - center[1]) < 0.2)
    ]
    return len(inner) >= 5 and verify_post_legs(pts, layout, {k: v for k, v in p.items() if k != "stretcher_h"})


def build_pedestal_leg(layout, p):
    top = _leg_top(layout)
    col_r = p["col_r"]
    base_r = p["base_r"]
    star = p.get("star", 0.0) >= 0.5
    base_t = 0.04
    parts = [sf.lathe((0, 0, base_t), col_r, col_r, top - base_t)]
    if star:
        n_arms = 5
        for i in range(n_arms):
            a = 2 * np.pi * i / n_arms
            dx, dy = np.cos(a), np.sin(a)
            x1, y1 = dx * base_r, dy * base_r
            parts.append(sf.tube_between((0, 0, base_t / 2), (x1, y1, base_t / 2), base_t / 2, cap_ends=True))
    else:
        parts.append(sf.elliptic_slab((0, 0, 0), base_r, base_r, base_t))
    return sf.merge(*parts)


def verify_pedestal_leg(pts, layout, p):
    top = _leg_top(layout)
    center = (0.0, 0.0)
    mid = _slice(pts, 2, 0.4 * top, 0.7 * top)
    bottom = _slice(pts, 2, -0.01, 0.06)
    if len(mid) < 20 or len(bottom) < 20:
        return False
    d_mid = np.sqrt(mid[:, 0] ** 2 + mid[:, 1] ** 2)
    if not _close(d_mid.max(), p["col_r"], 0.3):
        return False
    d_bot = np.sqrt(bottom[:, 0] ** 2 + bottom[:, 1] ** 2)
    if not _close(d_bot.max(), p["base_r"], 0.2):
        return False
    gaps = _angular_gaps(bottom[d_bot > 0.5 * p["base_r"]], center)
    if p.get("star", 0.0) >= 0.5:
        return gaps >= 3
    return gaps == 0


def build_sled_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    t = p["runner_t"]
    parts = []
    for side in (-1, 1):
        x = side * (w / 2 - 0.1)
        parts.append(sf.box((x - t / 2, -d / 2, 0), (x + t / 2, d / 2, t)))
        for y in (-d / 2 + 0.08, d / 2 - 0.08):
            parts.append(sf.box((x - t / 2, y - t / 2, t), (x + t / 2, y + t / 2, top)))
    return sf.merge(*parts)


def verify_sled_legs(pts, layout, p):
    w, d = _leg_span(layout)
    bottom = pts[pts[:, 2] < p["runner_t"] * 1.3]
    if len(bottom) < 40:
        return False
    left = bottom[bottom[:, 0] < 0]
    right = bottom[bottom[:, 0] >= 0]
    return (
        len(left) > 15
        and len(right) > 15
        and _extent(left, 1) > 0.7 * d
        and _extent(right, 1) > 0.7 * d
        and _hist_gaps(bottom[:, 0], bins=10) >= 1
    )


def build_scissor_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    bw = p["bar_w"]
    parts = []
    for side in (-1, 1):
        x = side * (w / 2 - 0.1)
        n = 8
        for (ya, za), (yb, zb) in (
            (( -d / 2, 0.0), (d / 2, top)),
            ((d / 2, 0.0), (-d / 2, top)),
        ):
            ts = np.linspace(0, 1, n + 1)
            for t0, t1 in zip(ts[:-1], ts[1:]):
                y_lo, z_lo = ya + (yb - ya) * t0, za + (zb - za) * t0
                y_hi, z_hi = ya + (yb - ya) * t1, za + (zb - za) * t1
                parts.append(
                    sf.box(
                        (x - bw / 2, min(y_lo, y_hi) - bw / 4, min(z_lo, z_hi)),
                        (x + bw / 2, max(y_lo, y_hi) + bw / 4, max(z_lo, z_hi)),
                    )
                )
    return sf.merge(*parts)


def verify_scissor_legs(pts, layout, p):
    d = _leg_span(layout)[1]
    top = _leg_top(layout)
    yn = (pts[:, 1] + d / 2) / d
    zn = pts[:, 2] / top
    on_diag = np.abs(zn - yn) < 0.18
    on_anti = np.abs(zn - (1 - yn)) < 0.18
    return on_diag.mean() > 0.25 and on_anti.mean() > 0.25


def build_hairpin_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    r = p["rod_r"]
    spread = p["spread"]
    parts = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            x0 = sx * (w / 2 - 0.1)
            y0 = sy * (d / 2 - 0.1)
            apex = (x0, y0, 0.0)
            for dy in (-spread / 2, spread / 2):
                parts.append(sf.tube_between(apex, (x0, y0 + dy, top), r, nseg=8))
    return sf.merge(*parts)


def verify_hairpin_legs(pts, layout, p):
    top = _leg_top(layout)
    center = (pts[:, 0].mean(), pts[:, 1].mean())
    bottom = _slice(pts, 2, -0.01, 0.15 * top)
    upper = _slice(pts, 2, 0.85 * top, top + 0.01)
    if len(bottom) < 10 or len(upper) < 10:
        return False

    def per_quadrant_spread(sl):
        spreads = []
        for sx in (-1, 1):
            for sy in (-1, 1):
                q = sl[((sl[:, 0] - center[0]) * sx > 0) & ((sl[:, 1] - center[1]) * sy > 0)]
                if len(q) < 4:
                    return None
                spreads.append(q[:, 1].std())
        return np.mean(spreads)

    sb = per_quadrant_spread(bottom)
    su = per_quadrant_spread(upper)
    return sb is not None and su is not None and su > sb * 1.6


def build_trestle_legs(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    t = p["slab_t"]
    parts = []
    for side in (-1, 1):
        y = side * (d / 2 - 0.12)
        parts.append(sf.box((-w * 0.35, y - t / 2, 0), (w * 0.35, y + t / 2, top)))
    parts.append(sf.box((-0.05, -d / 2 + 0.12, 0.08), (0.05, d / 2 - 0.12, 0.18)))
    return sf.merge(*parts)


def verify_trestle_legs(pts, layout, p):
    w = _leg_span(layout)[0]
    top = _leg_top(layout)
    upper = pts[pts[:, 2] > 0.6 * top]
    if len(upper) < 30:
        return False
    return _hist_gaps(upper[:, 1], bins=8) >= 1 and _extent(upper, 0) > 0.5 * w


def build_double_pedestal(layout, p):
    w, d = _leg_span(layout)
    top = _leg_top(layout)
    col_r, base_r = p["col_r"], p["base_r"]
    base_t = 0.04
    parts = []
    for side in (-1, 1):
        y = side * d / 4
        parts.append(sf.lathe((0, y, base_t), col_r, col_r, top - base_t))
        parts.append(sf.elliptic_slab((0, y, 0), base_r, base_r, base_t))
    return sf.merge(*parts)


def verify_double_pedestal(pts, layout, p):
    top = _leg_top(layout)
    mid = _slice(pts, 2, 0.4 * top, 0.7 * top)
    return len(mid) > 20 and _hist_gaps(mid[:, 1], bins=10) >= 1


# --------------------------------------------------------------- tabletops

def build_slab_top(layout, p):
    w = layout["top_w"] * p.get("w_frac", 1.0)
    d = layout["top_d"] * p.get("d_frac", 1.0)
    t = p["thickness"]
    z1 = layout["top_h"]
    return sf.box((-w / 2, -d / 2, z1 - t), (w / 2, d / 2, z1))


def verify_slab_top(pts, layout, p):
    w = layout["top_w"] * p.get("w_frac", 1.0)
    return _close(_extent(pts, 2), p["thickness"], 0.25) and _close(_extent(pts, 0), w, 0.06)


def build_square_top(layout, p):
    side = layout["top_d"] * 1.1
    t = p["thickness"]
    z1 = layout["top_h"]
    return sf.box((-side / 2, -side / 2, z1 - t), (side / 2, side / 2, z1))


def verify_square_top(pts, layout, p):
    return _close(_extent(pts, 0), _extent(pts, 1), 0.05)


def build_round_top(layout, p):
    r = layout["top_d"] / 2 * p["r_frac"]
    t = p["thickness"]
    return sf.elliptic_slab((0, 0, layout["top_h"] - t), r, r, t)


def verify_round_top(pts, layout, p):
    r = layout["top_d"] / 2 * p["r_frac"]
    corner = (np.abs(pts[:, 0]) > 0.75 * r) & (np.abs(pts[:, 1]) > 0.75 * r)
    return corner.mean() < 0.02 and _close(_extent(pts, 0), 2 * r, 0.08)


def build_oval_top(layout, p):
    rx = layout["top_w"] / 2
    ry = layout["top_d"] / 2 * p["ry_frac"]
    t = p["thickness"]
    return sf.elliptic_slab((0, 0, layout["top_h"] - t), rx, ry, t)


def verify_oval_top(pts, layout, p):
    rx = layout["top_w"] / 2
    ry = layout["top_d"] / 2 * p["ry_frac"]
    corner = (np.abs(pts[:, 0]) > 0.8 * rx) & (np.abs(pts[:, 1]) > 0.8 * ry)
    return corner.mean() < 0.02 and _extent(pts, 0) > _extent(pts, 1) * 1.15


# -------------------------------------------------------------- lamp parts

def build_shade(layout, p):
    r_b = p["r_bottom"]
    r_t = p["r_top"]
    h = p["height"]
    z0 = layout["head_z"]
    cx, cy = layout.get("head_cx", 0.0), layout.get("head_cy", 0.0)
    return sf.lathe((cx, cy, z0), r_b, r_t, h)


def verify_shade(pts, layout, p):
    z0, z1 = pts[:, 2].min(), pts[:, 2].max()
    h = z1 - z0
    cx, cy = pts[:, 0].mean(), pts[:, 1].mean()
    r = np.sqrt((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2)
    # radius is linear in z for any surface of revolution between two rims
    coef = np.polyfit(pts[:, 2], r, 1)
    rb, rt = np.polyval(coef, z0), np.polyval(coef, z1)
    resid = np.abs(np.polyval(coef, pts[:, 2]) - r).mean()
    return (
        _close(h, p["height"], 0.12)
        and _close(rb, p["r_bottom"], 0.12)
        and _close(rt, p["r_top"], 0.25)
        and resid < 0.06 * max(rb, p["r_bottom"])
    )


def build_ball_head(layout, p):
    r = p["r"]
    z0 = layout["head_z"]
    cx, cy = layout.get("head_cx", 0.0), layout.get("head_cy", 0.0)
    return sf.sphere((cx, cy, z0 + r), r)


def verify_ball_head(pts, layout, p):
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1))
    return _close(d.mean(), p["r"], 0.1) and d.std() / p["r"] < 0.08


def build_dome_head(layout, p):
    r = p["r"]
    z0 = layout["head_z"]
    cx, cy = layout.get("head_cx", 0.0), layout.get("head_cy", 0.0)
    return sf.sphere((cx, cy, z0), r, lat_min=0.0)


def verify_dome_head(pts, layout, p):
    z0 = pts[:, 2].min()
    c = np.array([pts[:, 0].mean(), pts[:, 1].mean(), z0])
    d = np.sqrt(((pts - c) ** 2).sum(axis=1))
    return _close(_extent(pts, 2), p["r"], 0.15) and d.std() / p["r"] < 0.12


def build_box_shade(layout, p):
    w = p["w"]
    h = p["height"]
    z0 = layout["head_z"]
    cx, cy = layout.get("head_cx", 0.0), layout.get("head_cy", 0.0)
    return sf.box((cx - w / 2, cy - w / 2, z0), (cx + w / 2, cy + w / 2, z0 + h))


def verify_box_shade(pts, layout, p):
    cx, cy = pts[:, 0].mean(), pts[:, 1].mean()
    w = p["w"]
    corner = (np.abs(pts[:, 0] - cx) > 0.35 * w) & (np.abs(pts[:, 1] - cy) > 0.35 * w)
    return corner.mean() > 0.05 and _close(_extent(pts, 0), w, 0.1)


def build_rod_post(layout, p):
    r = p["r"]
    return sf.lathe((0, 0, layout["post_z0"]), r, r, layout["post_h"])


def verify_rod_post(pts, layout, p):
    _, _, r, resid = _circle_fit(pts[:, 0], pts[:, 1])
    return resid < 0.02 and _close(r, p["r"], 0.25) and _close(_extent(pts, 2), layout["post_h"], 0.1)


def build_curved_post(layout, p):
    r = p["r"]
    bend = p["bend"]
    arc_r = layout["post_h"] / bend
    return sf.bent_tube((0, 0, layout["post_z0"]), arc_r, bend, r)


def curved_post_top(layout, p):
    """Where the head attaches for a curved post."""
    bend = p["bend"]
    arc_r = layout["post_h"] / bend
    y_off = arc_r * (1 - np.cos(bend))
    z_top = layout["post_z0"] + arc_r * np.sin(bend)
    return 0.0, y_off, z_top


def verify_curved_post(pts, layout, p):
    _, y_off, _ = curved_post_top(layout, p)
    z0, z1 = pts[:, 2].min(), pts[:, 2].max()
    h = z1 - z0
    bottom = pts[pts[:, 2] < z0 + 0.15 * h]
    top = pts[pts[:, 2] > z1 - 0.15 * h]
    return top[:, 1].mean() - bottom[:, 1].mean() > 0.4 * y_off


def build_segmented_post(layout, p):
    r = p["r"]
    n = int(p["n_seg"])
    z = layout["post_z0"]
    seg_h = layout["post_h"] / n
    parts = []
    for i in range(n):
        ri = r if i % 2 == 0 else r * 1.8
        parts.append(sf.lathe((0, 0, z + i * seg_h), ri, ri, seg_h, cap_bottom=True, cap_top=True))
    return sf.merge(*parts)


def verify_segmented_post(pts, layout, p):
    z0 = layout["post_z0"]
    n = int(p["n_seg"])
    seg_h = layout["post_h"] / n
    means = []
    for i in range(n):
        sl = _slice(pts, 2, z0 + (i + 0.25) * seg_h, z0 + (i + 0.75) * seg_h)
        if len(sl) < 8:
            return False
        means.append(np.sqrt(sl[:, 0] ** 2 + sl[:, 1] ** 2).mean())
    means = np.array(means)
    return means.std() > 0.12 * means.mean()


def build_tripod_post(layout, p):
    r = p["r"]
    spread = p["spread"]
    z0, h = layout["post_z0"], layout["post_h"]
    apex = (0, 0, z0 + h)
    parts = []
    for i in range(3):
        a = 2 * np.pi * i / 3 + np.pi / 6
        parts.append(sf.tube_between((spread * np.cos(a), spread * np.sin(a), z0), apex, r, nseg=8))
    return sf.merge(*parts)


def verify_tripod_post(pts, layout, p):
    z0, h = layout["post_z0"], layout["post_h"]
    bottom = _slice(pts, 2, z0 - 0.01, z0 + 0.25 * h)
    if len(bottom) < 15:
        return False
    return _angular_gaps(bottom, (0.0, 0.0), bins=18) >= 3


def build_disk_base(layout, p):
    return sf.elliptic_slab((0, 0, 0), p["r"], p["r"], p["t"])


def verify_disk_base(pts, layout, p):
    d = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
    return _close(d.max(), p["r"], 0.1) and _close(_extent(pts, 2), p["t"], 0.3)


def build_box_base(layout, p):
    w = p["w"]
    return sf.box((-w / 2, -w / 2, 0), (w / 2, w / 2, p["t"]))


def verify_box_base(pts, layout, p):
    w = p["w"]
    corner = (np.abs(pts[:, 0]) > 0.35 * w) & (np.abs(pts[:, 1]) > 0.35 * w)
    return corner.mean() > 0.05 and _close(_extent(pts, 0), w, 0.08)


def build_dome_base(layout, p):
    return sf.sphere((0, 0, 0), p["r"], lat_min=0.0)


def verify_dome_base(pts, layout, p):
    c = np.array([pts[:, 0].mean(), pts[:, 1].mean(), pts[:, 2].min()])
    d = np.sqrt(((pts - c) ** 2).sum(axis=1))
    return _close(_extent(pts, 2), p["r"], 0.15) and d.std() / p["r"] < 0.12


def build_tiered_base(layout, p):
    r, t = p["r"], p["t"]
    lower = sf.elliptic_slab((0, 0, 0), r, r, t)
    upper = sf.elliptic_slab((0, 0, t), r * 0.55, r * 0.55, t)
    return sf.merge(lower, upper)


def verify_tiered_base(pts, layout, p):
    r, t = p["r"], p["t"]
    lower = pts[pts[:, 2] < t * 0.9]
    upper = pts[pts[:, 2] > t * 1.1]
    if len(lower) < 20 or len(upper) < 20:
        return False
    rl = np.sqrt(lower[:, 0] ** 2 + lower[:, 1] ** 2).max()
    ru = np.sqrt(upper[:, 0] ** 2 + upper[:, 1] ** 2).max()
    return rl > ru * 1.3


RECIPES = {
    "panel_back": (build_panel_back, verify_panel_back),
    "arc_back": (build_arc_back, verify_arc_back),
    "arch_back": (build_arch_back, verify_arch_back),
    "slat_back": (build_slat_back, verify_slat_back),
    "bar_back": (build_bar_back, verify_bar_back),
    "slab_seat": (build_slab_seat, verify_slab_seat),
    "square_seat": (build_square_seat, verify_square_seat),
    "round_seat": (build_round_seat, verify_round_seat),
    "dished_seat": (build_dished_seat, verify_dished_seat),
    "padded_seat": (build_padded_seat, verify_padded_seat),
    "rail_arms": (build_rail_arms, verify_rail_arms),
    "curved_arms": (build_curved_arms, verify_curved_arms),
    "panel_arms": (build_panel_arms, verify_panel_arms),
    "post_legs": (build_post_legs, verify_post_legs),
    "braced_legs": (build_braced_legs, verify_braced_legs),
    "pedestal_leg": (build_pedestal_leg, verify_pedestal_leg),
    "sled_legs": (build_sled_legs, verify_sled_legs),
    "scissor_legs": (build_scissor_legs, verify_scissor_legs),
    "hairpin_legs": (build_hairpin_legs, verify_hairpin_legs),
    "trestle_legs": (build_trestle_legs, verify_trestle_legs),
    "double_pedestal": (build_double_pedestal, verify_double_pedestal),
    "slab_top": (build_slab_top, verify_slab_top),
    "square_top": (build_square_top, verify_square_top),
    "round_top": (build_round_top, verify_round_top),
    "oval_top": (build_oval_top, verify_oval_top),
    "shade": (build_shade, verify_shade),
    "ball_head": (build_ball_head, verify_ball_head),
    "dome_head": (build_dome_head, verify_dome_head),
    "box_shade": (build_box_shade, verify_box_shade),
    "rod_post": (build_rod_post, verify_rod_post),
    "curved_post": (build_curved_post, verify_curved_post),
    "segmented_post": (build_segmented_post, verify_segmented_post),
    "tripod_post": (build_tripod_post, verify_tripod_post),
    "disk_base": (build_disk_base, verify_disk_base),
    "box_base": (build_box_base, verify_box_base),
    "dome_base": (build_dome_base, verify_dome_base),
    "tiered_base": (build_tiered_base, verify_tiered_base),
}
