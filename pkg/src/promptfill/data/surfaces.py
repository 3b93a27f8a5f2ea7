"""Triangle-soup surface primitives and area-weighted point sampling.

Every part recipe reduces to a (n_tri, 3, 3) float64 triangle array
assembled from these builders. Sampling is uniform over surface area
and deterministic given the caller's RNG.
"""
from __future__ import annotations

import numpy as np


def _tris(verts) -> np.ndarray:
    arr = np.asarray(verts, dtype=np.float64)
    return arr.reshape(-1, 3, 3)


def quad(p00, p01, p11, p10) -> np.ndarray:
    """Two triangles covering the quad p00-p01-p11-p10."""
    return _tris([[p00, p01, p11], [p00, p11, p10]])


def box(min_corner, max_corner) -> np.ndarray:
    """Axis-aligned box shell (12 triangles)."""
    x0, y0, z0 = min_corner
    x1, y1, z1 = max_corner
    c = lambda x, y, z: (x, y, z)
    faces = [
        quad(c(x0, y0, z0), c(x1, y0, z0), c(x1, y1, z0), c(x0, y1, z0)),  # bottom
        quad(c(x0, y0, z1), c(x0, y1, z1), c(x1, y1, z1), c(x1, y0, z1)),  # top
        quad(c(x0, y0, z0), c(x0, y0, z1), c(x1, y0, z1), c(x1, y0, z0)),  # front
        quad(c(x0, y1, z0), c(x1, y1, z0), c(x1, y1, z1), c(x0, y1, z1)),  # rear
        quad(c(x0, y0, z0), c(x0, y1, z0), c(x0, y1, z1), c(x0, y0, z1)),  # left
        quad(c(x1, y0, z0), c(x1, y0, z1), c(x1, y1, z1), c(x1, y1, z0)),  # right
    ]
    return np.concatenate(faces)


def lathe(center, r_bottom, r_top, height, nseg=24, cap_bottom=False, cap_top=False) -> np.ndarray:
    """Surface of revolution around +z: cylinder when radii match, cone otherwise."""
    cx, cy, cz = center
    ang = np.linspace(0, 2 * np.pi, nseg + 1)
    tris = []
    for a0, a1 in zip(ang[:-1], ang[1:]):
        b0 = (cx + r_bottom * np.cos(a0), cy + r_bottom * np.sin(a0), cz)
        b1 = (cx + r_bottom * np.cos(a1), cy + r_bottom * np.sin(a1), cz)
        t0 = (cx + r_top * np.cos(a0), cy + r_top * np.sin(a0), cz + height)
        t1 = (cx + r_top * np.cos(a1), cy + r_top * np.sin(a1), cz + height)
        if r_bottom > 0:
            tris.append([b0, b1, t1])
        if r_top > 0:
            tris.append([b0, t1, t0])
        if cap_bottom and r_bottom > 0:
            tris.append([(cx, cy, cz), b1, b0])
        if cap_top and r_top > 0:
            tris.append([(cx, cy, cz + height), t0, t1])
    return _tris(tris)


def disk(center, radius, nseg=24) -> np.ndarray:
    """Horizontal disk at fixed z."""
    cx, cy, cz = center
    ang = np.linspace(0, 2 * np.pi, nseg + 1)
    tris = []
    for a0, a1 in zip(ang[:-1], ang[1:]):
        p0 = (cx + radius * np.cos(a0), cy + radius * np.sin(a0), cz)
        p1 = (cx + radius * np.cos(a1), cy + radius * np.sin(a1), cz)
        tris.append([(cx, cy, cz), p0, p1])
    return _tris(tris)


def elliptic_slab(center, rx, ry, thickness, nseg=32) -> np.ndarray:
    """Elliptical plate: top, bottom and side wall."""
    cx, cy, cz = center
    ang = np.linspace(0, 2 * np.pi, nseg + 1)
    tris = []
    for a0, a1 in zip(ang[:-1], ang[1:]):
        lo0 = (cx + rx * np.cos(a0), cy + ry * np.sin(a0), cz)
        lo1 = (cx + rx * np.cos(a1), cy + ry * np.sin(a1), cz)
        hi0 = (lo0[0], lo0[1], cz + thickness)
        hi1 = (lo1[0], lo1[1], cz + thickness)
        tris.append([(cx, cy, cz), lo1, lo0])
        tris.append([(cx, cy, cz + thickness), hi0, hi1])
        tris.append([lo0, lo1, hi1])
        tris.append([lo0, hi1, hi0])
    return _tris(tris)


def sphere(center, radius, n_lat=12, n_lon=24, lat_min=-np.pi / 2, lat_max=np.pi / 2) -> np.ndarray:
    """UV sphere (or spherical zone when the lat range is restricted)."""
    cx, cy, cz = center
    lats = np.linspace(lat_min, lat_max, n_lat + 1)
    lons = np.linspace(0, 2 * np.pi, n_lon + 1)
    tris = []
    for la0, la1 in zip(lats[:-1], lats[1:]):
        for lo0, lo1 in zip(lons[:-1], lons[1:]):
            p = lambda la, lo: (
                cx + radius * np.cos(la) * np.cos(lo),
                cy + radius * np.cos(la) * np.sin(lo),
                cz + radius * np.sin(la),
            )
            a, b, c, d = p(la0, lo0), p(la0, lo1), p(la1, lo1), p(la1, lo0)
            tris.append([a, b, c])
            tris.append([a, c, d])
    return _tris(tris)


def arc_panel(radius, half_angle, width_center, z0, z1, nseg=24, n_rows=8) -> np.ndarray:
    """Vertical cylindrical sheet: arc in the xy-plane extruded along z.

    The arc bows toward -y and is centered on x = width_center[0]. The
    chord (opening) faces +y so a chair back curves away from the seat.
    """
    cx, cy = width_center
    angs = np.linspace(np.pi / 2 - half_angle, np.pi / 2 + half_angle, nseg + 1)
    zs = np.linspace(z0, z1, n_rows + 1)
    # circle center sits at cy + radius so the arc's midpoint touches (cx, cy)
    oy = cy + radius
    tris = []
    for r0, r1 in zip(zs[:-1], zs[1:]):
        for a0, a1 in zip(angs[:-1], angs[1:]):
            p = lambda a, z: (cx + radius * np.cos(a), oy - radius * np.sin(a), z)
            tris.append([p(a0, r0), p(a1, r0), p(a1, r1)])
            tris.append([p(a0, r0), p(a1, r1), p(a0, r1)])
    return _tris(tris)


def bent_tube(p_start, bend_radius, arc_angle, tube_radius, nseg=16, n_ring=10) -> np.ndarray:
    """Tube swept along a vertical-plane circular arc, rising from p_start.

    The arc starts straight up and bends toward +y by ``arc_angle``.
    """
    x0, y0, z0 = p_start
    # arc center offset along +y in the yz-plane
    cyz = np.array([y0 + bend_radius, z0])
    ts = np.linspace(0, arc_angle, nseg + 1)
    rings = []
    for t in ts:
        # sweep from angle pi (pointing -y from center) upward
        cy = cyz[0] + bend_radius * np.cos(np.pi - t)
        cz = cyz[1] + bend_radius * np.sin(np.pi - t)
        # tangent of the arc; tube ring lies in the normal plane
        tangent = np.array([0.0, np.sin(t), np.cos(t)])
        n1 = np.array([1.0, 0.0, 0.0])
        n2 = np.cross(tangent, n1)
        ang = np.linspace(0, 2 * np.pi, n_ring + 1)[:-1]
        ring = np.array(
            [[x0, cy, cz] + tube_radius * (np.cos(a) * n1 + np.sin(a) * n2) for a in ang]
        )
        rings.append(ring)
    tris = []
    for r0, r1 in zip(rings[:-1], rings[1:]):
        for i in range(len(r0)):
            j = (i + 1) % len(r0)
            tris.append([r0[i], r0[j], r1[j]])
            tris.append([r0[i], r1[j], r1[i]])
    return _tris(tris)


def tube_between(p0, p1, radius, nseg=10, cap_ends=False) -> np.ndarray:
    """Cylindrical tube along the segment p0 -> p1."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length <= 0:
        raise ValueError("degenerate tube")
    w = axis / length
    helper = np.array([0.0, 0.0, 1.0]) if abs(w[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(helper, w)
    u /= np.linalg.norm(u)
    v = np.cross(w, u)
    ang = np.linspace(0, 2 * np.pi, nseg + 1)[:-1]
    ring0 = np.array([p0 + radius * (np.cos(a) * u + np.sin(a) * v) for a in ang])
    ring1 = ring0 + axis
    tris = []
    for i in range(nseg):
        j = (i + 1) % nseg
        tris.append([ring0[i], ring0[j], ring1[j]])
        tris.append([ring0[i], ring1[j], ring1[i]])
        if cap_ends:
            tris.append([p0, ring0[j], ring0[i]])
            tris.append([p1, ring1[i], ring1[j]])
    return _tris(tris)


def merge(*groups) -> np.ndarray:
    parts = [g for g in groups if g is not None and len(g)]
    if not parts:
        raise ValueError("empty surface")
    return np.concatenate(parts)


def triangle_areas(tris: np.ndarray) -> np.ndarray:
    a = tris[:, 1] - tris[:, 0]
    b = tris[:, 2] - tris[:, 0]
    return 0.5 * np.sqrt((np.cross(a, b) ** 2).sum(axis=1))


def sample_surface(tris: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample n points uniformly by area over a triangle soup."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    tris = np.asarray(tris, dtype=np.float64)
    if tris.size == 0:
        raise ValueError("empty surface")
    areas = triangle_areas(tris)
    total = areas.sum()
    if total <= 0:
        raise ValueError("empty surface")
    chosen = rng.choice(len(tris), size=n, p=areas / total)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1
    u[flip] = 1 - u[flip]
    v[flip] = 1 - v[flip]
    t = tris[chosen]
    pts = t[:, 0] + u[:, None] * (t[:, 1] - t[:, 0]) + v[:, None] * (t[:, 2] - t[:, 0])
    return pts
