"""Eigenframe holonomy around small loops, for gauge and subdivision checks."""

import numpy as np

from quadrtop.char_classes import GapError, OverlapError, top_eigenframe, transport_sign


def frames_at(mesh, j):
    out = {}
    for v in mesh.base_vertices:
        try:
            out[v] = top_eigenframe(mesh.qmap.float_pencil(mesh.units[v]), j).frame
        except GapError:
            pass
    return out


def random_gauge(frames, rng):
    out = {}
    for v, f in frames.items():
        q, _ = np.linalg.qr(rng.standard_normal((f.shape[1], f.shape[1])))
        out[v] = f @ q
    return out


def loop_bit(frames, loop):
    bit = 0
    for a, b in zip(loop, loop[1:] + loop[:1]):
        bit ^= transport_sign(frames[a], frames[b])
    return bit


def triangle_holonomies(mesh, frames):
    out = {}
    for tri in mesh.simplices[2]:
        if all(v in frames for v in tri):
            try:
                out[tri] = loop_bit(frames, list(tri))
            except OverlapError:
                pass
    return out


def subdivided_holonomy(mesh, tri, j):
    """Holonomy around tri through its edge midpoints, or None when a frame or overlap degenerates."""
    stack = mesh.qmap.float_stack
    pts = [mesh.units[v] for v in tri]
    loop = []
    for a, b in zip(pts, pts[1:] + pts[:1]):
        loop += [a, (a + b) / np.linalg.norm(a + b)]
    try:
        fr = {i: top_eigenframe(np.tensordot(u, stack, axes=1), j).frame for i, u in enumerate(loop)}
        return loop_bit(fr, list(range(len(loop))))
    except (GapError, OverlapError):
        return None
