import numpy as np
import pytest

from noncollapse.speeds import (EuclideanNormSpeed, PowerMeanSpeed, SumSpeed,
                                parse_speed)


@pytest.fixture(scope="session")
def builtin_speeds():
    return [SumSpeed(), EuclideanNormSpeed(), PowerMeanSpeed(-1)]


def point_segment_distance(p, a, b):
    """Distance from points p (..., 2) to segments a->b ((S, 2) each)."""
    ab = b - a
    ap = p[:, None, :] - a[None, :, :]
    denom = np.einsum("ij,ij->j", ab.T, ab.T)
    t = np.clip(np.einsum("psj,sj->ps", ap, ab) / np.maximum(denom, 1e-300), 0, 1)
    proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    return np.linalg.norm(p[:, None, :] - proj, axis=2).min(axis=1)


def polyline_segments(h):
    nodes = h.nodes
    if h.closed:
        return nodes, np.roll(nodes, -1, axis=0)
    return nodes[:-1], nodes[1:]


def one_sided_hausdorff(h_from, h_to):
    """Max distance from h_from's nodes to h_to's polyline."""
    a, b = polyline_segments(h_to)
    return float(point_segment_distance(h_from.nodes, a, b).max())


def hausdorff(h1, h2):
    return max(one_sided_hausdorff(h1, h2), one_sided_hausdorff(h2, h1))
