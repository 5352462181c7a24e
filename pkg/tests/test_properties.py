"""Standalone property suite: needs only the metric core, the maps and adjust."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ifsregimes.geometry import PointCloud, epsilon_components, farthest_point_sample, knn_batch
from ifsregimes.ghost import adjust
from ifsregimes.ifs import F1_FIXED_POINT, HENON_F1, Bernoulli, generate, henon_ifs, iterate_map

points = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(points, st.floats(1e-3, 2.0), st.floats(1e-3, 2.0))
def test_monotone_epsilon_refinement(pts, e1, e2):
    lo, hi = sorted((e1, e2))
    cloud = PointCloud(np.array(pts))
    coarse = epsilon_components(cloud, range(len(pts)), hi)
    for block in epsilon_components(cloud, range(len(pts)), lo).blocks:
        assert len({coarse.block_of(int(i)) for i in block}) == 1


@settings(max_examples=100, deadline=None)
@given(points, st.data())
def test_farthest_point_min_distance_monotone(pts, data):
    J = data.draw(st.integers(1, len(pts)))
    start = data.draw(st.integers(0, len(pts) - 1))
    sel, achieved = farthest_point_sample(PointCloud(np.array(pts)), J, start, return_distances=True)
    assert sel[0] == start and len(set(sel.tolist())) == J
    assert np.all(np.diff(achieved) <= 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 100_000), min_size=2, max_size=100), st.data())
def test_adjust_invertible(values, data):
    s = np.array(values, dtype=float)
    ghosts = data.draw(st.lists(st.integers(0, len(values) - 1), max_size=20, unique=True))
    c = float(data.draw(st.integers(-5000, 5000)))
    assert np.array_equal(adjust(adjust(s, ghosts, c), ghosts, -c), s)


def test_f1_fixed_point_convergence():
    p = iterate_map(HENON_F1, (0.0, 0.0), 200)
    assert np.all(np.abs(p - np.array(F1_FIXED_POINT)) <= 1e-4)


def test_shift_of_neighbourhood_is_not_neighbourhood_of_shift():
    cloud = generate(henon_ifs(), Bernoulli((0.5, 0.5), 2), 5000).cloud
    ts = np.arange(cloud.T - 1)
    image_of_nb = knn_batch(cloud, ts, 5) + 1
    nb_of_image = knn_batch(cloud, ts + 1, 5)
    witnesses = [t for t in ts if set(image_of_nb[t]) != set(nb_of_image[t])]
    assert witnesses
