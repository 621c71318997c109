import itertools

import numpy as np
import pytest

from vilab import Ball, Box, Product, Simplex, VertexEnumerationError

from helpers import dense_grid, greedy_packing_count, min_dist_to_set

NORMS = ("l1", "l2", "linf")


def small_domains():
    return [
        Simplex(1),
        Simplex(2),
        Ball(np.zeros(2), 1.0),
        Ball(np.array([0.3, -0.2, 0.1]), 0.7),
        Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0])),
        Box(np.array([0.0, -2.0, 1.0]), np.array([1.0, 3.0, 1.5])),
        Product((Box(np.array([-1.0]), np.array([1.0])), Ball(np.zeros(2), 0.5))),
        Product((Simplex(1), Box(np.array([0.0, 0.0]), np.array([2.0, 1.0])))),
    ]


class TestProjection:
    def test_box_clamp(self):
        box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        assert np.allclose(box.project(np.array([2.0, 0.5])), [1.0, 0.5])
        assert np.allclose(box.project(np.array([-3.0, -3.0])), [-1.0, -1.0])
        z = np.array([0.2, -0.7])
        assert np.allclose(box.project(z), z)

    def test_simplex_identity_on_feasible(self):
        s = Simplex(1)
        z = np.array([0.5, 0.5])
        assert np.allclose(s.project(z), z)

    def test_simplex_clips_to_vertex(self):
        s = Simplex(1)
        assert np.allclose(s.project(np.array([2.0, 0.0])), [1.0, 0.0])

    def test_ball_formula(self):
        ball = Ball(np.array([1.0, 0.0]), 2.0)
        p = ball.project(np.array([5.0, 0.0]))
        assert np.allclose(p, [3.0, 0.0])
        inside = np.array([1.5, 0.5])
        assert np.allclose(ball.project(inside), inside)

    def test_variational_characterization(self):
        # p = proj(z) iff <z - p, u - p> <= 0 for all feasible u
        rng = np.random.default_rng(0)
        for dom in small_domains():
            z = rng.normal(scale=3.0, size=(50, dom.dim))
            p = dom.project(z)
            u = dom.sample(rng, 200)
            for i in range(len(z)):
                vals = (u - p[i]) @ (z[i] - p[i])
                assert np.max(vals) <= 1e-9

    def test_simplex_matches_segment_search(self):
        # Simplex(1) is the segment (t, 1-t); brute-force the parameter
        s = Simplex(1)
        ts = np.linspace(0.0, 1.0, 200001)
        seg = np.stack([ts, 1.0 - ts], axis=-1)
        rng = np.random.default_rng(1)
        for _ in range(50):
            z = rng.normal(scale=2.0, size=2)
            p = s.project(z)
            best = seg[np.argmin(np.linalg.norm(seg - z, axis=-1))]
            assert np.linalg.norm(p - best) <= 2e-5
            assert np.linalg.norm(z - p) <= np.min(np.linalg.norm(seg - z, axis=-1)) + 1e-12

    def test_projection_is_idempotent_and_feasible(self):
        rng = np.random.default_rng(2)
        for dom in small_domains():
            z = rng.normal(scale=4.0, size=(100, dom.dim))
            p = dom.project(z)
            assert np.all(dom.contains(p, tol=1e-9))
            assert np.allclose(dom.project(p), p, atol=1e-12)

    def test_batched_matches_rowwise(self):
        rng = np.random.default_rng(3)
        for dom in small_domains():
            z = rng.normal(size=(4, 5, dom.dim))
            batched = dom.project(z)
            assert batched.shape == z.shape
            for i in range(4):
                for j in range(5):
                    assert np.allclose(batched[i, j], dom.project(z[i, j]))


class TestMembership:
    def test_examples(self):
        s = Simplex(2)
        assert s.contains(np.array([1 / 3, 1 / 3, 1 / 3]))
        assert not s.contains(np.array([0.5, 0.5, 0.5]))
        ball = Ball(np.zeros(2), 1.0)
        assert ball.contains(np.array([0.6, 0.8]))
        assert not ball.contains(np.array([0.8, 0.8]))

    def test_tolerance_boundary(self):
        ball = Ball(np.zeros(1), 1.0)
        assert ball.contains(np.array([1.0 + 5e-10]), tol=1e-9)
        assert not ball.contains(np.array([1.0 + 5e-9]), tol=1e-9)

    def test_distance_values(self):
        box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        assert np.isclose(box.distance(np.array([2.0, 0.5])), 1.0)
        assert np.isclose(box.distance(np.array([2.0, 2.0])), np.sqrt(2.0))

    def test_interior_margin(self):
        box = Box(np.array([0.0]), np.array([1.0]))
        assert box.contains_interior(np.array([0.5]), 0.4)
        assert not box.contains_interior(np.array([0.05]), 0.1)
        s = Simplex(2)
        assert s.contains_interior(s.center(), 0.1)
        assert not s.contains_interior(np.array([1.0, 0.0, 0.0]), 0.1)
        # interior test also requires sitting on the affine hull
        assert not s.contains_interior(np.array([0.5, 0.5, 0.5]), 0.1)


class TestDiameter:
    def test_values(self):
        assert np.isclose(Simplex(3).diameter("l2"), np.sqrt(2.0))
        assert np.isclose(Simplex(3).diameter("l1"), 2.0)
        assert np.isclose(Simplex(3).diameter("linf"), 1.0)
        ball = Ball(np.zeros(3), 2.0)
        assert np.isclose(ball.diameter("l2"), 4.0)
        assert np.isclose(ball.diameter("l1"), 4.0 * np.sqrt(3.0))
        assert np.isclose(ball.diameter("linf"), 4.0)
        box = Box(np.array([0.0, 0.0]), np.array([3.0, 4.0]))
        assert np.isclose(box.diameter("l2"), 5.0)
        assert np.isclose(box.diameter("l1"), 7.0)
        assert np.isclose(box.diameter("linf"), 4.0)

    def test_realized_by_feasible_pair(self):
        # the reported diameter is attained (not just an upper bound)
        ords = {"l1": 1, "l2": 2, "linf": np.inf}
        witnesses = {
            "simplex": (Simplex(2), np.eye(3)[0], np.eye(3)[1]),
            "box": (
                Box(np.array([0.0, -1.0]), np.array([2.0, 1.0])),
                np.array([0.0, -1.0]),
                np.array([2.0, 1.0]),
            ),
        }
        for dom, a, b in witnesses.values():
            for norm in NORMS:
                assert dom.contains(a) and dom.contains(b)
                got = np.linalg.norm(a - b, ord=ords[norm])
                assert np.isclose(got, dom.diameter(norm))
        ball = Ball(np.array([0.5, -0.5]), 1.5)
        for norm, u in (("l2", np.array([1.0, 0.0])), ("linf", np.array([1.0, 0.0])),
                        ("l1", np.array([1.0, 1.0]) / np.sqrt(2.0))):
            a = ball.center_point + ball.radius * u
            b = ball.center_point - ball.radius * u
            assert ball.contains(a, tol=1e-9) and ball.contains(b, tol=1e-9)
            assert np.isclose(np.linalg.norm(a - b, ord=ords[norm]), ball.diameter(norm))

    def test_never_exceeded_by_samples(self):
        rng = np.random.default_rng(4)
        ords = {"l1": 1, "l2": 2, "linf": np.inf}
        for dom in small_domains():
            pts = dom.sample(rng, 300)
            diffs = pts[:, None, :] - pts[None, :, :]
            for norm in NORMS:
                d = np.linalg.norm(diffs, ord=ords[norm], axis=-1)
                assert d.max() <= dom.diameter(norm) + 1e-9


class TestCenterAndNorms:
    def test_center_is_deep_inside(self):
        for dom in small_domains():
            c = dom.center()
            assert dom.contains(c, tol=1e-12)
            assert dom.contains_interior(c, 1e-6)

    def test_max_point_norm_examples(self):
        assert np.isclose(Simplex(4).max_point_norm(), 1.0)
        assert np.isclose(Ball(np.array([3.0, 0.0]), 1.0).max_point_norm(), 4.0)
        box = Box(np.array([-2.0, 0.0]), np.array([1.0, 1.0]))
        assert np.isclose(box.max_point_norm(), np.sqrt(5.0))

    def test_max_point_norm_bounds_samples(self):
        rng = np.random.default_rng(5)
        for dom in small_domains():
            pts = dom.sample(rng, 2000)
            assert np.linalg.norm(pts, axis=-1).max() <= dom.max_point_norm() + 1e-9

    def test_max_point_norm_attained_on_vertex_domains(self):
        for dom in (Simplex(3), Box(np.array([-1.0, -0.5]), np.array([0.5, 2.0]))):
            best = max(np.linalg.norm(v) for v in dom.vertices())
            assert np.isclose(best, dom.max_point_norm())


class TestLMO:
    def test_simplex_picks_smallest_coefficient(self):
        s = Simplex(2)
        assert np.allclose(s.lmo(np.array([3.0, 1.0, 2.0])), [0.0, 1.0, 0.0])
        # ties break to the lowest index
        assert np.allclose(s.lmo(np.array([1.0, 1.0, 5.0])), [1.0, 0.0, 0.0])
        assert np.allclose(s.lmo(np.zeros(3)), [1.0, 0.0, 0.0])

    def test_box_picks_active_corner(self):
        box = Box(np.array([-1.0, -1.0]), np.array([2.0, 2.0]))
        assert np.allclose(box.lmo(np.array([1.0, -1.0])), [-1.0, 2.0])
        # zero coefficients resolve to the lower corner
        assert np.allclose(box.lmo(np.array([0.0, 1.0])), [-1.0, -1.0])

    def test_ball_formula(self):
        ball = Ball(np.array([1.0, 1.0]), 2.0)
        g = np.array([3.0, 4.0])
        assert np.allclose(ball.lmo(g), ball.center_point - 2.0 * g / 5.0)
        assert np.allclose(ball.lmo(np.zeros(2)), ball.center_point)

    def test_optimal_over_vertices(self):
        rng = np.random.default_rng(6)
        for dom in (Simplex(3), Box(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 1.0, 3.0]))):
            verts = np.array(dom.vertices())
            for _ in range(500):
                g = rng.normal(size=dom.dim)
                val = g @ dom.lmo(g)
                assert val <= (verts @ g).min() + 1e-12

    def test_optimal_over_samples(self):
        rng = np.random.default_rng(7)
        for dom in small_domains():
            pts = dom.sample(rng, 500)
            for _ in range(50):
                g = rng.normal(size=dom.dim)
                u = dom.lmo(g)
                assert dom.contains(u, tol=1e-9)
                assert g @ u <= (pts @ g).min() + 1e-9

    def test_batched(self):
        rng = np.random.default_rng(8)
        for dom in small_domains():
            g = rng.normal(size=(7, dom.dim))
            batched = dom.lmo(g)
            for i in range(7):
                assert np.allclose(batched[i], dom.lmo(g[i]))


class TestVertices:
    def test_simplex(self):
        verts = Simplex(2).vertices()
        assert len(verts) == 3
        assert np.allclose(np.array(verts), np.eye(3))

    def test_box_corner_count(self):
        box = Box(np.zeros(3), np.ones(3))
        verts = np.array(box.vertices())
        assert verts.shape == (8, 3)
        assert len(np.unique(verts, axis=0)) == 8
        assert np.all(box.contains(verts))

    def test_box_cap(self):
        box = Box(np.zeros(21), np.ones(21))
        with pytest.raises(VertexEnumerationError):
            box.vertices()

    def test_smooth_sets_have_none(self):
        assert Ball(np.zeros(2), 1.0).vertices() is None
        prod = Product((Ball(np.zeros(2), 1.0), Box(np.zeros(1), np.ones(1))))
        assert prod.vertices() is None


class TestCovering:
    def test_frozen_counts(self):
        box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        assert box.covering_number_upper(0.25, "linf") == 4
        assert Ball(np.zeros(1), 1.0).covering_number_upper(1.0, "l2") == 3
        assert Simplex(1).covering_number_upper(0.5, "l2") == 4

    def test_points_match_reported_count_box_ball(self):
        box = Box(np.array([0.0, -1.0]), np.array([1.0, 1.0]))
        ball = Ball(np.array([0.2, -0.1]), 0.8)
        for dom in (box, ball):
            for norm in NORMS:
                for r in (0.2, 0.35, 0.7):
                    pts = dom.covering_points(r, norm)
                    assert len(pts) == dom.covering_number_upper(r, norm)

    def test_constructions_cover_dense_grid(self):
        cases = [
            (Box(np.array([0.0, 0.0]), np.array([1.0, 1.0])), 0.3),
            (Ball(np.array([0.2, -0.1]), 0.8), 0.3),
            (Simplex(2), 0.4),
        ]
        for dom, r in cases:
            grid = dense_grid(dom, r / 10.0)
            for norm in NORMS:
                anchors = dom.covering_points(r, norm)
                worst = min_dist_to_set(grid, anchors, norm).max()
                assert worst <= r + 1e-9, (type(dom).__name__, norm, worst)

    def test_packing_lower_bound(self):
        # a strict 2r-packing can never exceed the r-covering number
        cases = [
            Box(np.array([0.0, 0.0]), np.array([1.0, 1.0])),
            Ball(np.zeros(2), 1.0),
            Simplex(2),
            Product((Box(np.array([0.0]), np.array([1.0])), Box(np.array([0.0]), np.array([1.0])))),
        ]
        for dom in cases:
            for norm in ("l2", "linf"):
                for r in (0.23, 0.4):
                    grid = dense_grid(dom, r / 5.0)
                    packed = greedy_packing_count(grid, 2.0 * r, norm)
                    assert packed <= dom.covering_number_upper(r, norm)

    def test_monotone_in_radius(self):
        rs = np.linspace(0.1, 1.0, 10)
        for dom in small_domains():
            for norm in NORMS:
                counts = [dom.covering_number_upper(float(r), norm) for r in rs]
                assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_invalid_inputs(self):
        dom = Box(np.zeros(2), np.ones(2))
        with pytest.raises(ValueError):
            dom.covering_number_upper(0.0)
        with pytest.raises(ValueError):
            dom.covering_number_upper(-1.0)
        with pytest.raises(ValueError):
            dom.covering_number_upper(0.5, "l3")


class TestSampling:
    def test_samples_are_feasible(self):
        rng = np.random.default_rng(9)
        for dom in small_domains():
            pts = dom.sample(rng, 2000)
            assert pts.shape == (2000, dom.dim)
            assert np.all(dom.contains(pts, tol=1e-9))

    def test_single_draw_shape(self):
        rng = np.random.default_rng(10)
        for dom in small_domains():
            assert dom.sample(rng).shape == (dom.dim,)

    def test_seeded_determinism(self):
        for dom in small_domains():
            a = dom.sample_uniform(123)
            b = dom.sample_uniform(123)
            c = dom.sample_uniform(124)
            assert np.array_equal(a, b)
            assert not np.array_equal(a, c)

    def test_spread(self):
        # draws should not collapse onto a low-dimensional subset
        rng = np.random.default_rng(11)
        ball = Ball(np.zeros(2), 1.0)
        pts = ball.sample(rng, 4000)
        radii = np.linalg.norm(pts, axis=-1)
        assert radii.min() < 0.2 and radii.max() > 0.9
        frac_inner = np.mean(radii <= 0.5)  # area ratio is 1/4
        assert 0.15 < frac_inner < 0.35


class TestProduct:
    def test_split_join_roundtrip(self):
        prod = Product((Simplex(1), Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))))
        rng = np.random.default_rng(12)
        z = rng.normal(size=(5, prod.dim))
        parts = prod.split(z)
        assert parts[0].shape == (5, 2) and parts[1].shape == (5, 2)
        assert np.array_equal(prod.join(parts), z)

    def test_project_is_factorwise(self):
        f1 = Box(np.array([-1.0]), np.array([1.0]))
        f2 = Ball(np.zeros(2), 1.0)
        prod = Product((f1, f2))
        z = np.array([3.0, 2.0, 2.0])
        p = prod.project(z)
        assert np.allclose(p[:1], f1.project(z[:1]))
        assert np.allclose(p[1:], f2.project(z[1:]))

    def test_dim_bookkeeping(self):
        prod = Product((Simplex(2), Ball(np.zeros(2), 1.0), Box(np.zeros(1), np.ones(1))))
        assert prod.dim == 6
        assert [s.stop - s.start for s in prod.slices] == [3, 2, 1]


class TestValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            Simplex(2).project(np.zeros(2))
        with pytest.raises(ValueError):
            Ball(np.zeros(2), 1.0).lmo(np.zeros(3))

    def test_bad_constructions(self):
        with pytest.raises(ValueError):
            Simplex(0)
        with pytest.raises(ValueError):
            Ball(np.zeros(2), 0.0)
        with pytest.raises(ValueError):
            Box(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            Box(np.array([0.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            Product(())

    def test_bad_norm(self):
        with pytest.raises(ValueError):
            Simplex(1).diameter("l7")
