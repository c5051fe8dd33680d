#include "geokm/errors.hpp"
#include "geokm/geometry.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace geokm;

namespace {

Space euclid(int dim) { return build_space({{"kind", "euclidean"}, {"dim", dim}}); }

Space disk() { return build_space({{"kind", "hyperbolic-plane"}}); }

Space tripod_tree() {
    return build_space({{"kind", "metric-tree"},
                        {"vertices", {"root", "a", "b", "c", "la", "lb", "lc"}},
                        {"edges",
                         {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0},
                          {1, 4, 0.5}, {2, 5, 0.5}, {3, 6, 0.5}}}});
}

Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

} // namespace

TEST_CASE("euclidean distance and combination") {
    const Space s = euclid(2);
    const Point a = vec2(0, 0), b = vec2(3, 4);
    CHECK(dist(s, a, b) == doctest::Approx(5.0).epsilon(1e-15));
    const Point mid = combine(s, a, b, 0.5);
    CHECK(dist(s, a, mid) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(dist(s, mid, b) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(dist(s, combine(s, a, b, 0.0), a) == 0.0);
    CHECK(dist(s, combine(s, a, b, 1.0), b) == 0.0);
    CHECK_THROWS_AS(combine(s, a, b, -0.01), std::domain_error);
    CHECK_THROWS_AS(combine(s, a, b, 1.01), std::domain_error);
}

TEST_CASE("dimension mismatch is a domain error") {
    const Space s = euclid(3);
    CHECK_THROWS_AS(dist(s, Point(vec2(1, 2)), Point(vec2(3, 4))), std::domain_error);
}

TEST_CASE("near-coincident combination returns the left input") {
    const Space s = euclid(2);
    const Point a = vec2(1, 1);
    const Point b = vec2(1 + 1e-14, 1);
    const Point w = combine(s, a, b, 0.7);
    CHECK(dist(s, w, a) == 0.0);
}

TEST_CASE("three-vertex path tree hits its middle vertex") {
    const Space s = build_space({{"kind", "metric-tree"},
                                 {"vertices", {"A", "B", "C"}},
                                 {"edges", {{"A", "B", 1.0}, {"B", "C", 2.0}}}});
    const Point a = tree_vertex_point(s, 0);
    const Point b = tree_vertex_point(s, 1);
    const Point c = tree_vertex_point(s, 2);
    CHECK(dist(s, a, c) == doctest::Approx(3.0).epsilon(1e-15));
    const Point w = combine(s, a, c, 1.0 / 3.0);
    CHECK(dist(s, w, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tree distances match the Floyd-Warshall oracle") {
    const Space s = tripod_tree();
    const oracles::TreeOracle oracle(s.tree);
    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        const Point p = sample_point(s, rng);
        const Point q = sample_point(s, rng);
        const auto& tp = std::get<TreePoint>(p);
        const auto& tq = std::get<TreePoint>(q);
        const double lib = dist(s, p, q);
        const double ref = oracle.point_dist(s.tree, tp, tq);
        CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("tree combination is characterized by two-sided oracle distances") {
    const Space s = tripod_tree();
    const oracles::TreeOracle oracle(s.tree);
    Rng rng(43);
    for (int i = 0; i < 2000; ++i) {
        const Point p = sample_point(s, rng);
        const Point q = sample_point(s, rng);
        const double lam = rng.unit();
        const double d = oracle.point_dist(s.tree, std::get<TreePoint>(p), std::get<TreePoint>(q));
        const Point w = combine(s, p, q, lam);
        const auto& tw = std::get<TreePoint>(w);
        const double dw1 = oracle.point_dist(s.tree, std::get<TreePoint>(p), tw);
        const double dw2 = oracle.point_dist(s.tree, tw, std::get<TreePoint>(q));
        CHECK(dw1 == doctest::Approx(lam * d).epsilon(1e-10));
        CHECK(dw2 == doctest::Approx((1 - lam) * d).epsilon(1e-10));
    }
}

TEST_CASE("disk radial distance equals the metric integral") {
    const Space s = disk();
    const Point o = DiskPoint{Eigen::Vector2d(0, 0)};
    const Point h = DiskPoint{Eigen::Vector2d(0.5, 0)};
    const double lib = dist(s, o, h);
    CHECK(lib == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(lib == doctest::Approx(oracles::disk_radial_quadrature(0.5)).epsilon(1e-12));
    for (double r : {0.1, 0.3, 0.7, 0.9, 0.99}) {
        const Point p = DiskPoint{Eigen::Vector2d(r, 0)};
        CHECK(dist(s, o, p) ==
              doctest::Approx(oracles::disk_radial_quadrature(r)).epsilon(1e-11));
    }
}

TEST_CASE("disk distances match the complex-atanh oracle") {
    const Space s = disk();
    Rng rng(44);
    for (int i = 0; i < 2000; ++i) {
        const Point p = sample_point(s, rng);
        const Point q = sample_point(s, rng);
        const double lib = dist(s, p, q);
        const double ref = oracles::disk_distance(std::get<DiskPoint>(p).z,
                                                  std::get<DiskPoint>(q).z);
        CHECK(lib == doctest::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("disk combination is characterized by two-sided oracle distances") {
    const Space s = disk();
    Rng rng(45);
    for (int i = 0; i < 2000; ++i) {
        const Point p = sample_point(s, rng);
        const Point q = sample_point(s, rng);
        const double lam = rng.unit();
        const double d = oracles::disk_distance(std::get<DiskPoint>(p).z,
                                                std::get<DiskPoint>(q).z);
        const Point w = combine(s, p, q, lam);
        const double dw1 =
            oracles::disk_distance(std::get<DiskPoint>(p).z, std::get<DiskPoint>(w).z);
        const double dw2 =
            oracles::disk_distance(std::get<DiskPoint>(w).z, std::get<DiskPoint>(q).z);
        CHECK(dw1 == doctest::Approx(lam * d).epsilon(1e-8));
        CHECK(dw2 == doctest::Approx((1 - lam) * d).epsilon(1e-8));
    }
}

TEST_CASE("bad tree configs are rejected with the right complaint") {
    auto build = [](nlohmann::json edges) {
        return build_space({{"kind", "metric-tree"},
                            {"vertices", {"a", "b", "c"}},
                            {"edges", std::move(edges)}});
    };
    CHECK_THROWS_WITH_AS(build({{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}),
                         doctest::Contains("cycle"), config_error);
    CHECK_THROWS_WITH_AS(build({{0, 1, 1.0}}), doctest::Contains("disconnected"), config_error);
    CHECK_THROWS_WITH_AS(build({{0, 1, 1.0}, {0, 1, 2.0}}), doctest::Contains("cycle"),
                         config_error);
    CHECK_THROWS_WITH_AS(build({{0, 0, 1.0}, {1, 2, 1.0}}), doctest::Contains("cycle"),
                         config_error);
    CHECK_THROWS_WITH_AS(build({{0, 1, 0.0}, {1, 2, 1.0}}), doctest::Contains("weight"),
                         config_error);
    CHECK_THROWS_AS(build_space({{"kind", "nowhere"}}), config_error);
    CHECK_THROWS_AS(build_space({{"kind", "euclidean"}, {"dim", 0}}), config_error);
    CHECK_THROWS_AS(build_space({{"kind", "metric-tree"},
                                 {"vertices", {"a", "a"}},
                                 {"edges", {{0, 1, 1.0}}}}),
                    config_error);
}

TEST_CASE("point JSON round-trips") {
    const Space se = euclid(3);
    const Point pe = parse_point(se, {1.0, 2.0, 3.0});
    CHECK(dist(se, pe, parse_point(se, point_to_json(se, pe))) == 0.0);
    CHECK_THROWS_AS(parse_point(se, {1.0, 2.0}), config_error);

    const Space sd = disk();
    const Point pd = parse_point(sd, {0.25, -0.5});
    CHECK(dist(sd, pd, parse_point(sd, point_to_json(sd, pd))) == 0.0);
    CHECK_THROWS_AS(parse_point(sd, {1.0, 0.5}), config_error);

    const Space st = tripod_tree();
    const Point pt = parse_point(st, {{"edge", 2}, {"offset", 0.25}});
    CHECK(dist(st, pt, parse_point(st, point_to_json(st, pt))) == 0.0);
    const Point pv = parse_point(st, {{"vertex", "lb"}});
    CHECK(dist(st, pv, tree_vertex_point(st, 5)) == 0.0);
    CHECK_THROWS_AS(parse_point(st, {{"edge", 99}, {"offset", 0.0}}), config_error);
    CHECK_THROWS_AS(parse_point(st, {{"edge", 0}, {"offset", 7.0}}), config_error);
    CHECK_THROWS_AS(parse_point(st, {{"vertex", "zz"}}), config_error);
}

TEST_CASE("convexity axioms pass on all three space kinds") {
    for (const Space& s : {euclid(2), euclid(5), disk(), tripod_tree()}) {
        const double tol = default_axiom_tolerance(s);
        for (const auto& r : check_convexity_axioms(s, 7, 3000, tol)) {
            INFO(s.kind_name(), " axiom ", r.axiom, " violation ", r.max_violation);
            CHECK(r.pass);
        }
    }
}

TEST_CASE("a lambda-squared combination map fails the W2 axiom") {
    const Space s = euclid(2);
    const CombineFn broken = [](const Space& sp, const Point& x, const Point& y, double lam) {
        return combine(sp, x, y, lam * lam);
    };
    bool w2_failed = false;
    for (const auto& r : check_convexity_axioms(s, broken, 11, 2000, 1e-9)) {
        if (r.axiom == "W2") {
            w2_failed = !r.pass;
            CHECK(r.max_violation > 0.01);
        }
    }
    CHECK(w2_failed);
}

TEST_CASE("balls are convex under combination") {
    for (const Space& s : {euclid(3), disk(), tripod_tree()}) {
        Rng rng(46);
        for (int i = 0; i < 500; ++i) {
            const Point a = sample_point(s, rng);
            const Point x = sample_point(s, rng);
            const Point y = sample_point(s, rng);
            const double r = std::max(dist(s, a, x), dist(s, a, y));
            const Point w = combine(s, x, y, rng.unit());
            CHECK(dist(s, a, w) <= r + 1e-7);
        }
    }
}

TEST_CASE("sampler is deterministic per seed") {
    Rng a(123), b(123), c(124);
    bool same = true, diff = false;
    for (int i = 0; i < 64; ++i) {
        const double ua = a.unit(), ub = b.unit(), uc = c.unit();
        same = same && ua == ub;
        diff = diff || ua != uc;
        CHECK(ua >= 0.0);
        CHECK(ua < 1.0);
    }
    CHECK(same);
    CHECK(diff);
}
