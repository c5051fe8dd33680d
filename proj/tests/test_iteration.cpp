#include "geokm/errors.hpp"
#include "geokm/iteration.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

using namespace geokm;

namespace {

Space euclid2() { return build_space({{"kind", "euclidean"}, {"dim", 2}}); }

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

Point origin2() { return vec2(0, 0); }

} // namespace

TEST_CASE("constant mapping halves toward the target from step one") {
    const Space s = euclid2();
    const Mapping t = make_constant_mapping(s, origin2());
    const Point x0 = vec2(1, 0);
    const Trace tr = km_iterate(s, t, constant_schedule(0.5, 2), x0, 16, nullptr);
    REQUIRE(tr.steps() == 16);
    // step 0 applies T^0 = id, so the decay starts at n = 1
    CHECK(dist(s, tr.points[1], x0) == 0.0);
    for (int n = 1; n <= 16; ++n) {
        const double expect = std::ldexp(1.0, -(n - 1));
        CHECK(dist(s, tr.points[n], origin2()) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(tr.residual[n] == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(tr.power_residual[0] == 0.0);
    CHECK(tr.lambda[5] == 0.5);
    CHECK(tr.k[5] == 0.0);
    CHECK(!tr.has_anchor);
}

TEST_CASE("quarter-turn rotation reaches (1/2, 1/2) at step two") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, std::acos(-1.0) / 2);
    const Trace tr = km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 0), 2, nullptr);
    CHECK(dist(s, tr.points[1], vec2(1, 0)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(dist(s, tr.points[2], vec2(0.5, 0.5)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("isometries validate; an expanding map does not") {
    const Space s = euclid2();
    const Mapping rot = make_rotation_mapping(s, 0.7);
    CHECK(validate_mapping(s, rot, 3, 16, 200, 1e-9).pass);

    Mapping doubling{"doubling",
                     [](const Point& p) { return Point(2.0 * std::get<Eigen::VectorXd>(p)); },
                     [](std::int64_t) { return 0.0; }, 0.0};
    const SampleReport rep = validate_mapping(s, doubling, 3, 8, 200, 1e-9);
    CHECK(!rep.pass);
    CHECK(rep.max_violation > 0.1);
}

TEST_CASE("toward mapping is nonexpansive on all three space kinds") {
    const Space spaces[3] = {euclid2(), build_space({{"kind", "hyperbolic-plane"}}),
                             tripod_tree()};
    for (const Space& s : spaces) {
        const Point target = s.kind == SpaceKind::metric_tree
                                 ? tree_vertex_point(s, 0)
                                 : (s.kind == SpaceKind::euclidean
                                        ? Point(origin2())
                                        : Point(DiskPoint{Eigen::Vector2d(0, 0)}));
        const Mapping t = make_toward_mapping(s, target, 0.3);
        INFO(s.kind_name());
        CHECK(validate_mapping(s, t, 5, 16, 200, default_axiom_tolerance(s)).pass);
    }
}

TEST_CASE("tree arm rotation is an isometry with the root fixed") {
    const Space s = tripod_tree();
    const Mapping t = make_tree_rotation_mapping(s, 1);
    CHECK(validate_mapping(s, t, 6, 16, 200, 1e-9).pass);
    const Point root = tree_vertex_point(s, 0);
    CHECK(dist(s, t.apply(root), root) == doctest::Approx(0.0).epsilon(1e-15));
    // a point one third along arm a maps onto arm b at the same depth
    const Point p = parse_point(s, {{"edge", 0}, {"offset", 1.0 / 3}});
    const Point q = t.apply(p);
    CHECK(dist(s, q, parse_point(s, {{"edge", 1}, {"offset", 1.0 / 3}})) ==
          doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_tree_rotation_mapping(euclid2(), 1), config_error);
}

TEST_CASE("lambda outside the schedule band stops the iteration") {
    const Space s = euclid2();
    const Mapping t = make_constant_mapping(s, origin2());
    CHECK_THROWS_WITH_AS(km_iterate(s, t, constant_schedule(0.1, 2), vec2(1, 0), 4, nullptr),
                         doctest::Contains("lambda"), hypothesis_error);
    CHECK_THROWS_AS(km_iterate(s, t, constant_schedule(0.95, 2), vec2(1, 0), 4, nullptr),
                    hypothesis_error);
    CHECK_THROWS_AS(schedule_from_config({{"lambda", "const:0.5"}, {"L", 1}}), config_error);
}

TEST_CASE("k sum over the declared cap stops the iteration") {
    const Space s = euclid2();
    Mapping t = make_rotation_mapping(s, 0.3);
    t.k = [](std::int64_t) { return 0.2; };
    t.K = 0.5;
    CHECK_THROWS_WITH_AS(km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 0), 8, nullptr),
                         doctest::Contains("k"), hypothesis_error);
}

TEST_CASE("negative k is rejected") {
    const Space s = euclid2();
    Mapping t = make_rotation_mapping(s, 0.3);
    t.k = [](std::int64_t) { return -0.1; };
    t.K = 1.0;
    CHECK_THROWS_AS(km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 0), 4, nullptr),
                    hypothesis_error);
}

TEST_CASE("non-finite coordinates raise numeric_error naming the step") {
    const Space s = euclid2();
    Mapping t{"nan", [](const Point&) { return Point(vec2(std::nan(""), 0)); },
              [](std::int64_t) { return 0.0; }, 0.0};
    CHECK_THROWS_AS(km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 0), 4, nullptr),
                    numeric_error);
}

TEST_CASE("anchor construction verifies its declarations") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, 0.7);
    const AnchorPoint a = make_anchor(s, t, vec2(3, 4), origin2(), std::nullopt, std::nullopt);
    CHECK(a.b == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(a.delta == 0.0);
    CHECK_THROWS_AS(make_anchor(s, t, vec2(3, 4), origin2(), 4.9, std::nullopt),
                    hypothesis_error);
    // a non-fixed anchor point needs a positive delta declaration
    CHECK_THROWS_AS(make_anchor(s, t, vec2(3, 4), vec2(1, 0), std::nullopt, std::nullopt),
                    hypothesis_error);
    const AnchorPoint loose = make_anchor(s, t, vec2(3, 4), vec2(1, 0), std::nullopt, 1.0);
    CHECK(loose.delta == 1.0);
}

TEST_CASE("audit passes on honest traces and anchors") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, 0.7);
    const AnchorPoint anchor = make_anchor(s, t, vec2(3, 4), origin2(), 5.0, std::nullopt);
    const Trace tr = km_iterate(s, t, constant_schedule(0.5, 2), vec2(3, 4), 64, &anchor);
    CHECK(tr.has_anchor);
    const AuditReport rep = trace_inequality_audit(s, t, tr, &anchor, t.K, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.families.size() == 4);
    for (const auto& f : rep.families) {
        INFO(f.family, " margin ", f.worst_margin);
        CHECK(f.worst_margin <= 1e-9);
    }
    CHECK(rep.reconstruction_max <= 1e-12);
}

TEST_CASE("audit without an anchor runs the unanchored families only") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, 0.7);
    const Trace tr = km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 2), 32, nullptr);
    const AuditReport rep = trace_inequality_audit(s, t, tr, nullptr, t.K, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.families.size() == 2);
}

TEST_CASE("tampered traces are caught by the integrity pass") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, 0.7);
    const Trace honest = km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 2), 16, nullptr);

    Trace bad_residual = honest;
    bad_residual.residual[7] += 1e-6;
    CHECK_THROWS_AS(trace_inequality_audit(s, t, bad_residual, nullptr, t.K, 1e-9),
                    integrity_error);

    Trace bad_point = honest;
    bad_point.points[9] = vec2(99, 99);
    CHECK_THROWS_AS(trace_inequality_audit(s, t, bad_point, nullptr, t.K, 1e-9),
                    integrity_error);

    Trace bad_k = honest;
    bad_k.k[3] = 0.5;
    CHECK_THROWS_AS(trace_inequality_audit(s, t, bad_k, nullptr, t.K, 1e-9), integrity_error);
}

TEST_CASE("trace CSV round-trips the residual column") {
    const Space s = euclid2();
    const Mapping t = make_rotation_mapping(s, 0.7);
    const Trace tr = km_iterate(s, t, constant_schedule(0.5, 2), vec2(1, 2), 32, nullptr);
    const std::string path = "trace_roundtrip_test.csv";
    write_trace_csv(tr, path);
    const std::vector<double> res = read_residual_csv(path);
    REQUIRE(res.size() == tr.residual.size());
    for (std::size_t i = 0; i < res.size(); ++i) CHECK(res[i] == tr.residual[i]);
    std::remove(path.c_str());
}

TEST_CASE("mapping config spec round-trip") {
    const Space s = euclid2();
    const Mapping m = mapping_from_config(
        s, {{"name", "rotation"},
            {"angle", 0.7},
            {"k", {{"kind", "table"}, {"values", {0.25, 0.125}}}},
            {"K", 0.5}});
    CHECK(m.K == 0.5);
    CHECK(m.k(0) == 0.25);
    CHECK(m.k(1) == 0.125);
    CHECK(m.k(2) == 0.0);
    const Mapping g = mapping_from_config(
        s, {{"name", "rotation"}, {"angle", 0.1},
            {"k", {{"kind", "geometric"}, {"c", 0.5}, {"q", 0.5}}}, {"K", 1}});
    CHECK(g.k(0) == 0.5);
    CHECK(g.k(3) == doctest::Approx(0.0625));
    CHECK_THROWS_AS(mapping_from_config(s, {{"name", "rotation"},
                                            {"k", {{"kind", "geometric"}}}}),
                    config_error);
    CHECK_THROWS_AS(mapping_from_config(s, {{"name", "blur"}}), config_error);
    // bare K without a k spec is honored as the cap
    const Mapping bare = mapping_from_config(s, {{"name", "rotation"}, {"angle", 0.1}, {"K", 2}});
    CHECK(bare.K == 2.0);
    CHECK(bare.k(0) == 0.0);
}

TEST_CASE("schedule config parses constants and tables") {
    const Schedule c = schedule_from_config({{"lambda", "const:0.25"}, {"L", 4}});
    CHECK(c.L == 4);
    CHECK(c.lambda(7) == 0.25);
    const Schedule t = schedule_from_config({{"lambda", "table:[0.5,0.25,0.75]"}, {"L", 4}});
    CHECK(t.lambda(0) == 0.5);
    CHECK(t.lambda(2) == 0.75);
    CHECK(t.lambda(100) == 0.75); // repeats the last entry
    CHECK_THROWS_AS(schedule_from_config({{"lambda", "const:nope"}, {"L", 2}}), config_error);
    CHECK_THROWS_AS(schedule_from_config({{"lambda", "sched:1"}, {"L", 2}}), config_error);
}
