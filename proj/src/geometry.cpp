#include "geokm/geometry.hpp"

#include "geokm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <set>

namespace geokm {

namespace {

constexpr double kCoincidentGuard = 1e-12;
constexpr double kTreeOffsetSlack = 1e-9;
constexpr double kDiskSamplingRadius = 0.999;

const Eigen::VectorXd& as_euclid(const Space& s, const Point& p) {
    const auto* v = std::get_if<Eigen::VectorXd>(&p);
    if (!v) throw std::domain_error("point is not a euclidean point");
    if (v->size() != s.dim)
        throw std::domain_error("euclidean point has dimension " + std::to_string(v->size()) +
                                ", space has " + std::to_string(s.dim));
    return *v;
}

const DiskPoint& as_disk(const Point& p) {
    const auto* v = std::get_if<DiskPoint>(&p);
    if (!v) throw std::domain_error("point is not a hyperbolic-plane point");
    if (v->z.norm() >= 1.0) throw std::domain_error("hyperbolic-plane point outside the open unit disk");
    return *v;
}

TreePoint as_tree(const Space& s, const Point& p) {
    const auto* v = std::get_if<TreePoint>(&p);
    if (!v) throw std::domain_error("point is not a metric-tree point");
    if (v->edge < 0 || v->edge >= static_cast<int>(s.tree.edges.size()))
        throw std::domain_error("tree point references unknown edge " + std::to_string(v->edge));
    const double w = s.tree.edges[v->edge].weight;
    if (v->offset < -kTreeOffsetSlack || v->offset > w + kTreeOffsetSlack)
        throw std::domain_error("tree point offset outside its edge");
    TreePoint q = *v;
    q.offset = std::clamp(q.offset, 0.0, w);
    return q;
}

double disk_dist(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double num = (a - b).squaredNorm();
    const double den = (1.0 - a.squaredNorm()) * (1.0 - b.squaredNorm());
    const double s = 2.0 * num / den;
    // arccosh(1 + s), stable for small s.
    return std::log1p(s + std::sqrt(s * (s + 2.0)));
}

int offset_endpoint(const TreeEdge& e, int vertex) {
    if (e.u == vertex) return 0;
    if (e.v == vertex) return 1;
    throw std::logic_error("vertex not on edge");
}

double endpoint_offset(const TreeEdge& e, int vertex) {
    return offset_endpoint(e, vertex) == 0 ? 0.0 : e.weight;
}

struct TreeSeg {
    int edge;
    double from;
    double to;
    double length() const { return std::abs(to - from); }
};

// Cheapest (exit vertex, entry vertex) pair for a geodesic between points on
// two distinct edges. Every candidate is the length of a genuine walk, and
// the geodesic is among them, so the min is the distance.
struct TreeRoute {
    double total;
    int exit_vertex;
    int entry_vertex;
};

TreeRoute tree_route(const TreeTopology& t, const TreePoint& p, const TreePoint& q) {
    const TreeEdge& ep = t.edges[p.edge];
    const TreeEdge& eq = t.edges[q.edge];
    const std::pair<int, double> exits[2] = {{ep.u, p.offset}, {ep.v, ep.weight - p.offset}};
    const std::pair<int, double> entries[2] = {{eq.u, q.offset}, {eq.v, eq.weight - q.offset}};
    TreeRoute best{std::numeric_limits<double>::infinity(), -1, -1};
    for (const auto& [a, ca] : exits)
        for (const auto& [b, cb] : entries) {
            const double total = ca + t.vertex_dist(a, b) + cb;
            if (total < best.total) best = {total, a, b};
        }
    return best;
}

std::vector<TreeSeg> tree_geodesic(const TreeTopology& t, const TreePoint& p, const TreePoint& q) {
    if (p.edge == q.edge) return {{p.edge, p.offset, q.offset}};
    const TreeRoute route = tree_route(t, p, q);
    std::vector<TreeSeg> segs;
    segs.push_back({p.edge, p.offset, endpoint_offset(t.edges[p.edge], route.exit_vertex)});
    const int meet = t.lca(route.exit_vertex, route.entry_vertex);
    for (int v = route.exit_vertex; v != meet; v = t.parent[v]) {
        const int e = t.parent_edge[v];
        segs.push_back({e, endpoint_offset(t.edges[e], v), endpoint_offset(t.edges[e], t.parent[v])});
    }
    std::vector<TreeSeg> down;
    for (int v = route.entry_vertex; v != meet; v = t.parent[v]) {
        const int e = t.parent_edge[v];
        down.push_back({e, endpoint_offset(t.edges[e], t.parent[v]), endpoint_offset(t.edges[e], v)});
    }
    segs.insert(segs.end(), down.rbegin(), down.rend());
    segs.push_back({q.edge, endpoint_offset(t.edges[q.edge], route.entry_vertex), q.offset});
    return segs;
}

TreePoint tree_point_at(const std::vector<TreeSeg>& segs, double s) {
    double acc = 0.0;
    for (const auto& seg : segs) {
        const double len = seg.length();
        if (s <= acc + len && len > 0.0) {
            const double lo = std::min(seg.from, seg.to);
            const double hi = std::max(seg.from, seg.to);
            const double dir = seg.to >= seg.from ? 1.0 : -1.0;
            const double off = std::clamp(seg.from + dir * (s - acc), lo, hi);
            return {seg.edge, off};
        }
        acc += len;
    }
    for (auto it = segs.rbegin(); it != segs.rend(); ++it)
        if (it->length() > 0.0) return {it->edge, it->to};
    return {segs.back().edge, segs.back().to};
}

} // namespace

int TreeTopology::find_vertex(const std::string& name) const {
    for (int i = 0; i < vertex_count(); ++i)
        if (vertex_names[i] == name) return i;
    throw config_error("unknown vertex name '" + name + "'");
}

int TreeTopology::lca(int a, int b) const {
    while (depth[a] > depth[b]) a = parent[a];
    while (depth[b] > depth[a]) b = parent[b];
    while (a != b) {
        a = parent[a];
        b = parent[b];
    }
    return a;
}

double TreeTopology::vertex_dist(int a, int b) const {
    const int m = lca(a, b);
    return depth_w[a] + depth_w[b] - 2.0 * depth_w[m];
}

std::string Space::kind_name() const {
    switch (kind) {
    case SpaceKind::euclidean: return "euclidean";
    case SpaceKind::hyperbolic_plane: return "hyperbolic-plane";
    case SpaceKind::metric_tree: return "metric-tree";
    }
    return "?";
}

Space build_space(const nlohmann::json& config) {
    if (!config.is_object() || !config.contains("kind") || !config["kind"].is_string())
        throw config_error("space config needs a string 'kind'");
    const std::string kind = config["kind"].get<std::string>();
    Space s;
    if (kind == "euclidean") {
        s.kind = SpaceKind::euclidean;
        if (!config.contains("dim") || !config["dim"].is_number_integer())
            throw config_error("euclidean space needs an integer 'dim'");
        s.dim = config["dim"].get<int>();
        if (s.dim < 1) throw config_error("euclidean dim must be >= 1");
        return s;
    }
    if (kind == "hyperbolic-plane") {
        s.kind = SpaceKind::hyperbolic_plane;
        s.dim = 2;
        return s;
    }
    if (kind != "metric-tree") throw config_error("unknown space kind '" + kind + "'");

    s.kind = SpaceKind::metric_tree;
    TreeTopology& t = s.tree;
    if (!config.contains("vertices") || !config["vertices"].is_array() || config["vertices"].empty())
        throw config_error("metric-tree needs a non-empty 'vertices' array");
    for (const auto& v : config["vertices"]) {
        if (!v.is_string()) throw config_error("tree vertex names must be strings");
        t.vertex_names.push_back(v.get<std::string>());
    }
    {
        std::set<std::string> uniq(t.vertex_names.begin(), t.vertex_names.end());
        if (uniq.size() != t.vertex_names.size()) throw config_error("duplicate tree vertex name");
    }
    const int n = t.vertex_count();
    if (!config.contains("edges") || !config["edges"].is_array())
        throw config_error("metric-tree needs an 'edges' array");
    auto vertex_ref = [&](const nlohmann::json& j) -> int {
        if (j.is_string()) return t.find_vertex(j.get<std::string>());
        if (j.is_number_integer()) {
            const int i = j.get<int>();
            if (i < 0 || i >= n) throw config_error("edge endpoint index out of range");
            return i;
        }
        throw config_error("edge endpoints must be names or indices");
    };
    std::set<std::pair<int, int>> seen;
    for (const auto& e : config["edges"]) {
        if (!e.is_array() || e.size() != 3) throw config_error("each edge must be [u, v, weight]");
        TreeEdge edge;
        edge.u = vertex_ref(e[0]);
        edge.v = vertex_ref(e[1]);
        if (!e[2].is_number()) throw config_error("edge weight must be a number");
        edge.weight = e[2].get<double>();
        if (edge.weight <= 0.0) throw config_error("non-positive edge weight");
        if (edge.u == edge.v) throw config_error("tree has a cycle (self-loop)");
        if (!seen.insert({std::min(edge.u, edge.v), std::max(edge.u, edge.v)}).second)
            throw config_error("tree has a cycle (duplicate edge)");
        t.edges.push_back(edge);
    }
    if (static_cast<int>(t.edges.size()) > n - 1) throw config_error("tree has a cycle");
    if (static_cast<int>(t.edges.size()) < n - 1) throw config_error("tree is disconnected");

    t.adjacency.assign(n, {});
    for (int i = 0; i < static_cast<int>(t.edges.size()); ++i) {
        t.adjacency[t.edges[i].u].push_back({i, t.edges[i].v});
        t.adjacency[t.edges[i].v].push_back({i, t.edges[i].u});
    }
    t.parent.assign(n, -1);
    t.parent_edge.assign(n, -1);
    t.depth.assign(n, -1);
    t.depth_w.assign(n, 0.0);
    std::deque<int> queue{0};
    t.depth[0] = 0;
    int visited = 0;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        ++visited;
        for (const auto& [e, nbr] : t.adjacency[v]) {
            if (t.depth[nbr] >= 0) continue;
            t.depth[nbr] = t.depth[v] + 1;
            t.depth_w[nbr] = t.depth_w[v] + t.edges[e].weight;
            t.parent[nbr] = v;
            t.parent_edge[nbr] = e;
            queue.push_back(nbr);
        }
    }
    if (visited != n) throw config_error("tree is disconnected");
    return s;
}

double dist(const Space& s, const Point& x, const Point& y) {
    switch (s.kind) {
    case SpaceKind::euclidean:
        return (as_euclid(s, x) - as_euclid(s, y)).norm();
    case SpaceKind::hyperbolic_plane:
        return disk_dist(as_disk(x).z, as_disk(y).z);
    case SpaceKind::metric_tree: {
        const TreePoint p = as_tree(s, x);
        const TreePoint q = as_tree(s, y);
        if (p.edge == q.edge) return std::abs(p.offset - q.offset);
        return tree_route(s.tree, p, q).total;
    }
    }
    throw std::logic_error("unreachable");
}

Point combine(const Space& s, const Point& x, const Point& y, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::domain_error("combination parameter must lie in [0, 1]");
    const double d = dist(s, x, y);
    if (lambda == 0.0) return x;
    if (lambda == 1.0) return y;
    if (d < kCoincidentGuard) return x;
    switch (s.kind) {
    case SpaceKind::euclidean: {
        const Eigen::VectorXd& a = as_euclid(s, x);
        const Eigen::VectorXd& b = as_euclid(s, y);
        return Point(Eigen::VectorXd((1.0 - lambda) * a + lambda * b));
    }
    case SpaceKind::hyperbolic_plane: {
        const std::complex<double> za(as_disk(x).z.x(), as_disk(x).z.y());
        const std::complex<double> zb(as_disk(y).z.x(), as_disk(y).z.y());
        // Translate x to the origin, move along the straightened geodesic,
        // translate back.
        const std::complex<double> u = (zb - za) / (1.0 - std::conj(za) * zb);
        const double rho = std::tanh(lambda * d / 2.0);
        const std::complex<double> v = std::abs(u) > 0.0 ? rho * u / std::abs(u)
                                                         : std::complex<double>(0.0, 0.0);
        const std::complex<double> w = (v + za) / (1.0 + std::conj(za) * v);
        return Point(DiskPoint{Eigen::Vector2d(w.real(), w.imag())});
    }
    case SpaceKind::metric_tree: {
        const TreePoint p = as_tree(s, x);
        const TreePoint q = as_tree(s, y);
        const auto segs = tree_geodesic(s.tree, p, q);
        return Point(tree_point_at(segs, lambda * d));
    }
    }
    throw std::logic_error("unreachable");
}

Point tree_vertex_point(const Space& s, int vertex) {
    if (s.kind != SpaceKind::metric_tree) throw std::domain_error("not a metric tree");
    const TreeTopology& t = s.tree;
    if (vertex < 0 || vertex >= t.vertex_count()) throw std::domain_error("vertex index out of range");
    int best_edge = -1;
    for (const auto& [e, nbr] : t.adjacency[vertex]) {
        (void)nbr;
        if (best_edge < 0 || e < best_edge) best_edge = e;
    }
    if (best_edge < 0) throw std::logic_error("isolated vertex in validated tree");
    return Point(TreePoint{best_edge, endpoint_offset(t.edges[best_edge], vertex)});
}

Point canonical_point(const Space& s, const Point& p) {
    if (s.kind != SpaceKind::metric_tree) return p;
    const TreePoint tp = as_tree(s, p);
    const TreeEdge& e = s.tree.edges[tp.edge];
    if (tp.offset == 0.0) return tree_vertex_point(s, e.u);
    if (tp.offset == e.weight) return tree_vertex_point(s, e.v);
    return Point(tp);
}

nlohmann::json point_to_json(const Space& s, const Point& p) {
    switch (s.kind) {
    case SpaceKind::euclidean: {
        const Eigen::VectorXd& v = as_euclid(s, p);
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
        return a;
    }
    case SpaceKind::hyperbolic_plane: {
        const DiskPoint& d = as_disk(p);
        return nlohmann::json::array({d.z.x(), d.z.y()});
    }
    case SpaceKind::metric_tree: {
        const TreePoint t = as_tree(s, p);
        return nlohmann::json{{"edge", t.edge}, {"offset", t.offset}};
    }
    }
    throw std::logic_error("unreachable");
}

Point parse_point(const Space& s, const nlohmann::json& j) {
    switch (s.kind) {
    case SpaceKind::euclidean: {
        if (!j.is_array() || static_cast<int>(j.size()) != s.dim)
            throw config_error("euclidean point must be an array of length dim");
        Eigen::VectorXd v(s.dim);
        for (int i = 0; i < s.dim; ++i) v[i] = j[i].get<double>();
        return Point(v);
    }
    case SpaceKind::hyperbolic_plane: {
        if (!j.is_array() || j.size() != 2)
            throw config_error("hyperbolic-plane point must be [x, y]");
        DiskPoint d{Eigen::Vector2d(j[0].get<double>(), j[1].get<double>())};
        if (d.z.norm() >= 1.0) throw config_error("hyperbolic-plane point outside the open unit disk");
        return Point(d);
    }
    case SpaceKind::metric_tree: {
        if (j.is_object() && j.contains("vertex"))
            return tree_vertex_point(s, s.tree.find_vertex(j["vertex"].get<std::string>()));
        if (j.is_object() && j.contains("edge") && j.contains("offset")) {
            TreePoint t{j["edge"].get<int>(), j["offset"].get<double>()};
            try {
                as_tree(s, Point(t));
            } catch (const std::domain_error& e) {
                throw config_error(e.what());
            }
            return Point(t);
        }
        throw config_error("tree point must be {\"edge\",\"offset\"} or {\"vertex\"}");
    }
    }
    throw std::logic_error("unreachable");
}

std::uint64_t Rng::next() {
    // splitmix64: tiny, seedable, identical everywhere.
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * unit(); }

std::uint64_t Rng::integer(std::uint64_t n) { return n ? next() % n : 0; }

Point sample_point(const Space& s, Rng& rng) {
    switch (s.kind) {
    case SpaceKind::euclidean: {
        Eigen::VectorXd v(s.dim);
        for (int i = 0; i < s.dim; ++i) v[i] = rng.uniform(-5.0, 5.0);
        return Point(v);
    }
    case SpaceKind::hyperbolic_plane: {
        for (;;) {
            const Eigen::Vector2d z(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            if (z.norm() <= kDiskSamplingRadius) return Point(DiskPoint{z});
        }
    }
    case SpaceKind::metric_tree: {
        const int e = static_cast<int>(rng.integer(s.tree.edges.size()));
        return Point(TreePoint{e, rng.uniform(0.0, s.tree.edges[e].weight)});
    }
    }
    throw std::logic_error("unreachable");
}

double default_axiom_tolerance(const Space& s) {
    return s.kind == SpaceKind::hyperbolic_plane ? 1e-7 : 1e-9;
}

nlohmann::json sample_report_to_json(const SampleReport& r) {
    return nlohmann::json{{"axiom", r.axiom},
                          {"samples", r.samples},
                          {"max_violation", r.max_violation},
                          {"pass", r.pass}};
}

namespace {

double sample_lambda(Rng& rng) {
    const auto pick = rng.integer(16);
    if (pick == 0) return 0.0;
    if (pick == 1) return 1.0;
    if (pick == 2) return 0.5;
    return rng.unit();
}

} // namespace

std::vector<SampleReport> check_convexity_axioms(const Space& s, const CombineFn& w,
                                                 std::uint64_t seed, long samples, double tol) {
    Rng rng(seed);
    std::vector<SampleReport> out;

    SampleReport w1{"W1", samples, 0.0, false};
    for (long i = 0; i < samples; ++i) {
        const Point x = sample_point(s, rng), y = sample_point(s, rng), z = sample_point(s, rng);
        const double l = sample_lambda(rng);
        const Point m = w(s, x, y, l);
        const double v = dist(s, z, m) - ((1.0 - l) * dist(s, z, x) + l * dist(s, z, y));
        w1.max_violation = std::max(w1.max_violation, v);
    }
    w1.pass = w1.max_violation <= tol;
    out.push_back(w1);

    SampleReport w2{"W2", samples, 0.0, false};
    for (long i = 0; i < samples; ++i) {
        const Point x = sample_point(s, rng), y = sample_point(s, rng);
        const double l = sample_lambda(rng), m = sample_lambda(rng);
        const double v = std::abs(dist(s, w(s, x, y, l), w(s, x, y, m)) -
                                  std::abs(l - m) * dist(s, x, y));
        w2.max_violation = std::max(w2.max_violation, v);
    }
    w2.pass = w2.max_violation <= tol;
    out.push_back(w2);

    SampleReport w3{"W3", samples, 0.0, false};
    for (long i = 0; i < samples; ++i) {
        const Point x = sample_point(s, rng), y = sample_point(s, rng);
        const double l = sample_lambda(rng);
        const double v = dist(s, w(s, x, y, l), w(s, y, x, 1.0 - l));
        w3.max_violation = std::max(w3.max_violation, v);
    }
    w3.pass = w3.max_violation <= tol;
    out.push_back(w3);

    SampleReport w4{"W4", samples, 0.0, false};
    for (long i = 0; i < samples; ++i) {
        const Point x = sample_point(s, rng), y = sample_point(s, rng);
        const Point zz = sample_point(s, rng), ww = sample_point(s, rng);
        const double l = sample_lambda(rng);
        const double v = dist(s, w(s, x, zz, l), w(s, y, ww, l)) -
                         ((1.0 - l) * dist(s, x, y) + l * dist(s, zz, ww));
        w4.max_violation = std::max(w4.max_violation, v);
    }
    w4.pass = w4.max_violation <= tol;
    out.push_back(w4);

    SampleReport seg{"segment-identity", samples, 0.0, false};
    for (long i = 0; i < samples; ++i) {
        const Point x = sample_point(s, rng), y = sample_point(s, rng);
        const double l = sample_lambda(rng);
        const Point m = w(s, x, y, l);
        const double d = dist(s, x, y);
        const double v = std::max(std::abs(dist(s, x, m) - l * d),
                                  std::abs(dist(s, y, m) - (1.0 - l) * d));
        seg.max_violation = std::max(seg.max_violation, v);
    }
    seg.pass = seg.max_violation <= tol;
    out.push_back(seg);

    return out;
}

std::vector<SampleReport> check_convexity_axioms(const Space& s, std::uint64_t seed,
                                                 long samples, double tol) {
    return check_convexity_axioms(
        s, [](const Space& sp, const Point& x, const Point& y, double l) { return combine(sp, x, y, l); },
        seed, samples, tol);
}

} // namespace geokm
