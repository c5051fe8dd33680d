#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace geokm {

// Point of the Poincaré disk model, |z| < 1.
struct DiskPoint {
    Eigen::Vector2d z;
};

// Point on a metric tree: position `offset` along edge `edge`, measured from
// the edge's first endpoint. 0 <= offset <= weight(edge).
struct TreePoint {
    int edge = -1;
    double offset = 0.0;
};

using Point = std::variant<Eigen::VectorXd, DiskPoint, TreePoint>;

enum class SpaceKind { euclidean, hyperbolic_plane, metric_tree };

struct TreeEdge {
    int u = -1;
    int v = -1;
    double weight = 0.0;
};

struct TreeTopology {
    std::vector<std::string> vertex_names;
    std::vector<TreeEdge> edges;
    // Derived, rooted at vertex 0.
    std::vector<int> parent;
    std::vector<int> parent_edge;
    std::vector<int> depth;
    std::vector<double> depth_w;
    std::vector<std::vector<std::pair<int, int>>> adjacency; // (edge, neighbour)

    int vertex_count() const { return static_cast<int>(vertex_names.size()); }
    int find_vertex(const std::string& name) const;
    double vertex_dist(int a, int b) const;
    int lca(int a, int b) const;
};

struct Space {
    SpaceKind kind = SpaceKind::euclidean;
    int dim = 0; // euclidean only
    TreeTopology tree;

    std::string kind_name() const;
};

// Config schema: {"kind": "euclidean"|"hyperbolic-plane"|"metric-tree",
// "dim": n, "vertices": [names], "edges": [[u, v, w], ...]}.
// Rejects cyclic, disconnected, or non-positively weighted trees.
Space build_space(const nlohmann::json& config);

double dist(const Space& s, const Point& x, const Point& y);

// W(x, y, lambda): the point at parameter lambda along the geodesic from x
// to y. lambda outside [0,1] is a domain error; lambda == 0 and lambda == 1
// return the inputs unchanged; d(x,y) < 1e-12 returns x.
Point combine(const Space& s, const Point& x, const Point& y, double lambda);

// Canonical form for a tree vertex: smallest incident edge index, offset at
// the matching endpoint. Non-tree spaces and interior points pass through.
Point canonical_point(const Space& s, const Point& p);
Point tree_vertex_point(const Space& s, int vertex);

nlohmann::json point_to_json(const Space& s, const Point& p);
// Euclidean/disk: [c0, c1, ...]. Tree: {"edge": i, "offset": t} or
// {"vertex": "name"}.
Point parse_point(const Space& s, const nlohmann::json& j);

// Deterministic sampler; identical seeds give identical streams on every
// platform (no std::uniform_real_distribution).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double unit();                      // [0, 1)
    double uniform(double a, double b); // [a, b)
    std::uint64_t integer(std::uint64_t n); // [0, n)

  private:
    std::uint64_t next();
    std::uint64_t state_;
};

// Disk points are sampled with |z| <= 0.999 to keep distances finite.
Point sample_point(const Space& s, Rng& rng);

struct SampleReport {
    std::string axiom;
    long samples = 0;
    double max_violation = 0.0;
    bool pass = false;
};

nlohmann::json sample_report_to_json(const SampleReport& r);

// Sampling tolerance defaults: 1e-9 for euclidean and metric-tree, 1e-7 for
// the hyperbolic plane (transcendental distance formula).
double default_axiom_tolerance(const Space& s);

using CombineFn = std::function<Point(const Space&, const Point&, const Point&, double)>;

// Checks the four convexity axioms of W plus the two segment identities
// d(x, W(x,y,l)) = l d(x,y) and d(y, W(x,y,l)) = (1-l) d(x,y), each on
// `samples` random tuples. Reports: W1, W2, W3, W4, segment-identity.
std::vector<SampleReport> check_convexity_axioms(const Space& s, std::uint64_t seed,
                                                 long samples, double tol);
// Same, for an arbitrary combination map (used to show broken maps fail).
std::vector<SampleReport> check_convexity_axioms(const Space& s, const CombineFn& w,
                                                 std::uint64_t seed, long samples, double tol);

} // namespace geokm
