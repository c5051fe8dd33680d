#include "geokm/iteration.hpp"

#include "geokm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace geokm {

namespace {

constexpr double kBuildTol = 1e-12;
constexpr double kIntegrityTol = 1e-12;

bool point_finite(const Point& p) {
    if (const auto* v = std::get_if<Eigen::VectorXd>(&p)) return v->allFinite();
    if (const auto* d = std::get_if<DiskPoint>(&p)) return d->z.allFinite();
    const auto& t = std::get<TreePoint>(p);
    return std::isfinite(t.offset);
}

double queried_lambda(const Schedule& sched, std::int64_t n) {
    const double l = sched.lambda(n);
    const double lo = 1.0 / sched.L;
    if (!(l >= lo - kBuildTol && l <= 1.0 - lo + kBuildTol))
        throw hypothesis_error("schedule violates lambda_" + std::to_string(n) + " in [1/L, 1-1/L]: " +
                               std::to_string(l));
    return l;
}

// Tracks the running sum of k_n so the cap K is enforced wherever k is read.
struct KReader {
    const Mapping& t;
    std::int64_t next = 0;
    double sum = 0.0;

    double at(std::int64_t n) {
        if (n != next) throw std::logic_error("k queried out of order");
        const double kn = t.k(n);
        if (!(kn >= 0.0)) throw hypothesis_error("k_" + std::to_string(n) + " is negative");
        sum += kn;
        if (sum > t.K + kBuildTol)
            throw hypothesis_error("sum of k exceeds K at n=" + std::to_string(n));
        ++next;
        return kn;
    }
};

} // namespace

Schedule constant_schedule(double lam, int L) {
    if (L < 2) throw config_error("schedule needs L >= 2");
    return Schedule{[lam](std::int64_t) { return lam; }, L};
}

Schedule schedule_from_config(const nlohmann::json& config) {
    if (!config.is_object() || !config.contains("L") || !config["L"].is_number_integer())
        throw config_error("schedule config needs integer 'L'");
    const int L = config["L"].get<int>();
    if (L < 2) throw config_error("schedule needs L >= 2");
    const std::string rule = config.value("lambda", std::string("const:0.5"));
    if (rule.rfind("const:", 0) == 0) {
        double lam;
        try {
            lam = std::stod(rule.substr(6));
        } catch (const std::exception&) {
            throw config_error("bad schedule constant: " + rule);
        }
        return Schedule{[lam](std::int64_t) { return lam; }, L};
    }
    if (rule.rfind("table:", 0) == 0) {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(rule.substr(6));
        } catch (const nlohmann::json::exception&) {
            throw config_error("bad schedule table: " + rule);
        }
        if (!arr.is_array() || arr.empty()) throw config_error("schedule table must be non-empty");
        auto values = std::make_shared<std::vector<double>>();
        for (const auto& v : arr) values->push_back(v.get<double>());
        return Schedule{[values](std::int64_t n) {
                            const auto i = std::min<std::size_t>(n, values->size() - 1);
                            return (*values)[i];
                        },
                        L};
    }
    throw config_error("unknown schedule rule '" + rule + "'");
}

AnchorPoint make_anchor(const Space& s, const Mapping& t, const Point& x0, const Point& p,
                        std::optional<double> b, std::optional<double> delta) {
    AnchorPoint a;
    a.p = p;
    a.delta = delta.value_or(0.0);
    const double moved = dist(s, t.apply(p), p);
    if (moved > a.delta + kBuildTol)
        throw hypothesis_error("anchor moves by " + std::to_string(moved) +
                               " under T, declared delta=" + std::to_string(a.delta));
    const double d0 = dist(s, x0, p);
    a.b = b.value_or(d0);
    if (d0 > a.b + kBuildTol)
        throw hypothesis_error("d(x0, anchor)=" + std::to_string(d0) + " exceeds declared b=" +
                               std::to_string(a.b));
    return a;
}

Point apply_power(const Mapping& t, std::int64_t n, Point x) {
    if (n < 0) throw std::domain_error("mapping power must be >= 0");
    for (std::int64_t i = 0; i < n; ++i) x = t.apply(x);
    return x;
}

double residual(const Space& s, const Mapping& t, const Point& x) {
    return dist(s, x, t.apply(x));
}

Trace km_iterate(const Space& s, const Mapping& t, const Schedule& sched, const Point& x0,
                 std::int64_t steps, const AnchorPoint* anchor) {
    if (steps < 0) throw std::domain_error("step count must be >= 0");
    Trace tr;
    tr.has_anchor = anchor != nullptr;
    tr.points.reserve(steps + 1);
    tr.points.push_back(x0);
    KReader kr{t};
    for (std::int64_t n = 0; n <= steps; ++n) {
        const Point& xn = tr.points.back();
        if (!point_finite(xn)) throw numeric_error("non-finite iterate at step " + std::to_string(n));
        tr.lambda.push_back(queried_lambda(sched, n));
        tr.k.push_back(kr.at(n));
        tr.residual.push_back(residual(s, t, xn));
        const Point pow = apply_power(t, n, xn);
        tr.power_residual.push_back(dist(s, pow, xn));
        tr.dist_anchor.push_back(anchor ? dist(s, xn, anchor->p)
                                        : std::numeric_limits<double>::quiet_NaN());
        if (n < steps) tr.points.push_back(combine(s, xn, pow, tr.lambda.back()));
    }
    return tr;
}

SampleReport validate_mapping(const Space& s, const Mapping& t, std::uint64_t seed,
                              std::int64_t n_max, long pairs, double tol) {
    Rng rng(seed);
    SampleReport rep{"asymptotically-nonexpansive", 0, 0.0, false};
    for (long i = 0; i < pairs; ++i) {
        Point x = sample_point(s, rng);
        Point y = sample_point(s, rng);
        const double d0 = dist(s, x, y);
        KReader kr{t};
        for (std::int64_t n = 0; n <= n_max; ++n) {
            const double kn = kr.at(n);
            const double v = dist(s, x, y) - (1.0 + kn) * d0;
            rep.max_violation = std::max(rep.max_violation, v);
            ++rep.samples;
            x = t.apply(x);
            y = t.apply(y);
        }
    }
    rep.pass = rep.max_violation <= tol;
    return rep;
}

nlohmann::json audit_report_to_json(const AuditReport& r) {
    nlohmann::json fams = nlohmann::json::array();
    for (const auto& f : r.families)
        fams.push_back({{"family", f.family},
                        {"worst_margin", f.worst_margin},
                        {"worst_step", f.worst_step},
                        {"pass", f.pass}});
    return nlohmann::json{{"families", fams},
                          {"reconstruction_max", r.reconstruction_max},
                          {"steps", r.steps},
                          {"pass", r.pass}};
}

AuditReport trace_inequality_audit(const Space& s, const Mapping& t, const Trace& trace,
                                   const AnchorPoint* anchor, double K, double tol) {
    const std::int64_t S = trace.steps();
    if (S < 0) throw std::domain_error("empty trace");
    AuditReport rep;
    rep.steps = S;

    FamilyAudit power_step{"power-residual-step", 0.0, -1, false};
    FamilyAudit schu{"iterate-residual", 0.0, -1, false};
    FamilyAudit anchored{"anchored-recurrence", 0.0, -1, false};
    FamilyAudit conditional{"conditional-residual", 0.0, -1, false};

    auto track = [](FamilyAudit& f, double margin, std::int64_t n) {
        if (margin > f.worst_margin) {
            f.worst_margin = margin;
            f.worst_step = n;
        }
    };

    const double c1 = 1.0 + (1.0 + K) * (1.0 + K) * (2.0 + K);
    const double c2 = 1.0 + K * K;

    // Anchor power chain d(T^n p, p), one application per step.
    std::vector<double> anchor_pow;
    if (anchor) {
        anchor_pow.resize(S + 1, 0.0);
        Point pp = anchor->p;
        anchor_pow[0] = 0.0;
        for (std::int64_t n = 1; n <= S; ++n) {
            pp = t.apply(pp);
            anchor_pow[n] = dist(s, pp, anchor->p);
        }
    }

    KReader kr{t};
    std::vector<double> kval(S + 1);
    for (std::int64_t n = 0; n <= S; ++n) {
        kval[n] = kr.at(n);
        if (kval[n] != trace.k[n])
            throw integrity_error("recorded k_" + std::to_string(n) + " differs from the mapping rule");
    }

    for (std::int64_t n = 0; n <= S; ++n) {
        // Recorded columns must match recomputation from the points.
        const double rho = residual(s, t, trace.points[n]);
        const Point pow_n = apply_power(t, n, trace.points[n]);
        const double pr = dist(s, pow_n, trace.points[n]);
        rep.reconstruction_max = std::max(rep.reconstruction_max,
                                          std::abs(rho - trace.residual[n]));
        rep.reconstruction_max = std::max(rep.reconstruction_max,
                                          std::abs(pr - trace.power_residual[n]));
        if (anchor)
            rep.reconstruction_max = std::max(
                rep.reconstruction_max,
                std::abs(dist(s, trace.points[n], anchor->p) - trace.dist_anchor[n]));
        if (rep.reconstruction_max > kIntegrityTol)
            throw integrity_error("trace columns disagree with recomputation at step " +
                                  std::to_string(n));
        if (n == S) break;

        const Point next_rec = combine(s, trace.points[n], pow_n, trace.lambda[n]);
        const double drift = dist(s, next_rec, trace.points[n + 1]);
        rep.reconstruction_max = std::max(rep.reconstruction_max, drift);
        if (drift > kIntegrityTol)
            throw integrity_error("iterate reconstruction drifts at step " + std::to_string(n));

        const Point pow_next = apply_power(t, n, trace.points[n + 1]); // T^n x_{n+1}
        const double lhs1 = dist(s, pow_next, trace.points[n + 1]);
        track(power_step, lhs1 - (1.0 + kval[n]) * trace.power_residual[n], n);

        const double pr_next_full = dist(s, t.apply(pow_next), trace.points[n + 1]);
        track(schu,
              trace.residual[n + 1] -
                  (pr_next_full + (1.0 + K) * (1.0 + K) * trace.power_residual[n]),
              n);

        if (anchor) {
            track(anchored,
                  trace.dist_anchor[n + 1] -
                      ((1.0 + kval[n]) * trace.dist_anchor[n] + anchor_pow[n]),
                  n);
            const double alpha_star =
                std::max(std::min(trace.dist_anchor[n], trace.power_residual[n]),
                         std::min(trace.dist_anchor[n + 1], trace.power_residual[n + 1]));
            const double gamma_star = std::max(anchor_pow[1], anchor_pow[n]);
            track(conditional,
                  trace.residual[n + 1] - (c1 * alpha_star + c2 * gamma_star), n);
        }
    }

    power_step.pass = power_step.worst_margin <= tol;
    schu.pass = schu.worst_margin <= tol;
    anchored.pass = anchored.worst_margin <= tol;
    conditional.pass = conditional.worst_margin <= tol;
    rep.families = {power_step, schu};
    if (anchor) {
        rep.families.push_back(anchored);
        rep.families.push_back(conditional);
    }
    rep.pass = true;
    for (const auto& f : rep.families) rep.pass = rep.pass && f.pass;
    return rep;
}

Mapping make_constant_mapping(const Space& s, const Point& target) {
    dist(s, target, target); // validates the point against the space
    return Mapping{"constant", [target](const Point&) { return target; },
                   [](std::int64_t) { return 0.0; }, 0.0};
}

Mapping make_identity_mapping() {
    return Mapping{"identity", [](const Point& p) { return p; },
                   [](std::int64_t) { return 0.0; }, 0.0};
}

Mapping make_rotation_mapping(const Space& s, double angle) {
    const double c = std::cos(angle), sn = std::sin(angle);
    if (s.kind == SpaceKind::euclidean) {
        if (s.dim < 2) throw config_error("rotation needs dim >= 2");
        return Mapping{"rotation",
                       [c, sn](const Point& p) {
                           Eigen::VectorXd v = std::get<Eigen::VectorXd>(p);
                           const double x = v[0], y = v[1];
                           v[0] = c * x - sn * y;
                           v[1] = sn * x + c * y;
                           return Point(v);
                       },
                       [](std::int64_t) { return 0.0; }, 0.0};
    }
    if (s.kind == SpaceKind::hyperbolic_plane) {
        return Mapping{"rotation",
                       [c, sn](const Point& p) {
                           const Eigen::Vector2d z = std::get<DiskPoint>(p).z;
                           return Point(DiskPoint{Eigen::Vector2d(c * z.x() - sn * z.y(),
                                                                  sn * z.x() + c * z.y())});
                       },
                       [](std::int64_t) { return 0.0; }, 0.0};
    }
    throw config_error("rotation(angle) is for euclidean or hyperbolic-plane spaces; "
                       "use tree-rotation for metric trees");
}

Mapping make_tree_rotation_mapping(const Space& s, int shift) {
    if (s.kind != SpaceKind::metric_tree) throw config_error("tree-rotation needs a metric tree");
    const TreeTopology& t = s.tree;
    const int n = t.vertex_count();

    // Pair the root's arms cyclically, then copy the pairing down both
    // subtrees in adjacency order.
    std::vector<int> perm(n, -1);
    perm[0] = 0;
    std::vector<int> roots;
    for (const auto& [e, nbr] : t.adjacency[0]) {
        (void)e;
        roots.push_back(nbr);
    }
    const int m = static_cast<int>(roots.size());
    if (m == 0) throw config_error("tree-rotation needs at least one arm");
    const int sh = ((shift % m) + m) % m;
    std::vector<std::pair<int, int>> stack;
    for (int i = 0; i < m; ++i) stack.push_back({roots[i], roots[(i + sh) % m]});
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        perm[a] = b;
        std::vector<int> ca, cb;
        for (const auto& [e, nbr] : t.adjacency[a]) {
            (void)e;
            if (nbr != t.parent[a]) ca.push_back(nbr);
        }
        for (const auto& [e, nbr] : t.adjacency[b]) {
            (void)e;
            if (nbr != t.parent[b]) cb.push_back(nbr);
        }
        if (ca.size() != cb.size())
            throw config_error("tree arms are not isomorphic; rotation is not an automorphism");
        for (std::size_t i = 0; i < ca.size(); ++i) stack.push_back({ca[i], cb[i]});
    }

    // The pairing must preserve every edge and its weight.
    auto edge_between = [&t](int u, int v) -> int {
        for (const auto& [e, nbr] : t.adjacency[u])
            if (nbr == v) return e;
        return -1;
    };
    std::vector<int> edge_image(t.edges.size(), -1);
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
        const int iu = perm[t.edges[e].u], iv = perm[t.edges[e].v];
        const int ie = edge_between(iu, iv);
        if (ie < 0 || std::abs(t.edges[ie].weight - t.edges[e].weight) > 1e-12)
            throw config_error("tree rotation does not preserve edge weights");
        edge_image[e] = ie;
    }

    const std::vector<int> perm_copy = perm;
    const std::vector<int> eimg_copy = edge_image;
    return Mapping{"tree-rotation",
                   [&s, perm_copy, eimg_copy](const Point& p) {
                       const TreePoint tp = std::get<TreePoint>(p);
                       const TreeEdge& e = s.tree.edges[tp.edge];
                       const int ie = eimg_copy[tp.edge];
                       const TreeEdge& img = s.tree.edges[ie];
                       const int iu = perm_copy[e.u];
                       double off = tp.offset;
                       if (img.u != iu) off = img.weight - off;
                       return Point(TreePoint{ie, off});
                   },
                   [](std::int64_t) { return 0.0; }, 0.0};
}

Mapping make_toward_mapping(const Space& s, const Point& target, double cap) {
    if (!(cap > 0.0)) throw config_error("toward mapping needs cap > 0");
    dist(s, target, target);
    return Mapping{"toward",
                   [&s, target, cap](const Point& x) {
                       const double d = dist(s, x, target);
                       if (d <= cap) return target;
                       return combine(s, x, target, cap / d);
                   },
                   [](std::int64_t) { return 0.0; }, 0.0};
}

namespace {

void attach_k(Mapping& m, const nlohmann::json& config) {
    if (!config.contains("k")) {
        // Declared cap without an explicit sequence keeps k = 0.
        if (config.contains("K")) m.K = config["K"].get<double>();
        return;
    }
    const auto& kj = config["k"];
    if (!kj.is_object() || !kj.contains("kind")) throw config_error("k spec needs a 'kind'");
    const std::string kind = kj["kind"].get<std::string>();
    if (kind == "zero") {
        m.k = [](std::int64_t) { return 0.0; };
        m.K = config.value("K", 0.0);
        return;
    }
    if (!config.contains("K") || !config["K"].is_number())
        throw config_error("non-zero k spec needs a numeric 'K' cap");
    m.K = config["K"].get<double>();
    if (kind == "geometric") {
        const double c = kj.value("c", 0.5);
        const double q = kj.value("q", 0.5);
        if (!(c >= 0.0) || !(q >= 0.0 && q < 1.0))
            throw config_error("geometric k needs c >= 0 and 0 <= q < 1");
        m.k = [c, q](std::int64_t nn) { return c * std::pow(q, static_cast<double>(nn)); };
        return;
    }
    if (kind == "table") {
        if (!kj.contains("values") || !kj["values"].is_array())
            throw config_error("table k needs 'values'");
        auto vals = std::make_shared<std::vector<double>>();
        for (const auto& v : kj["values"]) vals->push_back(v.get<double>());
        m.k = [vals](std::int64_t nn) {
            return nn < static_cast<std::int64_t>(vals->size()) ? (*vals)[nn] : 0.0;
        };
        return;
    }
    throw config_error("unknown k kind '" + kind + "'");
}

} // namespace

Mapping mapping_from_config(const Space& s, const nlohmann::json& config) {
    if (!config.is_object() || !config.contains("name") || !config["name"].is_string())
        throw config_error("mapping config needs a string 'name'");
    const std::string name = config["name"].get<std::string>();
    Mapping m;
    if (name == "constant") {
        if (!config.contains("target")) throw config_error("constant mapping needs 'target'");
        m = make_constant_mapping(s, parse_point(s, config["target"]));
    } else if (name == "identity") {
        m = make_identity_mapping();
    } else if (name == "rotation") {
        if (s.kind == SpaceKind::metric_tree)
            m = make_tree_rotation_mapping(s, config.value("shift", 1));
        else
            m = make_rotation_mapping(s, config.value("angle", 0.0));
    } else if (name == "tree-rotation") {
        m = make_tree_rotation_mapping(s, config.value("shift", 1));
    } else if (name == "toward") {
        if (!config.contains("target") || !config.contains("cap"))
            throw config_error("toward mapping needs 'target' and 'cap'");
        m = make_toward_mapping(s, parse_point(s, config["target"]), config["cap"].get<double>());
    } else {
        throw config_error("unknown mapping '" + name + "'");
    }
    attach_k(m, config);
    return m;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open trace file for writing: " + path);
    out << "n,lambda_n,k_n,residual,power_residual,dist_to_anchor\n";
    char buf[512];
    for (std::int64_t n = 0; n <= trace.steps(); ++n) {
        if (trace.has_anchor)
            std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          static_cast<long long>(n), trace.lambda[n], trace.k[n],
                          trace.residual[n], trace.power_residual[n], trace.dist_anchor[n]);
        else
            std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,\n",
                          static_cast<long long>(n), trace.lambda[n], trace.k[n],
                          trace.residual[n], trace.power_residual[n]);
        out << buf;
    }
    if (!out) throw config_error("failed writing trace file: " + path);
}

std::vector<double> read_residual_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw config_error("empty trace file: " + path);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    const auto it = std::find(header.begin(), header.end(), "residual");
    if (it == header.end()) throw config_error("trace file has no residual column: " + path);
    const std::size_t col = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        bool got = false;
        while (std::getline(ss, cell, ',')) {
            if (i++ == col) {
                out.push_back(std::stod(cell));
                got = true;
                break;
            }
        }
        if (!got) throw config_error("short row in trace file: " + path);
    }
    return out;
}

} // namespace geokm
