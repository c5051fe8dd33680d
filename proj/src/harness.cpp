#include "geokm/harness.hpp"

#include "geokm/errors.hpp"

#include <chrono>
#include <ctime>

namespace geokm {

namespace {

BigRat rat_from_json(const nlohmann::json& v, const char* what) {
    if (v.is_string()) return rat_from_string(v.get<std::string>());
    if (v.is_number_integer()) return BigRat(static_cast<long>(v.get<std::int64_t>()));
    if (v.is_number_float()) return rat_from_double(v.get<double>());
    throw config_error(std::string(what) + " must be a number or a rational string");
}

std::string now_iso() {
    const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Point resolve_anchor_point(const Space& s, const nlohmann::json& anchor) {
    const std::string kind = anchor.value("kind", std::string("origin"));
    if (kind == "origin") {
        switch (s.kind) {
        case SpaceKind::euclidean: return Eigen::VectorXd::Zero(s.dim);
        case SpaceKind::hyperbolic_plane: return DiskPoint{Eigen::Vector2d::Zero()};
        case SpaceKind::metric_tree: return tree_vertex_point(s, 0);
        }
        throw config_error("unknown space kind");
    }
    if (kind == "point") {
        if (!anchor.contains("point")) throw config_error("anchor kind 'point' needs 'point'");
        return parse_point(s, anchor.at("point"));
    }
    throw config_error("anchor kind must be 'origin' or 'point'");
}

} // namespace

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("experiment config must be an object");
    ExperimentConfig c;
    c.label = j.value("label", std::string{});
    for (const char* req : {"space", "mapping", "x0"})
        if (!j.contains(req))
            throw config_error(std::string("experiment config needs '") + req + "'");
    c.space = j.at("space");
    c.mapping = j.at("mapping");
    c.schedule = j.value("schedule", nlohmann::json{{"lambda", "const:0.5"}, {"L", 2}});
    c.anchor = j.value("anchor", nlohmann::json{{"kind", "origin"}});
    c.x0 = j.at("x0");
    if (j.contains("eps")) {
        const auto& e = j.at("eps");
        if (!e.is_array() || e.empty()) throw config_error("eps must be a nonempty array");
        for (const auto& v : e) {
            const BigRat r = rat_from_json(v, "eps");
            if (!(r > 0 && r <= 1)) throw config_error("eps entries must lie in (0, 1]");
            c.eps.push_back(r);
        }
    } else {
        c.eps.push_back(BigRat(1, 10));
    }
    if (j.contains("g")) {
        const auto& gl = j.at("g");
        if (!gl.is_array() || gl.empty()) throw config_error("g must be a nonempty array");
        c.g_specs.clear();
        for (const auto& v : gl) {
            if (!v.is_string()) throw config_error("g entries must be spec strings");
            GFunc::parse(v.get<std::string>()); // validate now, fail at config time
            c.g_specs.push_back(v.get<std::string>());
        }
    }
    c.steps = j.value("steps", std::int64_t{1024});
    if (c.steps < 2 || c.steps > 1'000'000)
        throw config_error("steps must lie in [2, 1000000]");
    c.seed = j.value("seed", std::uint64_t{1});
    const std::string variants = j.value("variants", std::string("paper"));
    if (variants == "paper") {
        c.variant_paper = true;
        c.variant_strict = false;
    } else if (variants == "strict") {
        c.variant_paper = false;
        c.variant_strict = true;
    } else if (variants == "both") {
        c.variant_paper = c.variant_strict = true;
    } else {
        throw config_error("variants must be 'paper', 'strict' or 'both'");
    }
    c.route = j.value("use_eta_tilde", false) ? ThetaRoute::eta_tilde : ThetaRoute::eta;
    if (j.contains("modulus")) c.modulus = j.at("modulus");
    if (j.contains("b")) {
        c.b_declared = rat_from_json(j.at("b"), "b");
        if (!(*c.b_declared > 0)) throw config_error("b must be positive");
    }
    c.axiom_tol = j.value("axiom_tol", -1.0);
    c.audit_tol = j.value("audit_tol", 1e-9);
    c.axiom_samples = j.value("axiom_samples", std::int64_t{2000});
    c.mapping_samples = j.value("mapping_samples", std::int64_t{200});
    c.budget = j.value("budget", std::int64_t{10'000'000});
    return c;
}

nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, AxiomCache* cache) {
    nlohmann::ordered_json rep;
    rep["label"] = cfg.label;
    bool ok = true;

    const Space space = build_space(cfg.space);
    const double axtol = cfg.axiom_tol > 0 ? cfg.axiom_tol : default_axiom_tolerance(space);

    nlohmann::ordered_json axioms;
    const std::string key = cfg.space.dump() + "#" + std::to_string(cfg.seed) + "#" +
                            std::to_string(cfg.axiom_samples) + "#" + std::to_string(axtol);
    if (cache != nullptr && cache->entries.count(key) != 0) {
        axioms = cache->entries.at(key);
    } else {
        bool pass = true;
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& r : check_convexity_axioms(space, cfg.seed, cfg.axiom_samples, axtol)) {
            pass = pass && r.pass;
            checks.push_back(nlohmann::ordered_json(sample_report_to_json(r)));
        }
        axioms["pass"] = pass;
        axioms["tolerance"] = axtol;
        axioms["checks"] = checks;
        if (cache != nullptr) cache->entries[key] = axioms;
    }
    rep["space"] = nlohmann::ordered_json{{"kind", space.kind_name()}, {"axioms", axioms}};
    ok = ok && axioms.at("pass").get<bool>();

    const Modulus mod = cfg.modulus ? modulus_from_config(*cfg.modulus) : cat0_modulus();
    if (!mod.monotone())
        throw config_error("experiment bounds need a modulus declared monotone in r");
    const bool mono_ok = verify_monotone(mod);
    rep["modulus"] = nlohmann::ordered_json{{"name", mod.name()},
                                            {"monotone_grid_ok", mono_ok},
                                            {"clamp_warnings", mod.warnings().size()}};
    ok = ok && mono_ok;

    const Mapping map = mapping_from_config(space, cfg.mapping);
    const SampleReport mv = validate_mapping(space, map, cfg.seed + 1, 32,
                                             static_cast<long>(cfg.mapping_samples), axtol);
    rep["mapping"] = nlohmann::ordered_json{
        {"name", map.name}, {"K", map.K}, {"validation", sample_report_to_json(mv)}};
    ok = ok && mv.pass;

    const Point x0 = parse_point(space, cfg.x0);
    const Point p = resolve_anchor_point(space, cfg.anchor);
    std::optional<double> b_hint;
    if (cfg.b_declared) b_hint = rat_to_double(*cfg.b_declared);
    const AnchorPoint anchor = make_anchor(space, map, x0, p, b_hint, std::nullopt);
    const BigRat b_exact = cfg.b_declared ? *cfg.b_declared : rat_from_double(anchor.b);
    if (!(b_exact > 0)) throw config_error("anchor distance b must be positive");
    rep["anchor"] = nlohmann::ordered_json{{"b", rat_to_string(b_exact)},
                                           {"delta", anchor.delta}};

    const Schedule sched = schedule_from_config(cfg.schedule);
    rep["schedule"] = nlohmann::ordered_json{{"L", sched.L}};

    const Trace trace = km_iterate(space, map, sched, x0, cfg.steps, &anchor);
    rep["trace"] = nlohmann::ordered_json{{"steps", trace.steps()},
                                          {"final_residual", trace.residual.back()}};

    const AuditReport audit =
        trace_inequality_audit(space, map, trace, &anchor, map.K, cfg.audit_tol);
    rep["audit"] = audit_report_to_json(audit);
    ok = ok && audit.pass;

    BigRat k_exact(0);
    if (cfg.mapping.contains("K")) k_exact = rat_from_json(cfg.mapping.at("K"), "K");
    if (k_exact < 0) throw config_error("K must be >= 0");

    std::vector<MVariant> variants;
    if (cfg.variant_paper) variants.push_back(MVariant::paper);
    if (cfg.variant_strict) variants.push_back(MVariant::strict);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const BigRat& eps : cfg.eps) {
        const double eps_d = rat_to_double(eps);
        for (const MVariant variant : variants) {
            BoundInputs in;
            in.K = k_exact;
            in.L = sched.L;
            in.b = b_exact;
            in.eps = eps;
            in.modulus = &mod;
            in.route = cfg.route;
            in.variant = variant;
            const BigInt m = compute_m(in); // independent of g
            for (const std::string& gspec : cfg.g_specs) {
                const GFunc g = GFunc::parse(gspec);
                nlohmann::ordered_json row;
                row["eps"] = rat_to_string(eps);
                row["variant"] = variant_name(variant);
                row["g"] = gspec;
                row["M"] = m.get_str();
                bool materialized = true;
                BigInt phi;
                try {
                    phi = iterate_h(g, m, HKind::horizon, cfg.budget);
                } catch (const resource_error&) {
                    materialized = false;
                }
                row["phi"] = materialized ? nlohmann::ordered_json(phi.get_str())
                                          : nlohmann::ordered_json(nullptr);
                row["phi_lower"] = BigInt(2 * m).get_str();

                const WindowScan ws =
                    find_metastable_window(trace.residual, eps_d, g, trace.steps());
                const char* status = ws.status == WindowScan::Status::found ? "found"
                                     : ws.status == WindowScan::Status::not_found
                                         ? "not-found"
                                         : "inconclusive";
                row["window"] = nlohmann::ordered_json{
                    {"status", status}, {"n", ws.n}, {"skipped", ws.skipped}};
                bool row_ok = ws.status == WindowScan::Status::found;

                if (ws.status == WindowScan::Status::found) {
                    const bool le = phi_at_least(g, m, BigInt(static_cast<long>(ws.n)));
                    row["n_emp_le_phi"] = le;
                    row_ok = row_ok && le;
                } else {
                    row["n_emp_le_phi"] = nullptr;
                }

                // The theorem promises a witness of shape h^i(0) + 1, i < M.
                bool cand_found = false;
                bool truncated = false;
                std::int64_t cand_n = -1;
                const auto cands = h_candidates(g, m, HKind::horizon, trace.steps());
                if (BigInt(static_cast<long>(cands.size())) < m) truncated = true;
                for (const std::int64_t cand : cands) {
                    const BigInt end = BigInt(static_cast<long>(cand)) +
                                       g(BigInt(static_cast<long>(cand)));
                    if (end > BigInt(static_cast<long>(trace.steps()))) {
                        truncated = true;
                        break;
                    }
                    bool all = true;
                    for (std::int64_t i = cand; i <= end.get_si() && all; ++i)
                        all = trace.residual[i] < eps_d;
                    if (all) {
                        cand_found = true;
                        cand_n = cand;
                        break;
                    }
                }
                row["candidate"] = nlohmann::ordered_json{
                    {"found", cand_found}, {"n", cand_n}, {"truncated", truncated}};
                row_ok = row_ok && cand_found;

                row["pass"] = row_ok;
                ok = ok && row_ok;
                rows.push_back(row);
            }
        }
    }
    rep["bounds"] = rows;
    rep["pass"] = ok;
    rep["metadata"] = nlohmann::ordered_json{{"generated_at", now_iso()}};
    return rep;
}

std::vector<ExperimentConfig> default_soundness_matrix() {
    const nlohmann::json spaces[3] = {
        nlohmann::json{{"kind", "euclidean"}, {"dim", 2}},
        nlohmann::json{{"kind", "hyperbolic-plane"}},
        nlohmann::json{
            {"kind", "metric-tree"},
            {"vertices", {"root", "a", "b", "c", "la", "lb", "lc"}},
            {"edges",
             {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 4, 0.5}, {2, 5, 0.5}, {3, 6, 0.5}}}},
    };
    const nlohmann::json x0s[3] = {
        nlohmann::json::array({3.0, 4.0}),
        nlohmann::json::array({0.5, 0.3}),
        nlohmann::json{{"edge", 0}, {"offset", 0.7}},
    };
    const char* bs[3] = {"5", "3/2", "7/10"};
    const nlohmann::json targets[3] = {
        nlohmann::json::array({0.0, 0.0}),
        nlohmann::json::array({0.0, 0.0}),
        nlohmann::json{{"vertex", "root"}},
    };
    const char* space_names[3] = {"euclidean", "hyperbolic-plane", "metric-tree"};

    std::vector<ExperimentConfig> out;
    for (int si = 0; si < 3; ++si) {
        const nlohmann::json k_over = {{"kind", "geometric"}, {"c", 0.5}, {"q", 0.5}};
        const nlohmann::json isometry =
            si == 2 ? nlohmann::json{{"name", "tree-rotation"},
                                     {"shift", 1},
                                     {"k", k_over},
                                     {"K", 1}}
                    : nlohmann::json{{"name", "rotation"},
                                     {"angle", 0.7},
                                     {"k", k_over},
                                     {"K", 1}};
        const nlohmann::json toward = {
            {"name", "toward"}, {"target", targets[si]}, {"cap", 0.3}};
        const nlohmann::json mappings[2] = {isometry, toward};
        const char* mapping_names[2] = {"isometry", "toward"};
        for (int mi = 0; mi < 2; ++mi) {
            for (const char* eps : {"1/10", "1/100"}) {
                nlohmann::json j = {
                    {"label", std::string(space_names[si]) + "/" + mapping_names[mi] +
                                  "/eps=" + eps},
                    {"space", spaces[si]},
                    {"mapping", mappings[mi]},
                    {"schedule", {{"lambda", "const:0.5"}, {"L", 2}}},
                    {"anchor", {{"kind", "origin"}}},
                    {"x0", x0s[si]},
                    {"b", bs[si]},
                    {"eps", {eps}},
                    {"g", {"zero", "linear:1,0"}},
                    {"steps", 4096},
                    {"seed", 7},
                    {"variants", "both"},
                };
                out.push_back(experiment_from_json(j));
            }
        }
    }
    return out;
}

SuiteSummary soundness_suite(const std::vector<ExperimentConfig>& configs, AxiomCache* cache) {
    AxiomCache local;
    if (cache == nullptr) cache = &local;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    long passed = 0, failed = 0, excluded = 0;
    for (const ExperimentConfig& cfg : configs) {
        try {
            nlohmann::ordered_json row = run_experiment(cfg, cache);
            row.at("pass").get<bool>() ? ++passed : ++failed;
            rows.push_back(std::move(row));
        } catch (const hypothesis_error& e) {
            // A config whose own premises fail proves nothing either way;
            // record it and leave it out of the verdict.
            rows.push_back(nlohmann::ordered_json{{"label", cfg.label},
                                                  {"hypothesis_failed", e.what()}});
            ++excluded;
        }
    }
    SuiteSummary s;
    s.pass = failed == 0;
    s.report = nlohmann::ordered_json{{"rows", rows},
                                      {"passed", passed},
                                      {"failed", failed},
                                      {"hypothesis_failed", excluded},
                                      {"pass", s.pass},
                                      {"metadata", {{"generated_at", now_iso()}}}};
    return s;
}

nlohmann::ordered_json strip_metadata(const nlohmann::ordered_json& j) {
    if (j.is_object()) {
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (const auto& [k, v] : j.items())
            if (k != "metadata") out[k] = strip_metadata(v);
        return out;
    }
    if (j.is_array()) {
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& v : j) out.push_back(strip_metadata(v));
        return out;
    }
    return j;
}

} // namespace geokm
