#include "geokm/errors.hpp"
#include "geokm/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

using geokm::config_error;

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("bad JSON in " + path + ": " + e.what());
    }
}

void emit(const nlohmann::ordered_json& j, const std::string& out) {
    const std::string text = j.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw config_error("cannot write " + out);
    f << text;
}

nlohmann::ordered_json interval_json(const geokm::RatInterval& iv) {
    return {{"lo", geokm::rat_to_string(iv.lo)}, {"hi", geokm::rat_to_string(iv.hi)}};
}

int run(int argc, char** argv) {
    CLI::App app{"Krasnoselski-Mann iteration in W-convex spaces: geometry checks, "
                 "certified stabilization bounds and trace audits"};
    app.require_subcommand(1);
    std::string config_path, out_path;

    auto* sc_space = app.add_subcommand("check-space", "sample the convexity axioms of a space");
    std::uint64_t seed = 1;
    std::int64_t samples = 10000;
    double tol = -1.0;
    sc_space->add_option("--config", config_path, "space config JSON")->required();
    sc_space->add_option("--seed", seed);
    sc_space->add_option("--samples", samples);
    sc_space->add_option("--tol", tol, "violation tolerance (default per space)");
    sc_space->add_option("--out", out_path, "write the report here instead of stdout");

    auto* sc_mod = app.add_subcommand("verify-modulus",
                                      "sample the uniform-convexity bound of a modulus");
    sc_mod->add_option("--config", config_path, "{\"space\":..., \"modulus\":...}")->required();
    sc_mod->add_option("--seed", seed);
    sc_mod->add_option("--samples", samples);
    sc_mod->add_option("--tol", tol);
    sc_mod->add_option("--out", out_path);

    auto* sc_map = app.add_subcommand("validate-mapping",
                                      "sample the asymptotic-nonexpansiveness inequality");
    std::int64_t nmax = 32;
    std::int64_t pairs = 500;
    sc_map->add_option("--config", config_path, "{\"space\":..., \"mapping\":...}")->required();
    sc_map->add_option("--seed", seed);
    sc_map->add_option("--pairs", pairs);
    sc_map->add_option("--nmax", nmax, "largest power checked");
    sc_map->add_option("--tol", tol);
    sc_map->add_option("--out", out_path);

    auto* sc_iter = app.add_subcommand("iterate", "run the iteration and dump the trace");
    std::string csv_path, rescan_path, eps_str = "1/10", g_spec = "zero";
    sc_iter->add_option("--config", config_path, "experiment config JSON");
    sc_iter->add_option("--csv", csv_path, "write the trace as CSV");
    sc_iter->add_option("--rescan", rescan_path, "scan an existing trace CSV instead");
    sc_iter->add_option("--eps", eps_str, "residual threshold for --rescan");
    sc_iter->add_option("--g", g_spec, "counterfunction spec for --rescan");
    sc_iter->add_option("--out", out_path);

    auto* sc_bound = app.add_subcommand("bound", "certified stabilization bound");
    std::string k_str = "0", b_str = "1", dc_str, variant_str = "paper", route_str = "eta";
    std::string formula = "general", modulus_path;
    long L = 2;
    std::int64_t budget = 10'000'000;
    sc_bound->add_option("--K", k_str, "k-sum cap, exact rational");
    sc_bound->add_option("--L", L, "schedule constant, lambda_n in [1/L, 1-1/L]");
    sc_bound->add_option("--b", b_str, "anchor distance bound, exact rational");
    sc_bound->add_option("--dc", dc_str, "diameter for --formula cat0");
    sc_bound->add_option("--eps", eps_str, "target accuracy in (0, 1], exact rational");
    sc_bound->add_option("--g", g_spec, "counterfunction spec");
    sc_bound->add_option("--variant", variant_str, "'paper' (11/2) or 'strict' (10)");
    sc_bound->add_option("--route", route_str, "'eta' or 'eta-tilde'");
    sc_bound->add_option("--formula", formula, "'general', 'asreg' or 'cat0'");
    sc_bound->add_option("--modulus", modulus_path, "modulus config JSON (default cat0)");
    sc_bound->add_option("--budget", budget);
    sc_bound->add_option("--out", out_path);

    auto* sc_qihou = app.add_subcommand("qihou", "window bound for two coupled sequences");
    std::string a1 = "1", b1 = "0", c1 = "0", a2 = "1", b2 = "0", c2 = "0", theta = "1";
    sc_qihou->add_option("--a1", a1);
    sc_qihou->add_option("--b1", b1);
    sc_qihou->add_option("--c1", c1);
    sc_qihou->add_option("--a2", a2);
    sc_qihou->add_option("--b2", b2);
    sc_qihou->add_option("--c2", c2);
    sc_qihou->add_option("--theta", theta);
    sc_qihou->add_option("--g", g_spec);
    sc_qihou->add_option("--budget", budget);
    sc_qihou->add_option("--out", out_path);

    auto* sc_exp = app.add_subcommand("experiment", "full run: axioms, iteration, audit, bounds");
    sc_exp->add_option("--config", config_path)->required();
    sc_exp->add_option("--out", out_path);

    auto* sc_suite = app.add_subcommand("suite", "run a batch of experiments");
    sc_suite->add_option("--config", config_path, "JSON array of experiment configs "
                                                  "(default: built-in matrix)");
    sc_suite->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad usage is a config problem
    }

    if (sc_space->parsed()) {
        const geokm::Space s = geokm::build_space(load_json(config_path));
        const double t = tol > 0 ? tol : geokm::default_axiom_tolerance(s);
        bool pass = true;
        nlohmann::ordered_json checks = nlohmann::ordered_json::array();
        for (const auto& r : geokm::check_convexity_axioms(s, seed, samples, t)) {
            pass = pass && r.pass;
            checks.push_back(nlohmann::ordered_json(geokm::sample_report_to_json(r)));
        }
        emit({{"kind", s.kind_name()}, {"tolerance", t}, {"checks", checks}, {"pass", pass}},
             out_path);
        return pass ? 0 : 1;
    }

    if (sc_mod->parsed()) {
        const nlohmann::json cfg = load_json(config_path);
        if (!cfg.contains("space") || !cfg.contains("modulus"))
            throw config_error("verify-modulus config needs 'space' and 'modulus'");
        const geokm::Space s = geokm::build_space(cfg.at("space"));
        const geokm::Modulus m = geokm::modulus_from_config(cfg.at("modulus"));
        const double t = tol > 0 ? tol : geokm::default_axiom_tolerance(s);
        const geokm::ModulusReport r = geokm::verify_modulus(s, m, seed, samples, t);
        const bool mono = !m.monotone() || geokm::verify_monotone(m);
        nlohmann::ordered_json j = {{"modulus", m.name()},
                                    {"space", s.kind_name()},
                                    {"report", geokm::modulus_report_to_json(r)},
                                    {"monotone_grid_ok", mono},
                                    {"pass", r.pass && mono}};
        emit(j, out_path);
        return r.pass && mono ? 0 : 1;
    }

    if (sc_map->parsed()) {
        const nlohmann::json cfg = load_json(config_path);
        if (!cfg.contains("space") || !cfg.contains("mapping"))
            throw config_error("validate-mapping config needs 'space' and 'mapping'");
        const geokm::Space s = geokm::build_space(cfg.at("space"));
        const geokm::Mapping m = geokm::mapping_from_config(s, cfg.at("mapping"));
        const double t = tol > 0 ? tol : geokm::default_axiom_tolerance(s);
        const geokm::SampleReport r =
            geokm::validate_mapping(s, m, seed, nmax, static_cast<long>(pairs), t);
        emit({{"mapping", m.name}, {"K", m.K}, {"report", geokm::sample_report_to_json(r)}},
             out_path);
        return r.pass ? 0 : 1;
    }

    if (sc_iter->parsed()) {
        if (!rescan_path.empty()) {
            const std::vector<double> res = geokm::read_residual_csv(rescan_path);
            const geokm::GFunc g = geokm::GFunc::parse(g_spec);
            const double e = geokm::rat_to_double(geokm::rat_from_string(eps_str));
            const auto ws = geokm::find_metastable_window(
                res, e, g, static_cast<std::int64_t>(res.size()));
            const char* status = ws.status == geokm::WindowScan::Status::found ? "found"
                                 : ws.status == geokm::WindowScan::Status::not_found
                                     ? "not-found"
                                     : "inconclusive";
            emit({{"residuals", res.size()},
                  {"eps", eps_str},
                  {"g", g_spec},
                  {"status", status},
                  {"n", ws.n},
                  {"skipped", ws.skipped}},
                 out_path);
            return ws.status == geokm::WindowScan::Status::found ? 0 : 1;
        }
        if (config_path.empty()) throw config_error("iterate needs --config or --rescan");
        const geokm::ExperimentConfig cfg = geokm::experiment_from_json(load_json(config_path));
        const geokm::Space s = geokm::build_space(cfg.space);
        const geokm::Mapping m = geokm::mapping_from_config(s, cfg.mapping);
        const geokm::Schedule sched = geokm::schedule_from_config(cfg.schedule);
        const geokm::Point x0 = geokm::parse_point(s, cfg.x0);
        const geokm::Trace tr = geokm::km_iterate(s, m, sched, x0, cfg.steps, nullptr);
        if (!csv_path.empty()) geokm::write_trace_csv(tr, csv_path);
        emit({{"steps", tr.steps()},
              {"final_residual", tr.residual.back()},
              {"csv", csv_path.empty() ? nlohmann::ordered_json(nullptr)
                                       : nlohmann::ordered_json(csv_path)}},
             out_path);
        return 0;
    }

    if (sc_bound->parsed()) {
        const geokm::BigRat K = geokm::rat_from_string(k_str);
        const geokm::BigRat b = geokm::rat_from_string(b_str);
        const geokm::BigRat eps = geokm::rat_from_string(eps_str);
        const geokm::MVariant variant =
            variant_str == "strict" ? geokm::MVariant::strict : geokm::MVariant::paper;
        if (variant_str != "strict" && variant_str != "paper")
            throw config_error("--variant must be 'paper' or 'strict'");
        geokm::ThetaRoute route;
        if (route_str == "eta") route = geokm::ThetaRoute::eta;
        else if (route_str == "eta-tilde") route = geokm::ThetaRoute::eta_tilde;
        else throw config_error("--route must be 'eta' or 'eta-tilde'");
        const geokm::Modulus mod = modulus_path.empty()
                                       ? geokm::cat0_modulus()
                                       : geokm::modulus_from_config(load_json(modulus_path));
        if (formula == "cat0") {
            if (dc_str.empty()) throw config_error("--formula cat0 needs --dc");
            const auto [closed, derived] =
                geokm::compute_phi_cat0(K, L, geokm::rat_from_string(dc_str), eps, variant);
            emit({{"closed", geokm::bound_report_to_json(closed)},
                  {"derived", geokm::bound_report_to_json(derived)}},
                 out_path);
            return 0;
        }
        if (formula == "asreg") {
            const auto r = geokm::compute_phi_asreg(K, L, b, eps, mod, route, variant);
            emit(geokm::bound_report_to_json(r), out_path);
            return 0;
        }
        if (formula != "general") throw config_error("--formula must be general, asreg or cat0");
        geokm::BoundInputs in;
        in.K = K;
        in.L = L;
        in.b = b;
        in.eps = eps;
        in.g = geokm::GFunc::parse(g_spec);
        in.modulus = &mod;
        in.route = route;
        in.variant = variant;
        try {
            const auto r = geokm::compute_phi_metastable(in, budget);
            emit(geokm::bound_report_to_json(r), out_path);
        } catch (const geokm::resource_error& e) {
            // M is still certified; phi just cannot be written down.
            in.g = geokm::GFunc::zero();
            auto j = geokm::bound_report_to_json(geokm::compute_phi_metastable(in, budget));
            j["g"] = g_spec;
            j["phi"] = nullptr;
            j["phi_note"] = e.what();
            emit(j, out_path);
        }
        return 0;
    }

    if (sc_qihou->parsed()) {
        geokm::QihouInputs in;
        in.a1 = geokm::rat_from_string(a1);
        in.b1 = geokm::rat_from_string(b1);
        in.c1 = geokm::rat_from_string(c1);
        in.a2 = geokm::rat_from_string(a2);
        in.b2 = geokm::rat_from_string(b2);
        in.c2 = geokm::rat_from_string(c2);
        in.theta = geokm::rat_from_string(theta);
        in.g = geokm::GFunc::parse(g_spec);
        const geokm::QihouBound qb = geokm::quant_qihou_psi(in, budget);
        emit({{"M", qb.m_count.get_str()},
              {"psi", qb.psi.get_str()},
              {"D1", interval_json(qb.d1)},
              {"D2", interval_json(qb.d2)}},
             out_path);
        return 0;
    }

    if (sc_exp->parsed()) {
        const geokm::ExperimentConfig cfg = geokm::experiment_from_json(load_json(config_path));
        const nlohmann::ordered_json rep = geokm::run_experiment(cfg);
        emit(rep, out_path);
        return rep.at("pass").get<bool>() ? 0 : 1;
    }

    if (sc_suite->parsed()) {
        std::vector<geokm::ExperimentConfig> configs;
        if (config_path.empty()) {
            configs = geokm::default_soundness_matrix();
        } else {
            const nlohmann::json arr = load_json(config_path);
            if (!arr.is_array() || arr.empty())
                throw config_error("suite config must be a nonempty array");
            for (const auto& j : arr) configs.push_back(geokm::experiment_from_json(j));
        }
        const geokm::SuiteSummary s = geokm::soundness_suite(configs);
        emit(s.report, out_path);
        return s.pass ? 0 : 1;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const geokm::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const geokm::resource_error& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 2;
    } catch (const geokm::hypothesis_error& e) {
        std::cerr << "hypothesis failure: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 1;
    }
}
