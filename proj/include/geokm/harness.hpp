#pragma once

#include "geokm/geometry.hpp"
#include "geokm/iteration.hpp"
#include "geokm/moduli.hpp"
#include "geokm/rates.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace geokm {

// One end-to-end run: build a space, iterate a mapping under a schedule, audit
// the trace, and compare the observed stabilization point against the
// certified bound for every requested (eps, g, variant) combination.
struct ExperimentConfig {
    std::string label;
    nlohmann::json space;
    nlohmann::json mapping;
    nlohmann::json schedule;
    nlohmann::json anchor; // {"kind":"origin"} or {"kind":"point","point":...}
    nlohmann::json x0;
    std::vector<BigRat> eps;
    std::vector<std::string> g_specs{"zero"};
    std::int64_t steps = 1024;
    std::uint64_t seed = 1;
    bool variant_paper = true;
    bool variant_strict = false;
    ThetaRoute route = ThetaRoute::eta;
    std::optional<nlohmann::json> modulus;
    std::optional<BigRat> b_declared;
    double axiom_tol = -1.0; // negative: per-space default
    double audit_tol = 1e-9;
    std::int64_t axiom_samples = 2000;
    std::int64_t mapping_samples = 200;
    std::int64_t budget = 10'000'000;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Axiom checks are pure in (space, seed, samples, tol); a suite reuses them
// across configs sharing a space.
struct AxiomCache {
    std::map<std::string, nlohmann::ordered_json> entries;
};

nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg, AxiomCache* cache = nullptr);

// Three spaces x two mapping families x two eps values; every config crosses
// g in {zero, linear:1,0} and both M variants.
std::vector<ExperimentConfig> default_soundness_matrix();

struct SuiteSummary {
    nlohmann::ordered_json report;
    bool pass = false;
};

SuiteSummary soundness_suite(const std::vector<ExperimentConfig>& configs,
                             AxiomCache* cache = nullptr);

// Removes every "metadata" object so two reports from identical inputs
// compare byte-for-byte.
nlohmann::ordered_json strip_metadata(const nlohmann::ordered_json& j);

} // namespace geokm
