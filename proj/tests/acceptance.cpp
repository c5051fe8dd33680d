// End-to-end acceptance gate. Each criterion prints one summary line; the
// binary fails if any criterion fails.
#include "geokm/errors.hpp"
#include "geokm/geometry.hpp"
#include "geokm/harness.hpp"
#include "geokm/iteration.hpp"
#include "geokm/moduli.hpp"
#include "geokm/rates.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace geokm;
using nlohmann::json;

namespace {

double now_secs() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool announce(int idx, const char* name, bool ok, double secs = -1.0) {
    if (secs >= 0.0)
        std::printf("[criterion %d] %s: %s (%.1fs)\n", idx, name, ok ? "PASS" : "FAIL", secs);
    else
        std::printf("[criterion %d] %s: %s\n", idx, name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    return ok;
}

json ten_vertex_tree() {
    return json{{"kind", "metric-tree"},
                {"vertices", {"v0", "v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9"}},
                {"edges",
                 {{0, 1, 1.0},
                  {1, 2, 0.5},
                  {2, 3, 1.5},
                  {1, 4, 2.0},
                  {4, 5, 0.3},
                  {0, 6, 1.0},
                  {6, 7, 0.7},
                  {7, 8, 0.2},
                  {8, 9, 1.1}}}};
}

struct NamedSpace {
    const char* name;
    Space space;
    double tol;
};

std::vector<NamedSpace> acceptance_spaces() {
    std::vector<NamedSpace> out;
    out.push_back({"euclidean-2", build_space(json{{"kind", "euclidean"}, {"dim", 2}}), 1e-9});
    out.push_back({"euclidean-5", build_space(json{{"kind", "euclidean"}, {"dim", 5}}), 1e-9});
    out.push_back({"hyperbolic-plane", build_space(json{{"kind", "hyperbolic-plane"}}), 1e-7});
    out.push_back({"metric-tree-10", build_space(ten_vertex_tree()), 1e-9});
    return out;
}

struct MatrixRun {
    SuiteSummary suite;
    double secs = 0.0;
    bool threw = false;
    std::string err;
};

const MatrixRun& matrix_run() {
    static const MatrixRun run = [] {
        MatrixRun r;
        const double t0 = now_secs();
        try {
            r.suite = soundness_suite(default_soundness_matrix());
        } catch (const std::exception& e) {
            r.threw = true;
            r.err = e.what();
        }
        r.secs = now_secs() - t0;
        return r;
    }();
    return run;
}

} // namespace

TEST_CASE("criterion 1: convexity axioms hold in all model spaces") {
    const double t0 = now_secs();
    bool ok = true;
    try {
        for (const NamedSpace& ns : acceptance_spaces()) {
            for (const SampleReport& r : check_convexity_axioms(ns.space, 2024, 10000, ns.tol)) {
                if (!r.pass) ok = false;
                if (r.samples <= 0) ok = false;
            }
        }
    } catch (const std::exception&) {
        ok = false;
    }
    const double secs = now_secs() - t0;
    ok = ok && secs < 10.0;
    CHECK(announce(1, "axioms, 4 spaces x 10000 samples", ok, secs));
}

TEST_CASE("criterion 2: the convexity modulus verifies and an overclaimed one is refuted") {
    bool ok = true;
    try {
        const Modulus cat0 = cat0_modulus();
        for (const NamedSpace& ns : acceptance_spaces()) {
            const ModulusReport r = verify_modulus(ns.space, cat0, 2025, 10000, ns.tol);
            if (!r.pass) ok = false;
            if (r.premise_satisfying < 2000) ok = false;
        }
        const Modulus overclaim("overclaim", Expr::parse("eps"), std::nullopt, true);
        const Space euclid2 = build_space(json{{"kind", "euclidean"}, {"dim", 2}});
        const ModulusReport bad = verify_modulus(euclid2, overclaim, 2025, 10000, 1e-9);
        if (bad.pass) ok = false;
        if (bad.max_violation <= 0.01) ok = false;
        if (bad.witness.empty()) ok = false;
    } catch (const std::exception&) {
        ok = false;
    }
    CHECK(announce(2, "modulus verified on 4 spaces; eta = eps refuted with witness", ok));
}

TEST_CASE("criterion 3: bound counts match an independent oracle and frozen values") {
    bool ok = true;
    try {
        const Modulus cat0 = cat0_modulus();

        const ThetaInfo eta = compute_theta(BigRat(0), 2, BigRat(1), BigRat(1), cat0,
                                            ThetaRoute::eta);
        ok = ok && eta.theta.is_exact() && eta.theta.lo == BigRat(1, 110592);
        const ThetaInfo tilde = compute_theta(BigRat(0), 2, BigRat(1), BigRat(1), cat0,
                                              ThetaRoute::eta_tilde);
        ok = ok && tilde.theta.is_exact() && tilde.theta.lo == BigRat(1, 4608);

        BoundInputs worked;
        worked.K = 0;
        worked.L = 2;
        worked.b = 1;
        worked.eps = 1;
        ok = ok && compute_m(worked) == BigInt(2820096);
        ok = ok && compute_phi_asreg(BigRat(0), 2, BigRat(1), BigRat(1), cat0).phi ==
                       BigInt(5640192);
        const auto [closed, derived] = compute_phi_cat0(BigRat(0), 2, BigRat(1), BigRat(1));
        ok = ok && closed.m_count == BigInt(2820096) && derived.m_count == BigInt(117504);

        QihouInputs qi;
        qi.a1 = 4;
        qi.b1 = 1;
        qi.c1 = 2;
        qi.a2 = 2;
        qi.b2 = 0;
        qi.c2 = 0;
        qi.theta = 1;
        ok = ok && quant_qihou_psi(qi).m_count == BigInt(275);
        QihouInputs unit;
        unit.a1 = unit.a2 = 1;
        unit.b1 = unit.c1 = unit.b2 = unit.c2 = 0;
        unit.theta = 1;
        const QihouBound uq = quant_qihou_psi(unit);
        ok = ok && uq.m_count == BigInt(6) && uq.psi == BigInt(0);

        int sets = 0;
        for (const char* k : {"0", "1/2", "1"}) {
            for (long L : {2L, 4L}) {
                for (const char* b : {"1", "10"}) {
                    for (const char* e : {"1", "1/10"}) {
                        BoundInputs in;
                        in.K = rat_from_string(k);
                        in.L = L;
                        in.b = rat_from_string(b);
                        in.eps = rat_from_string(e);
                        in.modulus = &cat0;
                        for (MVariant v : {MVariant::paper, MVariant::strict}) {
                            const BigRat c = v == MVariant::paper ? BigRat(11, 2) : BigRat(10);
                            in.variant = v;
                            in.route = ThetaRoute::eta;
                            ok = ok && compute_m(in) ==
                                           oracles::m_count_cat0(in.K, L, in.b, in.eps, c, false);
                            in.route = ThetaRoute::eta_tilde;
                            ok = ok && compute_m(in) ==
                                           oracles::m_count_cat0(in.K, L, in.b, in.eps, c, true);
                        }
                        ++sets;
                    }
                }
            }
        }
        ok = ok && sets >= 10;
    } catch (const std::exception&) {
        ok = false;
    }
    CHECK(announce(3, "M counts: 24 oracle parameter sets + frozen worked values", ok));
}

TEST_CASE("criterion 4: soundness matrix stabilizes within the certified bounds") {
    const MatrixRun& run = matrix_run();
    bool ok = !run.threw;
    long rows_seen = 0;
    if (ok) {
        const SuiteSummary& s = run.suite;
        ok = ok && s.pass;
        ok = ok && s.report.at("passed").get<long>() == 12;
        ok = ok && s.report.at("failed").get<long>() == 0;
        ok = ok && s.report.at("hypothesis_failed").get<long>() == 0;
        for (const auto& row : s.report.at("rows")) {
            if (!row.contains("bounds")) {
                ok = false;
                continue;
            }
            for (const auto& br : row.at("bounds")) {
                ++rows_seen;
                ok = ok && br.at("pass").get<bool>();
                ok = ok && br.at("window").at("status") == "found";
                ok = ok && br.at("n_emp_le_phi").get<bool>();
                ok = ok && br.at("candidate").at("found").get<bool>();
            }
        }
        ok = ok && rows_seen == 48; // 12 configs x 2 variants x 2 counterfunctions
        ok = ok && run.secs < 60.0;
    }
    CHECK(announce(4, "12-config matrix, N_emp <= phi for both variants and both g", ok,
                   run.secs));
}

TEST_CASE("criterion 5: every step of every matrix trace passes the inequality audit") {
    const MatrixRun& run = matrix_run();
    bool ok = !run.threw;
    if (ok) {
        long audits = 0;
        for (const auto& row : run.suite.report.at("rows")) {
            if (!row.contains("audit")) {
                ok = false;
                continue;
            }
            const auto& audit = row.at("audit");
            ++audits;
            ok = ok && audit.at("pass").get<bool>();
            ok = ok && audit.at("steps").get<long>() == 4096;
            ok = ok && audit.at("reconstruction_max").get<double>() <= 1e-12;
            long fams = 0;
            for (const auto& f : audit.at("families")) {
                ++fams;
                ok = ok && f.at("pass").get<bool>();
                ok = ok && f.at("worst_margin").get<double>() <= 1e-9;
            }
            ok = ok && fams == 4;
        }
        ok = ok && audits == 12;
    }
    CHECK(announce(5, "iteration audits within 1e-9 on all 12 traces", ok));
}

TEST_CASE("criterion 6: coupled-sequence windows are found on 100 seeded instances") {
    bool ok = true;
    long runs = 0;
    try {
        const BigRat thetas[2] = {BigRat(1), BigRat(1, 10)};
        const char* gs[2] = {"zero", "const:3"};
        for (int ti = 0; ti < 2; ++ti) {
            for (int gi = 0; gi < 2; ++gi) {
                QihouInputs in;
                in.a1 = 1;
                in.b1 = 1;
                in.c1 = 1;
                in.a2 = 1;
                in.b2 = BigRat(1, 2);
                in.c2 = BigRat(1, 2);
                in.theta = thetas[ti];
                in.g = GFunc::parse(gs[gi]);
                const QihouBound qb = quant_qihou_psi(in);
                const std::int64_t len = qb.psi.get_si() + 2;
                for (int seed = 0; seed < 25; ++seed) {
                    Rng rng(1000 + 100 * ti + 10 * gi + seed);
                    auto make_side = [&](double cap_a, double cap_b, double cap_c,
                                         std::vector<double>& x, std::vector<double>& growth,
                                         std::vector<double>& drift) {
                        const double rho = rng.uniform(0.5, 0.95);
                        x.assign(1, rng.uniform(0.3, 1.0) * cap_a);
                        growth.clear();
                        drift.clear();
                        for (std::int64_t n = 0; n < len - 1; ++n) {
                            growth.push_back(cap_b * 0.5 * std::pow(0.5, n));
                            drift.push_back(cap_c * 0.5 * std::pow(0.5, n));
                            x.push_back(rho * ((1.0 + growth[n]) * x[n] + drift[n]));
                        }
                        growth.push_back(0.0);
                        drift.push_back(0.0);
                    };
                    std::vector<double> a, b, c, alpha, beta, gamma;
                    make_side(1.0, 1.0, 1.0, a, b, c);
                    make_side(1.0, 0.5, 0.5, alpha, beta, gamma);
                    const QihouSeqResult r = verify_qihou_on_sequences(a, b, c, alpha, beta,
                                                                       gamma, in);
                    ok = ok && r.n >= 0 && r.candidate_index < qb.m_count;
                    ok = ok && r.osc_a <= rat_to_double(in.theta) + 1e-9;
                    ok = ok && r.osc_alpha <= rat_to_double(in.theta) + 1e-9;
                    ++runs;
                }
            }
        }
    } catch (const std::exception&) {
        ok = false;
    }
    ok = ok && runs == 100;
    CHECK(announce(6, "100 coupled-sequence instances, premise-checked, windows found", ok));
}

TEST_CASE("criterion 7: drop witnesses are found on 100 seeded monotone sequences") {
    bool ok = true;
    long runs = 0;
    try {
        const double epss[2] = {0.5, 0.1};
        const char* gs[2] = {"successor", "linear:2,1"};
        for (int ei = 0; ei < 2; ++ei) {
            for (int gi = 0; gi < 2; ++gi) {
                const GFunc g = GFunc::parse(gs[gi]);
                for (int seed = 0; seed < 25; ++seed) {
                    Rng rng(5000 + 100 * ei + 10 * gi + seed);
                    const double a0 = rng.uniform(0.1, 3.0);
                    const double rho = rng.uniform(0.5, 0.99);
                    std::vector<double> a;
                    double v = a0;
                    for (int n = 0; n < 4096; ++n) {
                        a.push_back(v);
                        v *= rho;
                    }
                    const BasicLemmaWitness w = verify_basic_lemma_on_sequence(a, epss[ei], g);
                    ok = ok && w.drop <= epss[ei];
                    ok = ok && w.start >= 0;
                    ok = ok && a[w.start] - a[g.at_i64(w.start)] == w.drop;
                    ++runs;
                }
            }
        }
    } catch (const std::exception&) {
        ok = false;
    }
    ok = ok && runs == 100;
    CHECK(announce(7, "100 monotone sequences, drop witness inside the certified horizon", ok));
}

TEST_CASE("criterion 8: structural identities of the bound machinery") {
    bool ok = true;
    try {
        const Modulus cat0 = cat0_modulus();
        for (const char* k : {"0", "1/2", "1"}) {
            for (const char* e : {"1", "1/10"}) {
                BoundInputs in;
                in.K = rat_from_string(k);
                in.L = 2;
                in.b = 2;
                in.eps = rat_from_string(e);
                in.modulus = &cat0;

                // g == 0 metastability and asymptotic regularity agree exactly
                const BoundReport meta = compute_phi_metastable(in);
                const BoundReport asreg = compute_phi_asreg(in.K, 2, in.b, in.eps, cat0);
                ok = ok && meta.phi == asreg.phi && meta.m_count == asreg.m_count;
                ok = ok && meta.phi_lower == 2 * meta.m_count;

                // theta lies in (0, 1) and below eps / (L^2 f(K))
                const ThetaInfo ti = compute_theta(in.K, 2, in.b, in.eps, cat0, ThetaRoute::eta);
                ok = ok && ti.theta.lo > 0 && ti.theta.hi < 1;
                ok = ok && ti.theta.hi <= in.eps / (BigRat(4) * ti.f_k);

                // the strict additive constant only enlarges M
                const BigInt m_paper = compute_m(in);
                in.variant = MVariant::strict;
                ok = ok && compute_m(in) >= m_paper;
                in.variant = MVariant::paper;

                // eta route dominates the factored route
                in.route = ThetaRoute::eta_tilde;
                ok = ok && m_paper >= compute_m(in);
                in.route = ThetaRoute::eta;

                // published cat0 closed form dominates the derived one
                const auto [closed, derived] =
                    compute_phi_cat0(in.K, 2, in.b, in.eps);
                ok = ok && closed.m_count >= derived.m_count;
            }
        }

        // guaranteed candidates are exactly h^i(0) + 1
        for (const char* spec : {"zero", "successor", "linear:1,0", "table:[4,1,5]"}) {
            const GFunc g = GFunc::parse(spec);
            const auto cands = h_candidates(g, BigInt(8), HKind::horizon, 1000000);
            for (std::size_t i = 0; i < cands.size(); ++i) {
                const BigInt hi = iterate_h(g, BigInt(static_cast<long>(i)), HKind::horizon,
                                            1 << 20);
                ok = ok && BigInt(static_cast<long>(cands[i])) == hi + 1;
            }
        }
    } catch (const std::exception&) {
        ok = false;
    }
    CHECK(announce(8, "bound identities: asreg = meta(g=0), variants, routes, candidates", ok));
}
