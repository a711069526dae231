// Acceptance suite: end-to-end checks of the published fixture results and
// the cross-cutting property batch, one test per criterion, each printing a
// single PASS/FAIL line. CLI-facing criteria shell out to the built binary.

#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "switchmargin/cert_cache.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/linalg.hpp"
#include "switchmargin/lyapunov.hpp"
#include "switchmargin/periodic.hpp"
#include "switchmargin/problem_io.hpp"
#include "switchmargin/switching.hpp"

#ifndef SWITCHMARGIN_CLI_PATH
#error "SWITCHMARGIN_CLI_PATH must be defined"
#endif
#ifndef SWITCHMARGIN_FIXTURES_DIR
#error "SWITCHMARGIN_FIXTURES_DIR must be defined"
#endif

namespace {

namespace sm = switchmargin;
using nlohmann::json;
using sm::Mat;
using sm::Vec;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Scratch directory holding fixture copies so cache files never touch the
// source tree.
std::string work_dir() {
    static std::string dir = [] {
        std::string d = ::testing::TempDir() + "switchmargin_acceptance";
        if (std::system(("rm -rf " + d + " && mkdir -p " + d).c_str()) != 0)
            throw std::runtime_error("cannot prepare acceptance work dir " + d);
        for (const char* name : {"example1.toml", "example2.toml", "example3.toml"}) {
            if (std::system(("cp " + std::string(SWITCHMARGIN_FIXTURES_DIR) + "/" + name + " " +
                             d)
                                .c_str()) != 0)
                throw std::runtime_error("cannot copy fixture into work dir");
        }
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd =
        "cd " + work_dir() + " && " + SWITCHMARGIN_CLI_PATH + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

json read_json(const std::string& name) {
    std::ifstream in(work_dir() + "/" + name);
    json j;
    in >> j;
    return j;
}

void report_line(int criterion, bool pass, const std::string& detail) {
    std::printf("[CRITERION %d] %s - %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

// Rotates/extends a periodic bang-bang cycle so it starts at a delta-phase
// boundary and covers the requested number of segments; the reference tables
// are listed in that phase convention.
std::vector<double> canonical_cycle_times(const sm::SwitchingSignal& periodic, int segments) {
    std::vector<double> durations;
    for (int s = 0; s < periodic.segments(); ++s) durations.push_back(periodic.duration(s));
    std::vector<double> values = periodic.values;
    // rotate so the first segment carries the bang value (delta phase)
    for (size_t rot = 0; rot < values.size(); ++rot) {
        if (values.front() != 0.0) break;
        std::rotate(values.begin(), values.begin() + 1, values.end());
        std::rotate(durations.begin(), durations.begin() + 1, durations.end());
    }
    std::vector<double> times = {0.0};
    for (int s = 0; s < segments; ++s)
        times.push_back(times.back() + durations[static_cast<size_t>(s) % durations.size()]);
    return times;
}

sm::ProblemFile example1() { return sm::load_problem(work_dir() + "/example1.toml"); }
sm::ProblemFile example2() { return sm::load_problem(work_dir() + "/example2.toml"); }

TEST(Acceptance, Criterion1_Example1LowerBound) {
    Timer timer;
    ASSERT_EQ(run_cli("margin-lower example1.toml --order 14 --epsilon 0.01 --out c1a.json"), 0);
    const double t_order14 = timer.seconds();
    const json a = read_json("c1a.json");
    const double delta_14 = a["result"]["delta_lower"].get<double>();

    ASSERT_EQ(run_cli("margin-lower example1.toml --order 28 --epsilon 0.01 --out c1b.json"), 0);
    const json b = read_json("c1b.json");
    const double delta_28 = b["result"]["delta_lower"].get<double>();

    const bool pass = delta_14 >= 2.10 && delta_14 <= 2.20 && t_order14 < 60.0 &&
                      delta_28 >= 2.11 && delta_28 <= 2.21;
    std::ostringstream detail;
    detail << "order-14 lower bound " << delta_14 << " in [2.10, 2.20] within " << t_order14
           << " s; order-28 lower bound " << delta_28 << " in [2.11, 2.21]";
    report_line(1, pass, detail.str());
    EXPECT_GE(delta_14, 2.10);
    EXPECT_LE(delta_14, 2.20);
    EXPECT_LT(t_order14, 60.0);
    EXPECT_GE(delta_28, 2.11);
    EXPECT_LE(delta_28, 2.21);
}

TEST(Acceptance, Criterion2_Example1UpperBound) {
    // Depends on the order-14 certificate; recreate it if criterion 1 has not
    // run yet in this process order.
    run_cli("margin-lower example1.toml --order 14 --epsilon 0.01");
    ASSERT_EQ(run_cli("margin-upper example1.toml --order 14 --increment 0.01 --x0 1,1 "
                      "--tf 20 --out c2.json"),
              0);
    const json j = read_json("c2.json");
    const double delta_lower = j["result"]["delta_lower"].get<double>();
    const double delta_upper = j["result"]["delta_upper"].get<double>();
    const double gap = delta_upper - delta_lower;
    const std::string witness_type = j["result"]["witness"]["type"].get<std::string>();
    const double residual = witness_type == "periodic_segment"
                                ? j["result"]["witness"]["unit_eig_residual"].get<double>()
                                : 1.0;

    const bool pass = delta_upper >= 2.16 && delta_upper <= 2.26 && residual <= 1e-3 &&
                      gap > 0.0 && gap <= 0.15;
    std::ostringstream detail;
    detail << "upper bound " << delta_upper << " in [2.16, 2.26], residual " << residual
           << " <= 1e-3, gap " << gap << " in (0, 0.15]";
    report_line(2, pass, detail.str());
    EXPECT_GE(delta_upper, 2.16);
    EXPECT_LE(delta_upper, 2.26);
    EXPECT_EQ(witness_type, "periodic_segment");
    EXPECT_LE(residual, 1e-3);
    EXPECT_GT(gap, 0.0);
    EXPECT_LE(gap, 0.15);
}

TEST(Acceptance, Criterion3_Example1SwitchingTables) {
    // The reference tables are upper-bound sweep return values: switching cycles
    // re-based to start at a delta-phase boundary.
    const sm::ProblemFile problem = example1();
    const sm::SwitchedLinearSystem sys = problem.system();
    sm::AlgorithmConfig cfg;
    cfg.i_max = 7;
    cfg.epsilon = 0.01;
    const auto lower = sm::under_approximate_margin(sys, cfg);

    const std::array<std::array<double, 5>, 2> expected_times = {
        {{0.0, 0.943, 2.374, 3.317, 4.747}, {0.0, 0.251, 1.681, 2.624, 4.055}}};
    const std::array<Vec, 2> starts = {(Vec(2) << 1.0, 1.0).finished(),
                                       (Vec(2) << -0.2, 0.8).finished()};

    bool pass = true;
    std::ostringstream detail;
    for (int which = 0; which < 2; ++which) {
        const auto report =
            sm::upper_bound_margin(sys, lower.certificate, starts[which], 20.0, 0.01, 1e-3);
        ASSERT_TRUE(std::holds_alternative<sm::PeriodicityWitness>(report.witness));
        const double delta_bar = report.delta_upper;

        std::vector<double> times;
        if (which == 0) {
            times = canonical_cycle_times(report.periodic_signal, 4);
        } else {
            // The second table includes the transient first segment: compare
            // against the raw worst-case sequence from this start.
            const auto level = sm::build_level(sys, lower.certificate.level);
            const auto wc = sm::find_switching_sequence(sys, level, lower.certificate.p,
                                                        delta_bar, starts[which], 20.0);
            // Table starts at the first delta-phase segment.
            size_t j0 = 0;
            while (j0 < wc.signal.values.size() && wc.signal.values[j0] == 0.0) ++j0;
            for (size_t k = j0; k < j0 + 5 && k < wc.signal.times.size(); ++k)
                times.push_back(wc.signal.times[k] - wc.signal.times[j0]);
        }

        double worst_err = 0.0;
        for (int k = 0; k < 5; ++k)
            worst_err = std::max(worst_err,
                                 std::abs(times[static_cast<size_t>(k)] -
                                          expected_times[static_cast<size_t>(which)]
                                                        [static_cast<size_t>(k)]));
        pass = pass && worst_err <= 0.05;
        detail << "x0#" << which + 1 << " max event-time error " << worst_err << " (delta_bar "
               << delta_bar << "); ";

        // Sigma pattern {delta_bar, 0, delta_bar, 0} on the canonical cycle.
        const auto cyc = report.periodic_signal;
        std::vector<double> vals = cyc.values;
        for (size_t rot = 0; rot < vals.size() && vals.front() == 0.0; ++rot)
            std::rotate(vals.begin(), vals.begin() + 1, vals.end());
        for (size_t s = 0; s < 4; ++s) {
            const double expected_v = (s % 2 == 0) ? delta_bar : 0.0;
            pass = pass && std::abs(vals[s % vals.size()] - expected_v) < 1e-12;
        }
    }
    report_line(3, pass, detail.str());
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion4_Example2AircraftFixture) {
    Timer timer;
    ASSERT_EQ(run_cli("margin-lower example2.toml --order 6 --epsilon 0.01 --out c4a.json"), 0);
    const json a = read_json("c4a.json");
    const double delta_lower = a["result"]["delta_lower"].get<double>();

    ASSERT_EQ(run_cli("margin-upper example2.toml --increment 0.01 --x0 1,1,1,1 --tf 1.0 "
                      "--out c4b.json"),
              0);
    const json b = read_json("c4b.json");
    const double delta_upper = b["result"]["delta_upper"].get<double>();

    // Periodic event times, canonicalized to the delta-phase start.
    sm::SwitchingSignal periodic;
    periodic.delta = b["result"]["periodic_signal"]["delta"].get<double>();
    periodic.times = b["result"]["periodic_signal"]["times"].get<std::vector<double>>();
    periodic.values = b["result"]["periodic_signal"]["values"].get<std::vector<double>>();
    const auto cycle = canonical_cycle_times(periodic, 2);
    const double err1 = std::abs(cycle[1] - 0.027);
    const double err2 = std::abs(cycle[2] - 0.060);

    // Indicator series becomes periodic after a short transient: replay the
    // worst-case run at the upper bound and check that late event spacing
    // repeats cycle to cycle.
    const sm::ProblemFile problem = example2();
    const sm::SwitchedLinearSystem sys = problem.system();
    sm::CertCache cache(problem.path);
    const auto cert = cache.best(sm::system_hash(sys));
    ASSERT_TRUE(cert.has_value());
    const auto level = sm::build_level(sys, cert->level);
    const auto wc = sm::find_switching_sequence(sys, level, cert->p, delta_upper,
                                                problem.default_x0(), 1.0);
    std::vector<double> tail_deltas, tail_zeros;
    for (size_t s = 0; s + 1 < wc.signal.times.size(); ++s) {
        if (wc.signal.times[s] < 0.5) continue;  // allow the transient
        const double dur = wc.signal.times[s + 1] - wc.signal.times[s];
        if (s + 2 >= wc.signal.times.size()) break;  // skip the horizon-clipped tail
        (wc.signal.values[s] != 0.0 ? tail_deltas : tail_zeros).push_back(dur);
    }
    const auto spread = [](const std::vector<double>& xs) {
        if (xs.size() < 2) return 1.0;
        double lo = xs[0], hi = xs[0];
        for (double x : xs) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return (hi - lo) / hi;
    };
    const bool periodic_tail = spread(tail_deltas) < 0.10 && spread(tail_zeros) < 0.10 &&
                               tail_deltas.size() >= 3 && tail_zeros.size() >= 3;

    // Monotone detection: just above the bound the system stays on or outside
    // the unit circle (no immediate re-stabilization).
    const auto wc_above = sm::find_switching_sequence(sys, level, cert->p, delta_upper + 0.1,
                                                      problem.default_x0(), 1.0);
    double max_radius = 0.0;
    for (int span = 2; span <= wc_above.signal.segments(); span += 2)
        for (int j = 0; j + span <= wc_above.signal.segments(); ++j)
            max_radius = std::max(max_radius,
                                  sm::eigenvalues(sm::transition_matrix(sys, wc_above.signal, j,
                                                                        j + span))
                                      .spectral_radius());
    const bool no_restabilize = max_radius >= 1.0 - 1e-3;

    const double elapsed = timer.seconds();
    const bool pass = delta_lower >= 0.21 && delta_lower <= 0.27 && delta_upper >= 0.24 &&
                      delta_upper <= 0.30 && err1 <= 0.01 && err2 <= 0.01 && periodic_tail &&
                      no_restabilize && elapsed < 600.0;
    std::ostringstream detail;
    detail << "lower " << delta_lower << " in [0.21, 0.27]; upper " << delta_upper
           << " in [0.24, 0.30]; cycle times errors " << err1 << "/" << err2
           << " <= 0.01; indicator periodic after <= 0.5 s transient ("
           << (periodic_tail ? "yes" : "no") << "); no re-stabilization above the bound ("
           << (no_restabilize ? "yes" : "no") << "); runtime " << elapsed << " s < 600 s";
    report_line(4, pass, detail.str());
    EXPECT_GE(delta_lower, 0.21);
    EXPECT_LE(delta_lower, 0.27);
    EXPECT_GE(delta_upper, 0.24);
    EXPECT_LE(delta_upper, 0.30);
    EXPECT_LE(err1, 0.01);
    EXPECT_LE(err2, 0.01);
    EXPECT_TRUE(periodic_tail);
    EXPECT_TRUE(no_restabilize);
    EXPECT_LT(elapsed, 600.0);
}

TEST(Acceptance, Criterion5_PropertySuite) {
    std::mt19937 rng(2026);
    bool pass = true;
    std::ostringstream detail;

    // (a) lifted-trajectory equivalence on random stable 2x2, i in {2, 3}.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            const Mat a = oracles::random_hurwitz(rng, 2);
            const Vec x0 = oracles::random_matrix(rng, 2, 1).col(0);
            for (int i : {2, 3}) {
                const auto basis = sm::symmetric_basis(2, i);
                const Mat cal_a = sm::reduced_lift_operator(a, basis);
                const Vec xi0 = sm::lift_state(x0, basis);
                for (double t = 0.5; t <= 10.0; t += 0.5) {
                    const Vec x_t = sm::expm(a, t) * x0;
                    const Vec xi_t = sm::expm(cal_a, t) * xi0;
                    worst = std::max(worst, (xi_t - sm::lift_state(x_t, basis))
                                                .cwiseAbs()
                                                .maxCoeff());
                }
            }
        }
        pass = pass && worst <= 1e-6;
        detail << "(a) sup err " << worst << "; ";
    }

    // (b) recursive vs closed-form lift to 1e-12 for i <= 4.
    {
        double worst = 0.0;
        for (int n : {2, 3}) {
            const Mat m = oracles::random_matrix(rng, n, n);
            for (int i = 1; i <= 4; ++i)
                worst = std::max(worst, (sm::lift_operator_recursive(m, i) -
                                         sm::lift_operator_full(m, i))
                                            .cwiseAbs()
                                            .maxCoeff());
        }
        pass = pass && worst <= 1e-12;
        detail << "(b) lift agreement " << worst << "; ";
    }

    // (c) reduced spectrum contained in the full spectrum, tolerance 1e-6.
    {
        double worst = 0.0;
        for (int n : {2, 3}) {
            for (int i = 2; i <= 3; ++i) {
                const Mat m = oracles::random_matrix(rng, n, n);
                const auto basis = sm::symmetric_basis(n, i);
                const auto red = sm::eigenvalues(sm::reduced_lift_operator(m, basis)).eigenvalues;
                const auto full = sm::eigenvalues(sm::lift_operator_full(m, i)).eigenvalues;
                for (int r = 0; r < red.size(); ++r) {
                    double best = 1e18;
                    for (int f = 0; f < full.size(); ++f)
                        best = std::min(best, std::abs(red(r) - full(f)));
                    worst = std::max(worst, best);
                }
            }
        }
        pass = pass && worst <= 1e-6;
        detail << "(c) containment " << worst << "; ";
    }

    // (d) every returned certificate re-verifies its LMIs by eigenvalue check.
    const sm::ProblemFile problem = example1();
    const sm::SwitchedLinearSystem sys = problem.system();
    sm::AlgorithmConfig cfg;
    cfg.i_max = 7;
    cfg.epsilon = 0.01;
    const auto lower = sm::under_approximate_margin(sys, cfg);
    {
        bool ok = true;
        for (const auto& cert : lower.level_certificates) {
            const auto level = sm::build_level(sys, cert.level);
            ok = ok && sm::symmetric_eigenvalues(cert.p).minCoeff() >= 1.0 - 1e-8;
            for (const double d : {0.0, cert.delta_certified}) {
                const Mat mode = level.reduced_mode(d);
                const Mat lyap = mode.transpose() * cert.p + cert.p * mode;
                ok = ok && sm::symmetric_eigenvalues(lyap).maxCoeff() <=
                               -cert.feasibility_margin / 2.0;
            }
        }
        pass = pass && ok;
        detail << "(d) certificates re-verified (" << lower.level_certificates.size()
               << "); ";
    }

    // (e) fixed-P margin against the bisection oracle on 20 certified draws.
    {
        double worst = 0.0;
        int tested = 0;
        while (tested < 20) {
            const Mat m = oracles::random_hurwitz(rng, 3);
            const Mat d = oracles::random_matrix(rng, 3, 3);
            const Mat p = oracles::solve_lyapunov(m, -Mat::Identity(3, 3));
            if (sm::symmetric_eigenvalues(p).minCoeff() <= 1e-9) continue;
            sm::HierarchyLevel level;
            level.level = 1;
            level.basis = sm::symmetric_basis(3, 1);
            level.cal_a = m;
            level.cal_a0 = d;
            const auto out = sm::max_delta_fixed_p(level, p);
            if (out.unbounded || out.degenerate) continue;
            const Mat n0 = m.transpose() * p + p * m;
            const Mat n1 = d.transpose() * p + p * d;
            const double oracle = oracles::bisect_sup(
                [&](double delta) {
                    return sm::symmetric_eigenvalues(n0 + delta * n1).maxCoeff() <= 1e-12;
                },
                0.0, out.delta * 4.0 + 1.0, 1e-8);
            worst = std::max(worst, std::abs(out.delta - oracle) / (1.0 + out.delta));
            ++tested;
        }
        pass = pass && worst <= 1e-6;
        detail << "(e) fixed-P vs bisection " << worst << "; ";
    }

    // (f) bang-bang pointwise derivative maximality at 1000 sampled states.
    {
        const auto level = sm::build_level(sys, lower.certificate.level);
        const Mat& p = lower.certificate.p;
        const Mat n0 = level.cal_a.transpose() * p + p * level.cal_a;
        const Mat n1 = level.cal_a0.transpose() * p + p * level.cal_a0;
        const double delta = 2.21;
        sm::IntegratorConfig integ;
        integ.sample_dt = 20.0 / 1200.0;  // at least 1000 sampled states
        const auto wc = sm::find_switching_sequence(sys, level, p, delta,
                                                    (Vec(2) << 1.0, 1.0).finished(), 20.0, integ);
        bool ok = true;
        int states_checked = 0;
        std::uniform_real_distribution<double> unif(0.05, 0.95);
        for (size_t s = 0; s < wc.trajectory.states.size() && states_checked < 1000; ++s) {
            const Vec& x = wc.trajectory.states[s];
            const Vec xi = sm::lift_state(x, level.basis);
            const double chosen = sm::worst_case_delta(x, delta, level, p);
            const double v_chosen = xi.dot((n0 + chosen * n1) * xi);
            for (int r = 0; r < 10; ++r) {
                const double interior = delta * unif(rng);
                const double v_interior = xi.dot((n0 + interior * n1) * xi);
                ok = ok && v_chosen >= v_interior - 1e-10 * (1.0 + std::abs(v_chosen));
            }
            ++states_checked;
        }
        pass = pass && ok && states_checked >= 1000;
        detail << "(f) bang-bang maximality at " << states_checked << " states; ";
    }

    // (g) witness consistency: replay of the periodic span matches A_d.
    {
        const auto report = sm::upper_bound_margin(sys, lower.certificate,
                                                   (Vec(2) << 1.0, 1.0).finished(), 20.0, 0.01,
                                                   1e-3);
        const auto& w = std::get<sm::PeriodicityWitness>(report.witness);
        Vec x0(2);
        x0 << 0.6, -0.8;
        const auto replay = sm::simulate_fixed_signal(sys, report.periodic_signal, x0, {},
                                                      sm::ReplayMode::Ode);
        const double err = (replay.states.back() - w.a_d * x0).norm() / x0.norm();
        pass = pass && err <= 1e-4;
        detail << "(g) witness consistency " << err << "; ";
    }

    // (h) LTI completeness over 100 random 3x3 draws.
    {
        bool ok = true;
        for (int trial = 0; trial < 50; ++trial) {
            const Mat stable = oracles::random_hurwitz(rng, 3);
            ok = ok && sm::find_common_lyapunov({stable}, 3).status ==
                           sm::FeasibilityStatus::Found;
        }
        int unstable_seen = 0;
        while (unstable_seen < 50) {
            Mat m = oracles::random_matrix(rng, 3, 3, 2.0);
            if (sm::is_hurwitz(m, 1e-9)) continue;
            ++unstable_seen;
            ok = ok && sm::find_common_lyapunov({m}, 3).status !=
                           sm::FeasibilityStatus::Found;
        }
        pass = pass && ok;
        detail << "(h) LTI completeness 100/100";
    }

    report_line(5, pass, detail.str());
    EXPECT_TRUE(pass);
}

TEST(Acceptance, Criterion6_Example3WorstCaseImpulse) {
    run_cli("margin-lower example3.toml --order 14 --epsilon 0.01");
    ASSERT_EQ(run_cli("impulse example3.toml --delta 1 --tf 20 --order 14 --out c6.json "
                      "--out-csv c6.csv"),
              0);

    // Envelope comparison from the CSV: the worst-case response must exceed
    // the unswitched response decisively somewhere (it decays much slower).
    std::ifstream csv(work_dir() + "/c6.csv");
    std::string header;
    std::getline(csv, header);
    ASSERT_NE(header.find("h_worst,h_nominal"), std::string::npos);
    std::vector<double> t, hw, hn;
    std::string line;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        t.push_back(row[0]);
        hn.push_back(row[row.size() - 1]);
        hw.push_back(row[row.size() - 2]);
    }
    ASSERT_GT(t.size(), 100u);

    // envelope(t) = max_{s >= t} |h(s)|
    std::vector<double> env_w(t.size()), env_n(t.size());
    double mw = 0.0, mn = 0.0;
    for (size_t i = t.size(); i-- > 0;) {
        mw = std::max(mw, std::abs(hw[i]));
        mn = std::max(mn, std::abs(hn[i]));
        env_w[i] = mw;
        env_n[i] = mn;
    }
    double best_ratio = 0.0;
    bool pointwise_exceeds = false;
    for (size_t i = 0; i < t.size(); ++i) {
        if (env_n[i] > 1e-12) best_ratio = std::max(best_ratio, env_w[i] / env_n[i]);
        if (std::abs(hw[i]) > std::abs(hn[i]) + 1e-9) pointwise_exceeds = true;
    }

    const bool pass = pointwise_exceeds && best_ratio > 1.1;
    std::ostringstream detail;
    detail << "worst-case envelope exceeds unswitched envelope (max ratio " << best_ratio
           << "), pointwise exceedance " << (pointwise_exceeds ? "yes" : "no");
    report_line(6, pass, detail.str());
    EXPECT_TRUE(pointwise_exceeds);
    EXPECT_GT(best_ratio, 1.1);
}

}  // namespace
