// Command-line front end: margin-lower / worst-switch / margin-upper /
// impulse / simulate over TOML problem files, with JSON reports and
// plot-ready CSV trajectories.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "switchmargin/cert_cache.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/linalg.hpp"
#include "switchmargin/lyapunov.hpp"
#include "switchmargin/periodic.hpp"
#include "switchmargin/problem_io.hpp"
#include "switchmargin/switching.hpp"

namespace {

namespace sm = switchmargin;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotHurwitz = 2;
constexpr int kExitSolver = 3;
constexpr int kExitSweepExhausted = 4;

ordered_json json_matrix(const sm::Mat& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json json_spectrum(const sm::Spectrum& spec) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
        out.push_back(ordered_json{{"re", spec.eigenvalues(i).real()},
                                   {"im", spec.eigenvalues(i).imag()},
                                   {"abs", std::abs(spec.eigenvalues(i))}});
    }
    return out;
}

sm::Vec parse_x0(const std::string& text, int n) {
    std::vector<double> vals;
    std::string token;
    for (char ch : text + ",") {
        if (ch == ',' || ch == ' ' || ch == ';') {
            if (!token.empty()) {
                try {
                    vals.push_back(std::stod(token));
                } catch (const std::exception&) {
                    throw sm::ParseError("--x0: '" + token + "' is not a number");
                }
                token.clear();
            }
        } else {
            token += ch;
        }
    }
    if (static_cast<int>(vals.size()) != n)
        throw sm::ParseError("--x0 must list " + std::to_string(n) + " components, got " +
                             std::to_string(vals.size()));
    sm::Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = vals[static_cast<size_t>(i)];
    return x;
}

// Timestamp plus wall time, deliberately folded into one field so reports are
// byte-identical across runs modulo exactly this value.
std::string timestamp_field(double wall_seconds) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    char out[128];
    std::snprintf(out, sizeof(out), "%s wall=%.3fs", buf, wall_seconds);
    return out;
}

ordered_json report_skeleton(const std::string& command, const sm::ProblemFile& problem) {
    ordered_json j;
    j["meta"] = ordered_json{{"tool", "switchmargin"},
                             {"version", kVersion},
                             {"command", command},
                             {"determinism", "seedless; identical inputs give identical reports "
                                             "modulo meta.timestamp"},
                             {"timestamp", ""}};
    ordered_json prob;
    prob["path"] = problem.path;
    prob["n"] = problem.n;
    prob["A"] = json_matrix(problem.a);
    prob["A0"] = json_matrix(problem.a0);
    if (problem.b) {
        ordered_json b = ordered_json::array();
        for (Eigen::Index i = 0; i < problem.b->size(); ++i) b.push_back((*problem.b)(i));
        prob["B"] = std::move(b);
    }
    if (problem.c) {
        ordered_json c = ordered_json::array();
        for (Eigen::Index i = 0; i < problem.c->cols(); ++i) c.push_back((*problem.c)(i));
        prob["C"] = std::move(c);
    }
    j["problem"] = std::move(prob);
    return j;
}

void finalize_report(ordered_json& report, const std::string& out_path, double wall_seconds) {
    report["meta"]["timestamp"] = timestamp_field(wall_seconds);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw sm::Error("cannot write report to " + out_path);
        out << report.dump(2) << "\n";
    }
}

ordered_json json_signal(const sm::SwitchingSignal& signal) {
    return ordered_json{
        {"delta", signal.delta}, {"times", signal.times}, {"values", signal.values}};
}

ordered_json json_certificate(const sm::LyapunovCertificate& cert) {
    return ordered_json{{"level", cert.level},
                        {"order", 2 * cert.level},
                        {"delta_certified", cert.delta_certified},
                        {"feasibility_margin", cert.feasibility_margin},
                        {"p", json_matrix(cert.p)}};
}

// Trajectory CSV: header t,x1,...,xn,delta,indicator; the impulse command
// appends h_worst,h_nominal columns.
void write_trajectory_csv(const std::string& path, const sm::Trajectory& traj,
                          const sm::SwitchingSignal& signal,
                          const sm::HierarchyLevel* level, const sm::Mat* p,
                          const std::vector<double>* h_worst = nullptr,
                          const std::vector<double>* h_nominal = nullptr) {
    std::ofstream out(path);
    if (!out) throw sm::Error("cannot write CSV to " + path);
    const int n = static_cast<int>(traj.states.empty() ? 0 : traj.states.front().size());
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",x" << i;
    out << ",delta,indicator";
    if (h_worst != nullptr) out << ",h_worst,h_nominal";
    out << "\n";
    char buf[64];
    const auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (size_t row = 0; row < traj.times.size(); ++row) {
        emit(traj.times[row]);
        for (int i = 0; i < n; ++i) {
            out << ",";
            emit(traj.states[row](i));
        }
        out << ",";
        emit(signal.value_at(traj.times[row]));
        out << ",";
        const double ind =
            (level != nullptr && p != nullptr) ? sm::indicator(traj.states[row], *level, *p) : 0.0;
        emit(ind);
        if (h_worst != nullptr) {
            out << ",";
            emit((*h_worst)[row]);
            out << ",";
            emit((*h_nominal)[row]);
        }
        out << "\n";
    }
}

int resolve_level_flag(int order, int level, const char* context) {
    if (order > 0 && level > 0)
        throw sm::ParseError(std::string(context) + ": give either --order or --level, not both");
    if (order > 0) {
        if (order % 2 != 0)
            throw sm::ParseError(std::string(context) +
                                 ": --order is the polynomial order 2i and must be even, got " +
                                 std::to_string(order));
        return order / 2;
    }
    return level;  // 0 means "unset"
}

// Certificate lookup shared by the commands that consume one.
sm::LyapunovCertificate require_certificate(const sm::ProblemFile& problem, int level,
                                            const std::string& command) {
    sm::CertCache cache(problem.path);
    const uint64_t hash = sm::system_hash(problem.system());
    std::optional<sm::LyapunovCertificate> cert =
        (level > 0) ? cache.lookup(hash, level) : cache.best(hash);
    if (!cert) {
        std::string msg = command + ": no cached Lyapunov certificate";
        if (level > 0) msg += " at level " + std::to_string(level);
        msg += " for this system; run `switchmargin margin-lower " + problem.path + "`";
        if (level > 0) msg += " with --i-max >= " + std::to_string(level);
        msg += " first";
        throw sm::ParseError(msg);
    }
    return *cert;
}

int cmd_margin_lower(const std::string& problem_path, int i_max_flag, int order_flag,
                     double epsilon_flag, const std::string& out_path) {
    const auto t_start = std::chrono::steady_clock::now();
    const sm::ProblemFile problem = sm::load_problem(problem_path);
    const sm::SwitchedLinearSystem sys = problem.system();

    sm::AlgorithmConfig cfg;
    cfg.i_max = problem.defaults.i_max;
    cfg.epsilon = problem.defaults.epsilon;
    const int level_flag = resolve_level_flag(order_flag, i_max_flag, "margin-lower");
    if (level_flag > 0) cfg.i_max = level_flag;
    if (epsilon_flag > 0.0) cfg.epsilon = epsilon_flag;

    const sm::LowerBoundReport result = sm::under_approximate_margin(sys, cfg);

    sm::CertCache cache(problem.path);
    const uint64_t hash = sm::system_hash(sys);
    for (const auto& cert : result.level_certificates) cache.store(hash, cert);
    cache.save();

    ordered_json report = report_skeleton("margin-lower", problem);
    report["flags"] = ordered_json{{"i_max", cfg.i_max}, {"epsilon", cfg.epsilon}};
    ordered_json res;
    res["delta_lower"] = result.delta_lower;
    res["swept_to_cap"] = result.swept_to_cap;
    res["certificate"] = json_certificate(result.certificate);
    ordered_json trace = ordered_json::array();
    for (const auto& e : result.trace) {
        trace.push_back(ordered_json{{"level", e.level},
                                     {"delta", e.delta_attempted},
                                     {"feasible", e.feasible},
                                     {"delta_p", e.delta_p},
                                     {"note", e.note}});
    }
    res["trace"] = std::move(trace);
    report["result"] = std::move(res);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                            .count();
    finalize_report(report, out_path, wall);
    std::printf("delta_lower = %.6f (certificate level %d, order %d)\n", result.delta_lower,
                result.certificate.level, 2 * result.certificate.level);
    return kExitOk;
}

int cmd_worst_switch(const std::string& problem_path, double delta, const std::string& x0_text,
                     double tf_flag, int order_flag, int level_flag,
                     const std::string& out_path, const std::string& csv_path, double sample_dt) {
    const auto t_start = std::chrono::steady_clock::now();
    const sm::ProblemFile problem = sm::load_problem(problem_path);
    const sm::SwitchedLinearSystem sys = problem.system();

    const int level_sel = resolve_level_flag(order_flag, level_flag, "worst-switch");
    const sm::LyapunovCertificate cert = require_certificate(problem, level_sel, "worst-switch");
    const sm::HierarchyLevel level = sm::build_level(sys, cert.level);

    const double t_f = (tf_flag > 0.0) ? tf_flag : problem.defaults.t_f;
    const sm::Vec x0 = x0_text.empty() ? problem.default_x0() : parse_x0(x0_text, sys.n);

    sm::IntegratorConfig integ;
    integ.sample_dt = (sample_dt > 0.0) ? sample_dt : t_f / 2000.0;
    const sm::SwitchingResult wc =
        sm::find_switching_sequence(sys, level, cert.p, delta, x0, t_f, integ);

    ordered_json report = report_skeleton("worst-switch", problem);
    report["flags"] = ordered_json{{"delta", delta},
                                   {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())},
                                   {"t_f", t_f},
                                   {"level", cert.level}};
    ordered_json res;
    res["signal"] = json_signal(wc.signal);
    res["events"] = wc.signal.values.size();
    res["truncated_overflow"] = wc.trajectory.truncated_overflow;
    res["certificate_level"] = cert.level;
    report["result"] = std::move(res);

    if (!csv_path.empty())
        write_trajectory_csv(csv_path, wc.trajectory, wc.signal, &level, &cert.p);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                            .count();
    finalize_report(report, out_path, wall);

    std::printf("segments = %zu, breakpoints: ", wc.signal.values.size());
    const size_t show = std::min<size_t>(6, wc.signal.times.size());
    for (size_t i = 0; i < show; ++i) std::printf("%.3f ", wc.signal.times[i]);
    std::printf("%s\n", wc.signal.times.size() > show ? "..." : "");
    return kExitOk;
}

int cmd_margin_upper(const std::string& problem_path, double increment_flag,
                     const std::string& x0_text, double tf_flag, int order_flag,
                     double tol_unit_flag, const std::string& out_path) {
    const auto t_start = std::chrono::steady_clock::now();
    const sm::ProblemFile problem = sm::load_problem(problem_path);
    const sm::SwitchedLinearSystem sys = problem.system();

    const int level_sel = resolve_level_flag(order_flag, 0, "margin-upper");
    const sm::LyapunovCertificate cert = require_certificate(problem, level_sel, "margin-upper");

    const double increment =
        (increment_flag > 0.0) ? increment_flag : problem.defaults.increment;
    const double tol_unit = (tol_unit_flag > 0.0) ? tol_unit_flag : problem.defaults.tol_unit;
    const double t_f = (tf_flag > 0.0) ? tf_flag : problem.defaults.t_f;
    const sm::Vec x0 = x0_text.empty() ? problem.default_x0() : parse_x0(x0_text, sys.n);

    sm::MarginReport result;
    try {
        result = sm::upper_bound_margin(sys, cert, x0, t_f, increment, tol_unit);
    } catch (const sm::CapExceededError& e) {
        std::fprintf(stderr, "margin-upper: %s\n", e.what());
        return kExitSweepExhausted;
    }

    ordered_json report = report_skeleton("margin-upper", problem);
    report["flags"] = ordered_json{{"increment", increment},
                                   {"tol_unit", tol_unit},
                                   {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())},
                                   {"t_f", t_f},
                                   {"level", cert.level}};
    ordered_json res;
    res["delta_lower"] = result.delta_lower;
    res["delta_upper"] = result.delta_upper;
    res["sweep_steps"] = result.sweep_steps;
    res["periodic_signal"] = json_signal(result.periodic_signal);
    if (const auto* w = std::get_if<sm::PeriodicityWitness>(&result.witness)) {
        res["witness"] = ordered_json{{"type", "periodic_segment"},
                                      {"j", w->j},
                                      {"k", w->k},
                                      {"unit_eig_residual", w->unit_eig_residual},
                                      {"a_d", json_matrix(w->a_d)},
                                      {"spectrum", json_spectrum(w->spectrum)}};
    } else if (const auto* tw = std::get_if<sm::TrivialHurwitzLoss>(&result.witness)) {
        res["witness"] = ordered_json{{"type", "trivial_hurwitz_loss"},
                                      {"delta", tw->delta},
                                      {"a_d", json_matrix(tw->a_d)},
                                      {"spectrum", json_spectrum(tw->spectrum)}};
    }
    res["certificate"] = json_certificate(result.certificate);
    report["result"] = std::move(res);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                            .count();
    finalize_report(report, out_path, wall);
    std::printf("delta_upper = %.6f (delta_lower = %.6f, gap = %.6f)\n", result.delta_upper,
                result.delta_lower, result.delta_upper - result.delta_lower);
    return kExitOk;
}

int cmd_impulse(const std::string& problem_path, double delta, double tf_flag, int order_flag,
                const std::string& out_path, const std::string& csv_path) {
    const auto t_start = std::chrono::steady_clock::now();
    const sm::ProblemFile problem = sm::load_problem(problem_path);
    if (!problem.b || !problem.c)
        throw sm::ParseError(problem.path +
                             ": impulse requires B and C entries in the problem file");
    const sm::SwitchedLinearSystem sys = problem.system();

    const int level_sel = resolve_level_flag(order_flag, 0, "impulse");
    const sm::LyapunovCertificate cert = require_certificate(problem, level_sel, "impulse");
    const sm::HierarchyLevel level = sm::build_level(sys, cert.level);

    const double t_f = (tf_flag > 0.0) ? tf_flag : problem.defaults.t_f;
    sm::ImpulseSetup setup;
    setup.b = *problem.b;
    setup.c = *problem.c;

    sm::IntegratorConfig integ;
    integ.sample_dt = t_f / 2000.0;
    const sm::ImpulseResult result =
        sm::worst_case_impulse(sys, setup, level, cert.p, delta, t_f, integ);

    double peak_worst = 0.0, peak_nominal = 0.0;
    for (double h : result.h_worst) peak_worst = std::max(peak_worst, std::abs(h));
    for (double h : result.h_nominal) peak_nominal = std::max(peak_nominal, std::abs(h));

    ordered_json report = report_skeleton("impulse", problem);
    report["flags"] = ordered_json{{"delta", delta}, {"t_f", t_f}, {"level", cert.level}};
    ordered_json res;
    res["signal"] = json_signal(result.signal);
    res["peak_h_worst"] = peak_worst;
    res["peak_h_nominal"] = peak_nominal;
    report["result"] = std::move(res);

    if (!csv_path.empty())
        write_trajectory_csv(csv_path, result.trajectory, result.signal, &level, &cert.p,
                             &result.h_worst, &result.h_nominal);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                            .count();
    finalize_report(report, out_path, wall);
    std::printf("peak |h_worst| = %.6f, peak |h_nominal| = %.6f\n", peak_worst, peak_nominal);
    return kExitOk;
}

int cmd_simulate(const std::string& problem_path, const std::string& signal_path,
                 const std::string& x0_text, int order_flag, const std::string& out_path,
                 const std::string& csv_path) {
    const auto t_start = std::chrono::steady_clock::now();
    const sm::ProblemFile problem = sm::load_problem(problem_path);
    const sm::SwitchedLinearSystem sys = problem.system();
    const sm::SwitchingSignal signal = sm::load_signal(signal_path);

    const sm::Vec x0 = x0_text.empty() ? problem.default_x0() : parse_x0(x0_text, sys.n);

    // The indicator column needs a certificate; fall back to zeros when none
    // is cached so plain replays still work.
    std::optional<sm::LyapunovCertificate> cert;
    std::optional<sm::HierarchyLevel> level;
    const int level_sel = resolve_level_flag(order_flag, 0, "simulate");
    try {
        cert = require_certificate(problem, level_sel, "simulate");
        level = sm::build_level(sys, cert->level);
    } catch (const sm::ParseError&) {
        if (level_sel > 0) throw;  // explicitly requested level must exist
    }

    sm::IntegratorConfig integ;
    const double duration = signal.times.back() - signal.times.front();
    integ.sample_dt = duration / 2000.0;
    const sm::Trajectory traj =
        sm::simulate_fixed_signal(sys, signal, x0, integ, sm::ReplayMode::Exact);

    ordered_json report = report_skeleton("simulate", problem);
    report["flags"] = ordered_json{{"signal", signal_path},
                                   {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}};
    ordered_json res;
    res["signal"] = json_signal(signal);
    res["samples"] = traj.times.size();
    res["final_state_norm"] = traj.states.back().norm();
    res["indicator_column"] = cert.has_value() ? "certificate level " +
                                                     std::to_string(cert->level)
                                               : "no cached certificate; zeros";
    report["result"] = std::move(res);

    if (!csv_path.empty())
        write_trajectory_csv(csv_path, traj, signal, level ? &*level : nullptr,
                             cert ? &cert->p : nullptr);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                            .count();
    finalize_report(report, out_path, wall);
    std::printf("replayed %zu samples over [%g, %g], final |x| = %.6g\n", traj.times.size(),
                signal.times.front(), signal.times.back(), traj.states.back().norm());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability-margin bounds and worst-case switching for "
                 "perturbed linear systems"};
    app.require_subcommand(1);

    std::string problem_path, out_path, csv_path, x0_text, signal_path;
    int i_max = 0, order = 0, level = 0;
    double epsilon = 0.0, delta = 0.0, tf = 0.0, increment = 0.0, tol_unit = 0.0, sample_dt = 0.0;

    auto* lower = app.add_subcommand("margin-lower", "Certified lower bound on the margin");
    lower->add_option("problem", problem_path, "Problem file (TOML)")->required();
    lower->add_option("--i-max", i_max, "Maximum hierarchy level");
    lower->add_option("--order", order, "Maximum polynomial order 2i (even)");
    lower->add_option("--epsilon", epsilon, "Sweep increment");
    lower->add_option("--out", out_path, "JSON report path");

    auto* wswitch = app.add_subcommand("worst-switch", "Worst-case switching signal");
    wswitch->add_option("problem", problem_path, "Problem file (TOML)")->required();
    wswitch->add_option("--delta", delta, "Perturbation bound")->required();
    wswitch->add_option("--x0", x0_text, "Initial state, comma separated");
    wswitch->add_option("--tf", tf, "Time horizon");
    wswitch->add_option("--order", order, "Certificate polynomial order 2i (even)");
    wswitch->add_option("--level", level, "Certificate hierarchy level i");
    wswitch->add_option("--out", out_path, "JSON report path");
    wswitch->add_option("--out-csv", csv_path, "Trajectory CSV path");
    wswitch->add_option("--sample-dt", sample_dt, "CSV sample spacing");

    auto* upper = app.add_subcommand("margin-upper", "Upper bound via a periodic trajectory");
    upper->add_option("problem", problem_path, "Problem file (TOML)")->required();
    upper->add_option("--increment", increment, "Sweep increment");
    upper->add_option("--x0", x0_text, "Initial state, comma separated");
    upper->add_option("--tf", tf, "Time horizon");
    upper->add_option("--order", order, "Certificate polynomial order 2i (even)");
    upper->add_option("--tol-unit", tol_unit, "Unit-eigenvalue residual tolerance");
    upper->add_option("--out", out_path, "JSON report path");

    auto* impulse = app.add_subcommand("impulse", "Worst-case impulse response");
    impulse->add_option("problem", problem_path, "Problem file (TOML)")->required();
    impulse->add_option("--delta", delta, "Perturbation bound")->required();
    impulse->add_option("--tf", tf, "Time horizon");
    impulse->add_option("--order", order, "Certificate polynomial order 2i (even)");
    impulse->add_option("--out", out_path, "JSON report path");
    impulse->add_option("--out-csv", csv_path, "Response CSV path");

    auto* simulate = app.add_subcommand("simulate", "Replay a stored switching signal");
    simulate->add_option("problem", problem_path, "Problem file (TOML)")->required();
    simulate->add_option("--signal", signal_path, "Signal JSON file")->required();
    simulate->add_option("--x0", x0_text, "Initial state, comma separated");
    simulate->add_option("--order", order, "Certificate polynomial order 2i (even)");
    simulate->add_option("--out", out_path, "JSON report path");
    simulate->add_option("--out-csv", csv_path, "Trajectory CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (lower->parsed())
            return cmd_margin_lower(problem_path, i_max, order, epsilon, out_path);
        if (wswitch->parsed())
            return cmd_worst_switch(problem_path, delta, x0_text, tf, order, level, out_path,
                                    csv_path, sample_dt);
        if (upper->parsed())
            return cmd_margin_upper(problem_path, increment, x0_text, tf, order, tol_unit,
                                    out_path);
        if (impulse->parsed())
            return cmd_impulse(problem_path, delta, tf, order, out_path, csv_path);
        if (simulate->parsed())
            return cmd_simulate(problem_path, signal_path, x0_text, order, out_path, csv_path);
    } catch (const sm::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const sm::NotHurwitzError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNotHurwitz;
    } catch (const sm::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
    return kExitUsage;
}
