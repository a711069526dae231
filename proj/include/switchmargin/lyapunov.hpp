#pragma once

// Lower-bound machinery: common quadratic certificates for lifted mode sets,
// the closed-form margin maximization for a fixed certificate, and the
// iterative under-approximation of the stability margin.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "switchmargin/common.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/linalg.hpp"
#include "switchmargin/sdp.hpp"

namespace switchmargin {

// Quadratic certificate on the reduced space of one hierarchy level.
// P is stored symmetrized and normalized to P >= I; feasibility_margin is the
// re-verified bound: lambda_max(M^T P + P M) <= -feasibility_margin/2 for both
// endpoint modes M in {cal_a, cal_a + delta_certified * cal_a0}.
struct LyapunovCertificate {
    int level = 0;
    Mat p;
    double delta_certified = 0.0;
    double feasibility_margin = 0.0;
};

struct AlgorithmConfig {
    double epsilon = -1.0;  // Algorithm increment; <= 0 selects the scale-aware default
    int i_max = 1;
    double sdp_slack_tol = 1e-9;
    double definiteness_tol = 1e-9;
    double eps_margin_rel = 1e-6;   // LMI strictness relative to each mode's norm
    double delta_max = 1e6;         // sweep cap when the perturbation never destabilizes
    double delta_p_backoff = 1e-6;  // relative backoff from the fixed-P supremum
    int reduced_dim_cap = kDefaultReducedDimCap;
};

enum class FeasibilityStatus { Found, Infeasible, SolverLimit };

struct CommonLyapunovResult {
    FeasibilityStatus status = FeasibilityStatus::SolverLimit;
    Mat p;                         // normalized so lambda_min(P) = 1
    double measured_margin = 0.0;  // min over modes of -lambda_max(M^T P + P M)
    int newton_iters = 0;
    std::string detail;
};

// One attempted certification inside the lower-bound iteration.
struct TraceEntry {
    int level = 0;
    double delta_attempted = 0.0;
    bool feasible = false;
    double delta_p = 0.0;  // delta after the fixed-P leap (0 when no leap happened)
    std::string note;
};

struct LowerBoundReport {
    double delta_lower = 0.0;
    LyapunovCertificate certificate;
    std::vector<TraceEntry> trace;
    bool swept_to_cap = false;  // perturbation never destabilized within delta_max
    // Best certificate seen per level during the sweep (the final level's entry
    // is the deep-centered one). Lets callers reuse lower-level certificates
    // without re-solving.
    std::vector<LyapunovCertificate> level_certificates;
};

namespace detail {

// Orthonormal basis of symmetric dim x dim matrices (diagonal units, then
// scaled off-diagonal pairs), used to vectorize the LMI variable P.
inline std::vector<Mat> symmetric_matrix_basis(int dim) {
    std::vector<Mat> basis;
    basis.reserve(static_cast<size_t>(dim) * (dim + 1) / 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int p = 0; p < dim; ++p) {
        for (int q = p; q < dim; ++q) {
            Mat b = Mat::Zero(dim, dim);
            if (p == q) {
                b(p, p) = 1.0;
            } else {
                b(p, q) = b(q, p) = inv_sqrt2;
            }
            basis.push_back(std::move(b));
        }
    }
    return basis;
}

inline Eigen::VectorXd vectorize_symmetric(const Mat& p, const std::vector<Mat>& basis) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(basis.size()));
    for (size_t j = 0; j < basis.size(); ++j)
        x(static_cast<Eigen::Index>(j)) = (p.array() * basis[j].array()).sum();
    return x;
}

inline Mat assemble_symmetric(const Eigen::VectorXd& x, const std::vector<Mat>& basis, int dim) {
    Mat p = Mat::Zero(dim, dim);
    for (size_t j = 0; j < basis.size(); ++j) p += x(static_cast<Eigen::Index>(j)) * basis[j];
    return 0.5 * (p + p.transpose());
}

// Parlett-Reinsch style diagonal balancing of an entrywise-nonnegative matrix.
// Returns powers of two d with D^{-1} B D row/column equilibrated; applying
// the same similarity to every mode preserves feasibility exactly while
// curing the wild dynamic range of systems like the aircraft fixture.
inline Vec balance_scaling(Mat b) {
    const Eigen::Index n = b.rows();
    Vec d = Vec::Ones(n);
    for (int pass = 0; pass < 100; ++pass) {
        bool changed = false;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double col = b.col(k).cwiseAbs().sum() - std::abs(b(k, k));
            const double row = b.row(k).cwiseAbs().sum() - std::abs(b(k, k));
            if (col <= 0.0 || row <= 0.0) continue;
            // scaling d_k by f multiplies col k by f and divides row k by f;
            // pick the power of two that brings them within a factor of two
            double f = 1.0;
            while (col * f * f * 2.0 <= row) f *= 2.0;
            while (col * f * f >= row * 2.0) f *= 0.5;
            if (f != 1.0) {
                d(k) *= f;
                b.col(k) *= f;
                b.row(k) /= f;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return d;
}

}  // namespace detail

// Searches for P >= I with M^T P + P M <= -eps * ||M||_F * I for every mode.
// Infeasible means "this relaxation failed", never "the system is unstable".
// Solver non-convergence is reported as SolverLimit so callers can label it.
// deep_center drives the phase-I objective toward the maximum-slack point
// instead of exiting at the first strictly feasible iterate; near the level
// margin the feasible set is thin and this pins a canonical, reproducible P.
inline CommonLyapunovResult find_common_lyapunov(const std::vector<Mat>& modes, int dim,
                                                 const AlgorithmConfig& cfg = {},
                                                 const Mat* p_warm_start = nullptr,
                                                 bool deep_center = false) {
    require(!modes.empty(), "find_common_lyapunov: at least one mode required");
    for (const Mat& m : modes) {
        require_square(m, "find_common_lyapunov: mode");
        require(m.rows() == dim, "find_common_lyapunov: mode dimension mismatch");
        require_finite(m, "find_common_lyapunov: mode");
    }

    CommonLyapunovResult result;

    // M^T P + P M < 0 with P > 0 forces M Hurwitz, so a non-Hurwitz mode is an
    // immediate certified infeasibility.
    for (size_t k = 0; k < modes.size(); ++k) {
        if (!is_hurwitz(modes[k], 0.0)) {
            result.status = FeasibilityStatus::Infeasible;
            result.detail = "mode " + std::to_string(k) + " is not Hurwitz";
            return result;
        }
    }

    // Balance the mode set with one shared diagonal similarity; feasibility is
    // similarity-invariant and the solve conditioning improves by orders of
    // magnitude on badly scaled systems.
    Mat combined = Mat::Zero(dim, dim);
    for (const Mat& mode : modes) combined += mode.cwiseAbs();
    const Vec d = detail::balance_scaling(combined);
    std::vector<Mat> balanced;
    balanced.reserve(modes.size());
    for (const Mat& mode : modes)
        balanced.push_back(d.cwiseInverse().asDiagonal() * mode * d.asDiagonal());

    const auto basis = detail::symmetric_matrix_basis(dim);
    const int num_vars = static_cast<int>(basis.size());

    std::vector<LmiBlock> blocks;
    // P - I >= 0 pins the normalization (certificates are scale-invariant).
    {
        LmiBlock block;
        block.f0 = -Mat::Identity(dim, dim);
        block.coeffs = basis;
        blocks.push_back(std::move(block));
    }
    for (const Mat& mode : balanced) {
        const double scale = std::max(mode.norm(), 1e-30);
        const Mat m_hat = mode / scale;
        LmiBlock block;
        block.f0 = -cfg.eps_margin_rel * Mat::Identity(dim, dim);
        block.coeffs.reserve(basis.size());
        for (const Mat& b : basis)
            block.coeffs.push_back(-(m_hat.transpose() * b + b * m_hat));
        blocks.push_back(std::move(block));
    }

    SdpOptions sdp_opts;
    sdp_opts.slack_target = std::max(cfg.sdp_slack_tol, 0.25 * cfg.eps_margin_rel);
    if (deep_center) {
        sdp_opts.slack_target = 1e9;  // unreachable: follow the path to max slack
        sdp_opts.t_max = 1e10;
    }

    // Warm starts arrive in original coordinates; map into balanced ones.
    std::optional<Eigen::VectorXd> x_init;
    if (p_warm_start != nullptr && p_warm_start->rows() == dim) {
        const Mat p_bal = d.asDiagonal() * (*p_warm_start) * d.asDiagonal();
        const double lmin = symmetric_eigenvalues(p_bal).minCoeff();
        if (lmin > 0.0) {
            x_init = detail::vectorize_symmetric(p_bal * (2.0 / lmin), basis);
        }
    }
    if (!x_init) {
        x_init = detail::vectorize_symmetric(2.0 * Mat::Identity(dim, dim), basis);
    }

    const SdpResult sdp = phase_one(blocks, num_vars, sdp_opts, &*x_init);
    result.newton_iters = sdp.newton_iters;

    if (sdp.status == SdpStatus::Infeasible) {
        result.status = FeasibilityStatus::Infeasible;
        result.detail = sdp.detail;
        return result;
    }
    if (sdp.status == SdpStatus::SolverLimit) {
        result.status = FeasibilityStatus::SolverLimit;
        result.detail = sdp.detail;
        return result;
    }

    // Assemble in balanced coordinates, map back, renormalize to P >= I.
    Mat p = detail::assemble_symmetric(sdp.x, basis, dim);
    p = d.cwiseInverse().asDiagonal() * p * d.cwiseInverse().asDiagonal();
    p = 0.5 * (p + p.transpose());
    const double min_eig = symmetric_eigenvalues(p).minCoeff();
    if (min_eig <= 0.0) {
        result.status = FeasibilityStatus::SolverLimit;
        result.detail = "solver returned non-PD candidate";
        return result;
    }
    p /= min_eig;  // lambda_min(P) = 1

    // Post-solve verification against the original (unscaled) modes.
    double measured = std::numeric_limits<double>::infinity();
    for (const Mat& mode : modes) {
        const Mat lyap = mode.transpose() * p + p * mode;
        measured = std::min(measured, -symmetric_eigenvalues(lyap).maxCoeff());
    }
    if (!(measured > 0.0)) {
        result.status = FeasibilityStatus::SolverLimit;
        result.detail = "post-solve verification failed (margin " + std::to_string(measured) + ")";
        return result;
    }

    result.status = FeasibilityStatus::Found;
    result.p = std::move(p);
    result.measured_margin = measured;
    result.detail = "verified";
    return result;
}

struct FixedPMargin {
    double delta = 0.0;
    bool unbounded = false;   // N1 <= 0: every delta >= floor satisfies the constraint
    bool degenerate = false;  // N0 not negative definite: returned floor with flag
};

// Largest delta >= delta_floor with N0 + delta N1 <= 0 for fixed P, where
// N0 = cal_a^T P + P cal_a and N1 = cal_a0^T P + P cal_a0. The one-dimensional
// problem has the closed form delta = 1 / lambda_max((-N0)^{-1/2} N1 (-N0)^{-1/2}).
inline FixedPMargin max_delta_fixed_p(const HierarchyLevel& level, const Mat& p,
                                      double delta_floor = 0.0,
                                      double definiteness_tol = 1e-9) {
    require_square(p, "max_delta_fixed_p: p");
    require(p.rows() == level.cal_a.rows(), "max_delta_fixed_p: dimension mismatch");
    if (!is_positive_definite(p, 0.0))
        throw DimensionError("max_delta_fixed_p: p must be positive definite");

    const Mat p_sym = 0.5 * (p + p.transpose());
    const Mat n0 = level.cal_a.transpose() * p_sym + p_sym * level.cal_a;
    const Mat n1 = level.cal_a0.transpose() * p_sym + p_sym * level.cal_a0;

    FixedPMargin out;
    Eigen::SelfAdjointEigenSolver<Mat> n0_eig(-n0);
    if (n0_eig.eigenvalues().minCoeff() <= definiteness_tol) {
        out.delta = delta_floor;
        out.degenerate = true;
        return out;
    }

    const Mat inv_sqrt = n0_eig.eigenvectors() *
                         n0_eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                         n0_eig.eigenvectors().transpose();
    const Mat s = inv_sqrt * n1 * inv_sqrt;
    const double lambda_max = symmetric_eigenvalues(0.5 * (s + s.transpose())).maxCoeff();

    if (lambda_max <= 0.0) {
        out.unbounded = true;
        out.delta = std::numeric_limits<double>::infinity();
        return out;
    }
    out.delta = std::max(delta_floor, 1.0 / lambda_max);
    return out;
}

// Iterative under-approximation of the stability margin: sweep delta upward,
// at each step scanning hierarchy levels 1..i_max for a common quadratic
// certificate of the endpoint mode pair, and leaping ahead to the fixed-P
// maximum whenever a certificate is found. Terminates when no level certifies
// delta + epsilon (or at the sweep cap when nothing ever destabilizes).
inline LowerBoundReport under_approximate_margin(const SwitchedLinearSystem& sys,
                                                 AlgorithmConfig cfg) {
    if (!is_hurwitz(sys.a, 1e-9))
        throw NotHurwitzError("under_approximate_margin: nominal A must be Hurwitz");
    require(cfg.i_max >= 1, "under_approximate_margin: i_max must be >= 1");

    LowerBoundReport report;

    std::map<int, HierarchyLevel> levels;
    const auto level_at = [&](int i) -> const HierarchyLevel& {
        auto it = levels.find(i);
        if (it == levels.end())
            it = levels.emplace(i, build_level(sys, i, cfg.reduced_dim_cap)).first;
        return it->second;
    };

    // Baseline certificate at delta = 0 (single nominal mode). A is Hurwitz, so
    // this succeeds and gives both the scale-aware epsilon default and a
    // certificate for the degenerate "nothing certifies delta + epsilon" exit.
    const HierarchyLevel& level1 = level_at(1);
    CommonLyapunovResult base = find_common_lyapunov({level1.cal_a}, level1.basis.dim, cfg);
    if (base.status != FeasibilityStatus::Found)
        throw NumericalError("under_approximate_margin: baseline certificate at delta = 0 failed: " +
                             base.detail);

    double delta = 0.0;
    int cert_level = 1;
    Mat cert_p = base.p;
    double cert_margin = base.measured_margin;

    if (cfg.epsilon <= 0.0) {
        const FixedPMargin dp0 = max_delta_fixed_p(level1, base.p, 0.0, cfg.definiteness_tol);
        const double scale = (dp0.unbounded || dp0.degenerate || dp0.delta <= 0.0) ? 1.0 : dp0.delta;
        cfg.epsilon = 0.01 * scale;
    }

    // Warm starts and monotonicity cache: per level, the last feasible P and
    // the smallest delta with a certified-infeasible relaxation (the feasible
    // delta set of one level is an interval, so anything above stays infeasible).
    std::map<int, Mat> warm;
    warm[1] = base.p;
    std::map<int, double> infeasible_above;
    std::map<int, std::pair<double, Mat>> best_per_level;  // delta -> P, margin tracked below
    std::map<int, double> best_margin_per_level;
    best_per_level[1] = {0.0, base.p};
    best_margin_per_level[1] = base.measured_margin;

    while (true) {
        const double delta_next = delta + cfg.epsilon;
        if (delta_next > cfg.delta_max) {
            report.swept_to_cap = true;
            break;
        }

        bool found = false;
        int found_level = 0;
        Mat found_p;
        double found_margin = 0.0;

        for (int i = 1; i <= cfg.i_max; ++i) {
            TraceEntry entry;
            entry.level = i;
            entry.delta_attempted = delta_next;

            const auto cached = infeasible_above.find(i);
            if (cached != infeasible_above.end() && delta_next >= cached->second) {
                entry.feasible = false;
                entry.note = "infeasible (cached interval bound)";
                report.trace.push_back(entry);
                continue;
            }

            const HierarchyLevel* level = nullptr;
            try {
                level = &level_at(i);
            } catch (const CapExceededError& e) {
                entry.feasible = false;
                entry.note = std::string("level skipped: ") + e.what();
                report.trace.push_back(entry);
                continue;
            }

            const Mat* ws = nullptr;
            const auto w_it = warm.find(i);
            if (w_it != warm.end()) ws = &w_it->second;

            const std::vector<Mat> mode_pair = {level->cal_a, level->reduced_mode(delta_next)};
            const CommonLyapunovResult res =
                find_common_lyapunov(mode_pair, level->basis.dim, cfg, ws);

            entry.feasible = (res.status == FeasibilityStatus::Found);
            entry.note = res.detail;
            if (res.status == FeasibilityStatus::Infeasible) {
                auto [it, inserted] = infeasible_above.try_emplace(i, delta_next);
                if (!inserted) it->second = std::min(it->second, delta_next);
            }

            if (res.status == FeasibilityStatus::Found) {
                found = true;
                found_level = i;
                found_p = res.p;
                found_margin = res.measured_margin;
                warm[i] = res.p;
                auto bp = best_per_level.find(i);
                if (bp == best_per_level.end() || bp->second.first < delta_next) {
                    best_per_level[i] = {delta_next, res.p};
                    best_margin_per_level[i] = res.measured_margin;
                }
                report.trace.push_back(entry);
                break;
            }
            report.trace.push_back(entry);
        }

        if (!found) break;

        delta = delta_next;
        cert_level = found_level;
        cert_p = found_p;
        cert_margin = found_margin;

        // Fixed-P improvement; the supremum itself sits on the LMI boundary, so
        // back off by a relative sliver to keep a strictly verifiable margin.
        const FixedPMargin improved =
            max_delta_fixed_p(level_at(found_level), found_p, delta, cfg.definiteness_tol);
        TraceEntry leap;
        leap.level = found_level;
        leap.delta_attempted = delta;
        leap.feasible = true;
        if (improved.unbounded) {
            leap.delta_p = cfg.delta_max;
            leap.note = "fixed-P margin unbounded (perturbation never destabilizes this level)";
            report.trace.push_back(leap);
            delta = cfg.delta_max;
            report.swept_to_cap = true;
            break;
        }
        if (!improved.degenerate) {
            const double backed_off = improved.delta * (1.0 - cfg.delta_p_backoff);
            leap.delta_p = backed_off;
            leap.note = "fixed-P leap";
            if (backed_off > delta) delta = backed_off;
        } else {
            leap.delta_p = delta;
            leap.note = "fixed-P improvement degenerate (N0 not negative definite)";
        }
        report.trace.push_back(leap);
    }

    // Re-solve at the final delta with deep centering: the feasible set there
    // is thin (delta + epsilon certifies nowhere), so the max-slack point is a
    // canonical near-critical certificate, reproducible across runs and the
    // right object to hand to the switching synthesis.
    {
        const HierarchyLevel& lev_final = level_at(cert_level);
        const std::vector<Mat> mode_pair = {lev_final.cal_a, lev_final.reduced_mode(delta)};
        const CommonLyapunovResult centered = find_common_lyapunov(
            mode_pair, lev_final.basis.dim, cfg, &cert_p, /*deep_center=*/true);
        if (centered.status == FeasibilityStatus::Found) {
            cert_p = centered.p;
            cert_margin = centered.measured_margin;
        }
    }

    // Re-verify the final certificate at the reported delta.
    const HierarchyLevel& lev = level_at(cert_level);
    double final_margin = cert_margin;
    {
        const Mat m1 = lev.cal_a.transpose() * cert_p + cert_p * lev.cal_a;
        const Mat m2_mode = lev.reduced_mode(delta);
        const Mat m2 = m2_mode.transpose() * cert_p + cert_p * m2_mode;
        final_margin = std::min(-symmetric_eigenvalues(m1).maxCoeff(),
                                -symmetric_eigenvalues(m2).maxCoeff());
        if (!(final_margin > 0.0) && delta > 0.0)
            throw NumericalError(
                "under_approximate_margin: final certificate failed re-verification");
    }

    report.delta_lower = delta;
    report.certificate.level = cert_level;
    report.certificate.p = cert_p;
    report.certificate.delta_certified = delta;
    report.certificate.feasibility_margin = final_margin;

    best_per_level[cert_level] = {delta, cert_p};
    best_margin_per_level[cert_level] = final_margin;
    for (const auto& [lvl, entry] : best_per_level) {
        LyapunovCertificate c;
        c.level = lvl;
        c.delta_certified = (lvl == cert_level) ? delta : entry.first;
        c.p = entry.second;
        c.feasibility_margin = best_margin_per_level[lvl];
        report.level_certificates.push_back(std::move(c));
    }
    return report;
}

}  // namespace switchmargin
