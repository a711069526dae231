#pragma once

// Small dense LMI feasibility solver.
//
// Problems are posed abstractly as a list of affine matrix inequalities
// F_b(x) = f0_b + sum_j x_j F_bj >= 0 over a shared variable vector x. The
// phase-I formulation minimizes the epigraph slack s subject to
// F_b(x) + s I >= 0 and a box |x_j| <= R, following the central path of the
// log-det barrier with damped Newton steps. Strict feasibility is declared as
// soon as the slack is driven below -slack_target; infeasibility is certified
// through the barrier duality gap (s* >= s_t - theta/t after centering).
//
// Sized for the problems this library generates: a few hundred variables and
// blocks of dimension up to a few dozen.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "switchmargin/common.hpp"

namespace switchmargin {

struct LmiBlock {
    Mat f0;
    std::vector<Mat> coeffs;  // one symmetric matrix per variable
};

struct SdpOptions {
    double box_bound = 1e8;      // |x_j| <= box_bound keeps the phase-I problem bounded
    double slack_target = 1e-9;  // stop once s <= -slack_target
    int max_newton_iters = 4000;
    double t_init = 1.0;
    double t_factor = 20.0;
    double t_max = 1e14;
    double center_tol = 1e-9;  // Newton decrement^2 threshold for "centered"
};

enum class SdpStatus {
    StrictlyFeasible,  // x with every F_b(x) > 0 (slack below -slack_target)
    Infeasible,        // duality-gap certificate that no such x exists in the box
    SolverLimit,       // iteration/parameter budget exhausted without a verdict
};

struct SdpResult {
    SdpStatus status = SdpStatus::SolverLimit;
    Eigen::VectorXd x;
    double slack = 0.0;  // final epigraph value; negative means strictly feasible
    int newton_iters = 0;
    std::string detail;
};

namespace detail {

// Barrier value of the phase-I problem at (x, s), or +inf when outside the domain.
inline double phase_one_barrier(const std::vector<LmiBlock>& blocks, const Eigen::VectorXd& x,
                                double s, double t, double box) {
    double value = t * s;
    for (const LmiBlock& block : blocks) {
        Mat g = block.f0;
        for (size_t j = 0; j < block.coeffs.size(); ++j) g += x(static_cast<Eigen::Index>(j)) * block.coeffs[j];
        g.diagonal().array() += s;
        Eigen::LLT<Mat> llt(g);
        if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        value -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (std::abs(x(j)) >= box) return std::numeric_limits<double>::infinity();
        value -= std::log(box - x(j)) + std::log(box + x(j));
    }
    return value;
}

}  // namespace detail

// Phase-I search for a strictly feasible point of the given LMI system.
// x_init, when provided, seeds the variable vector (the slack is initialized
// automatically to make the start interior).
inline SdpResult phase_one(const std::vector<LmiBlock>& blocks, int num_vars,
                           const SdpOptions& opts = {}, const Eigen::VectorXd* x_init = nullptr) {
    const int m = num_vars;
    require(m >= 1, "phase_one: need at least one variable");
    for (const LmiBlock& block : blocks) {
        require(static_cast<int>(block.coeffs.size()) == m,
                "phase_one: block coefficient count does not match variable count");
        require_square(block.f0, "phase_one: f0");
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    if (x_init != nullptr) {
        require(x_init->size() == m, "phase_one: x_init size mismatch");
        x = x_init->cwiseMax(-0.5 * opts.box_bound).cwiseMin(0.5 * opts.box_bound);
    }

    // Interior slack: s must exceed -lambda_min(F_b(x)) for every block.
    double s = -std::numeric_limits<double>::infinity();
    for (const LmiBlock& block : blocks) {
        Mat g = block.f0;
        for (int j = 0; j < m; ++j) g += x(j) * block.coeffs[j];
        const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (g + g.transpose()),
                                                                  Eigen::EigenvaluesOnly)
                                   .eigenvalues()
                                   .minCoeff();
        s = std::max(s, -min_eig);
    }
    s += std::max(1.0, 0.1 * std::abs(s));

    double theta = 2.0 * m;  // box barrier contribution
    for (const LmiBlock& block : blocks) theta += static_cast<double>(block.f0.rows());

    SdpResult result;
    result.x = x;
    result.slack = s;

    double t = opts.t_init;
    int iters = 0;
    const double box = opts.box_bound;

    Eigen::VectorXd grad(m + 1);
    Mat hess(m + 1, m + 1);
    std::vector<Mat> w(static_cast<size_t>(m) + 1);

    while (iters < opts.max_newton_iters) {
        // Centering for the current t.
        bool centered = false;
        while (iters < opts.max_newton_iters) {
            ++iters;
            grad.setZero();
            hess.setZero();
            grad(m) = t;

            bool domain_ok = true;
            for (const LmiBlock& block : blocks) {
                Mat g = block.f0;
                for (int j = 0; j < m; ++j) g += x(j) * block.coeffs[j];
                g.diagonal().array() += s;
                Eigen::LLT<Mat> llt(0.5 * (g + g.transpose()));
                if (llt.info() != Eigen::Success) {
                    domain_ok = false;
                    break;
                }
                const Mat l = llt.matrixL();
                const Eigen::Index d = g.rows();
                // W_j = L^{-1} F_j L^{-T}; W for the slack uses F = I.
                for (int j = 0; j <= m; ++j) {
                    const Mat& fj = (j < m) ? block.coeffs[j] : Mat::Identity(d, d);
                    Mat half = l.triangularView<Eigen::Lower>().solve(fj);
                    w[static_cast<size_t>(j)] =
                        l.triangularView<Eigen::Lower>().solve(half.transpose());
                }
                for (int j = 0; j <= m; ++j) {
                    grad(j) -= w[static_cast<size_t>(j)].trace();
                    for (int k = j; k <= m; ++k) {
                        const double hjk =
                            (w[static_cast<size_t>(j)].array() * w[static_cast<size_t>(k)].array())
                                .sum();
                        hess(j, k) += hjk;
                        hess(k, j) = hess(j, k);
                    }
                }
            }
            if (!domain_ok) {
                result.detail = "barrier domain lost (numerical)";
                result.status = SdpStatus::SolverLimit;
                result.newton_iters = iters;
                return result;
            }
            for (int j = 0; j < m; ++j) {
                grad(j) += 1.0 / (box - x(j)) - 1.0 / (box + x(j));
                hess(j, j) +=
                    1.0 / ((box - x(j)) * (box - x(j))) + 1.0 / ((box + x(j)) * (box + x(j)));
            }

            Eigen::LDLT<Mat> ldlt(hess);
            Eigen::VectorXd step = ldlt.solve(-grad);
            if (!step.allFinite()) {
                result.detail = "Newton system singular";
                result.status = SdpStatus::SolverLimit;
                result.newton_iters = iters;
                return result;
            }
            const double decrement_sq = -grad.dot(step);

            // Backtracking line search on the barrier value.
            const double f0 = detail::phase_one_barrier(blocks, x, s, t, box);
            double alpha = 1.0;
            double f_new = std::numeric_limits<double>::infinity();
            Eigen::VectorXd x_new;
            double s_new = s;
            for (int ls = 0; ls < 60; ++ls) {
                x_new = x + alpha * step.head(m);
                s_new = s + alpha * step(m);
                f_new = detail::phase_one_barrier(blocks, x_new, s_new, t, box);
                if (f_new <= f0 - 0.01 * alpha * decrement_sq || f_new < f0 - 1e-14 * std::abs(f0))
                    break;
                alpha *= 0.5;
            }
            if (!std::isfinite(f_new) || f_new >= f0) {
                // No progress; treat as centered and move on.
                centered = true;
            } else {
                x = x_new;
                s = s_new;
            }

            result.x = x;
            result.slack = s;

            if (s <= -opts.slack_target) {
                result.status = SdpStatus::StrictlyFeasible;
                result.newton_iters = iters;
                result.detail = "slack target reached";
                return result;
            }
            if (centered || decrement_sq * 0.5 <= opts.center_tol) {
                centered = true;
                break;
            }
        }

        if (centered) {
            const double lower_bound = s - theta / t;
            if (lower_bound > 0.0) {
                // No point in the box achieves slack <= 0: certified infeasible,
                // unless the box itself is binding.
                if (x.cwiseAbs().maxCoeff() > 0.9 * box) {
                    result.status = SdpStatus::SolverLimit;
                    result.detail = "box bound active at infeasibility certificate";
                } else {
                    result.status = SdpStatus::Infeasible;
                    result.detail = "duality gap certificate (lower bound " +
                                    std::to_string(lower_bound) + ")";
                }
                result.newton_iters = iters;
                return result;
            }
        }

        if (t >= opts.t_max) {
            // Budget spent; a negative slack still means a strictly feasible
            // point, just short of the requested slack target.
            result.status = (s < 0.0) ? SdpStatus::StrictlyFeasible : SdpStatus::SolverLimit;
            result.detail = (s < 0.0) ? "feasible (slack target unreached at path limit)"
                                      : "path parameter limit reached";
            result.newton_iters = iters;
            return result;
        }
        t = std::min(t * opts.t_factor, opts.t_max * 1.0000001);
    }

    result.status = (s < 0.0) ? SdpStatus::StrictlyFeasible : SdpStatus::SolverLimit;
    result.detail = (s < 0.0) ? "feasible (slack target unreached at iteration budget)"
                              : "Newton iteration budget exhausted";
    result.newton_iters = iters;
    return result;
}

}  // namespace switchmargin
