#pragma once

// Upper-bound machinery: discrete transition (monodromy) matrices over
// switching-signal spans, the search for a span whose product has a
// unit-magnitude eigenvalue, and the delta sweep that brackets the stability
// margin from above with a periodic-trajectory witness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "switchmargin/common.hpp"
#include "switchmargin/hierarchy.hpp"
#include "switchmargin/linalg.hpp"
#include "switchmargin/lyapunov.hpp"
#include "switchmargin/switching.hpp"

namespace switchmargin {

inline constexpr double kDefaultUnitTol = 1e-3;
inline constexpr double kDefaultUpperIncrement = 0.01;

// Span [j, k] of a switching signal whose transition matrix has an eigenvalue
// of magnitude one (within tolerance): evidence of a periodic trajectory.
struct PeriodicityWitness {
    int j = 0;
    int k = 0;
    Mat a_d;
    Spectrum spectrum;
    double unit_eig_residual = 0.0;
};

// Hurwitz loss at the swept delta: the constant signal already diverges, so
// e^{(A + delta A0) t_f} itself is the witness.
struct TrivialHurwitzLoss {
    double delta = 0.0;
    Mat a_d;
    Spectrum spectrum;
};

struct MarginReport {
    double delta_lower = 0.0;
    double delta_upper = 0.0;
    std::variant<PeriodicityWitness, TrivialHurwitzLoss> witness;
    SwitchingSignal periodic_signal;  // re-based: times start at zero
    LyapunovCertificate certificate;
    int sweep_steps = 0;
};

// Ordered product of segment exponentials over segments j..k-1, earliest
// segment applied first (rightmost factor).
inline Mat transition_matrix(const SwitchedLinearSystem& sys, const SwitchingSignal& signal,
                             int j, int k) {
    require(0 <= j && j < k && k < static_cast<int>(signal.times.size()),
            "transition_matrix: need 0 <= j < k < |times|");
    Mat a_d = Mat::Identity(sys.n, sys.n);
    for (int seg = j; seg < k; ++seg) {
        const Mat m = sys.mode(signal.values[static_cast<size_t>(seg)]);
        a_d = expm(m, signal.duration(seg)) * a_d;
    }
    return a_d;
}

struct PeriodicSearch {
    std::optional<PeriodicityWitness> witness;
    bool diverging = false;        // some span's spectral radius exceeded 1 + tol
    double best_residual = std::numeric_limits<double>::infinity();
};

// Scans spans of the signal for a transition matrix with a unit-magnitude
// eigenvalue. Only same-phase spans (even segment count) can repeat in a
// bang-bang signal, and shorter spans are tried first; the first hit wins.
inline PeriodicSearch find_periodic_segment(const SwitchedLinearSystem& sys,
                                            const SwitchingSignal& signal,
                                            double tol_unit = kDefaultUnitTol) {
    signal.validate();
    PeriodicSearch out;
    const int segments = signal.segments();

    std::vector<Mat> seg_exp;
    seg_exp.reserve(static_cast<size_t>(segments));
    for (int s = 0; s < segments; ++s)
        seg_exp.push_back(expm(sys.mode(signal.values[static_cast<size_t>(s)]),
                               signal.duration(s)));

    for (int span = 2; span <= segments; span += 2) {
        for (int j = 0; j + span <= segments; ++j) {
            Mat a_d = Mat::Identity(sys.n, sys.n);
            for (int s = j; s < j + span; ++s) a_d = seg_exp[static_cast<size_t>(s)] * a_d;
            const Spectrum spec = eigenvalues(a_d);
            double residual = std::numeric_limits<double>::infinity();
            for (int e = 0; e < spec.eigenvalues.size(); ++e)
                residual = std::min(residual, std::abs(std::abs(spec.eigenvalues(e)) - 1.0));
            out.best_residual = std::min(out.best_residual, residual);
            if (spec.spectral_radius() > 1.0 + tol_unit) out.diverging = true;
            if (residual <= tol_unit) {
                PeriodicityWitness w;
                w.j = j;
                w.k = j + span;
                w.a_d = std::move(a_d);
                w.spectrum = spec;
                w.unit_eig_residual = residual;
                out.witness = std::move(w);
                return out;
            }
        }
    }
    return out;
}

// Sweeps delta upward from the certified lower bound until the worst-case
// switching signal contains a periodic span (or Hurwitzness of the constant
// mode is lost, which is the trivial witness). The same P is used across the
// whole sweep, as the certificate fixes the switching policy.
inline MarginReport upper_bound_margin(const SwitchedLinearSystem& sys,
                                       const LyapunovCertificate& cert, const Vec& x0, double t_f,
                                       double increment = kDefaultUpperIncrement,
                                       double tol_unit = kDefaultUnitTol,
                                       const IntegratorConfig& integ = {},
                                       double hurwitz_tol = kDefaultHurwitzTol) {
    require(increment > 0.0, "upper_bound_margin: increment must be positive");
    require(t_f > 0.0, "upper_bound_margin: t_f must be positive");

    const HierarchyLevel level = build_level(sys, cert.level);
    require(cert.p.rows() == level.basis.dim, "upper_bound_margin: certificate dimension mismatch");

    MarginReport report;
    report.delta_lower = cert.delta_certified;
    report.certificate = cert;

    const double cap = cert.delta_certified + 1000.0 * increment;
    double delta = cert.delta_certified;
    int steps = 0;

    while (delta <= cap) {
        ++steps;
        const Mat mode = sys.mode(delta);
        if (!is_hurwitz(mode, hurwitz_tol)) {
            TrivialHurwitzLoss trivial;
            trivial.delta = delta;
            trivial.a_d = expm(mode, t_f);
            trivial.spectrum = eigenvalues(trivial.a_d);
            report.delta_upper = delta;
            report.witness = std::move(trivial);
            report.periodic_signal.delta = delta;
            report.periodic_signal.times = {0.0, t_f};
            report.periodic_signal.values = {delta};
            report.sweep_steps = steps;
            return report;
        }

        const SwitchingResult wc = find_switching_sequence(sys, level, cert.p, delta, x0, t_f, integ);
        const PeriodicSearch search = find_periodic_segment(sys, wc.signal, tol_unit);
        if (search.witness) {
            const PeriodicityWitness& w = *search.witness;
            report.delta_upper = delta;
            report.periodic_signal.delta = delta;
            const double t_base = wc.signal.times[static_cast<size_t>(w.j)];
            for (int idx = w.j; idx <= w.k; ++idx)
                report.periodic_signal.times.push_back(
                    wc.signal.times[static_cast<size_t>(idx)] - t_base);
            for (int idx = w.j; idx < w.k; ++idx)
                report.periodic_signal.values.push_back(wc.signal.values[static_cast<size_t>(idx)]);
            report.periodic_signal.validate();
            report.witness = w;
            report.sweep_steps = steps;
            return report;
        }

        delta += increment;
    }

    throw CapExceededError("upper_bound_margin: sweep exhausted at delta = " +
                           std::to_string(delta - increment) + " without a periodicity witness");
}

}  // namespace switchmargin
