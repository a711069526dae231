#pragma once

// Adaptive Dormand-Prince 5(4) integrator with the classical fourth-order
// dense-output interpolant. The switching module drives it step by step and
// uses the interpolant both for event bracketing and for trajectory samples.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "switchmargin/common.hpp"

namespace switchmargin {

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    double event_tol = 1e-9;  // event-time localization tolerance, seconds
    long max_events = 1000000;
    long max_steps = 20000000;
    double max_step = std::numeric_limits<double>::infinity();
    double overflow_guard = 1e12;  // truncate a run once the state norm passes this
    double sample_dt = 0.0;        // uniform trajectory sampling; 0 keeps accepted steps only
    bool normalize_at_events = false;
};

// One accepted step with its continuous extension.
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    Vec y0, y1;
    Vec cont3, cont4, cont5;  // interpolant coefficients (Hairer-Norsett-Wanner layout)

    double t1() const { return t0 + h; }

    Vec eval(double t) const {
        const double theta = (t - t0) / h;
        const double theta1 = 1.0 - theta;
        const Vec ydiff = y1 - y0;
        return y0 + theta * (ydiff + theta1 * (cont3 + theta * (cont4 + theta1 * cont5)));
    }
};

// Integrates y' = rhs(t, y) from (t0, y0) to t_end. Calls on_step after every
// accepted step; returning false stops the integration early (the switching
// module does this at events). Throws NumericalError when the step size
// underflows and CapExceededError at the step budget.
template <class Rhs, class StepCallback>
void integrate_adaptive(Rhs&& rhs, double t0, const Vec& y0, double t_end,
                        const IntegratorConfig& cfg, StepCallback&& on_step) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    if (t_end <= t0) return;

    Vec y = y0;
    Vec k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
        k7(y.size());
    rhs(t0, y, k1);

    // Conservative initial step from the state/derivative scale.
    double h;
    {
        const double d0 = y.norm();
        const double d1n = k1.norm();
        h = (d1n > 1e-14) ? 0.01 * std::max(d0, 1.0) / d1n : 1e-6;
        h = std::min({h, t_end - t0, cfg.max_step});
    }

    double t = t0;
    long steps = 0;
    while (t < t_end) {
        if (++steps > cfg.max_steps)
            throw CapExceededError("integrate_adaptive: step budget exhausted");
        h = std::min({h, t_end - t, cfg.max_step});
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw NumericalError("integrate_adaptive: step size underflow");

        Vec ytmp = y + h * a21 * k1;
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        const Vec y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, y_new, k7);

        const Vec err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            const double q = err_vec(i) / scale;
            err += q * q;
        }
        err = std::sqrt(err / static_cast<double>(y.size()));

        if (err <= 1.0) {
            DenseStep step;
            step.t0 = t;
            step.h = h;
            step.y0 = y;
            step.y1 = y_new;
            const Vec ydiff = y_new - y;
            step.cont3 = h * k1 - ydiff;
            step.cont4 = 2.0 * ydiff - h * (k1 + k7);
            step.cont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            t += h;
            y = y_new;
            k1 = k7;  // FSAL

            if (!on_step(step)) return;
        }

        const double factor =
            (err > 1e-30) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        h *= factor;
    }
}

}  // namespace switchmargin
