// integrate.hpp — Adaptive embedded Dormand-Prince 5(4) for complex matrix ODEs

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "oqs/types.hpp"

namespace oqs::integrate {

struct StepControl {
    double rtol{1e-8};
    double atol{1e-10};
    double safety{0.9};
    double min_factor{0.2};
    double max_factor{5.0};
    double initial_step{1e-3};
};

// One accepted step with the stage data needed for dense output
template <typename State>
struct StepResult {
    double t0{0.0};
    double h{0.0};
    State y0, y1;
    State f0, f1; // derivatives at both ends

    // Cubic Hermite interpolant at theta in [0, 1]
    State interpolate(double theta) const {
        const double h00 = (1 + 2 * theta) * (1 - theta) * (1 - theta);
        const double h10 = theta * (1 - theta) * (1 - theta);
        const double h01 = theta * theta * (3 - 2 * theta);
        const double h11 = theta * theta * (theta - 1);
        return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
    }
};

namespace detail {

inline double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double rtol,
                         double atol) {
    double m = 0.0;
    for (Index j = 0; j < err.cols(); ++j)
        for (Index i = 0; i < err.rows(); ++i) {
            const double scale =
                atol + rtol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
            m = std::max(m, std::abs(err(i, j)) / scale);
        }
    return m;
}

inline double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double rtol,
                         double atol) {
    double m = 0.0;
    for (Index i = 0; i < err.size(); ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        m = std::max(m, std::abs(err(i)) / scale);
    }
    return m;
}

} // namespace detail

// Integrate y' = f(t, y) from t0 to t1. The observer is called after every
// accepted step; returning false aborts the integration and the state at the
// end of that step is returned. Throws NumericsError on step underflow.
template <typename State, typename Rhs>
State integrate_adaptive(const Rhs& f, State y, double t0, double t1, const StepControl& ctrl,
                         const std::function<bool(const StepResult<State>&)>& observer = nullptr) {
    if (t1 <= t0) return y;

    // Dormand-Prince coefficients
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640,
                            e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                            e7 = -1.0 / 40;

    double t = t0;
    double h = std::min(ctrl.initial_step, t1 - t0);
    const double h_min = std::max(1e-14, 1e-12 * (t1 - t0));
    State k1 = f(t, y);

    while (t < t1) {
        h = std::min(h, t1 - t);
        bool accepted = false;
        while (!accepted) {
            State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
            State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
            State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
            State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
            State k6 =
                f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
            State y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            State k7 = f(t + h, y1); // FSAL
            State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double en = detail::error_norm(err, y, y1, ctrl.rtol, ctrl.atol);
            if (en <= 1.0) {
                accepted = true;
                bool keep_going = true;
                if (observer) {
                    StepResult<State> step;
                    step.t0 = t;
                    step.h = h;
                    step.y0 = y;
                    step.y1 = y1;
                    step.f0 = k1;
                    step.f1 = k7;
                    keep_going = observer(step);
                }
                t += h;
                y = std::move(y1);
                k1 = std::move(k7);
                if (!keep_going) return y;
                const double factor =
                    en > 0 ? ctrl.safety * std::pow(en, -0.2) : ctrl.max_factor;
                h *= std::clamp(factor, ctrl.min_factor, ctrl.max_factor);
            } else {
                h *= std::clamp(ctrl.safety * std::pow(en, -0.2), ctrl.min_factor, 1.0);
                if (h < h_min)
                    throw NumericsError("integrator step underflow (stiffness) at t = " +
                                        std::to_string(t));
            }
        }
    }
    return y;
}

} // namespace oqs::integrate
