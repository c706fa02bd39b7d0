#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kfp {

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-13;
    double initial_step = 1e-4;
    long max_steps = 200000000;
};

/// Dormand-Prince 5(4) with PI step control.  `rhs(t, y, dy)` fills the
/// derivative; `on_sample` is invoked exactly at each requested time (steps
/// are clamped to the sample points, no interpolation).  Throws when the
/// controller cannot meet the tolerance.
template <typename Rhs>
void integrate_dp45(Rhs&& rhs, double t0, Eigen::VectorXcd y,
                    const std::vector<double>& sample_times,
                    const std::function<void(double, const Eigen::VectorXcd&)>&
                        on_sample,
                    const IntegratorOptions& opts = {}) {
    static const double kA[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
         -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
         11.0 / 84}};
    static const double kC[7] = {0.0,     1.0 / 5, 3.0 / 10, 4.0 / 5,
                                 8.0 / 9, 1.0,     1.0};
    static const double kB4[7] = {5179.0 / 57600,    0.0,
                                  7571.0 / 16695,    393.0 / 640,
                                  -92097.0 / 339200, 187.0 / 2100,
                                  1.0 / 40};

    const int n = static_cast<int>(y.size());
    std::vector<Eigen::VectorXcd> k(7, Eigen::VectorXcd(n));
    Eigen::VectorXcd ytmp(n), ynew(n), yerr(n);

    double t = t0;
    rhs(t, y, k[0]);
    double h = opts.initial_step;
    long steps = 0;
    double prev_err = 1.0;

    for (double target : sample_times) {
        if (target < t - 1e-14)
            throw std::invalid_argument("sample times must be increasing");
        if (target <= t + 1e-14 * std::max(1.0, std::abs(t))) {
            on_sample(target, y);
            continue;
        }
        while (t < target) {
            if (++steps > opts.max_steps)
                throw std::runtime_error("integrator exceeded step budget");
            bool clamped = false;
            if (t + h >= target) {
                h = target - t;
                clamped = true;
            }
            for (int s = 1; s < 7; ++s) {
                ytmp = y;
                for (int j = 0; j < s; ++j)
                    if (kA[s][j] != 0.0) ytmp += (h * kA[s][j]) * k[j];
                rhs(t + kC[s] * h, ytmp, k[s]);
            }
            // Stage 7 was evaluated at the 5th-order solution, so ytmp is
            // already the new state (FSAL).
            ynew = ytmp;
            yerr.setZero();
            for (int j = 0; j < 7; ++j) {
                double w5 = (j < 6) ? kA[6][j] : 0.0;
                yerr += (h * (w5 - kB4[j])) * k[j];
            }
            double err = 0.0;
            for (int i = 0; i < n; ++i) {
                double scale =
                    opts.atol + opts.rtol * std::max(std::abs(y[i]),
                                                     std::abs(ynew[i]));
                double e = std::abs(yerr[i]) / scale;
                err += e * e;
            }
            err = std::sqrt(err / n);
            if (err <= 1.0) {
                t = clamped ? target : t + h;
                y.swap(ynew);
                k[0] = k[6];  // FSAL
                double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.2) *
                             std::pow(prev_err, 0.08);
                prev_err = std::max(err, 1e-16);
                h *= std::min(5.0, std::max(0.2, fac));
            } else {
                double fac = 0.9 * std::pow(err, -0.2);
                h *= std::min(1.0, std::max(0.1, fac));
                if (h < 1e-14 * std::max(1.0, std::abs(t)))
                    throw std::runtime_error(
                        "integrator failed to meet tolerance");
            }
        }
        on_sample(target, y);
    }
}

template <typename Rhs>
Eigen::VectorXcd integrate_dp45_to(Rhs&& rhs, double t0,
                                   const Eigen::VectorXcd& y0, double t1,
                                   const IntegratorOptions& opts = {}) {
    Eigen::VectorXcd out = y0;
    if (t1 <= t0) return out;
    integrate_dp45(
        rhs, t0, y0, {t1},
        [&](double, const Eigen::VectorXcd& y) { out = y; }, opts);
    return out;
}

}  // namespace kfp
