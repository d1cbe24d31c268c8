#pragma once

// Generic maximizers used by the fitting code: Brent search on an
// interval and a box-constrained (projected) damped Newton method.

#include <boost/math/tools/minima.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace ewd::optimize {

struct ScalarMax {
    double x = 0.0;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Maximize f on [lo, hi] with Brent's method (golden-section steps mixed
/// with parabolic interpolation). Relative accuracy in x is about
/// max(tol, 2^-26); -inf values are treated as very poor points.
template <class F>
ScalarMax brent_max(F&& f, double lo, double hi, double tol, int max_evaluations = 200)
{
    ScalarMax best;
    auto negated = [&](double x) {
        const double v = f(x);
        ++best.evaluations;
        if (v > best.value) {
            best.value = v;
            best.x = x;
        }
        return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
    };
    const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(tol))), 4,
                                std::numeric_limits<double>::digits / 2);
    std::uintmax_t iterations = static_cast<std::uintmax_t>(max_evaluations);
    boost::math::tools::brent_find_minima(negated, lo, hi, bits, iterations);
    return best;
}

struct BoxResult {
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
    double projected_gradient_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct BoxOptions {
    double gradient_tolerance = 1e-9;
    double value_tolerance = 1e-15;
    int max_iterations = 500;
    double max_step = 2.0;
    double difference_step = 1e-6;
};

/// Maximize f over the box [lower, upper] with a projected Newton iteration.
/// fg(x, grad) returns f(x) and writes the gradient; it may return -inf to
/// reject a point. The Hessian is the symmetrized central difference of the
/// gradient, and steps solve (mu I - H) d = g on the free variables with a
/// Levenberg parameter mu that shrinks after accepted steps and grows after
/// rejected ones. Variables on a bound whose gradient points outward are
/// frozen for the step.
template <class FG>
BoxResult maximize_box(FG&& fg, Eigen::VectorXd x, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper, const BoxOptions& options = {})
{
    const auto n = x.size();
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    BoxResult out;
    auto project = [&](Eigen::VectorXd v) {
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = std::clamp(v[i], lower[i], upper[i]);
        }
        return v;
    };
    auto eval = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
        ++out.evaluations;
        grad.resize(n);
        const double value = fg(v, grad);
        return std::isfinite(value) && grad.allFinite() ? value : neg_inf;
    };

    x = project(x);
    Eigen::VectorXd g(n);
    double fx = eval(x, g);
    out.x = x;
    if (!std::isfinite(fx)) {
        return out;
    }

    double mu = 1e-3;
    int small_changes = 0;
    Eigen::VectorXd g_plus(n);
    Eigen::VectorXd g_minus(n);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        out.iterations = iter + 1;
        std::vector<Eigen::Index> free;
        double pg_norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lo = x[i] <= lower[i] && g[i] < 0.0;
            const bool at_hi = x[i] >= upper[i] && g[i] > 0.0;
            if (!(at_lo || at_hi || lower[i] == upper[i])) {
                free.push_back(i);
                pg_norm = std::max(pg_norm, std::abs(g[i]));
            }
        }
        out.projected_gradient_norm = pg_norm;
        if (pg_norm < options.gradient_tolerance || free.empty()) {
            out.converged = true;
            break;
        }

        // Hessian on the free set from differences of the gradient.
        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd h(m, m);
        bool hessian_ok = true;
        for (Eigen::Index c = 0; c < m && hessian_ok; ++c) {
            const Eigen::Index i = free[static_cast<std::size_t>(c)];
            const double step = options.difference_step * std::max(1.0, std::abs(x[i]));
            Eigen::VectorXd up = x;
            Eigen::VectorXd down = x;
            up[i] += step;
            down[i] -= step;
            const double f_up = eval(up, g_plus);
            const double f_down = eval(down, g_minus);
            hessian_ok = std::isfinite(f_up) && std::isfinite(f_down);
            for (Eigen::Index r = 0; r < m && hessian_ok; ++r) {
                const Eigen::Index j = free[static_cast<std::size_t>(r)];
                h(r, c) = (g_plus[j] - g_minus[j]) / (2.0 * step);
            }
        }
        Eigen::VectorXd gf(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            gf[r] = g[free[static_cast<std::size_t>(r)]];
        }
        if (!hessian_ok) {
            h = -Eigen::MatrixXd::Identity(m, m);
        }
        const Eigen::MatrixXd neg_h = -0.5 * (h + h.transpose());
        const double scale = std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff());

        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            const Eigen::MatrixXd a = neg_h + mu * scale * Eigen::MatrixXd::Identity(m, m);
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() != Eigen::Success) {
                mu *= 10.0;
                continue;
            }
            Eigen::VectorXd d = llt.solve(gf);
            const double dmax = d.cwiseAbs().maxCoeff();
            if (dmax > options.max_step) {
                d *= options.max_step / dmax;
            }
            Eigen::VectorXd x_new = x;
            for (Eigen::Index r = 0; r < m; ++r) {
                x_new[free[static_cast<std::size_t>(r)]] += d[r];
            }
            x_new = project(x_new);
            Eigen::VectorXd g_new(n);
            const double f_new = eval(x_new, g_new);
            if (std::isfinite(f_new) && f_new >= fx + 1e-4 * g.dot(x_new - x)) {
                const double change = f_new - fx;
                x = x_new;
                g = g_new;
                fx = f_new;
                mu = std::max(mu / 10.0, 1e-12);
                small_changes = change <= options.value_tolerance * (1.0 + std::abs(fx)) ? small_changes + 1 : 0;
                accepted = true;
                break;
            }
            mu *= 10.0;
        }
        if (!accepted) {
            out.converged = pg_norm < 1e3 * options.gradient_tolerance;
            break;
        }
        if (small_changes >= 5) {
            out.converged = true;
            break;
        }
    }
    out.x = x;
    out.value = fx;
    return out;
}

} // namespace ewd::optimize
