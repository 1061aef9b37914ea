#include "identrank/diffkit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace identrank {

std::vector<SecondOrder> seed_variables(std::span<const double> theta) {
    std::vector<SecondOrder> vars;
    vars.reserve(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
        vars.push_back(SecondOrder::variable(theta[i], i, theta.size()));
    return vars;
}

Derivatives differentiate(const ScalarFunction &f, std::span<const double> theta) {
    const std::size_t p = theta.size();
    const auto vars = seed_variables(theta);
    const SecondOrder y = f(vars);
    Derivatives out;
    out.value = y.value();
    out.grad.resize(static_cast<Eigen::Index>(p));
    out.hess.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        out.grad(static_cast<Eigen::Index>(i)) = y.grad(i);
        for (std::size_t j = 0; j < p; ++j)
            out.hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y.hess(i, j);
    }
    return out;
}

Eigen::VectorXd grad(const ScalarFunction &f, std::span<const double> theta) {
    return differentiate(f, theta).grad;
}

Eigen::MatrixXd hess(const ScalarFunction &f, std::span<const double> theta) {
    return differentiate(f, theta).hess;
}

double evaluate(const ScalarFunction &f, std::span<const double> theta) {
    std::vector<SecondOrder> args(theta.begin(), theta.end());
    return f(args).value();
}

FiniteDifferences fd_check(const ScalarFunction &f, std::span<const double> theta, const FdOptions &options) {
    const std::size_t p = theta.size();
    if (!options.typical.empty() && options.typical.size() != p)
        throw std::invalid_argument("fd_check: one typical magnitude per coordinate is required");
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> hg(p), hh(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double typical = options.typical.empty() ? 1.0 : options.typical[i];
        const double scale = std::max(typical, std::abs(theta[i]));
        hg[i] = options.step ? *options.step : std::cbrt(eps) * scale;
        hh[i] = options.step ? *options.step : std::pow(eps, 0.25) * scale;
    }

    std::vector<double> point(theta.begin(), theta.end());
    auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
        point.assign(theta.begin(), theta.end());
        point[i] += di;
        point[j] += dj;
        return evaluate(f, point);
    };

    FiniteDifferences out;
    const auto n = static_cast<Eigen::Index>(p);
    out.grad.resize(n);
    out.hess.resize(n, n);
    const double f0 = evaluate(f, theta);
    for (std::size_t i = 0; i < p; ++i) {
        const double h = hg[i];
        const auto ii = static_cast<Eigen::Index>(i);
        out.grad(ii) = (at(i, h, i, 0.0) - at(i, -h, i, 0.0)) / (2.0 * h);

        const double k = hh[i];
        out.hess(ii, ii) = (at(i, k, i, k) - 2.0 * f0 + at(i, -k, i, -k)) / (4.0 * k * k);
        for (std::size_t j = 0; j < i; ++j) {
            const double l = hh[j];
            const double v = (at(i, k, j, l) - at(i, k, j, -l) - at(i, -k, j, l) + at(i, -k, j, -l)) /
                             (4.0 * k * l);
            const auto jj = static_cast<Eigen::Index>(j);
            out.hess(ii, jj) = v;
            out.hess(jj, ii) = v;
        }
    }
    return out;
}

} // namespace identrank
