#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "identrank/second_order.hpp"

namespace identrank {

// A scalar function of the parameter vector, written once against
// SecondOrder so it can be differentiated or evaluated as plain doubles
// (dim-0 arguments).
using ScalarFunction = std::function<SecondOrder(std::span<const SecondOrder>)>;

struct Derivatives {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

// Independent variables theta_0..theta_{p-1} seeded at `theta`.
std::vector<SecondOrder> seed_variables(std::span<const double> theta);

// One forward pass carrying value, gradient and full Hessian.
Derivatives differentiate(const ScalarFunction &f, std::span<const double> theta);

Eigen::VectorXd grad(const ScalarFunction &f, std::span<const double> theta);
Eigen::MatrixXd hess(const ScalarFunction &f, std::span<const double> theta);

// Plain evaluation, no derivative bookkeeping.
double evaluate(const ScalarFunction &f, std::span<const double> theta);

struct FiniteDifferences {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

struct FdOptions {
    // Used as-is for every coordinate when set.
    std::optional<double> step;
    // Typical magnitude of each coordinate; empty means 1 for all.
    std::vector<double> typical;
};

// Central-difference oracle, O(h^2) in both gradient and Hessian. With
// s_i = max(|theta_i|, typical_i) the gradient step is cbrt(eps)*s_i and the
// Hessian step eps^(1/4)*s_i. f is evaluated inside a box of radius 2h
// around theta.
FiniteDifferences fd_check(const ScalarFunction &f, std::span<const double> theta, const FdOptions &options = {});

} // namespace identrank
