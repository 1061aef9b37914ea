#pragma once

// Reference models covering the identifiability regimes of interest:
// full rank GLMs, exactly redundant multistage hazards, the two-mutation
// clonal-expansion hazard, a conditionally full rank toy model and a
// non-exponential-family likelihood whose maximum has a rank-0 Hessian.

#include <cstddef>

#include <Eigen/Dense>

#include "identrank/model.hpp"

namespace identrank {

namespace zoo {

// mu_l = exp(sum_j A_lj theta_j); log link, one observation per row of A.
MeanModel poisson_glm(const Eigen::MatrixXd &design);

// mu_l = sum_j A_lj theta_j; identity link, meant for the Normal family.
MeanModel linear_gaussian(const Eigen::MatrixXd &design);

// h(theta, t) = (prod_i theta_i) t^(k-1) / (k-1)!, mu = z h. The age t is
// the first covariate. Declares the one-combination factorization G = prod.
MeanModel armitage_doll(std::size_t stages);

// Constant-parameter two-mutation clonal expansion hazard in
// theta = (X nu, alpha, beta, mu); age t is the first covariate.
// Declares the factorization through (X nu mu, alpha - beta - mu, alpha mu).
MeanModel two_mutation();

// mu_l = theta_1 y_l1 + theta_1 theta_2 y_l2 (Normal family). Full rank
// except on the hyperplane theta_1 = 0.
MeanModel cond_demo();

// L(x | theta) = -sum_i (x_i - theta_i)^4, one observation per parameter.
CustomLikelihoodModel quartic_counterexample(std::size_t p);

} // namespace zoo

// Two-mutation hazard written through its three identifiable combinations.
// With D = sqrt(s^2 + 4 a), r+ the positive root of r^2 - s r - a = 0 and
// g(D, t) = D / (1 - exp(-D t)), the hazard is G / (g - r+). g is taken from
// its Bernoulli series when D t is small, which keeps the expression finite
// and accurate when the roots of the characteristic quadratic come together.
template <class T>
T two_mutation_hazard_from_combinations(const T &xnu_mu, const T &s, const T &alpha_mu, double t) {
    using std::expm1;
    using std::sqrt;
    const T disc = s * s + 4.0 * alpha_mu;
    const T d = sqrt(disc);
    const T r_plus = value_of(s) >= 0.0 ? (s + d) * 0.5 : 2.0 * alpha_mu / (d - s);
    const T x = d * t;
    T g;
    if (value_of(x) < 1e-3) {
        const T x2 = x * x;
        g = (1.0 + 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0) / t;
    } else {
        g = d / (-expm1(-x));
    }
    return xnu_mu / (g - r_plus);
}

template <class T>
T two_mutation_hazard(const T &xnu, const T &alpha, const T &beta, const T &mu, double t) {
    return two_mutation_hazard_from_combinations<T>(xnu * mu, alpha - beta - mu, alpha * mu, t);
}

struct TwoMutationParams {
    double xnu;
    double alpha;
    double beta;
    double mu;
};

// Oracle: integrate the backward equation for the probability u(t) that a
// clone started at 0 has produced a malignant cell,
//   u' = mu + (alpha - beta - mu) u - alpha u^2,  u(0) = 0,
// with adaptive Dormand-Prince, and return X nu * u(t).
double two_mutation_hazard_ode(const TwoMutationParams &theta, double t);

// Throws ConsistencyError if closed form and ODE oracle differ by more than
// rel_tol relative at time t.
void verify_two_mutation_hazard(const TwoMutationParams &theta, double t, double rel_tol = 1e-8);

} // namespace identrank
