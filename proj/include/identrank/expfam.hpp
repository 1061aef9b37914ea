#pragma once

// Exponential-family likelihoods
//
//   L(x | zeta) = sum_i [ (x_i zeta_i - b(zeta_i)) / a(phi) + c(x_i, phi) ]
//
// with mean b'(zeta) and variance a(phi) b''(zeta). The natural-parameter
// domain is the whole real line for every supported family. Binomial trials
// are per-observation auxiliary data and are passed alongside x.
//
// c(x, phi) does not depend on the model parameters, so it never enters a
// rank computation; it is evaluated exactly only for absolute likelihood
// values.

#include <cmath>
#include <span>
#include <string>

#include "identrank/second_order.hpp"

namespace identrank {

enum class FamilyKind { Poisson, Binomial, Normal };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string &name);

class ExpFamily {
public:
    static ExpFamily poisson() { return ExpFamily(FamilyKind::Poisson, 1.0); }
    static ExpFamily binomial() { return ExpFamily(FamilyKind::Binomial, 1.0); }
    // Normal with known variance phi.
    static ExpFamily normal(double phi);

    FamilyKind kind() const { return kind_; }
    double phi() const { return phi_; }
    bool uses_trials() const { return kind_ == FamilyKind::Binomial; }

    double a() const { return kind_ == FamilyKind::Normal ? phi_ : 1.0; }

    // Cumulant function b and its first three derivatives. `trials` is the
    // binomial m and is ignored by the other families.
    double b(double zeta, double trials = 1.0) const;
    double b1(double zeta, double trials = 1.0) const;
    double b2(double zeta, double trials = 1.0) const;
    double b3(double zeta, double trials = 1.0) const;
    double c(double x, double trials = 1.0) const;

    SecondOrder b(const SecondOrder &zeta, double trials = 1.0) const;
    SecondOrder natural_from_mean(const SecondOrder &mu, double trials = 1.0) const;

    double mean_from_natural(double zeta, double trials = 1.0) const;
    double natural_from_mean(double mu, double trials = 1.0) const;
    double variance(double zeta, double trials = 1.0) const { return a() * b2(zeta, trials); }

    // Throw InputError naming `index` when x is outside the family support.
    void check_observation(double x, double trials, std::size_t index) const;
    // Throw InputError naming `index` when mu is not in the open mean range.
    void check_mean(double mu, double trials, std::size_t index) const;

    // Sum over observations. `trials` may be empty for non-binomial families.
    double log_likelihood(std::span<const double> zeta, std::span<const double> x,
                          std::span<const double> trials = {}) const;

private:
    ExpFamily(FamilyKind kind, double phi) : kind_(kind), phi_(phi) {}

    FamilyKind kind_;
    double phi_;
};

} // namespace identrank
