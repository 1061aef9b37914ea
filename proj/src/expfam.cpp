#include "identrank/expfam.hpp"

#include <numbers>
#include <sstream>

#include "identrank/errors.hpp"

namespace identrank {

namespace {

double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::string at_index(std::size_t index) {
    std::ostringstream os;
    os << " (observation " << index + 1 << ")";
    return os.str();
}

} // namespace

std::string to_string(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Binomial: return "binomial";
    case FamilyKind::Normal: return "normal";
    }
    return "unknown";
}

FamilyKind family_kind_from_string(const std::string &name) {
    if (name == "poisson") return FamilyKind::Poisson;
    if (name == "binomial") return FamilyKind::Binomial;
    if (name == "normal") return FamilyKind::Normal;
    throw InputError("unknown family kind '" + name + "' (expected poisson, binomial or normal)");
}

ExpFamily ExpFamily::normal(double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi))
        throw InputError("normal family requires a positive finite variance phi");
    return ExpFamily(FamilyKind::Normal, phi);
}

double ExpFamily::b(double zeta, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return std::exp(zeta);
    case FamilyKind::Binomial: return trials * softplus(zeta);
    case FamilyKind::Normal: return 0.5 * zeta * zeta;
    }
    return 0.0;
}

double ExpFamily::b1(double zeta, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return std::exp(zeta);
    case FamilyKind::Binomial: return trials * logistic(zeta);
    case FamilyKind::Normal: return zeta;
    }
    return 0.0;
}

double ExpFamily::b2(double zeta, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return std::exp(zeta);
    case FamilyKind::Binomial: {
        const double s = logistic(zeta);
        return trials * s * (1.0 - s);
    }
    case FamilyKind::Normal: return 1.0;
    }
    return 0.0;
}

double ExpFamily::b3(double zeta, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return std::exp(zeta);
    case FamilyKind::Binomial: {
        const double s = logistic(zeta);
        return trials * s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case FamilyKind::Normal: return 0.0;
    }
    return 0.0;
}

double ExpFamily::c(double x, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return -std::lgamma(x + 1.0);
    case FamilyKind::Binomial:
        return std::lgamma(trials + 1.0) - std::lgamma(x + 1.0) - std::lgamma(trials - x + 1.0);
    case FamilyKind::Normal:
        return -0.5 * x * x / phi_ - 0.5 * std::log(2.0 * std::numbers::pi * phi_);
    }
    return 0.0;
}

SecondOrder ExpFamily::b(const SecondOrder &zeta, double trials) const {
    const double z = zeta.value();
    switch (kind_) {
    case FamilyKind::Poisson: return exp(zeta);
    case FamilyKind::Binomial: {
        const double s = logistic(z);
        return zeta.compose(trials * softplus(z), trials * s, trials * s * (1.0 - s));
    }
    case FamilyKind::Normal: return 0.5 * square(zeta);
    }
    return zeta;
}

SecondOrder ExpFamily::natural_from_mean(const SecondOrder &mu, double trials) const {
    switch (kind_) {
    case FamilyKind::Poisson: return log(mu);
    case FamilyKind::Binomial: {
        const double m = mu.value();
        if (!(m > 0.0 && m < trials))
            throw DomainError("binomial mean outside (0, m): " + std::to_string(m));
        // logit(mu/m) = log(mu) - log(m - mu)
        return log(mu) - log(trials - mu);
    }
    case FamilyKind::Normal: return mu;
    }
    return mu;
}

double ExpFamily::mean_from_natural(double zeta, double trials) const {
    if (!std::isfinite(zeta)) throw InputError("natural parameter must be finite");
    return b1(zeta, trials);
}

double ExpFamily::natural_from_mean(double mu, double trials) const {
    check_mean(mu, trials, 0);
    switch (kind_) {
    case FamilyKind::Poisson: return std::log(mu);
    case FamilyKind::Binomial: return std::log(mu) - std::log(trials - mu);
    case FamilyKind::Normal: return mu;
    }
    return mu;
}

void ExpFamily::check_observation(double x, double trials, std::size_t index) const {
    if (!std::isfinite(x)) throw InputError("non-finite observation" + at_index(index));
    switch (kind_) {
    case FamilyKind::Poisson:
        if (x < 0.0 || std::floor(x) != x)
            throw InputError("poisson observation must be a non-negative integer" + at_index(index));
        break;
    case FamilyKind::Binomial:
        if (!(trials >= 1.0) || std::floor(trials) != trials)
            throw InputError("binomial trials must be a positive integer" + at_index(index));
        if (x < 0.0 || x > trials || std::floor(x) != x)
            throw InputError("binomial observation must be an integer in [0, trials]" + at_index(index));
        break;
    case FamilyKind::Normal: break;
    }
}

void ExpFamily::check_mean(double mu, double trials, std::size_t index) const {
    if (!std::isfinite(mu)) throw InputError("non-finite mean" + at_index(index));
    switch (kind_) {
    case FamilyKind::Poisson:
        if (!(mu > 0.0)) throw InputError("poisson mean must be positive" + at_index(index));
        break;
    case FamilyKind::Binomial:
        if (!(mu > 0.0 && mu < trials))
            throw InputError("binomial mean must lie strictly inside (0, trials)" + at_index(index));
        break;
    case FamilyKind::Normal: break;
    }
}

double ExpFamily::log_likelihood(std::span<const double> zeta, std::span<const double> x,
                                 std::span<const double> trials) const {
    if (zeta.size() != x.size())
        throw InputError("log_likelihood: natural parameters and observations differ in length");
    if (uses_trials() && trials.size() != x.size())
        throw InputError("log_likelihood: binomial family needs one trials count per observation");
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = uses_trials() ? trials[i] : 1.0;
        if (!std::isfinite(zeta[i])) throw InputError("non-finite natural parameter" + at_index(i));
        check_observation(x[i], m, i);
        total += (x[i] * zeta[i] - b(zeta[i], m)) / a() + c(x[i], m);
    }
    return total;
}

} // namespace identrank
