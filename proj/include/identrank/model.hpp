#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "identrank/second_order.hpp"

namespace identrank {

enum class Scale { Linear, Log };

struct ParamBound {
    double lower = 0.0;
    double upper = 0.0;
    Scale scale = Scale::Linear;

    bool contains(double v) const { return v >= lower && v <= upper; }
};

using ParamBox = std::vector<ParamBound>;

bool box_contains(const ParamBox &box, std::span<const double> theta);

// Typical magnitude per coordinate for step-size selection: the lower bound
// on log-scale coordinates, 1 on linear ones.
std::vector<double> typical_magnitudes(const ParamBox &box);

// Per-observation auxiliary data handed to a mean function.
struct Observation {
    std::size_t index = 0;
    double z = 1.0;
    std::span<const double> y;
    double trials = 1.0;
};

// Offsets z (all nonzero), covariate rows y and optional binomial trials.
// Everything needed for means and Fisher information; no observations.
struct DataAux {
    std::vector<double> z;
    std::vector<std::vector<double>> y;
    std::vector<double> trials;

    std::size_t size() const { return z.size(); }
    Observation at(std::size_t l) const {
        return Observation{l, z[l], y[l], trials.empty() ? 1.0 : trials[l]};
    }
    // Throws InputError on empty data, zero offsets, ragged covariates or
    // bad trials counts.
    void validate() const;
};

struct Dataset {
    DataAux aux;
    std::vector<double> x;

    std::size_t size() const { return x.size(); }
    void validate() const;
};

using ResponseFunction = std::function<SecondOrder(std::span<const SecondOrder>, const Observation &)>;

// A declared factorization of the response through N scalar combinations
// G_1(theta)..G_N(theta). The functions are optional: a bare count is enough
// for the rank bound check, the functions allow verifying the claim.
struct Factorization {
    std::size_t count = 0;
    std::function<std::vector<SecondOrder>(std::span<const SecondOrder>)> combinations;
    std::function<SecondOrder(std::span<const SecondOrder>, const Observation &)> response_from_combinations;

    bool has_functions() const { return combinations && response_from_combinations; }
};

// A model for the per-observation mean. With hazard_form set the response is
// a hazard h(theta, y) and the mean is z * h; otherwise the response is the
// mean itself.
struct MeanModel {
    std::string name;
    std::vector<std::string> param_names;
    ParamBox box;
    bool hazard_form = false;
    ResponseFunction response;
    std::optional<Factorization> factorization;
    std::function<void(const DataAux &)> check_data; // optional model-specific validation
    std::vector<std::string> warnings;

    std::size_t p() const { return param_names.size(); }

    SecondOrder mean(std::span<const SecondOrder> theta, const Observation &obs) const {
        SecondOrder r = response(theta, obs);
        return hazard_form ? obs.z * r : r;
    }
    double mean(std::span<const double> theta, const Observation &obs) const;
    double response_value(std::span<const double> theta, const Observation &obs) const;

    void validate_data(const DataAux &aux) const;
};

// A model whose log-likelihood is supplied directly rather than through an
// exponential family.
struct CustomLikelihoodModel {
    std::string name;
    std::vector<std::string> param_names;
    ParamBox box;
    std::function<SecondOrder(std::span<const SecondOrder>, const Dataset &)> log_likelihood;

    std::size_t p() const { return param_names.size(); }
};

} // namespace identrank
