#pragma once

// Identifiability engine: mean-derivative matrix D, score, observed Hessian,
// Fisher information, and the rank tests and diagnostics built on them.
//
// Conventions: theta has p entries, data has n observations, and
// D(i, l) = d mu_l / d theta_i is p x n.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "identrank/diffkit.hpp"
#include "identrank/expfam.hpp"
#include "identrank/model.hpp"
#include "identrank/ranklab.hpp"

namespace identrank {

// ---- likelihood pieces -----------------------------------------------------

Eigen::VectorXd means(const MeanModel &model, std::span<const double> theta, const DataAux &aux);

// Natural parameters zeta_l = (b')^{-1}(mu_l).
Eigen::VectorXd natural_parameters(const MeanModel &model, const ExpFamily &fam,
                                   std::span<const double> theta, const DataAux &aux);

// The theta-dependent part sum_l (x_l zeta_l - b(zeta_l)) / a(phi) as a
// differentiable function. c(x, phi) is omitted, so x need not lie in the
// family support (fitted or perturbed data are allowed).
ScalarFunction likelihood_kernel(const MeanModel &model, const ExpFamily &fam, const Dataset &data);

// Full log-likelihood including c(x, phi); checks the support of x.
double log_likelihood(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                      const Dataset &data);

Eigen::MatrixXd jacobian_D(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                           const DataAux &aux);

// Score by forward-mode AD of the likelihood kernel.
Eigen::VectorXd score(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                      const Dataset &data);

// Closed form U = (1/a) D Delta (x - mu), Delta = diag(1 / b''(zeta_l)).
Eigen::VectorXd score_closed_form(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                  const Dataset &data);

// AD Hessian of the log-likelihood. For hazard-form models it is
// cross-checked against the closed form below and a ConsistencyError is
// raised when they differ by more than 1e-8 relative.
Eigen::MatrixXd observed_hessian(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                 const Dataset &data);

// Hazard-form closed form: first-order residual term times the hazard
// Hessian, minus the rank-one curvature terms carrying b''' corrections.
Eigen::MatrixXd observed_hessian_hazard_form(const MeanModel &model, const ExpFamily &fam,
                                             std::span<const double> theta, const Dataset &data);

Eigen::MatrixXd observed_hessian(const CustomLikelihoodModel &model, std::span<const double> theta,
                                 const Dataset &data);

// I = (1/a) D Delta D^T. Needs only auxiliary data.
Eigen::MatrixXd fisher_info(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                            const DataAux &aux);

// Hazard-form expression (1/a) sum_l z_l^2 / b''(zeta_l) grad h grad h^T.
Eigen::MatrixXd fisher_info_hazard_form(const MeanModel &model, const ExpFamily &fam,
                                        std::span<const double> theta, const DataAux &aux);

// GLM expression (1/a^2) D Delta V Delta D^T with V = diag(a b''(zeta_l)).
Eigen::MatrixXd fisher_info_glm(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                const DataAux &aux);

// ---- rank tests ------------------------------------------------------------

RankDecision redundancy_test(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                             const DataAux &aux, const Tolerances &tol = {});

// Left null space of D: directions along which every mean is locally
// invariant. Empty (zero columns) when D has full row rank.
Eigen::MatrixXd redundancy_directions(const MeanModel &model, const ExpFamily &fam,
                                      std::span<const double> theta, const DataAux &aux,
                                      const Tolerances &tol = {});

struct SubsetVerdict {
    bool identifiable = false;
    RankDecision rank;
};

SubsetVerdict subset_identifiability(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                     const Dataset &data, const std::vector<std::size_t> &subset,
                                     const Tolerances &tol = {});

SubsetVerdict subset_identifiability(const CustomLikelihoodModel &model, std::span<const double> theta,
                                     const Dataset &data, const std::vector<std::size_t> &subset,
                                     const Tolerances &tol = {});

// Rank of the hazard Hessian d^2 h / d theta d theta at a single covariate point.
RankDecision hazard_hessian_rank(const MeanModel &model, std::span<const double> theta, const Observation &obs,
                                 const Tolerances &tol = {});

// ---- sampling and classification ----------------------------------------------

struct SamplerConfig {
    std::size_t count = 64; // random draws M
    std::uint64_t seed = 20100127;
    bool include_corners = true;
    std::vector<std::vector<double>> pinned;
};

struct ThetaSample {
    std::vector<double> theta;
    std::string source; // "pinned", "corner" or "random"
};

// Pinned points first, then box corners (when requested and p <= 10), then
// `count` draws uniform per coordinate on the coordinate's scale.
// Deterministic for a given seed. Throws InputError for pinned points
// outside the box.
std::vector<ThetaSample> draw_samples(const ParamBox &box, const SamplerConfig &config);

enum class ClassificationKind { Redundant, ConditionallyFullRankEvidence, EssentiallyFullRankEvidence };

std::string to_string(ClassificationKind kind);

struct SampleRecord {
    ThetaSample sample;
    RankDecision rank_D;
    RankDecision rank_I;
    std::optional<RankDecision> rank_H;
};

struct Classification {
    ClassificationKind kind = ClassificationKind::Redundant;
    std::size_t full_rank = 0;
    std::size_t deficient = 0;
    std::vector<SampleRecord> records;
};

// rank_H is filled in when `data` is given.
Classification classify(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                        const SamplerConfig &sampler, const Tolerances &tol = {},
                        const Dataset *data = nullptr);

// Data for which theta is a turning point of the likelihood: the fitted
// means plus, when `rng_seed` is given, a random perturbation projected onto
// the null space of D Delta so that the score stays zero.
Dataset turning_point_data(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                           const DataAux &aux, std::optional<std::uint64_t> rng_seed = std::nullopt);

struct Bounds {
    std::size_t hessian_lower = 0;
    std::size_t fisher_upper = 0;
    // Largest hazard-Hessian rank seen over samples and covariate points;
    // hazard-form models only. Reported alongside, not used as a bound.
    std::optional<std::size_t> hazard_hessian_max;
    bool hazard_route_exceeds_fisher = false;
};

Bounds bound_report(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                    const SamplerConfig &sampler, const Tolerances &tol = {});

struct FactorizationCheck {
    bool passed = true;
    std::size_t declared = 0;
    std::size_t max_rank_seen = 0;
    std::optional<std::vector<double>> witness;
};

// rank(I) <= N at every sample for the model's declared factorization.
FactorizationCheck factorization_bound_check(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                                             const SamplerConfig &sampler, const Tolerances &tol = {});

// Largest relative difference between the response computed directly and
// through the declared combinations, over the given samples and all data
// points. Requires a factorization with functions.
double factorization_consistency(const MeanModel &model, const DataAux &aux,
                                 const std::vector<ThetaSample> &samples);

// ---- ridges and fitting steps --------------------------------------------------

struct RidgePoint {
    double t = 0.0;
    std::vector<double> theta;
    double drift = 0.0; // |L(theta(t)) - L(theta0)|
    std::vector<double> direction;
};

struct RidgeTrace {
    std::vector<RidgePoint> points; // ordered by t, from -t_max to t_max
    double max_drift = 0.0;
    double log_likelihood0 = 0.0;
    bool truncated = false; // the curve left the parameter box
};

// Follows the likelihood ridge through theta0 in both directions. Each step
// moves t_max/steps along the current unit redundancy direction (the
// previous direction projected onto the recomputed null space), then
// Gauss-Newton corrects back onto the level set mu(theta) = mu(theta0).
// Throws InputError when the model has full rank at theta0.
RidgeTrace ridge_trace(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta0,
                       const Dataset &data, double t_max, std::size_t steps, const Tolerances &tol = {});

// Weighted least-squares step solving H^T W H dtheta = H^T W (x - mu) with
// H = D^T and W = diag(1/v). Default v is the family variance at theta.
// Throws SingularityError when H^T W H is rank deficient.
Eigen::VectorXd irls_step(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                          const Dataset &data, std::optional<Eigen::VectorXd> variances = std::nullopt,
                          const Tolerances &tol = {});

// Solves H dtheta = -grad L. Throws SingularityError when H is rank deficient.
Eigen::VectorXd newton_step(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                            const Dataset &data, const Tolerances &tol = {});
Eigen::VectorXd newton_step(const CustomLikelihoodModel &model, std::span<const double> theta,
                            const Dataset &data, const Tolerances &tol = {});

// True when L is strictly below L(center) at every other point of a
// (points)^p grid of the given radius.
bool grid_unique_maximum(const CustomLikelihoodModel &model, std::span<const double> center, const Dataset &data,
                         double radius = 0.5, std::size_t points = 21);

} // namespace identrank
