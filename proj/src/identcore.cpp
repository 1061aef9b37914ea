#include "identrank/identcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "identrank/errors.hpp"
#include "identrank/rng.hpp"

namespace identrank {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double trials_at(const ExpFamily &fam, const Observation &obs) { return fam.uses_trials() ? obs.trials : 1.0; }

void check_theta(const MeanModel &model, std::span<const double> theta) {
    if (theta.size() != model.p()) {
        std::ostringstream os;
        os << model.name << ": expected " << model.p() << " parameters, got " << theta.size();
        throw InputError(os.str());
    }
    for (double v : theta)
        if (!std::isfinite(v)) throw InputError(model.name + ": non-finite parameter value");
}

// Makes the largest-magnitude entry of each column positive.
void orient_columns(Eigen::MatrixXd &basis) {
    for (Eigen::Index c = 0; c < basis.cols(); ++c) {
        Eigen::Index at = 0;
        basis.col(c).cwiseAbs().maxCoeff(&at);
        if (basis(at, c) < 0.0) basis.col(c) *= -1.0;
    }
}

double max_abs(const Eigen::MatrixXd &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

struct ResponseDerivatives {
    double value;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

ResponseDerivatives differentiate_response(const MeanModel &model, std::span<const double> theta,
                                           const Observation &obs) {
    const auto vars = seed_variables(theta);
    const SecondOrder h = model.response(vars, obs);
    const std::size_t p = theta.size();
    ResponseDerivatives out{h.value(), Eigen::VectorXd(idx(p)), Eigen::MatrixXd(idx(p), idx(p))};
    for (std::size_t i = 0; i < p; ++i) {
        out.grad(idx(i)) = h.grad(i);
        for (std::size_t j = 0; j < p; ++j) out.hess(idx(i), idx(j)) = h.hess(i, j);
    }
    return out;
}

// Second derivatives of b at each observation's natural parameter.
struct Curvature {
    Eigen::VectorXd mu;
    Eigen::VectorXd b2;
    Eigen::VectorXd b3;
};

Curvature curvature(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                    const DataAux &aux) {
    const std::size_t n = aux.size();
    Curvature c{Eigen::VectorXd(idx(n)), Eigen::VectorXd(idx(n)), Eigen::VectorXd(idx(n))};
    for (std::size_t l = 0; l < n; ++l) {
        const Observation obs = aux.at(l);
        const double m = trials_at(fam, obs);
        const double mu = model.mean(theta, obs);
        if (fam.kind() != FamilyKind::Normal) {
            try {
                fam.check_mean(mu, m, l);
            } catch (const InputError &e) {
                throw DomainError(model.name + ": " + e.what());
            }
        }
        const double zeta = fam.natural_from_mean(mu, m);
        c.mu(idx(l)) = mu;
        c.b2(idx(l)) = fam.b2(zeta, m);
        c.b3(idx(l)) = fam.b3(zeta, m);
        if (!(c.b2(idx(l)) > 0.0)) throw DomainError("b''(zeta) vanished at observation " + std::to_string(l + 1));
    }
    return c;
}

} // namespace

// ---------------------------------------------------------------------------

Eigen::VectorXd means(const MeanModel &model, std::span<const double> theta, const DataAux &aux) {
    check_theta(model, theta);
    Eigen::VectorXd mu(idx(aux.size()));
    for (std::size_t l = 0; l < aux.size(); ++l) mu(idx(l)) = model.mean(theta, aux.at(l));
    return mu;
}

Eigen::VectorXd natural_parameters(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                   const DataAux &aux) {
    const Eigen::VectorXd mu = means(model, theta, aux);
    Eigen::VectorXd zeta(mu.size());
    for (std::size_t l = 0; l < aux.size(); ++l) {
        const Observation obs = aux.at(l);
        zeta(idx(l)) = fam.natural_from_mean(mu(idx(l)), trials_at(fam, obs));
    }
    return zeta;
}

ScalarFunction likelihood_kernel(const MeanModel &model, const ExpFamily &fam, const Dataset &data) {
    if (data.x.size() != data.aux.size()) throw InputError("observations and auxiliary data differ in length");
    return [model, fam, data](std::span<const SecondOrder> theta) {
        SecondOrder total(0.0);
        const double inv_a = 1.0 / fam.a();
        for (std::size_t l = 0; l < data.size(); ++l) {
            const Observation obs = data.aux.at(l);
            const double m = trials_at(fam, obs);
            const SecondOrder zeta = fam.natural_from_mean(model.mean(theta, obs), m);
            total += (data.x[l] * zeta - fam.b(zeta, m)) * inv_a;
        }
        return total;
    };
}

double log_likelihood(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                      const Dataset &data) {
    const Eigen::VectorXd zeta = natural_parameters(model, fam, theta, data.aux);
    std::vector<double> z(zeta.data(), zeta.data() + zeta.size());
    return fam.log_likelihood(z, data.x, data.aux.trials);
}

Eigen::MatrixXd jacobian_D(const MeanModel &model, const ExpFamily &, std::span<const double> theta,
                           const DataAux &aux) {
    check_theta(model, theta);
    const std::size_t p = theta.size();
    const auto vars = seed_variables(theta);
    Eigen::MatrixXd d(idx(p), idx(aux.size()));
    for (std::size_t l = 0; l < aux.size(); ++l) {
        const SecondOrder mu = model.mean(std::span<const SecondOrder>(vars), aux.at(l));
        for (std::size_t i = 0; i < p; ++i) d(idx(i), idx(l)) = mu.grad(i);
    }
    return d;
}

Eigen::VectorXd score(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                      const Dataset &data) {
    check_theta(model, theta);
    return grad(likelihood_kernel(model, fam, data), theta);
}

Eigen::VectorXd score_closed_form(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                  const Dataset &data) {
    const Eigen::MatrixXd d = jacobian_D(model, fam, theta, data.aux);
    const Curvature c = curvature(model, fam, theta, data.aux);
    const Eigen::Map<const Eigen::VectorXd> x(data.x.data(), idx(data.x.size()));
    const Eigen::VectorXd weighted = (x - c.mu).cwiseQuotient(c.b2);
    return d * weighted / fam.a();
}

Eigen::MatrixXd observed_hessian_hazard_form(const MeanModel &model, const ExpFamily &fam,
                                             std::span<const double> theta, const Dataset &data) {
    if (!model.hazard_form) throw InputError(model.name + " is not a hazard-form model");
    check_theta(model, theta);
    const std::size_t p = theta.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(idx(p), idx(p));
    for (std::size_t l = 0; l < data.size(); ++l) {
        const Observation obs = data.aux.at(l);
        const double m = trials_at(fam, obs);
        const ResponseDerivatives h = differentiate_response(model, theta, obs);
        const double mu = obs.z * h.value;
        const double zeta = fam.natural_from_mean(mu, m);
        const double b2 = fam.b2(zeta, m);
        const double b3 = fam.b3(zeta, m);
        const double resid = data.x[l] - mu;
        out += (resid * obs.z / (fam.a() * b2)) * h.hess;
        out -= (obs.z * obs.z / fam.a()) * ((b2 * b2 + b3 * resid) / (b2 * b2 * b2)) * (h.grad * h.grad.transpose());
    }
    return out;
}

Eigen::MatrixXd observed_hessian(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                 const Dataset &data) {
    check_theta(model, theta);
    Eigen::MatrixXd h = hess(likelihood_kernel(model, fam, data), theta);
    if (model.hazard_form) {
        const Eigen::MatrixXd closed = observed_hessian_hazard_form(model, fam, theta, data);
        const double scale = std::max(max_abs(h), max_abs(closed));
        if (max_abs(h - closed) > 1e-8 * scale) {
            std::ostringstream os;
            os << model.name << ": AD Hessian and hazard-form Hessian disagree (max difference "
               << max_abs(h - closed) << ", scale " << scale << ")";
            throw ConsistencyError(os.str());
        }
    }
    return h;
}

Eigen::MatrixXd observed_hessian(const CustomLikelihoodModel &model, std::span<const double> theta,
                                 const Dataset &data) {
    if (theta.size() != model.p()) throw InputError(model.name + ": wrong number of parameters");
    const ScalarFunction f = [&model, &data](std::span<const SecondOrder> t) { return model.log_likelihood(t, data); };
    return hess(f, theta);
}

Eigen::MatrixXd fisher_info(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                            const DataAux &aux) {
    const Eigen::MatrixXd d = jacobian_D(model, fam, theta, aux);
    const Curvature c = curvature(model, fam, theta, aux);
    const Eigen::MatrixXd weighted = d * c.b2.cwiseInverse().asDiagonal();
    Eigen::MatrixXd info = weighted * d.transpose() / fam.a();
    // Symmetrize the rounding of the product.
    return 0.5 * (info + info.transpose());
}

Eigen::MatrixXd fisher_info_hazard_form(const MeanModel &model, const ExpFamily &fam,
                                        std::span<const double> theta, const DataAux &aux) {
    if (!model.hazard_form) throw InputError(model.name + " is not a hazard-form model");
    check_theta(model, theta);
    const std::size_t p = theta.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(idx(p), idx(p));
    for (std::size_t l = 0; l < aux.size(); ++l) {
        const Observation obs = aux.at(l);
        const double m = trials_at(fam, obs);
        const ResponseDerivatives h = differentiate_response(model, theta, obs);
        const double zeta = fam.natural_from_mean(obs.z * h.value, m);
        out += (obs.z * obs.z / fam.b2(zeta, m)) * (h.grad * h.grad.transpose());
    }
    return out / fam.a();
}

Eigen::MatrixXd fisher_info_glm(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                const DataAux &aux) {
    const Eigen::MatrixXd d = jacobian_D(model, fam, theta, aux);
    const Curvature c = curvature(model, fam, theta, aux);
    const Eigen::VectorXd delta = c.b2.cwiseInverse();
    const Eigen::VectorXd v = fam.a() * c.b2;
    const Eigen::VectorXd middle = delta.cwiseProduct(v).cwiseProduct(delta);
    const double a = fam.a();
    return d * middle.asDiagonal() * d.transpose() / (a * a);
}

// ---------------------------------------------------------------------------

RankDecision redundancy_test(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                             const DataAux &aux, const Tolerances &tol) {
    return numerical_rank(jacobian_D(model, fam, theta, aux), tol);
}

Eigen::MatrixXd redundancy_directions(const MeanModel &model, const ExpFamily &fam,
                                      std::span<const double> theta, const DataAux &aux, const Tolerances &tol) {
    Eigen::MatrixXd basis = left_null_space(jacobian_D(model, fam, theta, aux), tol);
    orient_columns(basis);
    return basis;
}

SubsetVerdict subset_identifiability(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                                     const Dataset &data, const std::vector<std::size_t> &subset,
                                     const Tolerances &tol) {
    SubsetVerdict v;
    v.rank = principal_submatrix_rank(observed_hessian(model, fam, theta, data), subset, tol);
    v.identifiable = v.rank.rank == subset.size();
    return v;
}

SubsetVerdict subset_identifiability(const CustomLikelihoodModel &model, std::span<const double> theta,
                                     const Dataset &data, const std::vector<std::size_t> &subset,
                                     const Tolerances &tol) {
    SubsetVerdict v;
    v.rank = principal_submatrix_rank(observed_hessian(model, theta, data), subset, tol);
    v.identifiable = v.rank.rank == subset.size();
    return v;
}

RankDecision hazard_hessian_rank(const MeanModel &model, std::span<const double> theta, const Observation &obs,
                                 const Tolerances &tol) {
    if (!model.hazard_form) throw InputError(model.name + " is not a hazard-form model");
    check_theta(model, theta);
    return numerical_rank(differentiate_response(model, theta, obs).hess, tol);
}

// ---------------------------------------------------------------------------

std::vector<ThetaSample> draw_samples(const ParamBox &box, const SamplerConfig &config) {
    const std::size_t p = box.size();
    for (std::size_t i = 0; i < p; ++i) {
        const ParamBound &b = box[i];
        if (!(std::isfinite(b.lower) && std::isfinite(b.upper) && b.lower < b.upper))
            throw InputError("parameter box coordinate " + std::to_string(i + 1) + " needs finite lower < upper");
        if (b.scale == Scale::Log && !(b.lower > 0.0))
            throw InputError("log-scale box coordinate " + std::to_string(i + 1) + " needs a positive lower bound");
    }

    std::vector<ThetaSample> out;
    for (const auto &theta : config.pinned) {
        if (!box_contains(box, theta)) throw InputError("pinned parameter vector lies outside the parameter box");
        out.push_back({theta, "pinned"});
    }
    if (config.include_corners && p <= 10) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
            std::vector<double> theta(p);
            for (std::size_t i = 0; i < p; ++i) theta[i] = (mask >> i) & 1U ? box[i].upper : box[i].lower;
            out.push_back({std::move(theta), "corner"});
        }
    }
    Rng rng(config.seed);
    for (std::size_t s = 0; s < config.count; ++s) {
        std::vector<double> theta(p);
        for (std::size_t i = 0; i < p; ++i) {
            const ParamBound &b = box[i];
            if (b.scale == Scale::Log)
                theta[i] = std::exp(rng.uniform(std::log(b.lower), std::log(b.upper)));
            else
                theta[i] = rng.uniform(b.lower, b.upper);
            theta[i] = std::clamp(theta[i], b.lower, b.upper);
        }
        out.push_back({std::move(theta), "random"});
    }
    return out;
}

std::string to_string(ClassificationKind kind) {
    switch (kind) {
    case ClassificationKind::Redundant: return "Redundant";
    case ClassificationKind::ConditionallyFullRankEvidence: return "ConditionallyFullRankEvidence";
    case ClassificationKind::EssentiallyFullRankEvidence: return "EssentiallyFullRankEvidence";
    }
    return "Unknown";
}

Classification classify(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                        const SamplerConfig &sampler, const Tolerances &tol, const Dataset *data) {
    model.validate_data(aux);
    Classification out;
    for (auto &sample : draw_samples(model.box, sampler)) {
        SampleRecord rec;
        rec.rank_D = redundancy_test(model, fam, sample.theta, aux, tol);
        rec.rank_I = numerical_rank(fisher_info(model, fam, sample.theta, aux), tol);
        if (data) rec.rank_H = numerical_rank(observed_hessian(model, fam, sample.theta, *data), tol);
        if (rec.rank_D.rank == model.p())
            ++out.full_rank;
        else
            ++out.deficient;
        rec.sample = std::move(sample);
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) throw InputError("sampler produced no parameter vectors");
    if (out.full_rank == 0)
        out.kind = ClassificationKind::Redundant;
    else if (out.deficient == 0)
        out.kind = ClassificationKind::EssentiallyFullRankEvidence;
    else
        out.kind = ClassificationKind::ConditionallyFullRankEvidence;
    return out;
}

Dataset turning_point_data(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                           const DataAux &aux, std::optional<std::uint64_t> rng_seed) {
    const Curvature c = curvature(model, fam, theta, aux);
    Dataset data;
    data.aux = aux;
    data.x.assign(c.mu.data(), c.mu.data() + c.mu.size());
    if (!rng_seed) return data;

    const std::size_t n = aux.size();
    Rng rng(*rng_seed);
    Eigen::VectorXd r(idx(n));
    for (std::size_t l = 0; l < n; ++l) r(idx(l)) = 0.5 * std::sqrt(fam.a() * c.b2(idx(l))) * rng.normal();

    // Score is (1/a) D Delta r; remove the component of r in the row space of D Delta.
    const Eigen::MatrixXd d = jacobian_D(model, fam, theta, aux);
    const Eigen::MatrixXd b = d * c.b2.cwiseInverse().asDiagonal();
    const SvdResult s = svd(b);
    const RankDecision rd = rank_from_singular_values(s.sigma, static_cast<std::size_t>(b.rows()),
                                                      static_cast<std::size_t>(b.cols()), Tolerances{});
    const Eigen::MatrixXd row_space = s.V.leftCols(idx(rd.rank));
    r -= row_space * (row_space.transpose() * r);
    for (std::size_t l = 0; l < n; ++l) data.x[l] += r(idx(l));
    return data;
}

Bounds bound_report(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                    const SamplerConfig &sampler, const Tolerances &tol) {
    model.validate_data(aux);
    Bounds out;
    const auto samples = draw_samples(model.box, sampler);
    std::size_t hazard_max = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto &theta = samples[s].theta;
        out.fisher_upper =
            std::max(out.fisher_upper, numerical_rank(fisher_info(model, fam, theta, aux), tol).rank);
        for (const auto &seed : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{sampler.seed + s}}) {
            const Dataset turning = turning_point_data(model, fam, theta, aux, seed);
            out.hessian_lower =
                std::max(out.hessian_lower, numerical_rank(observed_hessian(model, fam, theta, turning), tol).rank);
        }
        if (model.hazard_form)
            for (std::size_t l = 0; l < aux.size(); ++l)
                hazard_max = std::max(hazard_max, hazard_hessian_rank(model, theta, aux.at(l), tol).rank);
    }
    if (model.hazard_form) {
        out.hazard_hessian_max = hazard_max;
        out.hazard_route_exceeds_fisher = hazard_max > out.fisher_upper;
    }
    if (out.hessian_lower > out.fisher_upper) {
        std::ostringstream os;
        os << model.name << ": Hessian rank at turning points (" << out.hessian_lower
           << ") exceeds the Fisher information rank (" << out.fisher_upper << ")";
        throw ConsistencyError(os.str());
    }
    return out;
}

FactorizationCheck factorization_bound_check(const MeanModel &model, const ExpFamily &fam, const DataAux &aux,
                                             const SamplerConfig &sampler, const Tolerances &tol) {
    if (!model.factorization) throw InputError(model.name + " declares no factorization");
    FactorizationCheck out;
    out.declared = model.factorization->count;
    for (const auto &sample : draw_samples(model.box, sampler)) {
        const std::size_t r = numerical_rank(fisher_info(model, fam, sample.theta, aux), tol).rank;
        out.max_rank_seen = std::max(out.max_rank_seen, r);
        if (r > out.declared && out.passed) {
            out.passed = false;
            out.witness = sample.theta;
        }
    }
    return out;
}

double factorization_consistency(const MeanModel &model, const DataAux &aux,
                                 const std::vector<ThetaSample> &samples) {
    if (!model.factorization || !model.factorization->has_functions())
        throw InputError(model.name + " declares no factorization functions");
    const Factorization &f = *model.factorization;
    double worst = 0.0;
    for (const auto &sample : samples) {
        std::vector<SecondOrder> theta(sample.theta.begin(), sample.theta.end());
        const auto g = f.combinations(theta);
        if (g.size() != f.count) throw InputError(model.name + ": factorization returned the wrong number of combinations");
        for (std::size_t l = 0; l < aux.size(); ++l) {
            const Observation obs = aux.at(l);
            const double direct = model.response(theta, obs).value();
            const double through = f.response_from_combinations(g, obs).value();
            const double denom = std::max(std::abs(direct), std::numeric_limits<double>::min());
            worst = std::max(worst, std::abs(direct - through) / denom);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

// Gauss-Newton projection back onto {theta : mu(theta) = target}.
void project_to_level_set(const MeanModel &model, const ExpFamily &fam, std::vector<double> &theta,
                          const Eigen::VectorXd &target, const DataAux &aux, const Tolerances &tol) {
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() * target.norm();
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 20; ++iter) {
        const Eigen::VectorXd r = means(model, theta, aux) - target;
        const double norm = r.norm();
        if (norm <= floor || norm >= previous) break;
        previous = norm;
        const Eigen::MatrixXd d = jacobian_D(model, fam, theta, aux);
        const SvdResult s = svd(d);
        const RankDecision rd = rank_from_singular_values(s.sigma, static_cast<std::size_t>(d.rows()),
                                                          static_cast<std::size_t>(d.cols()), tol);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(d.rows());
        for (std::size_t k = 0; k < rd.rank; ++k)
            step -= s.U.col(idx(k)) * (s.V.col(idx(k)).dot(r) / s.sigma(idx(k)));
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += step(idx(i));
    }
}

} // namespace

RidgeTrace ridge_trace(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta0,
                       const Dataset &data, double t_max, std::size_t steps, const Tolerances &tol) {
    if (!(t_max > 0.0) || steps == 0) throw InputError("ridge trace needs t_max > 0 and steps >= 1");
    model.validate_data(data.aux);
    const Eigen::MatrixXd null0 = redundancy_directions(model, fam, theta0, data.aux, tol);
    if (null0.cols() == 0)
        throw InputError(model.name + " has full rank at the starting point; there is no redundancy direction to follow");

    const ScalarFunction kernel = likelihood_kernel(model, fam, data);
    RidgeTrace trace;
    trace.log_likelihood0 = evaluate(kernel, theta0);
    const Eigen::VectorXd target = means(model, theta0, data.aux);
    const double h = t_max / static_cast<double>(steps);

    auto to_vec = [](const Eigen::VectorXd &v) { return std::vector<double>(v.data(), v.data() + v.size()); };

    std::vector<RidgePoint> backward;
    std::vector<RidgePoint> forward;
    for (const double sign : {-1.0, 1.0}) {
        auto &branch = sign < 0.0 ? backward : forward;
        std::vector<double> theta(theta0.begin(), theta0.end());
        Eigen::VectorXd dir = sign * null0.col(0);
        for (std::size_t k = 1; k <= steps; ++k) {
            const Eigen::MatrixXd null = redundancy_directions(model, fam, theta, data.aux, tol);
            if (null.cols() == 0) {
                trace.truncated = true;
                break;
            }
            Eigen::VectorXd projected = null * (null.transpose() * dir);
            if (projected.norm() < 1e-12) projected = null.col(0);
            dir = projected.normalized();
            std::vector<double> next = theta;
            for (std::size_t i = 0; i < next.size(); ++i) next[i] += h * dir(idx(i));
            project_to_level_set(model, fam, next, target, data.aux, tol);
            if (!box_contains(model.box, next)) {
                trace.truncated = true;
                break;
            }
            theta = std::move(next);
            RidgePoint pt;
            pt.t = sign * static_cast<double>(k) * h;
            pt.theta = theta;
            pt.drift = std::abs(evaluate(kernel, theta) - trace.log_likelihood0);
            pt.direction = to_vec(dir);
            branch.push_back(std::move(pt));
        }
    }

    std::reverse(backward.begin(), backward.end());
    trace.points = std::move(backward);
    RidgePoint origin;
    origin.theta.assign(theta0.begin(), theta0.end());
    origin.direction = to_vec(null0.col(0));
    trace.points.push_back(std::move(origin));
    for (auto &pt : forward) trace.points.push_back(std::move(pt));
    for (const auto &pt : trace.points) trace.max_drift = std::max(trace.max_drift, pt.drift);
    return trace;
}

Eigen::VectorXd irls_step(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                          const Dataset &data, std::optional<Eigen::VectorXd> variances, const Tolerances &tol) {
    const Eigen::MatrixXd design = jacobian_D(model, fam, theta, data.aux).transpose();
    const Curvature c = curvature(model, fam, theta, data.aux);
    const Eigen::VectorXd v = variances ? *variances : Eigen::VectorXd(fam.a() * c.b2);
    if (v.size() != design.rows()) throw InputError("irls_step: one variance per observation is required");
    if ((v.array() <= 0.0).any() || !v.allFinite()) throw InputError("irls_step: variances must be positive");

    const Eigen::VectorXd w_sqrt = v.cwiseSqrt().cwiseInverse();
    const Eigen::Map<const Eigen::VectorXd> x(data.x.data(), idx(data.x.size()));
    const Eigen::MatrixXd a = w_sqrt.asDiagonal() * design;
    const Eigen::VectorXd rhs = w_sqrt.cwiseProduct(x - c.mu);

    const RankDecision rd = numerical_rank(a, tol);
    if (rd.rank < model.p()) {
        std::ostringstream os;
        os << model.name << ": IRLS normal matrix H^T W H has rank " << rd.rank << " < p = " << model.p()
           << "; the weighted least-squares step is not unique";
        throw SingularityError(os.str(), rd.rank, model.p());
    }
    const Eigen::VectorXd step = a.colPivHouseholderQr().solve(rhs);
    const Eigen::MatrixXd normal = a.transpose() * a;
    const Eigen::VectorXd normal_rhs = a.transpose() * rhs;
    const double residual = (normal * step - normal_rhs).norm();
    const double a_norm = a.norm();
    if (residual > 1e-10 * a_norm * (a_norm * step.norm() + rhs.norm()))
        throw NumericalError(model.name + ": IRLS normal equations solved inaccurately");
    return step;
}

namespace {

Eigen::VectorXd solve_newton(const std::string &name, const Eigen::MatrixXd &h, const Eigen::VectorXd &g,
                             const Tolerances &tol) {
    const RankDecision rd = numerical_rank(h, tol);
    const auto p = static_cast<std::size_t>(h.rows());
    if (rd.rank < p) {
        std::ostringstream os;
        os << name << ": observed Hessian has rank " << rd.rank << " < p = " << p << "; Newton step undefined";
        throw SingularityError(os.str(), rd.rank, p);
    }
    return h.colPivHouseholderQr().solve(-g);
}

} // namespace

Eigen::VectorXd newton_step(const MeanModel &model, const ExpFamily &fam, std::span<const double> theta,
                            const Dataset &data, const Tolerances &tol) {
    const Derivatives d = differentiate(likelihood_kernel(model, fam, data), theta);
    return solve_newton(model.name, d.hess, d.grad, tol);
}

Eigen::VectorXd newton_step(const CustomLikelihoodModel &model, std::span<const double> theta,
                            const Dataset &data, const Tolerances &tol) {
    const ScalarFunction f = [&model, &data](std::span<const SecondOrder> t) { return model.log_likelihood(t, data); };
    const Derivatives d = differentiate(f, theta);
    return solve_newton(model.name, d.hess, d.grad, tol);
}

bool grid_unique_maximum(const CustomLikelihoodModel &model, std::span<const double> center, const Dataset &data,
                         double radius, std::size_t points) {
    const std::size_t p = center.size();
    if (points < 2) throw InputError("grid needs at least 2 points per axis");
    double total = 1.0;
    for (std::size_t i = 0; i < p; ++i) total *= static_cast<double>(points);
    if (total > 2e7) throw InputError("grid too large for exhaustive maximum check");

    std::vector<SecondOrder> arg(p);
    auto eval = [&](const std::vector<double> &theta) {
        for (std::size_t i = 0; i < p; ++i) arg[i] = SecondOrder(theta[i]);
        return model.log_likelihood(arg, data).value();
    };
    const std::vector<double> c(center.begin(), center.end());
    const double best = eval(c);
    std::vector<std::size_t> counter(p, 0);
    std::vector<double> theta(p);
    const double step = 2.0 * radius / static_cast<double>(points - 1);
    while (true) {
        bool at_center = true;
        for (std::size_t i = 0; i < p; ++i) {
            theta[i] = center[i] - radius + step * static_cast<double>(counter[i]);
            if (2 * counter[i] != points - 1) at_center = false;
        }
        if (!at_center && !(eval(theta) < best)) return false;
        std::size_t i = 0;
        while (i < p && ++counter[i] == points) counter[i++] = 0;
        if (i == p) break;
    }
    return true;
}

} // namespace identrank
