#include "identrank/modelzoo.hpp"

#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "identrank/errors.hpp"

namespace identrank {

namespace {

std::vector<std::string> indexed_names(const std::string &stem, std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 1; i <= n; ++i) names.push_back(stem + std::to_string(i));
    return names;
}

SecondOrder linear_predictor(const Eigen::MatrixXd &design, std::span<const SecondOrder> theta,
                             std::size_t row) {
    SecondOrder eta(0.0);
    for (std::size_t j = 0; j < theta.size(); ++j)
        eta += design(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) * theta[j];
    return eta;
}

std::function<void(const DataAux &)> rows_must_match(const std::string &model, Eigen::Index rows) {
    return [model, rows](const DataAux &aux) {
        if (static_cast<Eigen::Index>(aux.size()) != rows) {
            std::ostringstream os;
            os << model << ": dataset has " << aux.size() << " observations but the design matrix has "
               << rows << " rows";
            throw InputError(os.str());
        }
    };
}

std::function<void(const DataAux &)> needs_age(const std::string &model) {
    return [model](const DataAux &aux) {
        for (std::size_t l = 0; l < aux.size(); ++l)
            if (aux.y[l].empty() || !(aux.y[l][0] > 0.0))
                throw InputError(model + ": covariate y_1 must be a positive age (observation " +
                                 std::to_string(l + 1) + ")");
    };
}

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
}

void check_design(const Eigen::MatrixXd &design, MeanModel &model) {
    if (design.rows() == 0 || design.cols() == 0) throw InputError(model.name + ": empty design matrix");
    if (!design.allFinite()) throw InputError(model.name + ": design matrix has non-finite entries");
    for (Eigen::Index j = 0; j < design.cols(); ++j)
        if (design.col(j).cwiseAbs().maxCoeff() == 0.0)
            model.warnings.push_back("design column " + std::to_string(j + 1) +
                                     " is identically zero; its parameter cannot affect the mean");
}

} // namespace

namespace zoo {

MeanModel poisson_glm(const Eigen::MatrixXd &design) {
    MeanModel m;
    m.name = "poisson_glm";
    m.param_names = indexed_names("beta_", static_cast<std::size_t>(design.cols()));
    m.box.assign(m.p(), ParamBound{-10.0, 10.0, Scale::Linear});
    check_design(design, m);
    m.response = [design](std::span<const SecondOrder> theta, const Observation &obs) {
        return exp(linear_predictor(design, theta, obs.index));
    };
    m.check_data = rows_must_match(m.name, design.rows());
    return m;
}

MeanModel linear_gaussian(const Eigen::MatrixXd &design) {
    MeanModel m;
    m.name = "linear_gaussian";
    m.param_names = indexed_names("beta_", static_cast<std::size_t>(design.cols()));
    m.box.assign(m.p(), ParamBound{-10.0, 10.0, Scale::Linear});
    check_design(design, m);
    m.response = [design](std::span<const SecondOrder> theta, const Observation &obs) {
        return linear_predictor(design, theta, obs.index);
    };
    m.check_data = rows_must_match(m.name, design.rows());
    return m;
}

MeanModel armitage_doll(std::size_t stages) {
    if (stages < 2) throw InputError("armitage_doll needs at least 2 stages");
    MeanModel m;
    m.name = "armitage_doll";
    m.param_names = indexed_names("rate_", stages);
    m.box.assign(stages, ParamBound{1e-3, 1e1, Scale::Log});
    m.hazard_form = true;
    const double norm = factorial(stages - 1);
    const double power = static_cast<double>(stages - 1);
    auto age_term = [norm, power](const Observation &obs) { return std::pow(obs.y[0], power) / norm; };
    m.response = [age_term](std::span<const SecondOrder> theta, const Observation &obs) {
        SecondOrder product(1.0);
        for (const auto &t : theta) product *= t;
        return product * age_term(obs);
    };
    Factorization f;
    f.count = 1;
    f.combinations = [](std::span<const SecondOrder> theta) {
        SecondOrder product(1.0);
        for (const auto &t : theta) product *= t;
        return std::vector<SecondOrder>{product};
    };
    f.response_from_combinations = [age_term](std::span<const SecondOrder> g, const Observation &obs) {
        return g[0] * age_term(obs);
    };
    m.factorization = std::move(f);
    m.check_data = needs_age(m.name);
    return m;
}

MeanModel two_mutation() {
    MeanModel m;
    m.name = "two_mutation";
    m.param_names = {"Xnu", "alpha", "beta", "mu"};
    m.box = {ParamBound{0.5, 2.0, Scale::Log}, ParamBound{0.3, 1.0, Scale::Log},
             ParamBound{0.1, 0.5, Scale::Log}, ParamBound{0.05, 0.2, Scale::Log}};
    m.hazard_form = true;
    m.response = [](std::span<const SecondOrder> theta, const Observation &obs) {
        return two_mutation_hazard(theta[0], theta[1], theta[2], theta[3], obs.y[0]);
    };
    Factorization f;
    f.count = 3;
    f.combinations = [](std::span<const SecondOrder> theta) {
        return std::vector<SecondOrder>{theta[0] * theta[3], theta[1] - theta[2] - theta[3], theta[1] * theta[3]};
    };
    f.response_from_combinations = [](std::span<const SecondOrder> g, const Observation &obs) {
        return two_mutation_hazard_from_combinations(g[0], g[1], g[2], obs.y[0]);
    };
    m.factorization = std::move(f);
    m.check_data = needs_age(m.name);
    return m;
}

MeanModel cond_demo() {
    MeanModel m;
    m.name = "cond_demo";
    m.param_names = {"theta_1", "theta_2"};
    m.box = {ParamBound{-1.0, 1.0, Scale::Linear}, ParamBound{-1.0, 1.0, Scale::Linear}};
    m.response = [](std::span<const SecondOrder> theta, const Observation &obs) {
        return theta[0] * obs.y[0] + theta[0] * theta[1] * obs.y[1];
    };
    m.check_data = [](const DataAux &aux) {
        if (aux.y.front().size() < 2) throw InputError("cond_demo needs two covariate columns y_1, y_2");
    };
    return m;
}

CustomLikelihoodModel quartic_counterexample(std::size_t p) {
    if (p < 1) throw InputError("quartic model needs p >= 1");
    CustomLikelihoodModel m;
    m.name = "quartic";
    m.param_names = indexed_names("theta_", p);
    m.box.assign(p, ParamBound{-10.0, 10.0, Scale::Linear});
    m.log_likelihood = [p](std::span<const SecondOrder> theta, const Dataset &data) {
        if (data.x.size() != p)
            throw InputError("quartic model needs exactly one observation per parameter");
        SecondOrder total(0.0);
        for (std::size_t i = 0; i < p; ++i) total -= pow(data.x[i] - theta[i], 4.0);
        return total;
    };
    return m;
}

} // namespace zoo

double two_mutation_hazard_ode(const TwoMutationParams &theta, double t) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    const double s = theta.alpha - theta.beta - theta.mu;
    auto rhs = [&](const State &u, State &du, double) {
        du[0] = theta.mu + s * u[0] - theta.alpha * u[0] * u[0];
    };
    State u{0.0};
    auto stepper = odeint::make_controlled(1e-22, 1e-13, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, rhs, u, 0.0, t, std::min(1e-3, t / 16.0));
    return theta.xnu * u[0];
}

void verify_two_mutation_hazard(const TwoMutationParams &theta, double t, double rel_tol) {
    const double closed = two_mutation_hazard(theta.xnu, theta.alpha, theta.beta, theta.mu, t);
    const double oracle = two_mutation_hazard_ode(theta, t);
    if (std::abs(closed - oracle) > rel_tol * std::abs(oracle)) {
        std::ostringstream os;
        os.precision(17);
        os << "two-mutation hazard: closed form " << closed << " vs ODE " << oracle << " at t=" << t;
        throw ConsistencyError(os.str());
    }
}

} // namespace identrank
