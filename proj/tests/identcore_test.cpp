#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "identrank/errors.hpp"
#include "identrank/identcore.hpp"
#include "identrank/modelzoo.hpp"
#include "support.hpp"

namespace identrank {
namespace {

using testing::max_rel_diff;
using testing::random_in_box;

DataAux ad_aux() { return testing::age_data(testing::linspace(1.0, 3.0, 12), 1e3); }
DataAux tm_aux() { return testing::age_data(testing::linspace(0.25, 10.0, 40), 1e4); }

Dataset poisson_draws(const MeanModel &m, std::span<const double> theta, const DataAux &aux, Rng &rng) {
    // Knuth sampling is fine for the small means used here.
    Dataset d;
    d.aux = aux;
    const Eigen::VectorXd mu = means(m, theta, aux);
    for (Eigen::Index l = 0; l < mu.size(); ++l) {
        if (mu(l) > 200) {
            d.x.push_back(std::max(0.0, std::round(mu(l) + std::sqrt(mu(l)) * rng.normal())));
            continue;
        }
        const double limit = std::exp(-mu(l));
        double prod = rng.uniform(), k = 0;
        while (prod > limit) {
            prod *= rng.uniform();
            ++k;
        }
        d.x.push_back(k);
    }
    return d;
}

TEST(IdentCoreTest, PoissonGlmFisherMatchesDesignForm) {
    Rng rng(1);
    const Eigen::MatrixXd a = testing::random_matrix(rng, 20, 3, 0.4);
    const auto m = zoo::poisson_glm(a);
    const auto aux = testing::design_rows(20);
    const std::vector<double> theta{0.5, -0.2, 0.3};
    const Eigen::Map<const Eigen::VectorXd> th(theta.data(), 3);
    const Eigen::VectorXd mu = (a * th).array().exp();
    const Eigen::MatrixXd oracle = a.transpose() * mu.asDiagonal() * a;
    const auto fam = ExpFamily::poisson();
    EXPECT_LE(max_rel_diff(fisher_info(m, fam, theta, aux), oracle), 1e-13);
    EXPECT_LE(max_rel_diff(fisher_info_glm(m, fam, theta, aux), oracle), 1e-13);
    // Canonical link: observed Hessian is -I whatever the data.
    Dataset d = poisson_draws(m, theta, aux, rng);
    EXPECT_LE(max_rel_diff(-observed_hessian(m, fam, theta, d), oracle), 1e-12);
}

TEST(IdentCoreTest, LinearGaussianFisher) {
    Rng rng(2);
    const Eigen::MatrixXd a = testing::random_matrix(rng, 15, 4);
    const auto m = zoo::linear_gaussian(a);
    const auto fam = ExpFamily::normal(0.3);
    const std::vector<double> theta{0.1, 0.2, 0.3, 0.4};
    const Eigen::MatrixXd oracle = a.transpose() * a / 0.3;
    EXPECT_LE(max_rel_diff(fisher_info(m, fam, theta, testing::design_rows(15)), oracle), 1e-13);
}

TEST(IdentCoreTest, ScoreClosedFormMatchesAd) {
    Rng rng(3);
    const auto fam = ExpFamily::poisson();
    for (const auto &m : {zoo::armitage_doll(3), zoo::two_mutation()}) {
        const auto aux = m.name == "two_mutation" ? tm_aux() : ad_aux();
        for (int i = 0; i < 5; ++i) {
            const auto theta = random_in_box(rng, m.box);
            const Dataset d = poisson_draws(m, theta, aux, rng);
            auto off = theta;
            for (auto &v : off) v *= 1.05;
            const Eigen::VectorXd ad = score(m, fam, off, d);
            const Eigen::VectorXd cf = score_closed_form(m, fam, off, d);
            EXPECT_LE(max_rel_diff(ad, cf), 1e-10) << m.name;
        }
    }
}

TEST(IdentCoreTest, HazardHessianAndFisherForms) {
    Rng rng(4);
    const auto fam = ExpFamily::poisson();
    for (const auto &m : {zoo::armitage_doll(4), zoo::two_mutation()}) {
        const auto aux = m.name == "two_mutation" ? tm_aux() : ad_aux();
        for (int i = 0; i < 5; ++i) {
            const auto theta = random_in_box(rng, m.box);
            const Dataset d = poisson_draws(m, theta, aux, rng);
            EXPECT_LE(max_rel_diff(observed_hessian(m, fam, theta, d), observed_hessian_hazard_form(m, fam, theta, d)),
                      1e-10);
            const Eigen::MatrixXd fi = fisher_info(m, fam, theta, aux);
            EXPECT_LE(max_rel_diff(fi, fisher_info_hazard_form(m, fam, theta, aux)), 1e-12) << m.name;
            EXPECT_LE(max_rel_diff(fi, fisher_info_glm(m, fam, theta, aux)), 1e-12) << m.name;
        }
    }
}

TEST(IdentCoreTest, ObservedHessianMatchesScoreDifferences) {
    // Oracle: central differences of the closed-form score.
    Rng rng(5);
    const auto m = zoo::two_mutation();
    const auto aux = tm_aux();
    const auto fam = ExpFamily::poisson();
    const auto theta = random_in_box(rng, m.box);
    const Dataset d = poisson_draws(m, theta, aux, rng);
    Eigen::MatrixXd fd(4, 4);
    for (int j = 0; j < 4; ++j) {
        const double h = 1e-6 * theta[static_cast<std::size_t>(j)];
        auto up = theta, dn = theta;
        up[static_cast<std::size_t>(j)] += h;
        dn[static_cast<std::size_t>(j)] -= h;
        fd.col(j) = (score_closed_form(m, fam, up, d) - score_closed_form(m, fam, dn, d)) / (2 * h);
    }
    EXPECT_LE(max_rel_diff(observed_hessian(m, fam, theta, d), fd), 1e-6);
}

TEST(IdentCoreTest, FisherIsExpectedNegativeHessianForHazardModel) {
    // Non-canonical link: -H depends on x, and its mean over Poisson draws
    // converges to I.
    const auto m = zoo::two_mutation();
    const auto fam = ExpFamily::poisson();
    const auto aux = testing::age_data(testing::linspace(0.5, 10.0, 10), 50.0);
    const std::vector<double> theta{1.0, 0.5, 0.2, 0.1};
    const Eigen::VectorXd mu = means(m, theta, aux);
    const Eigen::MatrixXd info = fisher_info(m, fam, theta, aux);
    std::mt19937_64 gen(77);
    const int reps = 1000;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4), sum_sq = Eigen::MatrixXd::Zero(4, 4);
    double spread = 0.0;
    for (int r = 0; r < reps; ++r) {
        Dataset d;
        d.aux = aux;
        for (Eigen::Index l = 0; l < mu.size(); ++l)
            d.x.push_back(static_cast<double>(std::poisson_distribution<long>(mu(l))(gen)));
        const Eigen::MatrixXd neg_h = -observed_hessian(m, fam, theta, d);
        spread = std::max(spread, max_rel_diff(neg_h, info));
        sum += neg_h;
        sum_sq += neg_h.cwiseProduct(neg_h);
    }
    const Eigen::MatrixXd mean = sum / reps;
    const Eigen::MatrixXd se = ((sum_sq / reps - mean.cwiseProduct(mean)).cwiseMax(0.0) / (reps - 1.0)).cwiseSqrt();
    int within = 0;
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            // Some entries do not depend on x; their SE is zero and only
            // round-off separates them from I.
            within += std::abs(mean(i, j) - info(i, j)) <= 3.0 * se(i, j) + 1e-12 * info.cwiseAbs().maxCoeff();
    EXPECT_GT(spread, 1e-3); // the Hessian really varies with the data
    EXPECT_GE(within, 15);
}

TEST(IdentCoreTest, ArmitageDollIsRedundant) {
    const auto m = zoo::armitage_doll(4);
    const auto fam = ExpFamily::poisson();
    const auto aux = ad_aux();
    SamplerConfig cfg;
    const auto cls = classify(m, fam, aux, cfg);
    EXPECT_EQ(cls.kind, ClassificationKind::Redundant);
    for (const auto &rec : cls.records) {
        EXPECT_EQ(rec.rank_D.rank, 1u);
        EXPECT_EQ(rec.rank_I.rank, 1u);
        const auto dirs = redundancy_directions(m, fam, rec.sample.theta, aux);
        ASSERT_EQ(dirs.cols(), 3);
        const Eigen::MatrixXd d = jacobian_D(m, fam, rec.sample.theta, aux);
        EXPECT_LE((dirs.transpose() * d).cwiseAbs().maxCoeff(), 1e-10 * d.cwiseAbs().maxCoeff());
    }
}

TEST(IdentCoreTest, CondDemoIsConditionallyFullRank) {
    const auto m = zoo::cond_demo();
    const auto fam = ExpFamily::normal(1.0);
    DataAux aux;
    for (int l = 0; l < 6; ++l) {
        aux.z.push_back(1.0);
        aux.y.push_back({1.0 + l, 0.5 * l - 1.0});
    }
    SamplerConfig cfg;
    cfg.count = 20;
    cfg.pinned = {{0.0, 0.3}};
    const auto cls = classify(m, fam, aux, cfg);
    EXPECT_EQ(cls.kind, ClassificationKind::ConditionallyFullRankEvidence);
    EXPECT_EQ(cls.records.front().rank_D.rank, 1u);
    EXPECT_EQ(cls.deficient, 1u);
    cfg.pinned.clear();
    EXPECT_EQ(classify(m, fam, aux, cfg).kind, ClassificationKind::EssentiallyFullRankEvidence);
}

TEST(IdentCoreTest, SamplerIsDeterministicAndInsideBox) {
    const auto m = zoo::two_mutation();
    SamplerConfig cfg;
    cfg.count = 50;
    const auto a = draw_samples(m.box, cfg);
    const auto b = draw_samples(m.box, cfg);
    ASSERT_EQ(a.size(), 16u + 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].theta, b[i].theta);
        EXPECT_TRUE(box_contains(m.box, a[i].theta));
    }
    EXPECT_EQ(a.front().source, "corner");
    EXPECT_EQ(a.back().source, "random");
    cfg.seed += 1;
    EXPECT_NE(draw_samples(m.box, cfg).back().theta, a.back().theta);
    cfg.pinned = {{100.0, 0.5, 0.2, 0.1}};
    EXPECT_THROW(draw_samples(m.box, cfg), InputError);
}

TEST(IdentCoreTest, TurningPointDataHasZeroScore) {
    const auto fam = ExpFamily::poisson();
    for (const auto &m : {zoo::armitage_doll(4), zoo::two_mutation()}) {
        const auto aux = m.name == "two_mutation" ? tm_aux() : ad_aux();
        SamplerConfig cfg;
        cfg.count = 5;
        cfg.include_corners = false;
        for (const auto &s : draw_samples(m.box, cfg)) {
            const Dataset d = turning_point_data(m, fam, s.theta, aux, 99);
            const Eigen::VectorXd u = score_closed_form(m, fam, s.theta, d);
            const Eigen::MatrixXd fi = fisher_info(m, fam, s.theta, aux);
            EXPECT_LE(u.norm(), 1e-8 * std::sqrt(fi.norm())) << m.name;
        }
    }
}

TEST(IdentCoreTest, Bounds) {
    const auto fam = ExpFamily::poisson();
    SamplerConfig cfg;
    cfg.count = 8;
    const auto ad = bound_report(zoo::armitage_doll(4), fam, ad_aux(), cfg);
    EXPECT_EQ(ad.hessian_lower, 1u);
    EXPECT_EQ(ad.fisher_upper, 1u);
    ASSERT_TRUE(ad.hazard_hessian_max.has_value());
    const auto tm = bound_report(zoo::two_mutation(), fam, tm_aux(), cfg);
    EXPECT_EQ(tm.hessian_lower, 3u);
    EXPECT_EQ(tm.fisher_upper, 3u);
}

TEST(IdentCoreTest, FactorizationBound) {
    const auto fam = ExpFamily::poisson();
    SamplerConfig cfg;
    cfg.count = 10;
    const auto good = factorization_bound_check(zoo::armitage_doll(4), fam, ad_aux(), cfg);
    EXPECT_TRUE(good.passed);
    EXPECT_EQ(good.max_rank_seen, 1u);
    EXPECT_FALSE(good.witness.has_value());

    auto wrong = zoo::two_mutation();
    wrong.factorization->count = 2;
    const auto bad = factorization_bound_check(wrong, fam, tm_aux(), cfg);
    EXPECT_FALSE(bad.passed);
    ASSERT_TRUE(bad.witness.has_value());
    EXPECT_EQ(bad.max_rank_seen, 3u);
}

TEST(IdentCoreTest, RidgeKeepsLikelihoodFlat) {
    const auto m = zoo::armitage_doll(4);
    const auto fam = ExpFamily::poisson();
    const std::vector<double> theta0{0.5, 0.8, 1.2, 0.9};
    const Dataset d = turning_point_data(m, fam, theta0, ad_aux());
    const auto trace = ridge_trace(m, fam, theta0, d, 0.2, 20);
    ASSERT_EQ(trace.points.size(), 41u);
    EXPECT_LT(trace.max_drift, 1e-9);
    EXPECT_DOUBLE_EQ(trace.points.front().t, -0.2);
    EXPECT_DOUBLE_EQ(trace.points.back().t, 0.2);
    // The product of rates is what the data see.
    const double prod0 = 0.5 * 0.8 * 1.2 * 0.9;
    for (const auto &pt : trace.points) {
        double prod = 1.0;
        for (double v : pt.theta) prod *= v;
        EXPECT_NEAR(prod, prod0, 1e-10 * prod0);
    }
    EXPECT_GT(std::abs(trace.points.front().theta[0] - theta0[0]), 1e-3);
}

TEST(IdentCoreTest, RidgeRejectsFullRankModels) {
    Rng rng(6);
    const auto m = zoo::poisson_glm(testing::random_matrix(rng, 10, 2, 0.3));
    Dataset d = turning_point_data(m, ExpFamily::poisson(), std::vector<double>{0.1, 0.1}, testing::design_rows(10));
    EXPECT_THROW(ridge_trace(m, ExpFamily::poisson(), std::vector<double>{0.1, 0.1}, d, 0.1, 5), InputError);
}

TEST(IdentCoreTest, IrlsIsExactForLinearGaussian) {
    Rng rng(7);
    const Eigen::MatrixXd a = testing::random_matrix(rng, 30, 3);
    const auto m = zoo::linear_gaussian(a);
    const auto fam = ExpFamily::normal(1.0);
    Dataset d;
    d.aux = testing::design_rows(30);
    for (int l = 0; l < 30; ++l) d.x.push_back(rng.normal() * 2.0 + 1.0);
    const Eigen::Map<const Eigen::VectorXd> x(d.x.data(), 30);
    const Eigen::VectorXd ols = (a.transpose() * a).ldlt().solve(a.transpose() * x);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> start{rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)};
        const Eigen::VectorXd step = irls_step(m, fam, start, d);
        const Eigen::Map<const Eigen::VectorXd> s(start.data(), 3);
        EXPECT_LE((s + step - ols).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(IdentCoreTest, IrlsIteratesToPoissonMle) {
    // Oracle: the MLE solves the score equation; check it at convergence.
    Rng rng(8);
    const Eigen::MatrixXd a = testing::random_matrix(rng, 40, 3, 0.5);
    const auto m = zoo::poisson_glm(a);
    const auto fam = ExpFamily::poisson();
    const std::vector<double> truth{1.0, 0.5, -0.5};
    const Dataset d = poisson_draws(m, truth, testing::design_rows(40), rng);
    std::vector<double> theta{0.0, 0.0, 0.0};
    for (int it = 0; it < 30; ++it) {
        const Eigen::VectorXd step = irls_step(m, fam, theta, d);
        for (int j = 0; j < 3; ++j) theta[static_cast<std::size_t>(j)] += step(j);
        if (step.norm() < 1e-13) break;
    }
    EXPECT_LE(score(m, fam, theta, d).norm(), 1e-8);
    // Canonical link: Newton and IRLS coincide.
    EXPECT_LE(newton_step(m, fam, theta, d).norm(), 1e-10);
}

TEST(IdentCoreTest, NewtonConvergesQuadratically) {
    Rng rng(9);
    const Eigen::MatrixXd a = testing::random_matrix(rng, 40, 2, 0.5);
    const auto m = zoo::poisson_glm(a);
    const auto fam = ExpFamily::poisson();
    const Dataset d = poisson_draws(m, std::vector<double>{1.5, 0.5}, testing::design_rows(40), rng);
    std::vector<double> theta{1.2, 0.3};
    std::vector<double> norms;
    for (int it = 0; it < 6; ++it) {
        const Eigen::VectorXd step = newton_step(m, fam, theta, d);
        norms.push_back(step.norm());
        theta[0] += step(0);
        theta[1] += step(1);
    }
    // ||step_{k+1}|| <= C ||step_k||^2 while above round-off.
    for (std::size_t k = 0; k + 1 < norms.size() && norms[k + 1] > 1e-12; ++k)
        EXPECT_LE(norms[k + 1], 10.0 * norms[k] * norms[k]) << k;
}

TEST(IdentCoreTest, SingularSteps) {
    const auto m = zoo::armitage_doll(4);
    const auto fam = ExpFamily::poisson();
    const std::vector<double> theta{0.5, 0.8, 1.2, 0.9};
    const Dataset d = turning_point_data(m, fam, theta, ad_aux(), 3);
    try {
        irls_step(m, fam, theta, d);
        FAIL();
    } catch (const SingularityError &e) {
        EXPECT_EQ(e.rank(), 1u);
        EXPECT_EQ(e.expected(), 4u);
    }
    EXPECT_THROW(newton_step(m, fam, theta, d), SingularityError);
}

TEST(IdentCoreTest, QuarticHasRankZeroHessianAndUniqueMaximum) {
    const auto m = zoo::quartic_counterexample(2);
    Dataset d;
    d.aux = testing::design_rows(2);
    d.x = {0.3, -1.1};
    const Eigen::MatrixXd h = observed_hessian(m, d.x, d);
    EXPECT_EQ(h.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(numerical_rank(h).rank, 0u);
    EXPECT_TRUE(grid_unique_maximum(m, d.x, d));
    EXPECT_THROW(newton_step(m, d.x, d), SingularityError);
    // Off the maximum the Hessian is full rank.
    const std::vector<double> off{0.0, 0.0};
    EXPECT_EQ(numerical_rank(observed_hessian(m, off, d)).rank, 2u);
    EXPECT_FALSE(grid_unique_maximum(m, off, d));
}

TEST(IdentCoreTest, SubsetIdentifiability) {
    const auto m = zoo::armitage_doll(3);
    const auto fam = ExpFamily::poisson();
    const std::vector<double> theta{0.5, 0.8, 1.2};
    const Dataset d = turning_point_data(m, fam, theta, ad_aux());
    EXPECT_TRUE(subset_identifiability(m, fam, theta, d, {1}).identifiable);
    EXPECT_FALSE(subset_identifiability(m, fam, theta, d, {0, 2}).identifiable);
}

} // namespace
} // namespace identrank
