#pragma once

// Hand-rolled generators and small oracles shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "identrank/model.hpp"
#include "identrank/rng.hpp"

namespace identrank::testing {

inline Eigen::MatrixXd random_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
    return m;
}

// Random orthogonal matrix from the QR factor of a Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(Rng &rng, Eigen::Index n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, n, n));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// m x n matrix of exact rank r with singular values spread over [1, 10].
inline Eigen::MatrixXd random_rank_matrix(Rng &rng, Eigen::Index m, Eigen::Index n, Eigen::Index r) {
    const Eigen::MatrixXd u = random_orthogonal(rng, m).leftCols(r);
    const Eigen::MatrixXd v = random_orthogonal(rng, n).leftCols(r);
    Eigen::VectorXd s(r);
    for (Eigen::Index i = 0; i < r; ++i) s(i) = rng.uniform(1.0, 10.0);
    return u * s.asDiagonal() * v.transpose();
}

// Well-conditioned invertible matrix: orthogonal times diag in [0.5, 2].
inline Eigen::MatrixXd random_well_conditioned(Rng &rng, Eigen::Index n) {
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = rng.uniform(0.5, 2.0);
    return random_orthogonal(rng, n) * s.asDiagonal() * random_orthogonal(rng, n);
}

inline std::vector<double> random_in_box(Rng &rng, const ParamBox &box) {
    std::vector<double> theta;
    for (const auto &b : box) {
        if (b.scale == Scale::Log)
            theta.push_back(std::exp(rng.uniform(std::log(b.lower), std::log(b.upper))));
        else
            theta.push_back(rng.uniform(b.lower, b.upper));
    }
    return theta;
}

inline double max_rel_diff(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
    const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    if (scale == 0.0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Ages evenly spaced on [first, last].
inline std::vector<double> linspace(double first, double last, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? first : first + (last - first) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline DataAux age_data(const std::vector<double> &ages, double z) {
    DataAux aux;
    for (double t : ages) {
        aux.z.push_back(z);
        aux.y.push_back({t});
    }
    return aux;
}

inline DataAux design_rows(Eigen::Index n) {
    DataAux aux;
    for (Eigen::Index l = 0; l < n; ++l) {
        aux.z.push_back(1.0);
        aux.y.push_back({});
    }
    return aux;
}

} // namespace identrank::testing
