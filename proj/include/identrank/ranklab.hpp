#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace identrank {

// Singular values count as nonzero when sigma_i > tol_rel * sigma_1 + tol_abs.
struct Tolerances {
    double tol_rel = 1e-8;
    double tol_abs = 1e-12;
};

// Thin SVD M = U diag(sigma) V^T with k = min(rows, cols) columns in U and V,
// singular values in descending order.
struct SvdResult {
    Eigen::MatrixXd U;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd V;
};

struct RankDecision {
    std::size_t rank = 0;
    std::vector<double> singular_values;
    double tol_abs = 0.0;
    double tol_rel = 0.0;
    double threshold_used = 0.0;
    // sigma_{rank+1} / sigma_rank, or 0 when the rank is full or zero.
    double gap_ratio = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    bool full_column_rank() const { return rank == cols; }
};

// One-sided Jacobi SVD. Tall matrices with rows > 2*cols are first reduced
// to their R factor by Householder QR.
SvdResult svd(const Eigen::MatrixXd &m);

RankDecision rank_from_singular_values(const Eigen::VectorXd &sigma, std::size_t rows,
                                       std::size_t cols, const Tolerances &tol);

RankDecision numerical_rank(const Eigen::MatrixXd &m, const Tolerances &tol = {});

// Orthonormal bases, one vector per column.
Eigen::MatrixXd right_null_space(const Eigen::MatrixXd &m, const Tolerances &tol = {});
Eigen::MatrixXd left_null_space(const Eigen::MatrixXd &m, const Tolerances &tol = {});

// Rank of H restricted to rows and columns `subset` (0-based, distinct).
RankDecision principal_submatrix_rank(const Eigen::MatrixXd &h, const std::vector<std::size_t> &subset,
                                      const Tolerances &tol = {});

struct SubsetResult {
    std::size_t k = 0;
    std::vector<std::size_t> subset; // 0-based, ascending
    // "exhaustive" (guaranteed maximal) or "greedy+augmentation" (evidence only).
    std::string method;
};

// Largest subset whose principal submatrix has full rank; ties go to the
// lexicographically smallest subset. Exhaustive for p <= 12.
SubsetResult max_rank_subset(const Eigen::MatrixXd &h, const Tolerances &tol = {});

inline constexpr std::size_t kExhaustiveSubsetLimit = 12;

} // namespace identrank
