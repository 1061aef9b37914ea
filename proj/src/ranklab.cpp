#include "identrank/ranklab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "identrank/errors.hpp"

namespace identrank {

namespace {

void require_finite(const Eigen::MatrixXd &m) {
    if (!m.allFinite()) throw InputError("matrix has non-finite entries");
}

// Append orthonormal columns to q (whose columns are already orthonormal)
// until it has `target` columns. Candidates are the standard basis vectors,
// taken in order of largest residual after two Gram-Schmidt passes.
Eigen::MatrixXd complete_basis(const Eigen::MatrixXd &q, Eigen::Index target) {
    const Eigen::Index n = q.rows();
    Eigen::MatrixXd out(n, target);
    out.leftCols(q.cols()) = q;
    Eigen::Index have = q.cols();
    while (have < target) {
        Eigen::VectorXd best;
        double best_norm = -1.0;
        for (Eigen::Index e = 0; e < n; ++e) {
            Eigen::VectorXd v = Eigen::VectorXd::Unit(n, e);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index c = 0; c < have; ++c) v -= out.col(c).dot(v) * out.col(c);
            const double norm = v.norm();
            if (norm > best_norm) {
                best_norm = norm;
                best = v;
            }
        }
        out.col(have++) = best / best_norm;
    }
    return out;
}

// Hestenes one-sided Jacobi on a matrix with rows >= cols.
SvdResult jacobi_tall(Eigen::MatrixXd a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double eps = std::numeric_limits<double>::epsilon();

    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double alpha = a.col(i).squaredNorm();
                const double beta = a.col(j).squaredNorm();
                const double gamma = a.col(i).dot(a.col(j));
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index r = 0; r < m; ++r) {
                    const double ai = a(r, i);
                    const double aj = a(r, j);
                    a(r, i) = c * ai - s * aj;
                    a(r, j) = s * ai + c * aj;
                }
                for (Eigen::Index r = 0; r < n; ++r) {
                    const double vi = v(r, i);
                    const double vj = v(r, j);
                    v(r, i) = c * vi - s * vj;
                    v(r, j) = s * vi + c * vj;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd norms(n);
    for (Eigen::Index c = 0; c < n; ++c) norms(c) = a.col(c).norm();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

    SvdResult out;
    out.sigma.resize(n);
    out.V.resize(n, n);
    Eigen::MatrixXd u(m, n);
    Eigen::Index nonzero = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index c = order[static_cast<std::size_t>(k)];
        out.sigma(k) = norms(c);
        out.V.col(k) = v.col(c);
        if (norms(c) > 0.0) {
            u.col(k) = a.col(c) / norms(c);
            nonzero = k + 1;
        }
    }
    out.U = complete_basis(u.leftCols(nonzero), n);
    return out;
}

} // namespace

SvdResult svd(const Eigen::MatrixXd &m) {
    require_finite(m);
    if (m.rows() < m.cols()) {
        SvdResult t = svd(m.transpose());
        return SvdResult{t.V, t.sigma, t.U};
    }
    if (m.cols() == 0) return SvdResult{Eigen::MatrixXd(m.rows(), 0), Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};
    if (m.rows() > 2 * m.cols()) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
        const Eigen::Index n = m.cols();
        Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        SvdResult inner = jacobi_tall(r);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), n);
        inner.U = q * inner.U;
        return inner;
    }
    return jacobi_tall(m);
}

RankDecision rank_from_singular_values(const Eigen::VectorXd &sigma, std::size_t rows, std::size_t cols,
                                       const Tolerances &tol) {
    RankDecision d;
    d.rows = rows;
    d.cols = cols;
    d.tol_rel = tol.tol_rel;
    d.tol_abs = tol.tol_abs;
    d.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
    const double s1 = d.singular_values.empty() ? 0.0 : d.singular_values.front();
    d.threshold_used = tol.tol_rel * s1 + tol.tol_abs;
    for (double s : d.singular_values)
        if (s > d.threshold_used) ++d.rank;
    if (d.rank > 0 && d.rank < d.singular_values.size())
        d.gap_ratio = d.singular_values[d.rank] / d.singular_values[d.rank - 1];
    return d;
}

RankDecision numerical_rank(const Eigen::MatrixXd &m, const Tolerances &tol) {
    const SvdResult s = svd(m);
    return rank_from_singular_values(s.sigma, static_cast<std::size_t>(m.rows()),
                                     static_cast<std::size_t>(m.cols()), tol);
}

Eigen::MatrixXd right_null_space(const Eigen::MatrixXd &m, const Tolerances &tol) {
    const SvdResult s = svd(m);
    const RankDecision d = rank_from_singular_values(s.sigma, static_cast<std::size_t>(m.rows()),
                                                     static_cast<std::size_t>(m.cols()), tol);
    const auto r = static_cast<Eigen::Index>(d.rank);
    const Eigen::Index n = m.cols();
    if (s.V.cols() == n) return s.V.rightCols(n - r);
    const Eigen::MatrixXd full = complete_basis(s.V.leftCols(r), n);
    return full.rightCols(n - r);
}

Eigen::MatrixXd left_null_space(const Eigen::MatrixXd &m, const Tolerances &tol) {
    return right_null_space(m.transpose(), tol);
}

namespace {

Eigen::MatrixXd principal(const Eigen::MatrixXd &h, const std::vector<std::size_t> &subset) {
    const auto k = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            sub(i, j) = h(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(subset[static_cast<std::size_t>(j)]));
    return sub;
}

// Rank of a principal submatrix, with the threshold anchored on the whole
// matrix's largest singular value so that tiny blocks are not judged against
// their own scale.
bool full_rank_block(const Eigen::MatrixXd &h, const std::vector<std::size_t> &subset, double threshold) {
    if (subset.empty()) return true;
    const Eigen::VectorXd sigma = svd(principal(h, subset)).sigma;
    return sigma(sigma.size() - 1) > threshold;
}

double smallest_sigma(const Eigen::MatrixXd &h, const std::vector<std::size_t> &subset) {
    if (subset.empty()) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd sigma = svd(principal(h, subset)).sigma;
    return sigma(sigma.size() - 1);
}

void check_square_symmetric(const Eigen::MatrixXd &h) {
    require_finite(h);
    if (h.rows() != h.cols()) throw InputError("matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InputError("matrix must be symmetric to 1e-10");
}

bool next_combination(std::vector<std::size_t> &idx, std::size_t n) {
    const std::size_t k = idx.size();
    for (std::size_t i = k; i-- > 0;) {
        if (idx[i] < n - k + i) {
            ++idx[i];
            for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace

RankDecision principal_submatrix_rank(const Eigen::MatrixXd &h, const std::vector<std::size_t> &subset,
                                      const Tolerances &tol) {
    if (h.rows() != h.cols()) throw InputError("principal submatrix requires a square matrix");
    std::vector<std::size_t> sorted = subset;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("subset indices must be distinct");
    for (std::size_t i : subset)
        if (i >= static_cast<std::size_t>(h.rows())) {
            std::ostringstream os;
            os << "subset index " << i << " out of range for a " << h.rows() << "x" << h.rows() << " matrix";
            throw InputError(os.str());
        }
    return numerical_rank(principal(h, subset), tol);
}

SubsetResult max_rank_subset(const Eigen::MatrixXd &h, const Tolerances &tol) {
    check_square_symmetric(h);
    const auto p = static_cast<std::size_t>(h.rows());
    const RankDecision whole = numerical_rank(h, tol);
    const double threshold = whole.threshold_used;

    SubsetResult out;
    if (p <= kExhaustiveSubsetLimit) {
        out.method = "exhaustive";
        for (std::size_t k = p; k > 0; --k) {
            std::vector<std::size_t> idx(k);
            std::iota(idx.begin(), idx.end(), 0);
            do {
                if (full_rank_block(h, idx, threshold)) {
                    out.k = k;
                    out.subset = idx;
                    return out;
                }
            } while (next_combination(idx, p));
        }
        return out;
    }

    // Greedy growth: add the single index (or, failing that, the pair) that
    // keeps the block nonsingular with the largest smallest singular value.
    out.method = "greedy+augmentation";
    std::vector<std::size_t> chosen;
    auto in_set = [&](std::size_t i) { return std::find(chosen.begin(), chosen.end(), i) != chosen.end(); };
    auto try_grow = [&]() {
        std::vector<std::size_t> best;
        double best_sigma = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            if (in_set(i)) continue;
            auto cand = chosen;
            cand.push_back(i);
            const double s = smallest_sigma(h, cand);
            if (s > threshold && s > best_sigma) {
                best_sigma = s;
                best = cand;
            }
        }
        if (best.empty()) {
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = i + 1; j < p; ++j) {
                    if (in_set(i) || in_set(j)) continue;
                    auto cand = chosen;
                    cand.push_back(i);
                    cand.push_back(j);
                    const double s = smallest_sigma(h, cand);
                    if (s > threshold && s > best_sigma) {
                        best_sigma = s;
                        best = cand;
                    }
                }
        }
        if (best.empty()) return false;
        chosen = best;
        return true;
    };
    while (try_grow()) {}

    // Augmentation: swap one member for two outsiders when that still works.
    bool improved = true;
    while (improved && chosen.size() < whole.rank) {
        improved = false;
        for (std::size_t drop = 0; drop < chosen.size() && !improved; ++drop)
            for (std::size_t i = 0; i < p && !improved; ++i)
                for (std::size_t j = i + 1; j < p && !improved; ++j) {
                    if (in_set(i) || in_set(j)) continue;
                    auto cand = chosen;
                    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(drop));
                    cand.push_back(i);
                    cand.push_back(j);
                    if (full_rank_block(h, cand, threshold)) {
                        chosen = cand;
                        improved = true;
                    }
                }
        if (improved) while (try_grow()) {}
    }
    std::sort(chosen.begin(), chosen.end());
    out.k = chosen.size();
    out.subset = chosen;
    return out;
}

} // namespace identrank
