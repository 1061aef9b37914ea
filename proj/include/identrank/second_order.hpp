#pragma once

// Dense second-order forward-mode AD number.
//
// A SecondOrder carries a value together with its gradient and Hessian with
// respect to p independent variables. The Hessian is stored as a packed lower
// triangle, so entry (i,j) and entry (j,i) are the same storage cell and the
// result is symmetric bit for bit.
//
// A number with dim() == 0 is a plain constant. Constants mix freely with
// p-dimensional numbers and never allocate.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "identrank/errors.hpp"

namespace identrank {

class SecondOrder {
public:
    SecondOrder() = default;
    SecondOrder(double value) : value_(value) {} // NOLINT: implicit by design of the arithmetic

    static SecondOrder constant(double value) { return SecondOrder(value); }

    // The index-th of p independent variables, with value `value`.
    static SecondOrder variable(double value, std::size_t index, std::size_t p) {
        SecondOrder out(value);
        out.resize(p);
        out.grad_[index] = 1.0;
        return out;
    }

    std::size_t dim() const { return grad_.size(); }
    double value() const { return value_; }
    double grad(std::size_t i) const { return grad_.empty() ? 0.0 : grad_[i]; }
    double hess(std::size_t i, std::size_t j) const {
        return hess_.empty() ? 0.0 : hess_[packed(i, j)];
    }
    std::span<const double> gradient() const { return grad_; }

    SecondOrder &operator+=(const SecondOrder &rhs);
    SecondOrder &operator-=(const SecondOrder &rhs);
    SecondOrder &operator*=(const SecondOrder &rhs);
    SecondOrder &operator/=(const SecondOrder &rhs);

    SecondOrder operator-() const {
        SecondOrder out(*this);
        out.value_ = -out.value_;
        for (double &g : out.grad_) g = -g;
        for (double &h : out.hess_) h = -h;
        return out;
    }

    // Composition with a scalar function f at this point, given f(v), f'(v),
    // f''(v): grad -> f' grad, hess -> f' hess + f'' grad grad^T.
    SecondOrder compose(double f0, double f1, double f2) const;

    static std::size_t packed(std::size_t i, std::size_t j) {
        return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
    }

private:
    void resize(std::size_t p) {
        grad_.assign(p, 0.0);
        hess_.assign(p * (p + 1) / 2, 0.0);
    }

    double value_ = 0.0;
    std::vector<double> grad_;
    std::vector<double> hess_;
};

inline SecondOrder operator+(SecondOrder a, const SecondOrder &b) { return a += b; }
inline SecondOrder operator-(SecondOrder a, const SecondOrder &b) { return a -= b; }
inline SecondOrder operator*(SecondOrder a, const SecondOrder &b) { return a *= b; }
inline SecondOrder operator/(SecondOrder a, const SecondOrder &b) { return a /= b; }
inline SecondOrder operator+(SecondOrder a, double b) { return a += SecondOrder(b); }
inline SecondOrder operator-(SecondOrder a, double b) { return a -= SecondOrder(b); }
inline SecondOrder operator*(SecondOrder a, double b) { return a *= SecondOrder(b); }
inline SecondOrder operator/(SecondOrder a, double b) { return a /= SecondOrder(b); }
inline SecondOrder operator+(double a, const SecondOrder &b) { return SecondOrder(a) += b; }
inline SecondOrder operator-(double a, const SecondOrder &b) { return SecondOrder(a) -= b; }
inline SecondOrder operator*(double a, const SecondOrder &b) { return SecondOrder(a) *= b; }
inline SecondOrder operator/(double a, const SecondOrder &b) { return SecondOrder(a) /= b; }

inline bool operator<(const SecondOrder &a, const SecondOrder &b) { return a.value() < b.value(); }
inline bool operator>(const SecondOrder &a, const SecondOrder &b) { return a.value() > b.value(); }

SecondOrder exp(const SecondOrder &x);
SecondOrder expm1(const SecondOrder &x);
SecondOrder log(const SecondOrder &x);
SecondOrder log1p(const SecondOrder &x);
SecondOrder sqrt(const SecondOrder &x);
SecondOrder square(const SecondOrder &x);
SecondOrder pow(const SecondOrder &x, double k);
SecondOrder pow(const SecondOrder &x, const SecondOrder &y);

// Logistic sigmoid 1/(1+exp(-x)), evaluated without overflow.
SecondOrder sigmoid(const SecondOrder &x);

inline double value_of(double x) { return x; }
inline double value_of(const SecondOrder &x) { return x.value(); }

} // namespace identrank
