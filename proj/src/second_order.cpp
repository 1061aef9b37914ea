#include "identrank/second_order.hpp"

#include <stdexcept>

namespace identrank {

namespace {

void check_dims(const SecondOrder &a, const SecondOrder &b) {
    if (a.dim() != 0 && b.dim() != 0 && a.dim() != b.dim())
        throw std::logic_error("SecondOrder: mixing numbers of different dimension");
}

} // namespace

SecondOrder &SecondOrder::operator+=(const SecondOrder &rhs) {
    check_dims(*this, rhs);
    value_ += rhs.value_;
    if (rhs.grad_.empty()) return *this;
    if (grad_.empty()) {
        grad_ = rhs.grad_;
        hess_ = rhs.hess_;
        return *this;
    }
    for (std::size_t i = 0; i < grad_.size(); ++i) grad_[i] += rhs.grad_[i];
    for (std::size_t k = 0; k < hess_.size(); ++k) hess_[k] += rhs.hess_[k];
    return *this;
}

SecondOrder &SecondOrder::operator-=(const SecondOrder &rhs) { return *this += -rhs; }

SecondOrder &SecondOrder::operator*=(const SecondOrder &rhs) {
    check_dims(*this, rhs);
    const double a = value_;
    const double b = rhs.value_;
    if (rhs.grad_.empty()) {
        value_ *= b;
        for (double &g : grad_) g *= b;
        for (double &h : hess_) h *= b;
        return *this;
    }
    if (grad_.empty()) {
        SecondOrder out(rhs);
        out.value_ *= a;
        for (double &g : out.grad_) g *= a;
        for (double &h : out.hess_) h *= a;
        return *this = std::move(out);
    }
    const std::size_t p = grad_.size();
    std::vector<double> hess(hess_.size());
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t k = packed(i, j);
            hess[k] = a * rhs.hess_[k] + b * hess_[k] + grad_[i] * rhs.grad_[j] +
                      rhs.grad_[i] * grad_[j];
        }
    for (std::size_t i = 0; i < p; ++i) grad_[i] = a * rhs.grad_[i] + b * grad_[i];
    hess_ = std::move(hess);
    value_ = a * b;
    return *this;
}

SecondOrder &SecondOrder::operator/=(const SecondOrder &rhs) {
    const double v = rhs.value_;
    if (v == 0.0) throw DomainError("division by zero in differentiated expression");
    if (rhs.grad_.empty()) return *this *= SecondOrder(1.0 / v);
    return *this *= rhs.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

SecondOrder SecondOrder::compose(double f0, double f1, double f2) const {
    SecondOrder out;
    out.value_ = f0;
    if (grad_.empty()) return out;
    const std::size_t p = grad_.size();
    out.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        out.grad_[i] = f1 * grad_[i];
        for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t k = packed(i, j);
            out.hess_[k] = f1 * hess_[k] + f2 * grad_[i] * grad_[j];
        }
    }
    return out;
}

SecondOrder exp(const SecondOrder &x) {
    const double e = std::exp(x.value());
    return x.compose(e, e, e);
}

SecondOrder expm1(const SecondOrder &x) {
    const double e = std::exp(x.value());
    return x.compose(std::expm1(x.value()), e, e);
}

SecondOrder log(const SecondOrder &x) {
    const double v = x.value();
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
    return x.compose(std::log(v), 1.0 / v, -1.0 / (v * v));
}

SecondOrder log1p(const SecondOrder &x) {
    const double v = x.value();
    if (!(v > -1.0)) throw DomainError("log1p of value <= -1: " + std::to_string(v));
    const double d = 1.0 / (1.0 + v);
    return x.compose(std::log1p(v), d, -d * d);
}

SecondOrder sqrt(const SecondOrder &x) {
    const double v = x.value();
    if (v < 0.0 || (v == 0.0 && x.dim() > 0))
        throw DomainError("sqrt at non-differentiable point " + std::to_string(v));
    const double s = std::sqrt(v);
    if (x.dim() == 0) return SecondOrder(s);
    return x.compose(s, 0.5 / s, -0.25 / (s * v));
}

SecondOrder square(const SecondOrder &x) { return x.compose(x.value() * x.value(), 2.0 * x.value(), 2.0); }

SecondOrder pow(const SecondOrder &x, double k) {
    const double v = x.value();
    if (k == 0.0) return SecondOrder(1.0);
    if (k == 1.0) return x;
    const bool integral = std::floor(k) == k;
    if (v < 0.0 && !integral)
        throw DomainError("non-integer power of negative value " + std::to_string(v));
    if (v == 0.0 && k < 2.0 && x.dim() > 0)
        throw DomainError("pow not twice differentiable at zero");
    return x.compose(std::pow(v, k), k * std::pow(v, k - 1.0), k * (k - 1.0) * std::pow(v, k - 2.0));
}

SecondOrder pow(const SecondOrder &x, const SecondOrder &y) { return exp(y * log(x)); }

SecondOrder sigmoid(const SecondOrder &x) {
    const double v = x.value();
    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    const double d1 = s * (1.0 - s);
    return x.compose(s, d1, d1 * (1.0 - 2.0 * s));
}

} // namespace identrank
