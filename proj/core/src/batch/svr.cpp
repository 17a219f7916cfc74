#include "habcast/batch/svr.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace habcast {

namespace {

constexpr double kTau = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
    switch (type) {
        case KernelType::Linear:
            return dot(a, b);
        case KernelType::Gaussian:
            return std::exp(-gamma * squared_distance(a, b));
        case KernelType::Polynomial:
            return std::pow(gamma * dot(a, b) + coef0, degree);
    }
    return 0.0;
}

SvrNotConverged::SvrNotConverged(std::size_t iterations, double residual)
    : std::runtime_error("SVR did not converge after " + std::to_string(iterations) +
                         " iterations (KKT residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

double scale_gamma(const Matrix& x) {
    const auto count = static_cast<double>(x.rows() * x.cols());
    if (count == 0) return 1.0;
    double mean = 0.0;
    for (double v : x.data()) mean += v;
    mean /= count;
    double var = 0.0;
    for (double v : x.data()) var += (v - mean) * (v - mean);
    var /= count;
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

void Svr::fit(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    if (n == 0) throw std::invalid_argument("SVR: empty training set");
    if (y.size() != n) throw std::invalid_argument("SVR: feature/target row mismatch");
    if (!(spec_.c > 0.0) || !(spec_.epsilon >= 0.0)) throw std::invalid_argument("SVR: C must be > 0 and epsilon >= 0");

    kernel_ = Kernel{spec_.kernel, scale_gamma(x), 1.0, spec_.degree};

    // Full Gram matrix; training sets here are a few thousand rows at most.
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double k = kernel_(x.row(i), x.row(j));
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    auto K = [&](std::size_t a, std::size_t b) { return gram[(a % n) * n + (b % n)]; };

    // Variables 0..n-1 are alpha (sign +1), n..2n-1 are alpha^* (sign -1).
    const std::size_t l = 2 * n;
    const double C = spec_.c;
    std::vector<double> alpha(l, 0.0);
    std::vector<double> grad(l);
    std::vector<signed char> sign(l);
    for (std::size_t i = 0; i < n; ++i) {
        sign[i] = 1;
        sign[i + n] = -1;
        grad[i] = spec_.epsilon - y[i];
        grad[i + n] = spec_.epsilon + y[i];
    }
    auto at_upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    iterations_ = 0;
    residual_ = std::numeric_limits<double>::infinity();
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < l; ++t) {
            if (sign[t] == 1) {
                if (!at_upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!at_lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        double best_obj = std::numeric_limits<double>::infinity();
        if (i >= 0) {
            const auto ii = static_cast<std::size_t>(i);
            for (std::size_t t = 0; t < l; ++t) {
                double grad_diff = 0.0;
                if (sign[t] == 1) {
                    if (at_lower(t)) continue;
                    grad_diff = gmax + grad[t];
                    gmax2 = std::max(gmax2, grad[t]);
                } else {
                    if (at_upper(t)) continue;
                    grad_diff = gmax - grad[t];
                    gmax2 = std::max(gmax2, -grad[t]);
                }
                if (grad_diff > 0.0) {
                    double quad = K(ii, ii) + K(t, t) - 2.0 * K(ii, t);
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best_obj) {
                        best_obj = obj;
                        j = static_cast<std::ptrdiff_t>(t);
                    }
                }
            }
        }
        residual_ = (i >= 0) ? gmax + gmax2 : 0.0;
        if (i < 0 || j < 0 || residual_ < spec_.tolerance) break;
        if (iterations_ >= spec_.max_iterations) throw SvrNotConverged(iterations_, residual_);
        ++iterations_;

        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(j);
        const double q_ab = sign[a] * sign[b] * K(a, b);
        const double old_a = alpha[a];
        const double old_b = alpha[b];
        if (sign[a] != sign[b]) {
            double quad = K(a, a) + K(b, b) + 2.0 * q_ab;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[a] - grad[b]) / quad;
            const double diff = alpha[a] - alpha[b];
            alpha[a] += delta;
            alpha[b] += delta;
            if (diff > 0.0) {
                if (alpha[b] < 0.0) { alpha[b] = 0.0; alpha[a] = diff; }
            } else if (alpha[a] < 0.0) {
                alpha[a] = 0.0;
                alpha[b] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[a] > C) { alpha[a] = C; alpha[b] = C - diff; }
            } else if (alpha[b] > C) {
                alpha[b] = C;
                alpha[a] = C + diff;
            }
        } else {
            double quad = K(a, a) + K(b, b) - 2.0 * q_ab;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[a] - grad[b]) / quad;
            const double sum = alpha[a] + alpha[b];
            alpha[a] -= delta;
            alpha[b] += delta;
            if (sum > C) {
                if (alpha[a] > C) { alpha[a] = C; alpha[b] = sum - C; }
                if (alpha[b] > C) { alpha[b] = C; alpha[a] = sum - C; }
            } else {
                if (alpha[b] < 0.0) { alpha[b] = 0.0; alpha[a] = sum; }
                if (alpha[a] < 0.0) { alpha[a] = 0.0; alpha[b] = sum; }
            }
        }
        const double da = alpha[a] - old_a;
        const double db = alpha[b] - old_b;
        for (std::size_t t = 0; t < l; ++t) {
            grad[t] += sign[t] * (sign[a] * K(a, t) * da + sign[b] * K(b, t) * db);
        }
    }

    // Offset from free variables, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double yg = sign[t] * grad[t];
        if (at_upper(t)) {
            if (sign[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (at_lower(t)) {
            if (sign[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    bias_ = -rho;

    all_coef_.assign(n, 0.0);
    std::vector<std::size_t> sv;
    for (std::size_t t = 0; t < n; ++t) {
        all_coef_[t] = alpha[t] - alpha[t + n];
        if (all_coef_[t] != 0.0) sv.push_back(t);
    }
    support_ = x.select_rows(sv);
    coef_.clear();
    for (auto t : sv) coef_.push_back(all_coef_[t]);
}

double Svr::decision(std::span<const double> x) const {
    double f = bias_;
    for (std::size_t s = 0; s < coef_.size(); ++s) f += coef_[s] * kernel_(support_.row(s), x);
    return f;
}

Prediction Svr::predict(std::span<const double> x) const {
    if (x.size() != support_.cols() && !coef_.empty()) {
        throw std::invalid_argument("SVR: query dimension mismatch");
    }
    return {decision(x), {}};
}

} // namespace habcast
