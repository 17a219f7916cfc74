#include "habcast/batch/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace habcast {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

MlpDiverged::MlpDiverged(double learning_rate)
    : std::runtime_error("MLP loss became non-finite with learning rate " + std::to_string(learning_rate)),
      learning_rate_(learning_rate) {}

MlpNetwork::MlpNetwork(std::size_t inputs, const std::vector<int>& hidden) {
    sizes_.push_back(inputs);
    for (int h : hidden) {
        if (h <= 0) throw std::invalid_argument("MLP: hidden layer sizes must be positive");
        sizes_.push_back(static_cast<std::size_t>(h));
    }
    sizes_.push_back(1);
    std::size_t total = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += sizes_[l] * sizes_[l - 1] + sizes_[l];
    }
    params_.assign(total, 0.0);
}

void MlpNetwork::initialize(std::mt19937_64& rng) {
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[l - 1] + sizes_[l]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        double* w = params_.data() + offsets_[l - 1];
        for (std::size_t i = 0; i < sizes_[l] * sizes_[l - 1]; ++i) w[i] = dist(rng);
        std::fill_n(w + sizes_[l] * sizes_[l - 1], sizes_[l], 0.0);
    }
}

double MlpNetwork::forward(std::span<const double> x) const {
    if (x.size() != sizes_.front()) throw std::invalid_argument("MLP: input dimension mismatch");
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const std::size_t in = sizes_[l - 1];
        const std::size_t out = sizes_[l];
        const double* w = params_.data() + offsets_[l - 1];
        const double* b = w + out * in;
        next.assign(out, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            double z = b[o];
            for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * act[i];
            next[o] = (l + 1 == sizes_.size()) ? sigmoid(z) : std::max(0.0, z);
        }
        act.swap(next);
    }
    return act[0];
}

double MlpNetwork::loss(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows) const {
    double acc = 0.0;
    for (auto r : rows) {
        const double d = forward(x.row(r)) - y[r];
        acc += d * d;
    }
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

std::vector<double> MlpNetwork::gradient(const Matrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows, double* loss_out) const {
    double sq_error = 0.0;
    std::vector<double> grad(params_.size(), 0.0);
    const std::size_t layers = sizes_.size() - 1;
    std::vector<std::vector<double>> pre(layers);  // z per layer
    std::vector<std::vector<double>> post(layers + 1);
    std::vector<double> delta;
    std::vector<double> prev_delta;
    const double scale = 2.0 / static_cast<double>(rows.size());

    for (auto r : rows) {
        const auto xr = x.row(r);
        post[0].assign(xr.begin(), xr.end());
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = sizes_[l];
            const std::size_t out = sizes_[l + 1];
            const double* w = params_.data() + offsets_[l];
            const double* b = w + out * in;
            pre[l].assign(out, 0.0);
            post[l + 1].assign(out, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                double z = b[o];
                for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * post[l][i];
                pre[l][o] = z;
                post[l + 1][o] = (l + 1 == layers) ? sigmoid(z) : std::max(0.0, z);
            }
        }
        const double out = post[layers][0];
        sq_error += (out - y[r]) * (out - y[r]);
        delta.assign(1, scale * (out - y[r]) * out * (1.0 - out));
        for (std::size_t l = layers; l-- > 0;) {
            const std::size_t in = sizes_[l];
            const std::size_t outs = sizes_[l + 1];
            const double* w = params_.data() + offsets_[l];
            double* gw = grad.data() + offsets_[l];
            double* gb = gw + outs * in;
            for (std::size_t o = 0; o < outs; ++o) {
                gb[o] += delta[o];
                for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * post[l][i];
            }
            if (l == 0) break;
            prev_delta.assign(in, 0.0);
            for (std::size_t i = 0; i < in; ++i) {
                if (pre[l - 1][i] <= 0.0) continue;
                double acc = 0.0;
                for (std::size_t o = 0; o < outs; ++o) acc += w[o * in + i] * delta[o];
                prev_delta[i] = acc;
            }
            delta.swap(prev_delta);
        }
    }
    if (loss_out != nullptr) *loss_out = rows.empty() ? 0.0 : sq_error / static_cast<double>(rows.size());
    return grad;
}

void Mlp::fit(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    if (n == 0) throw std::invalid_argument("MLP: empty training set");
    if (y.size() != n) throw std::invalid_argument("MLP: feature/target row mismatch");
    if (!(spec_.learning_rate > 0.0) || spec_.epochs <= 0 || spec_.batch_size <= 0) {
        throw std::invalid_argument("MLP: learning rate, epochs and batch size must be positive");
    }
    if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
        throw std::invalid_argument("MLP: targets must be finite");
    }
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    lo_ = *mn;
    hi_ = *mx;
    if (!(hi_ > lo_)) {
        // Constant target: centre it at 0.5 so the sigmoid head can reach it.
        lo_ -= 0.5;
        hi_ += 0.5;
    }
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = (y[i] - lo_) / (hi_ - lo_);

    std::mt19937_64 rng(seed_);
    net_ = MlpNetwork(x.cols(), spec_.hidden);
    net_.initialize(rng);

    auto& params = net_.parameters();
    std::vector<double> mean_sq(params.size(), 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(spec_.batch_size);

    for (int epoch = 0; epoch < spec_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            std::span<const std::size_t> rows(order.data() + start, end - start);
            double batch_loss = 0.0;
            const auto g = net_.gradient(x, scaled, rows, &batch_loss);
            for (std::size_t k = 0; k < params.size(); ++k) {
                mean_sq[k] = spec_.rms_decay * mean_sq[k] + (1.0 - spec_.rms_decay) * g[k] * g[k];
                params[k] -= spec_.learning_rate * g[k] / (std::sqrt(mean_sq[k]) + spec_.rms_epsilon);
            }
            epoch_loss += batch_loss * static_cast<double>(rows.size());
        }
        final_loss_ = epoch_loss / static_cast<double>(n);
        if (!std::isfinite(final_loss_)) throw MlpDiverged(spec_.learning_rate);
    }
}

Prediction Mlp::predict(std::span<const double> x) const {
    return {lo_ + net_.forward(x) * (hi_ - lo_), {}};
}

} // namespace habcast
