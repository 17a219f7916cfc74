#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

struct MlpSpec {
    std::vector<int> hidden{10, 10};
    double learning_rate = 1e-3;
    int epochs = 500;
    int batch_size = 32;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
};

class MlpDiverged : public std::runtime_error {
  public:
    explicit MlpDiverged(double learning_rate);
    [[nodiscard]] double learning_rate() const { return learning_rate_; }

  private:
    double learning_rate_;
};

/// Fully connected ReLU network with a single sigmoid output unit.
/// Parameters are stored flat, layer by layer: weights (out x in, row-major) then biases.
class MlpNetwork {
  public:
    MlpNetwork() = default;
    MlpNetwork(std::size_t inputs, const std::vector<int>& hidden);

    /// Glorot-uniform weights, zero biases.
    void initialize(std::mt19937_64& rng);

    [[nodiscard]] double forward(std::span<const double> x) const;
    /// Mean squared error of the sigmoid output against `y` over the selected rows.
    [[nodiscard]] double loss(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows) const;
    /// Gradient of loss() with respect to parameters(). The loss at the current
    /// parameters is written to `loss_out` when given.
    [[nodiscard]] std::vector<double> gradient(const Matrix& x, std::span<const double> y,
                                               std::span<const std::size_t> rows, double* loss_out = nullptr) const;

    [[nodiscard]] std::vector<double>& parameters() { return params_; }
    [[nodiscard]] const std::vector<double>& parameters() const { return params_; }
    [[nodiscard]] const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  private:
    std::vector<std::size_t> sizes_;   // input, hidden..., 1
    std::vector<std::size_t> offsets_; // start of each layer's weights in params_
    std::vector<double> params_;
};

/// Batch MLP regressor trained with RMSprop on min-max scaled targets.
class Mlp final : public BatchRegressor {
  public:
    Mlp(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {}

    void fit(const Matrix& x, std::span<const double> y) override;
    [[nodiscard]] Prediction predict(std::span<const double> x) const override;
    /// Network output in (0, 1) before inverse scaling.
    [[nodiscard]] double raw_output(std::span<const double> x) const { return net_.forward(x); }
    [[nodiscard]] const MlpNetwork& network() const { return net_; }
    [[nodiscard]] double target_min() const { return lo_; }
    [[nodiscard]] double target_max() const { return hi_; }
    [[nodiscard]] double final_loss() const { return final_loss_; }

  private:
    MlpSpec spec_;
    std::uint64_t seed_;
    MlpNetwork net_;
    double lo_ = 0.0;
    double hi_ = 1.0;
    double final_loss_ = 0.0;
};

} // namespace habcast
