#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

enum class KernelType { Linear, Gaussian, Polynomial };

struct SvrSpec {
    KernelType kernel = KernelType::Gaussian;
    double c = 1.0;
    double epsilon = 0.1;
    int degree = 3; ///< polynomial kernel only
    double tolerance = 1e-3;
    std::size_t max_iterations = 100000;
};

/// K(a, b) for the three supported kernels. Gaussian and polynomial share
/// gamma = 1 / (p * Var(X)); the polynomial offset is 1.
struct Kernel {
    KernelType type = KernelType::Linear;
    double gamma = 1.0;
    double coef0 = 1.0;
    int degree = 3;

    double operator()(std::span<const double> a, std::span<const double> b) const;
};

class SvrNotConverged : public std::runtime_error {
  public:
    SvrNotConverged(std::size_t iterations, double residual);
    [[nodiscard]] double residual() const { return residual_; }

  private:
    double residual_;
};

/// Epsilon-insensitive support vector regression solved in the dual with
/// second-order working-set SMO.
class Svr final : public BatchRegressor {
  public:
    explicit Svr(SvrSpec spec) : spec_(spec) {}

    void fit(const Matrix& x, std::span<const double> y) override;
    [[nodiscard]] Prediction predict(std::span<const double> x) const override;
    [[nodiscard]] double decision(std::span<const double> x) const;

    /// alpha_i - alpha_i^* for each retained support vector.
    [[nodiscard]] const std::vector<double>& dual_coefficients() const { return coef_; }
    [[nodiscard]] const Matrix& support_vectors() const { return support_; }
    [[nodiscard]] double bias() const { return bias_; }
    [[nodiscard]] const Kernel& kernel() const { return kernel_; }
    [[nodiscard]] std::size_t iterations() const { return iterations_; }
    /// Maximal violating-pair gap at termination.
    [[nodiscard]] double final_residual() const { return residual_; }
    /// Per training row alpha_i - alpha_i^* (zeros included), in fit order.
    [[nodiscard]] const std::vector<double>& training_coefficients() const { return all_coef_; }
    [[nodiscard]] const SvrSpec& spec() const { return spec_; }

  private:
    SvrSpec spec_;
    Kernel kernel_;
    Matrix support_;
    std::vector<double> coef_;
    std::vector<double> all_coef_;
    double bias_ = 0.0;
    std::size_t iterations_ = 0;
    double residual_ = 0.0;
};

/// gamma = 1 / (p * Var(all entries of x)), or 1 when the data has no spread.
double scale_gamma(const Matrix& x);

} // namespace habcast
