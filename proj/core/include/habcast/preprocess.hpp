#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "habcast/matrix.hpp"

namespace habcast {

/// Per-feature z-score parameters. Zero-variance features keep scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    [[nodiscard]] std::size_t dimension() const { return mean.size(); }
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
    [[nodiscard]] Matrix apply(const Matrix& x) const;
};

/// Principal components of standardized data, truncated at an explained-variance threshold.
struct PcaTransform {
    std::vector<double> center;              ///< column means of the fitting data
    Matrix components;                       ///< k x p, orthonormal rows
    std::vector<double> explained_variance_ratio; ///< all p ratios, non-increasing
    double variance_threshold = 0.999;

    [[nodiscard]] std::size_t k() const { return components.rows(); }
    [[nodiscard]] std::size_t input_dimension() const { return components.cols(); }
    [[nodiscard]] double retained_ratio() const;
    [[nodiscard]] std::vector<double> apply(std::span<const double> z) const;
    [[nodiscard]] Matrix apply(const Matrix& z) const;
    /// Maps projected coordinates back into the standardized input space.
    [[nodiscard]] std::vector<double> reconstruct(std::span<const double> projected) const;
};

Standardizer fit_standardizer(const Matrix& pretrain);

/// Population-covariance PCA keeping the fewest leading components whose
/// cumulative explained-variance ratio reaches `variance_threshold`.
/// Each component's largest-magnitude loading is made positive.
PcaTransform fit_pca(const Matrix& standardized, double variance_threshold);

/// Frozen standardize-then-project pipeline fitted on the pre-train partition.
struct FeatureTransform {
    Standardizer standardizer;
    std::optional<PcaTransform> pca;

    [[nodiscard]] std::size_t input_dimension() const { return standardizer.dimension(); }
    [[nodiscard]] std::size_t output_dimension() const;
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
    [[nodiscard]] Matrix apply(const Matrix& x) const;
    /// Hash over the exact bits of every fitted parameter.
    [[nodiscard]] std::uint64_t fingerprint() const;
};

FeatureTransform fit_feature_transform(const Matrix& pretrain, bool use_pca, double variance_threshold = 0.999);

nlohmann::json to_json(const Standardizer& s);
nlohmann::json to_json(const PcaTransform& p);
nlohmann::json to_json(const FeatureTransform& t);
Standardizer standardizer_from_json(const nlohmann::json& j);
PcaTransform pca_from_json(const nlohmann::json& j);
FeatureTransform feature_transform_from_json(const nlohmann::json& j);

} // namespace habcast
