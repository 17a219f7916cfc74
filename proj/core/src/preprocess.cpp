#include "habcast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "habcast/hash.hpp"

namespace habcast {

namespace {

void check_dimension(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                    std::to_string(expected) + ", got " + std::to_string(got) + ")");
    }
}

} // namespace

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    check_dimension(mean.size(), x.size(), "Standardizer::apply");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
    check_dimension(mean.size(), x.cols(), "Standardizer::apply");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
    }
    return out;
}

Standardizer fit_standardizer(const Matrix& pretrain) {
    if (pretrain.rows() < 2) {
        throw std::invalid_argument("fit_standardizer: need at least two pre-train rows, got " +
                                    std::to_string(pretrain.rows()));
    }
    const auto n = static_cast<double>(pretrain.rows());
    const auto p = pretrain.cols();
    Standardizer s;
    s.mean.assign(p, 0.0);
    s.scale.assign(p, 0.0);
    for (std::size_t i = 0; i < pretrain.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) s.mean[j] += pretrain(i, j);
    }
    for (auto& m : s.mean) m /= n;
    for (std::size_t i = 0; i < pretrain.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double d = pretrain(i, j) - s.mean[j];
            s.scale[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        const double sd = std::sqrt(s.scale[j] / n);
        // Rounding leaves a residual spread around 1e-16 * |mean| on constant columns.
        s.scale[j] = sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? 1.0 : sd;
    }
    return s;
}

double PcaTransform::retained_ratio() const {
    return std::accumulate(explained_variance_ratio.begin(),
                           explained_variance_ratio.begin() + static_cast<std::ptrdiff_t>(k()), 0.0);
}

std::vector<double> PcaTransform::apply(std::span<const double> z) const {
    check_dimension(components.cols(), z.size(), "PcaTransform::apply");
    std::vector<double> out(k(), 0.0);
    for (std::size_t c = 0; c < k(); ++c) {
        const auto w = components.row(c);
        double acc = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) acc += w[j] * (z[j] - center[j]);
        out[c] = acc;
    }
    return out;
}

Matrix PcaTransform::apply(const Matrix& z) const {
    check_dimension(components.cols(), z.cols(), "PcaTransform::apply");
    Matrix out(z.rows(), k());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto projected = apply(z.row(i));
        std::copy(projected.begin(), projected.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> PcaTransform::reconstruct(std::span<const double> projected) const {
    check_dimension(k(), projected.size(), "PcaTransform::reconstruct");
    std::vector<double> out(center);
    for (std::size_t c = 0; c < k(); ++c) {
        const auto w = components.row(c);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += projected[c] * w[j];
    }
    return out;
}

PcaTransform fit_pca(const Matrix& standardized, double variance_threshold) {
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
        throw std::invalid_argument("fit_pca: variance threshold must lie in (0, 1], got " +
                                    std::to_string(variance_threshold));
    }
    if (standardized.rows() < 2) {
        throw std::invalid_argument("fit_pca: need at least two rows");
    }
    const auto n = standardized.rows();
    const auto p = standardized.cols();

    Eigen::MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = standardized(i, j);
    }
    const Eigen::RowVectorXd mu = x.colwise().mean();
    x.rowwise() -= mu;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("fit_pca: eigendecomposition failed");
    }
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd values = solver.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

    std::vector<double> lambda(p);
    for (std::size_t c = 0; c < p; ++c) lambda[c] = std::max(0.0, values(static_cast<Eigen::Index>(c)));
    const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    if (!(total > 0.0)) {
        throw std::invalid_argument("fit_pca: input has zero total variance");
    }

    PcaTransform pca;
    pca.variance_threshold = variance_threshold;
    pca.center.assign(mu.data(), mu.data() + p);
    pca.explained_variance_ratio.resize(p);
    for (std::size_t c = 0; c < p; ++c) pca.explained_variance_ratio[c] = lambda[c] / total;

    std::size_t k = 0;
    double cumulative = 0.0;
    while (k < p) {
        cumulative += pca.explained_variance_ratio[k];
        ++k;
        if (cumulative >= variance_threshold - 1e-12) break;
    }

    pca.components = Matrix(k, p);
    for (std::size_t c = 0; c < k; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < p; ++j) {
            if (std::abs(vectors(static_cast<Eigen::Index>(j), col)) >
                std::abs(vectors(static_cast<Eigen::Index>(arg), col))) {
                arg = j;
            }
        }
        const double sign = vectors(static_cast<Eigen::Index>(arg), col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < p; ++j) pca.components(c, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
    }
    return pca;
}

std::size_t FeatureTransform::output_dimension() const {
    return pca ? pca->k() : standardizer.dimension();
}

std::vector<double> FeatureTransform::apply(std::span<const double> x) const {
    auto z = standardizer.apply(x);
    return pca ? pca->apply(z) : z;
}

Matrix FeatureTransform::apply(const Matrix& x) const {
    auto z = standardizer.apply(x);
    return pca ? pca->apply(z) : z;
}

std::uint64_t FeatureTransform::fingerprint() const {
    Fnv1a h;
    h.add(std::span<const double>(standardizer.mean));
    h.add(std::span<const double>(standardizer.scale));
    h.add(static_cast<std::uint64_t>(pca.has_value()));
    if (pca) {
        h.add(std::span<const double>(pca->center));
        h.add(std::span<const double>(pca->components.data()));
        h.add(std::span<const double>(pca->explained_variance_ratio));
        h.add(pca->variance_threshold);
    }
    return h.value();
}

FeatureTransform fit_feature_transform(const Matrix& pretrain, bool use_pca, double variance_threshold) {
    FeatureTransform t;
    t.standardizer = fit_standardizer(pretrain);
    if (use_pca) t.pca = fit_pca(t.standardizer.apply(pretrain), variance_threshold);
    return t;
}

nlohmann::json to_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

nlohmann::json to_json(const PcaTransform& p) {
    std::vector<std::vector<double>> rows;
    for (std::size_t c = 0; c < p.k(); ++c) {
        const auto r = p.components.row(c);
        rows.emplace_back(r.begin(), r.end());
    }
    return {{"center", p.center},
            {"components", rows},
            {"explained_variance_ratio", p.explained_variance_ratio},
            {"variance_threshold", p.variance_threshold}};
}

nlohmann::json to_json(const FeatureTransform& t) {
    nlohmann::json j{{"standardizer", to_json(t.standardizer)}};
    j["pca"] = t.pca ? to_json(*t.pca) : nlohmann::json(nullptr);
    return j;
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    if (s.mean.size() != s.scale.size()) throw std::invalid_argument("standardizer: mean/scale length mismatch");
    return s;
}

PcaTransform pca_from_json(const nlohmann::json& j) {
    PcaTransform p;
    p.center = j.at("center").get<std::vector<double>>();
    for (const auto& row : j.at("components")) p.components.append_row(row.get<std::vector<double>>());
    p.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
    p.variance_threshold = j.at("variance_threshold").get<double>();
    return p;
}

FeatureTransform feature_transform_from_json(const nlohmann::json& j) {
    FeatureTransform t;
    t.standardizer = standardizer_from_json(j.at("standardizer"));
    if (!j.at("pca").is_null()) t.pca = pca_from_json(j.at("pca"));
    return t;
}

} // namespace habcast
