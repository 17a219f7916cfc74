#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "habcast/preprocess.hpp"

using namespace habcast;

namespace {

Matrix gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) m(i, j) = g(rng);
    }
    return m;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev;
    for (std::size_t i = 0; i < n; ++i) ev.push_back(a[i][i]);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

std::vector<std::vector<double>> population_covariance(const Matrix& z) {
    const std::size_t p = z.cols();
    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) mean[j] += z(i, j);
    }
    for (auto& m : mean) m /= static_cast<double>(z.rows());
    std::vector<std::vector<double>> c(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < z.rows(); ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) c[a][b] += (z(i, a) - mean[a]) * (z(i, b) - mean[b]);
        }
    }
    for (auto& row : c) {
        for (auto& v : row) v /= static_cast<double>(z.rows());
    }
    return c;
}

void check_orthonormal(const PcaTransform& pca) {
    for (std::size_t a = 0; a < pca.k(); ++a) {
        for (std::size_t b = 0; b < pca.k(); ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < pca.input_dimension(); ++j) dot += pca.components(a, j) * pca.components(b, j);
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-8);
        }
    }
}

} // namespace

TEST_CASE("standardizer uses population sd and passes constant features through") {
    Matrix x(2, 2);
    x(0, 0) = 0.0;
    x(1, 0) = 2.0;
    x(0, 1) = 5.0;
    x(1, 1) = 5.0;
    const auto s = fit_standardizer(x);
    CHECK(s.mean[0] == 1.0);
    CHECK(s.scale[0] == 1.0);
    CHECK(s.mean[1] == 5.0);
    CHECK(s.scale[1] == 1.0);
    const auto z = s.apply(x);
    CHECK(z(0, 1) == 0.0);
    CHECK(z(1, 1) == 0.0);

    CHECK_THROWS(fit_standardizer(Matrix{}));
}

TEST_CASE("standardized pretrain rows have zero mean") {
    const auto x = gaussian(200, 6, 3);
    Matrix shifted = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) shifted(i, j) = 100.0 * j + (j + 1) * x(i, j);
    }
    const auto z = fit_standardizer(shifted).apply(shifted);
    for (std::size_t j = 0; j < z.cols(); ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) m += z(i, j);
        CHECK(std::abs(m / static_cast<double>(z.rows())) < 1e-10);
    }
}

TEST_CASE("rank-1 data keeps a single component") {
    Matrix x(50, 2);
    for (std::size_t i = 0; i < 50; ++i) {
        x(i, 0) = static_cast<double>(i);
        x(i, 1) = 3.0 * static_cast<double>(i) - 7.0;
    }
    const auto t = fit_feature_transform(x, true);
    REQUIRE(t.pca);
    CHECK(t.pca->k() == 1);
    CHECK(t.pca->explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
    check_orthonormal(*t.pca);
}

TEST_CASE("isotropic sample keeps every component and matches a Jacobi oracle") {
    const auto x = gaussian(400, 3, 11);
    const auto s = fit_standardizer(x);
    const auto z = s.apply(x);
    const auto pca = fit_pca(z, 0.999);
    CHECK(pca.k() == 3);

    const auto ev = jacobi_eigenvalues(population_covariance(z));
    double total = 0.0;
    for (double e : ev) total += e;
    REQUIRE(pca.explained_variance_ratio.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(pca.explained_variance_ratio[i] == doctest::Approx(ev[i] / total).epsilon(1e-10));
}

TEST_CASE("PCA invariants on correlated data") {
    // Ten features driven by three latent factors plus a little noise.
    const auto latent = gaussian(300, 3, 5);
    const auto noise = gaussian(300, 10, 6);
    Matrix x(300, 10);
    for (std::size_t i = 0; i < 300; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            x(i, j) = latent(i, j % 3) * (1.0 + 0.1 * j) + 0.01 * noise(i, j) + 10.0 * j;
        }
    }
    const auto t = fit_feature_transform(x, true, 0.999);
    const auto& pca = *t.pca;
    CHECK(pca.retained_ratio() >= 0.999);
    CHECK(pca.k() < 10);
    check_orthonormal(pca);
    for (std::size_t i = 1; i < pca.explained_variance_ratio.size(); ++i) {
        CHECK(pca.explained_variance_ratio[i] <= pca.explained_variance_ratio[i - 1]);
    }
    double sum = 0.0;
    for (double r : pca.explained_variance_ratio) sum += r;
    CHECK(sum <= 1.0 + 1e-12);

    // Largest-magnitude loading of each component is positive.
    for (std::size_t c = 0; c < pca.k(); ++c) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < pca.input_dimension(); ++j) {
            if (std::abs(pca.components(c, j)) > std::abs(pca.components(c, arg))) arg = j;
        }
        CHECK(pca.components(c, arg) > 0.0);
    }

    // Reconstruction keeps all but at most (1 - threshold) of the variance.
    const auto z = t.standardizer.apply(x);
    double lost = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto rec = pca.reconstruct(pca.apply(z.row(i)));
        for (std::size_t j = 0; j < z.cols(); ++j) {
            const double centered = z(i, j) - pca.center[j];
            lost += (z(i, j) - rec[j]) * (z(i, j) - rec[j]);
            total += centered * centered;
        }
    }
    CHECK(lost / total <= 1.0 - 0.999 + 1e-12);

    // The pretrain mean maps to the origin.
    std::vector<double> mean(10, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < 10; ++j) mean[j] += x(i, j) / 300.0;
    }
    for (double v : t.apply(mean)) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("PCA disabled is plain standardization") {
    const auto x = gaussian(40, 4, 9);
    const auto t = fit_feature_transform(x, false);
    CHECK(!t.pca);
    CHECK(t.output_dimension() == 4);
    const auto z = t.standardizer.apply(x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto out = t.apply(x.row(i));
        for (std::size_t j = 0; j < 4; ++j) CHECK(out[j] == z(i, j));
    }
}

TEST_CASE("PCA argument and dimension errors") {
    const auto x = gaussian(20, 3, 1);
    const auto z = fit_standardizer(x).apply(x);
    CHECK_THROWS(fit_pca(z, 0.0));
    CHECK_THROWS(fit_pca(z, 1.5));
    CHECK_THROWS(fit_pca(gaussian(1, 3, 2), 0.9));
    const auto t = fit_feature_transform(x, true);
    CHECK_THROWS(t.apply(std::vector<double>{1.0, 2.0}));
}

TEST_CASE("fitting is deterministic and serializes losslessly") {
    const auto x = gaussian(120, 7, 21);
    const auto a = fit_feature_transform(x, true, 0.95);
    const auto b = fit_feature_transform(x, true, 0.95);
    CHECK(a.fingerprint() == b.fingerprint());
    const auto back = feature_transform_from_json(nlohmann::json::parse(to_json(a).dump()));
    CHECK(back.fingerprint() == a.fingerprint());

    Matrix other = x;
    other(0, 0) += 1e-9;
    CHECK(fit_feature_transform(other, true, 0.95).fingerprint() != a.fingerprint());
}
