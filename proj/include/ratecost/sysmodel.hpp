#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ratecost/linalg.hpp"

namespace ratecost {

enum class NoiseFamily { gaussian, laplace, uniform };

std::string to_string(NoiseFamily family);
NoiseFamily parse_noise_family(const std::string& name);

// (c0, c1)-regular density: |grad f(x)| <= (c1 |x| + c0) f(x).
struct Regularity {
    double c0 = 0.0;
    double c1 = 0.0;
};

// Zero-mean noise X = U z where U is orthogonal and z has independent
// coordinates of the given family with variances `variances`. Gaussian noise
// may carry any covariance; Laplace and uniform are restricted to this
// independent-coordinates form so that h(X) stays closed form.
class NoiseModel {
public:
    static NoiseModel gaussian(const Matrix& covariance);
    static NoiseModel laplace(const Vector& variances, const Matrix& basis);
    static NoiseModel laplace(const Vector& variances);
    static NoiseModel uniform(const Vector& variances, const Matrix& basis);
    static NoiseModel uniform(const Vector& variances);

    // Builds a model from a covariance. For non-Gaussian families the
    // covariance must be diagonal in `basis` (identity when absent).
    static NoiseModel make(NoiseFamily family, const Matrix& covariance,
                           const std::optional<Matrix>& basis = std::nullopt);

    NoiseFamily family() const noexcept { return family_; }
    int dim() const noexcept { return static_cast<int>(variances_.size()); }
    const Matrix& covariance() const noexcept { return covariance_; }
    const Matrix& basis() const noexcept { return basis_; }
    const Vector& variances() const noexcept { return variances_; }

    // Var{X} = tr(Sigma).
    double variance() const { return variances_.sum(); }

    bool singular() const;

    // Differential entropy h(X) in nats. Throws Unsupported when singular.
    double differential_entropy() const;

    // N(X) = exp(2 h(X) / n) / (2 pi e).
    double entropy_power() const;

    // Entropy power of G X for a full-row-rank l x n matrix G. Gaussian: any
    // G. Other families: only when G U mixes exactly l coordinates of z.
    double projected_entropy_power(const Matrix& G) const;

    std::optional<Regularity> regularity() const;

    Vector sample(std::mt19937_64& rng) const;

private:
    NoiseModel(NoiseFamily family, Matrix basis, Vector variances);

    NoiseFamily family_;
    Matrix basis_;
    Vector variances_;
    Matrix covariance_;
};

// Per-coordinate differential entropy (nats) of a zero-mean scalar of the
// given family and variance.
double scalar_entropy(NoiseFamily family, double variance);

struct LinearPlant {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix Q;
    Matrix R;
    NoiseModel noise_v;
    std::optional<NoiseModel> noise_w;
    std::optional<NoiseModel> noise_x1;

    int n() const noexcept { return static_cast<int>(A.rows()); }
    int m() const noexcept { return static_cast<int>(B.cols()); }
    int k() const noexcept { return static_cast<int>(C.rows()); }

    // C = I_n and no observation noise.
    bool fully_observed() const;

    // Convenience constructor for the fully observed case (C = I).
    static LinearPlant fully_observed_plant(Matrix A, Matrix B, Matrix Q, Matrix R,
                                            NoiseModel noise_v,
                                            std::optional<NoiseModel> noise_x1 = std::nullopt);
};

struct ValidationReport {
    bool controllable = false;
    bool observable = false;
    int rank_B = 0;
    bool psd_ok = false;
    std::vector<std::string> messages;

    bool ok() const noexcept { return messages.empty(); }
};

// Throws InvalidInstance on dimension mismatch.
void check_dimensions(const LinearPlant& plant);

ValidationReport validate(const LinearPlant& plant);

}  // namespace ratecost
