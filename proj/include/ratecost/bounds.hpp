#pragma once

#include <optional>
#include <string>

#include "ratecost/linalg.hpp"
#include "ratecost/riccati.hpp"
#include "ratecost/sysmodel.hpp"

// Converse (lower) and achievability (upper) bounds on the rate-cost and
// entropy-cost functions. Every rate is in nats; bit conversion happens only
// at the reporting boundary.
namespace ratecost::bounds {

enum class BoundKind {
    thm1,
    thm3,
    thm4,
    thm5,
    thm7,
    thm8,
    slb_thm9,
    slb_thm11,
    slb_thm12,
    upper_thm2,
    upper_thm6,
    unstable_floor,
};

std::string to_string(BoundKind kind);
BoundKind parse_bound_kind(const std::string& name);

struct BoundPoint {
    double b = 0.0;
    double rate_nats = 0.0;
    BoundKind kind = BoundKind::thm1;
};

inline constexpr double kNatsPerBit = 0.69314718055994530942;
inline double nats_to_bits(double nats) { return nats / kNatsPerBit; }
inline double bits_to_nats(double bits) { return bits * kNatsPerBit; }

// Change of basis A = J T J^{-1} in which the leading l coordinates span an
// A-invariant subspace carrying the l largest-magnitude eigenvalues, plus a
// diagonal weight Lambda with J'MJ - Lambda >= 0.
struct ProjectionSpec {
    Matrix J;
    int ell = 0;
    Vector lambda;  // diagonal of Lambda, length n

    // Pi_l = [I_l; 0]
    Matrix pi() const;
    // Pi_l' J^{-1}, an l x n matrix.
    Matrix selector() const;
    // |det(Pi' J^{-1} A J Pi)|^{1/l}
    double a_prime(const Matrix& A) const;
    // (prod of the leading l entries of Lambda)^{1/l}
    double mu_prime() const;
};

// Throws InvalidInstance unless J is invertible, 0 <= ell <= n, lambda >= 0
// and J'MJ - diag(lambda) >= 0.
void check_projection(const ProjectionSpec& proj, const Matrix& M);

// Builds J by orthogonal (subspace) iteration on A so that its leading ell
// columns span the dominant invariant subspace; Lambda defaults to
// lambda_min(J'MJ) I. Requires |lambda_ell| > |lambda_{ell+1}| when ell < n.
ProjectionSpec make_projection(const Matrix& A, const Matrix& M, int ell,
                               const std::optional<Vector>& lambda = std::nullopt);

// Number of eigenvalues of A with magnitude >= 1.
int count_unstable(const Matrix& A);

// sum over |lambda_i(A)| >= 1 of log|lambda_i(A)|.
double unstable_floor(const Matrix& A);

// ---------------------------------------------------------------------------
// Fully observed converses.

double thm1_lower(const LinearPlant& plant, const ControlRiccati& control,
                  double noise_entropy_power, double b);

double thm3_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const ProjectionSpec& proj, double b);

// Result of a bound that involves an infimum over i >= 1, truncated at i_max.
struct InfimumBound {
    double rate_nats = 0.0;
    double a = 0.0;
    int argmin = 0;
    // Last two terms of the sequence agreed to 1e-9; otherwise advisory.
    bool converged = false;
};

InfimumBound thm4_lower(const LinearPlant& plant, const ControlRiccati& control, double b,
                        int i_max = 64);

// ---------------------------------------------------------------------------
// Partially observed converses (Gaussian noises).

double thm5_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const FilterRiccati& filter, double b);

double thm7_lower(const LinearPlant& plant, const ControlRiccati& control,
                  const FilterRiccati& filter, const ProjectionSpec& proj, double b);

InfimumBound thm8_lower(const LinearPlant& plant, const ControlRiccati& control,
                        const FilterRiccati& filter, double b, int i_max = 64);

// ---------------------------------------------------------------------------
// Causal Shannon lower bounds for S_{i+1} = A S_i + V_i.

// (n/2) log(a^2 + w N(V) / (d/n)), a = |det A|^{1/n}, w = lim det(W)^{1/n}.
double causal_slb(double a, double w, double noise_entropy_power, int n, double d);

// Projected variant: weights V_w with V_w'V_w <= J'WJ, V_w block diagonal
// with respect to the leading ell coordinates.
double slb_projected(const Matrix& A, const ProjectionSpec& proj, const Matrix& W,
                     const Matrix& V_w, const NoiseModel& noise, double d);

// Low-rank variant: W -> L'L (L is m x n), V_i = K V'_i (K is n x k), k >= m.
InfimumBound slb_lowrank(const Matrix& A, const Matrix& L, const Matrix& K,
                         const NoiseModel& noise_prime, double d, int i_max = 64);

// ---------------------------------------------------------------------------
// Lattice quantizer entropy and achievability.

// alpha_n = (n/2) log(2e/n) + log Gamma(n/2 + 1)
double alpha_n(int n);

// Closed-form covering efficiency of A_n^*.
double rho_a_n_star(int n);

// Covering efficiency of the lattice the scheme uses in dimension n
// (Z for n = 1, A_n^* otherwise).
double default_lattice_rho(int n);

// Right side of the Rogers covering bound, log sqrt(2 pi e) (log n + log log n + c),
// in nats. Reference curve only; c has no authoritative value.
double rogers_reference(int n, double c = 2.0);

// min over d~ <= d of (n/2) log(N/(d~/n)) + alpha_n + n log rho
//   + 2 d~^{1/2} (c1 sqrt(Var) + c0 + c1 d~^{1/2}).
// d~ ranges over 64 log-spaced points on [1e-6 d, d] with golden-section
// refinement around the best grid point.
double lattice_entropy_upper(const Regularity& reg, int n, double rho, double variance,
                             double entropy_power, double d);

struct UpperBound {
    double rate_nats = 0.0;
    double leading = 0.0;     // first two terms (equal to the matching converse)
    double shape_term = 0.0;  // alpha_n + n log rho
    double smooth_term = 0.0; // O(d^{1/2}) correction, >= 0
    double design_distortion = 0.0;  // b_min + design_distortion <= b
};

// Achievability of the innovation lattice scheme at cost b. filter == nullptr
// selects the fully observed form; otherwise the partially observed one.
// Since H(b) is nonincreasing, the result is the best design distortion in
// [1e-6 d, d], d = b - b_min: 48 log-spaced candidates refined by
// golden-section search around the best one.
// rho defaults to default_lattice_rho(n).
UpperBound entropy_cost_upper(const LinearPlant& plant, const ControlRiccati& control,
                              const FilterRiccati* filter, double b,
                              std::optional<double> rho = std::nullopt);

// ---------------------------------------------------------------------------
// Variable-rate conversions (bits).

// psi(x) = x + log2(x + 1) + log2 e
double psi(double x);
// Functional inverse of psi on [0, inf); returns 0 for y <= psi(0).
double psi_inverse(double y);

struct VarRateBounds {
    double lower_bits = 0.0;  // psi^{-1}(R)
    double upper_bits = 0.0;  // H
};

VarRateBounds varrate_convert(double rate_lower_bits, double entropy_upper_bits);

}  // namespace ratecost::bounds
