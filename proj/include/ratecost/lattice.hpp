#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ratecost/linalg.hpp"

namespace ratecost {

// Integer coordinates of a lattice point in the lattice basis.
using IndexVector = std::vector<std::int64_t>;

enum class LatticeFamily { integer_z, a_n_star };

std::string to_string(LatticeFamily family);
LatticeFamily parse_lattice_family(const std::string& name);

// A scaled lattice scale * G Z^n with a nearest-point decoder.
//
// integer_z: G = I, decoded by coordinate-wise rounding (ties to even).
// a_n_star:  the projection of Z^{n+1} onto the sum-zero hyperplane H,
//            written in an orthonormal basis E of H. It is the union of the
//            n+1 cosets g_i + A_n, g_i = P_H(e_1 + ... + e_i), each decoded
//            with the A_n rounding-and-correction rule.
//
// Near-ties between candidates (relative 1e-12) resolve to the candidate
// whose index has even coordinate sum, then to the lexicographically smaller
// index.
class Lattice {
public:
    static Lattice integer_z(int n);
    static Lattice a_n_star(int n);
    // integer_z for n = 1, a_n_star for 2 <= n <= 8.
    static Lattice for_dimension(int n);
    static Lattice make(LatticeFamily family, int n);

    LatticeFamily family() const noexcept { return family_; }
    int dim() const noexcept { return static_cast<int>(base_.rows()); }
    double scale() const noexcept { return scale_; }

    // Scaled generator (columns are basis vectors).
    Matrix generator() const { return scale_ * base_; }
    double covering_radius() const { return scale_ * base_radius_; }
    // |det generator|
    double cell_volume() const;
    // (Vol(ball of radius covering_radius) / cell_volume)^{1/n}
    double rho() const;

    IndexVector nearest_index(const Vector& x) const;
    Vector point(const IndexVector& index) const;
    Vector nearest(const Vector& x) const { return point(nearest_index(x)); }

    Lattice scaled(double t) const;
    // Scaled so that covering_radius^2 == d.
    Lattice scaled_to_distortion(double d) const;

private:
    Lattice(LatticeFamily family, Matrix base, double base_radius);

    IndexVector decode_a_n_star(const Vector& x) const;

    LatticeFamily family_;
    Matrix base_;         // unscaled generator
    Matrix embedding_;    // (n+1) x n orthonormal basis of H (a_n_star only)
    double base_radius_;  // unscaled covering radius
    double scale_ = 1.0;
};

}  // namespace ratecost
