#pragma once

#include <cstdint>

#include "ratecost/lattice.hpp"
#include "ratecost/linalg.hpp"

namespace ratecost {

// Fixed parameters shared by encoder and decoder: prediction model
// s^_i = A s^_{i-1} + B u_{i-1} + W^{-1/2} q_i and the weighted lattice.
struct DpcmModel {
    Matrix A;
    Matrix B;  // n x m; zero columns for an uncontrolled source
    Matrix W_sqrt;
    Matrix W_inv_sqrt;
    Lattice lattice;

    // W must be symmetric positive definite; its square root is spectral.
    static DpcmModel make(const Matrix& A, const Matrix& B, const Matrix& W, Lattice lattice);

    Vector predict(const Vector& s_hat, const Vector* u_prev) const;
};

// One replica (encoder or decoder) of the reconstruction state.
struct DpcmState {
    Vector s_hat;
    std::int64_t step = 0;
    // Running FNV-1a hash over every reconstructed state and step.
    std::uint64_t trace = 0xcbf29ce484222325ULL;

    static DpcmState zero(int n);
};

struct EncodedStep {
    IndexVector index;
    Vector innovation;  // s - prediction
    Vector s_hat;       // reconstruction after the step
};

// Encodes s_i: emits the lattice index nearest to W^{1/2}(s_i - prediction)
// and advances the state exactly as the decoder will.
EncodedStep dpcm_encode_step(DpcmState& state, const DpcmModel& model, const Vector& s,
                             const Vector* u_prev = nullptr);

// Mirror of dpcm_encode_step driven only by the index.
const Vector& dpcm_decode_step(DpcmState& state, const DpcmModel& model, const IndexVector& index,
                               const Vector* u_prev = nullptr);

// FNV-1a of the current reconstruction bytes and step counter.
std::uint64_t digest(const DpcmState& state);

}  // namespace ratecost
