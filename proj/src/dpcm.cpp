#include "ratecost/dpcm.hpp"

#include <cstring>

#include "ratecost/errors.hpp"

namespace ratecost {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t hash_state(std::uint64_t h, const Vector& s, std::int64_t step) {
    h = fnv1a(h, s.data(), sizeof(double) * static_cast<std::size_t>(s.size()));
    return fnv1a(h, &step, sizeof(step));
}

void advance(DpcmState& state, Vector next) {
    state.s_hat = std::move(next);
    ++state.step;
    state.trace = hash_state(state.trace, state.s_hat, state.step);
}

}  // namespace

DpcmModel DpcmModel::make(const Matrix& A, const Matrix& B, const Matrix& W, Lattice lattice) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || W.rows() != n || W.cols() != n ||
        lattice.dim() != n) {
        throw InvalidInstance("dpcm: inconsistent dimensions");
    }
    if (linalg::min_eigenvalue(linalg::symmetrize(W)) <= 0.0) {
        throw InvalidInstance("dpcm: weight matrix must be positive definite");
    }
    const Matrix sym = linalg::symmetrize(W);
    return DpcmModel{A, B, linalg::sqrt_psd(sym), linalg::inv_sqrt_pd(sym), std::move(lattice)};
}

Vector DpcmModel::predict(const Vector& s_hat, const Vector* u_prev) const {
    Vector pred = A * s_hat;
    if (u_prev != nullptr && B.cols() > 0) {
        pred += B * *u_prev;
    }
    return pred;
}

DpcmState DpcmState::zero(int n) {
    DpcmState s;
    s.s_hat = Vector::Zero(n);
    return s;
}

EncodedStep dpcm_encode_step(DpcmState& state, const DpcmModel& model, const Vector& s,
                             const Vector* u_prev) {
    if (s.size() != state.s_hat.size()) {
        throw InvalidInstance("dpcm: source dimension does not match state");
    }
    EncodedStep out;
    const Vector pred = model.predict(state.s_hat, u_prev);
    out.innovation = s - pred;
    out.index = model.lattice.nearest_index(model.W_sqrt * out.innovation);
    // Rebuild from the index, exactly as the decoder does, so both replicas
    // stay bit-identical.
    advance(state, pred + model.W_inv_sqrt * model.lattice.point(out.index));
    out.s_hat = state.s_hat;
    return out;
}

const Vector& dpcm_decode_step(DpcmState& state, const DpcmModel& model, const IndexVector& index,
                               const Vector* u_prev) {
    if (static_cast<Eigen::Index>(index.size()) != state.s_hat.size()) {
        throw InvalidInstance("dpcm: unknown index (dimension " + std::to_string(index.size()) +
                              ")");
    }
    const Vector pred = model.predict(state.s_hat, u_prev);
    advance(state, pred + model.W_inv_sqrt * model.lattice.point(index));
    return state.s_hat;
}

std::uint64_t digest(const DpcmState& state) {
    return hash_state(kFnvOffset, state.s_hat, state.step);
}

}  // namespace ratecost
