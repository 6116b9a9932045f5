#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "ratecost/lattice.hpp"

namespace ratecost {

// Sequence of lattice indices stored flat (dim coordinates per step).
class IndexStream {
public:
    explicit IndexStream(int dim = 1) : dim_(dim) {}

    void push(const IndexVector& index);
    void reserve(std::size_t steps) { data_.reserve(steps * static_cast<std::size_t>(dim_)); }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return data_.size() / static_cast<std::size_t>(dim_); }
    IndexVector at(std::size_t step) const;

    // Counts of each distinct index over steps [from, size()).
    std::map<IndexVector, std::uint64_t> histogram(std::size_t from = 0) const;

    // "step,i0,i1,..." with a header row.
    void write_csv(std::ostream& out) const;
    // Little-endian: int32 dim, uint64 steps, then steps * dim int64 values.
    void write_binary(std::ostream& out) const;
    static IndexStream read_binary(std::istream& in);

private:
    int dim_;
    std::vector<std::int64_t> data_;
};

struct EntropyEstimate {
    double plug_in = 0.0;       // nats
    double miller_madow = 0.0;  // nats, plug_in + (K - 1) / (2 N)
    double standard_error = 0.0;
    std::size_t support = 0;
    std::size_t samples = 0;
};

inline constexpr std::size_t kDefaultBurnIn = 1000;

// Plug-in entropy of the marginal index distribution after burn_in steps.
// Requires size() > burn_in + 1000.
EntropyEstimate empirical_entropy(const IndexStream& stream, std::size_t burn_in = kDefaultBurnIn);

// Same estimator over an explicit histogram.
EntropyEstimate entropy_from_counts(const std::vector<std::uint64_t>& counts);

}  // namespace ratecost
