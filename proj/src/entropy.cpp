#include "ratecost/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "ratecost/errors.hpp"

namespace ratecost {

void IndexStream::push(const IndexVector& index) {
    if (static_cast<int>(index.size()) != dim_) {
        throw InvalidInstance("index stream: dimension mismatch");
    }
    data_.insert(data_.end(), index.begin(), index.end());
}

IndexVector IndexStream::at(std::size_t step) const {
    const auto d = static_cast<std::size_t>(dim_);
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(step * d);
    return IndexVector(first, first + static_cast<std::ptrdiff_t>(d));
}

std::map<IndexVector, std::uint64_t> IndexStream::histogram(std::size_t from) const {
    std::map<IndexVector, std::uint64_t> out;
    const auto d = static_cast<std::size_t>(dim_);
    IndexVector key(d);
    for (std::size_t s = from; s < size(); ++s) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(s * d), d, key.begin());
        ++out[key];
    }
    return out;
}

void IndexStream::write_csv(std::ostream& out) const {
    out << "step";
    for (int j = 0; j < dim_; ++j) out << ",i" << j;
    out << '\n';
    const auto d = static_cast<std::size_t>(dim_);
    for (std::size_t s = 0; s < size(); ++s) {
        out << s;
        for (std::size_t j = 0; j < d; ++j) out << ',' << data_[s * d + j];
        out << '\n';
    }
}

void IndexStream::write_binary(std::ostream& out) const {
    const std::int32_t dim = dim_;
    const std::uint64_t steps = size();
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&steps), sizeof(steps));
    out.write(reinterpret_cast<const char*>(data_.data()),
              static_cast<std::streamsize>(data_.size() * sizeof(std::int64_t)));
}

IndexStream IndexStream::read_binary(std::istream& in) {
    std::int32_t dim = 0;
    std::uint64_t steps = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&steps), sizeof(steps));
    if (!in || dim < 1) {
        throw InvalidInstance("index stream: malformed header");
    }
    IndexStream out(dim);
    out.data_.resize(steps * static_cast<std::uint64_t>(dim));
    in.read(reinterpret_cast<char*>(out.data_.data()),
            static_cast<std::streamsize>(out.data_.size() * sizeof(std::int64_t)));
    if (!in) {
        throw InvalidInstance("index stream: truncated body");
    }
    return out;
}

EntropyEstimate entropy_from_counts(const std::vector<std::uint64_t>& counts) {
    EntropyEstimate out;
    std::uint64_t total = 0;
    for (auto c : counts) {
        total += c;
        if (c > 0) ++out.support;
    }
    if (total == 0) {
        throw InvalidInstance("entropy: empty histogram");
    }
    const double n = static_cast<double>(total);
    double h = 0.0;
    double second = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        const double lp = std::log(p);
        h -= p * lp;
        second += p * lp * lp;
    }
    out.samples = total;
    out.plug_in = h;
    out.miller_madow = h + static_cast<double>(out.support - 1) / (2.0 * n);
    out.standard_error = std::sqrt(std::max(0.0, second - h * h) / n);
    return out;
}

EntropyEstimate empirical_entropy(const IndexStream& stream, std::size_t burn_in) {
    if (stream.size() <= burn_in + 1000) {
        throw InvalidInstance("entropy: stream of " + std::to_string(stream.size()) +
                              " steps is too short for burn-in " + std::to_string(burn_in));
    }
    const auto hist = stream.histogram(burn_in);
    std::vector<std::uint64_t> counts;
    counts.reserve(hist.size());
    for (const auto& [key, count] : hist) counts.push_back(count);
    return entropy_from_counts(counts);
}

}  // namespace ratecost
