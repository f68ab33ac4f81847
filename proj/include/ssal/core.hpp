#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace ssal {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Raised for malformed inputs: bad shapes, bad config, invalid files.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a computation fails at run time (non-finite loss, IO).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string shape_string(Index rows, Index cols);

template <typename Derived>
std::string shape_of(const Eigen::DenseBase<Derived>& m)
{
    return shape_string(m.rows(), m.cols());
}

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Mixes a base seed with a stream id so that per-sample generators are
/// independent of evaluation order (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace ssal
