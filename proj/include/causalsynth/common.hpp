#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace causal {

// Error taxonomy. The CLI maps InputError/StructuralError/IoError to exit
// code 2 and NumericError to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed caller input: unknown ids, schema violations, too few rows.
struct InputError : Error {
    using Error::Error;
};

// Graph-structural violations: cycles, layering breaks, non-extendable CPDAGs.
struct StructuralError : Error {
    using Error::Error;
};

// Numerical failure: singular systems, degenerate responses.
struct NumericError : Error {
    using Error::Error;
};

// File I/O and container-format failures, with a machine-readable kind so
// callers can distinguish a stale format from a corrupted file.
struct IoError : Error {
    enum class Kind { open, parse, version, checksum, truncated };
    Kind kind;
    IoError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

// Deterministic seeded random stream. The engine (mt19937_64) is fully
// specified by the standard; the variate transforms below are our own, so a
// seed pins the exact draw sequence independent of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derives an independent child seed (splitmix64 mix); used for per-tree /
    // per-run substreams so parallel execution cannot reorder draws.
    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id);

    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // N(0, 1), Box-Muller, no cached spare
    std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}, n >= 1

    // First k entries of a Fisher-Yates shuffle of 0..n-1; k = n gives a
    // full permutation.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k);
    std::vector<std::uint32_t> permutation(std::uint32_t n) { return sample_without_replacement(n, n); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Runs fn(i) for i in [0, n). Worker count comes from the CAUSALSYNTH_WORKERS
// environment variable (default: hardware concurrency). fn must only touch
// state owned by index i; results are then independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
int worker_count();

namespace stats {

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // sample variance, n-1
double sd(const std::vector<double>& v);
// Linear-interpolation quantile (R type 7) of already-sorted values, p in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double p);
double normal_cdf(double x);

}  // namespace stats

}  // namespace causal
