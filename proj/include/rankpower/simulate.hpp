#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rankpower/exact_dist.hpp"
#include "rankpower/rank_core.hpp"

// Seeded sampling under null, Lehmann and shift alternatives, Monte Carlo
// power estimation for rank tests and comparator tests, and empirical
// sample-size matching (deficiency estimation).
//
// Reproducibility contract: a replicate's random stream is derived as
//   chunk_seed = splitmix64(seed XOR 0x9E3779B97F4A7C15 * (chunk_index + 1))
//   rep_seed   = splitmix64(chunk_seed XOR 0x9E3779B97F4A7C15 * (rep_in_chunk + 1))
// and each replicate runs its own xoshiro256++ generator, so estimates
// depend on (seed, reps, chunk_size) only, never on the thread count.

namespace rankpower::sim {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    // Uniform on the open interval (0,1): ((u >> 11) + 0.5) * 2^-53.
    double next_uniform();
    // Uniform integer in [0, bound) by rejection-free Lemire reduction.
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::uint64_t s_[4];
};

struct RngSpec {
    std::uint64_t seed = 0;
};

struct McOptions {
    std::uint32_t chunk_size = 8192;
    int threads = 1;
    exact::ExactOptions exact; // used when instantiating exact rank tests
};

struct PowerEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t reps = 0;
    std::string test_id;
    Alternative alternative = Lehmann(1.0);
};

enum class ComparatorKind {
    TwoSampleT,      // pooled-variance one-sided t test
    PermutationMean, // permutation test on Ybar - Xbar, randomized boundary
    LogisticScore,   // studentized two-sample logistic score test
                     // (median-centered tanh scores); size is asymptotic
};

std::string to_string(ComparatorKind kind);

struct RankTestSpec {
    ScoreKind scores = ScoreKind::Wilcoxon;
    double alpha = 0.05;
    bool conservative = false;
};

struct MpTestSpec {
    double a = 2.0;
    double alpha = 0.05;
    bool conservative = false;
};

struct ComparatorSpec {
    ComparatorKind kind = ComparatorKind::TwoSampleT;
    double alpha = 0.05;
    // PermutationMean: enumerate all C(N,n) reassignments when below this
    // cap, otherwise draw `samples` random reassignments (the observed one
    // is always included).
    std::uint64_t exact_cap = 200'000;
    int samples = 999;
};

using TestSpec = std::variant<RankTestSpec, MpTestSpec, ComparatorSpec>;

std::string test_id(const TestSpec& spec);

// Inversion sampling: x_i = F^{-1}(U_i); under Lehmann(a), y_j =
// F^{-1}(V_j^{1/a}); under a shift, y_j = F^{-1}(V_j) + theta. Inversion
// keeps common-random-number coupling across alternatives intact.
std::pair<std::vector<double>, std::vector<double>>
draw_two_samples(SampleSizes sizes, const Alternative& alt,
                 DistributionFamily family, Rng& rng);

PowerEstimate power_mc(const TestSpec& spec, SampleSizes sizes,
                       const Alternative& alt, DistributionFamily family,
                       std::uint64_t reps, RngSpec rng,
                       const McOptions& opts = {});

struct MatchPoint {
    int n = 0;
    int k = 0;
    int d = 0; // k - n
    double target_power = 0.0;
    double target_se = 0.0;
    double power_at_k = 0.0;
    double power_se = 0.0;
    bool matched_within_noise = false;
};

struct MatchOptions {
    std::uint64_t reps = 100'000;
    bool isotonic = false; // smooth the probed power-vs-k curve (PAVA)
    int k_max_factor = 64; // NotBracketed beyond k_max_factor * n
    double target_tolerance = 0.0; // slack when comparing power(k) >= target
    McOptions mc;
};

// For each n in the grid: estimate the power of test_A at sizes (n, n)
// against theta = c n^{-1/2}, then find the smallest k such that test_B at
// (k, k) against the same theta reaches that power. Common random numbers
// couple all evaluations at one grid point.
std::vector<MatchPoint> matched_sample_size(const TestSpec& test_B,
                                            const TestSpec& test_A,
                                            const std::vector<int>& n_grid,
                                            const Local& alt_local,
                                            RngSpec rng,
                                            const MatchOptions& opts = {});

} // namespace rankpower::sim
