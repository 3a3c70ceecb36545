#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <vector>

#include "rankpower/rank_core.hpp"

// Exact null and Lehmann-alternative laws of linear rank statistics,
// exact-size randomized tests, and most-powerful / locally most powerful
// rank test construction.
//
// Under H0 every rankset is equally likely (probability 1/C(N,n)). Under
// the Lehmann alternative (F, F^a) the rankset law is that of (U, U^a),
// given in closed form by
//
//     P_a(r) = (m! n! / N!) * a^n * prod_{k=1..N} k / (k + (a-1) e_k(r)),
//
// with e_k(r) = #{j : r_j <= k}. The closed form is validated against an
// independent iterated-quadrature oracle and Monte Carlo in the test suite
// before anything downstream relies on it.

namespace rankpower::exact {

using BigInt = boost::multiprecision::cpp_int;

struct ExactOptions {
    std::uint64_t cap = kDefaultEnumerationCap;
    int threads = 1;
    std::uint32_t chunk_size = 1u << 16; // fixed-size chunks keep parallel
                                         // reductions bit-stable
};

struct Pmf {
    std::vector<double> support; // strictly ascending statistic values
    std::vector<double> probs;   // matching positive masses, sums to 1

    // Exact subset counts when built by integer-score counting; empty when
    // the law was accumulated in floating point.
    std::vector<BigInt> counts;
    BigInt total = 0;

    bool exact() const { return !counts.empty(); }
    // P(T > t) and P(T = t); t is matched against support within
    // kSupportMergeTol.
    double upper_tail(double t) const;
    double atom(double t) const;
};

// Exact law of T under H0. Dispatches to the counting DP for
// integer-valued scores (exact counts, no enumeration cap up to N = 200),
// to a scaled convolution for Wilcoxon scores beyond that, and to subset
// enumeration otherwise.
Pmf null_pmf(const ScoreVector& scores, SampleSizes sizes,
             const ExactOptions& opts = {});

// The two explicit paths, exposed so they can be cross-validated.
Pmf null_pmf_enumerated(const ScoreVector& scores, SampleSizes sizes,
                        const ExactOptions& opts = {});
Pmf null_pmf_dp(const ScoreVector& scores, SampleSizes sizes);
// Wilcoxon rank-sum null law via the Gaussian-binomial counting
// convolution in exact integer arithmetic; handles sample sizes far beyond
// the generic counting DP (up to N = 2000).
Pmf wilcoxon_null_pmf_large(SampleSizes sizes);

// P_a(ranks = r) under (U, U^a); log-space above N = 50.
double rankset_prob_lehmann(const RankSet& r, double a);
double rankset_prob_lehmann(std::span<const int> ranks, SampleSizes sizes, double a);

// Exact law of T under the Lehmann alternative.
Pmf alt_pmf(const ScoreVector& scores, SampleSizes sizes, double a,
            const ExactOptions& opts = {});

// Rejects when T > threshold; rejects with probability gamma when
// T = threshold, which makes the size exactly alpha. conservative = true
// forces gamma = 0 (size <= alpha).
struct RandomizedTest {
    double threshold = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    ScoreVector scores;
    SampleSizes sizes;
    Pmf null;

    double size() const { return null.upper_tail(threshold) + gamma * null.atom(threshold); }
};

RandomizedTest critical_value(const ScoreVector& scores, SampleSizes sizes,
                              double alpha, bool conservative = false,
                              const ExactOptions& opts = {});

double exact_power(const RandomizedTest& test, double a,
                   const ExactOptions& opts = {});

// Most powerful level-alpha rank test against (F, F^a), by likelihood
// ratio ordering of ranksets (Neyman-Pearson). Ranksets whose P_a ties the
// boundary value form one class and share the same gamma.
struct MpTest {
    double a = 0.0;
    double alpha = 0.0;
    SampleSizes sizes;
    std::vector<RankSet> reject_set;
    std::vector<RankSet> boundary_set;
    double gamma = 0.0;
    // Common P_a value of the boundary class; equals the smallest P_a of
    // the reject set when the boundary is empty.
    double boundary_prob = 0.0;

    enum class Region { Reject, Boundary, Accept };
    Region classify(double pa_value) const;
};

MpTest mp_test(SampleSizes sizes, double a, double alpha,
               bool conservative = false, const ExactOptions& opts = {});

double exact_power(const MpTest& test, double a_eval,
                   const ExactOptions& opts = {});

// Scores of the locally most powerful rank test in the Lehmann exponent
// at a = 1: the Savage scores. The defining derivative identity
// d/da log P_a(r) |_{a=1} = n + sum_j k_S(r_j) is verified numerically in
// the test suite.
ScoreVector lmp_scores(int N);

} // namespace rankpower::exact
