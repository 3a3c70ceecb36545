#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rankpower/errors.hpp"

// Domain types and linear rank statistic primitives for the two-sample
// problem: X_1..X_m ~ F against Y_1..Y_n ~ G, both continuous. The rank
// statistic is T = sum_j k(R_j) over the ranks R_j of the Y sample within
// the pooled ordering, with an increasing score function k.

namespace rankpower {

inline constexpr std::uint64_t kDefaultEnumerationCap = 100'000'000ull;

// Absolute tolerance for merging statistic values that are equal up to
// floating point noise (irrational score kinds).
inline constexpr double kSupportMergeTol = 1e-12;

struct SampleSizes {
    int m = 0; // first sample (X)
    int n = 0; // second sample (Y)

    SampleSizes() = default;
    SampleSizes(int m_, int n_) : m(m_), n(n_) {
        if (m < 1 || n < 1) throw InvalidArgument("SampleSizes requires m,n >= 1");
    }
    int total() const { return m + n; }
};

// The sorted set {r_1 < ... < r_n} of Y-ranks in the pooled sample. All
// statistics in scope are symmetric in the ranks, so only the set matters.
struct RankSet {
    std::vector<int> ranks;
    SampleSizes sizes;

    RankSet() = default;
    RankSet(std::vector<int> r, SampleSizes s);
};

enum class ScoreKind { Wilcoxon, VanDerWaerden, NormalExact, Savage, Custom };

std::string to_string(ScoreKind kind);

struct ScoreVector {
    ScoreKind kind = ScoreKind::Custom;
    std::vector<double> values; // k(1) .. k(N), nondecreasing

    int size() const { return static_cast<int>(values.size()); }
    double at(int rank) const { return values[static_cast<std::size_t>(rank) - 1]; }
    // True when every score is an exact integer (enables the counting DP).
    bool integer_valued() const;
};

// Builds one of the four built-in score vectors of length N.
//   Wilcoxon       k(i) = i
//   VanDerWaerden  k(i) = Phi^{-1}(i / (N+1))
//   NormalExact    k(i) = E[Z_(i)], expected i-th normal order statistic
//   Savage         k(i) = -sum_{j=i..N} 1/j
// tolerance bounds the absolute error of numerically computed scores.
ScoreVector score_vector(ScoreKind kind, int N, double tolerance = 1e-9);

// Wraps user-supplied scores; validates the nondecreasing invariant.
ScoreVector custom_scores(std::vector<double> values);

enum class DistributionFamily { Uniform01, Normal, Logistic, Exponential, Cauchy };

std::string to_string(DistributionFamily family);

// Quantile (inverse distribution function) of the standard member.
double family_quantile(DistributionFamily family, double u);

struct Lehmann {
    double a = 1.0; // G = F^a; a > 0, a = 1 is the null
    explicit Lehmann(double a_) : a(a_) {
        if (!(a > 0.0)) throw InvalidArgument("Lehmann exponent must be > 0");
    }
};

struct Shift {
    double theta = 0.0; // G(x) = F(x - theta)
    DistributionFamily family = DistributionFamily::Normal;
    Shift(double t, DistributionFamily f) : theta(t), family(f) {}
};

// Contiguous local alternative theta = c * n^{-1/2} with n the Y-sample size.
struct Local {
    double c = 1.0;
    DistributionFamily family = DistributionFamily::Normal;
    Local(double c_, DistributionFamily f) : c(c_), family(f) {
        if (!(c > 0.0)) throw InvalidArgument("Local scale c must be > 0");
    }
};

using Alternative = std::variant<Lehmann, Shift, Local>;

std::string to_string(const Alternative& alt);

// Ranks (1-based, ascending) of the y values within the pooled ascending
// sort of x and y. Any exact tie across the pooled sample raises
// DuplicateValue: the continuity assumption does not admit midranks.
RankSet ranks_of_second_sample(std::span<const double> x, std::span<const double> y);

// T = sum_j k(r_j).
double statistic(const ScoreVector& scores, const RankSet& r);
double statistic(const ScoreVector& scores, std::span<const int> ranks);

// --- Enumeration of ranksets -------------------------------------------
//
// All C(N, n) n-subsets of {1..N} in lexicographic order. Supports
// splitting by subset index for parallel consumption.

std::uint64_t rankset_count(SampleSizes sizes); // saturates at 2^64-1

class RanksetEnumerator {
public:
    // Enumerates subsets with indices [first, last) in lexicographic order.
    // Throws CapExceeded when C(N, n) exceeds cap.
    RanksetEnumerator(SampleSizes sizes, std::uint64_t cap = kDefaultEnumerationCap);
    RanksetEnumerator(SampleSizes sizes, std::uint64_t first, std::uint64_t last,
                      std::uint64_t cap = kDefaultEnumerationCap);

    // Writes the next rankset into out (size n); false when exhausted.
    bool next(std::vector<int>& out);

    std::uint64_t size() const { return last_ - first_; }

private:
    SampleSizes sizes_;
    std::uint64_t index_ = 0, first_ = 0, last_ = 0;
    std::vector<int> current_;
    bool started_ = false;
};

// Subset with the given lexicographic index (combinatorial number system).
std::vector<int> unrank_rankset(SampleSizes sizes, std::uint64_t index);

// Convenience sequential traversal.
void for_each_rankset(SampleSizes sizes,
                      const std::function<void(const std::vector<int>&)>& fn,
                      std::uint64_t cap = kDefaultEnumerationCap);

} // namespace rankpower
