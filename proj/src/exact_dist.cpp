#include "rankpower/exact_dist.hpp"
#include "rankpower/detail/parallel.hpp"
#include "rankpower/math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rankpower::exact {

namespace {

// Relative tolerance for grouping ranksets whose P_a values tie; genuinely
// tied classes evaluate to doubles a few ulp apart at most.
constexpr double kLikelihoodTieTol = 1e-9;

struct Atom {
    double value;
    double weight;
    std::uint64_t count; // subset count; meaningful for null-law paths
};

// Sorts pairs by value and combines exactly equal values. Deterministic for
// a fixed input order.
void combine_sorted(std::vector<Atom>& atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (out > 0 && atoms[out - 1].value == atoms[i].value) {
            atoms[out - 1].weight += atoms[i].weight;
            atoms[out - 1].count += atoms[i].count;
        } else {
            atoms[out++] = atoms[i];
        }
    }
    atoms.resize(out);
}

std::vector<Atom> merge_two(const std::vector<Atom>& a, const std::vector<Atom>& b) {
    std::vector<Atom> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        bool take_a;
        if (i == a.size()) take_a = false;
        else if (j == b.size()) take_a = true;
        else take_a = a[i].value <= b[j].value;
        Atom next = take_a ? a[i++] : b[j++];
        if (!out.empty() && out.back().value == next.value) {
            out.back().weight += next.weight;
            out.back().count += next.count;
        } else {
            out.push_back(next);
        }
    }
    return out;
}

// Enumerates all ranksets in fixed-size chunks, evaluates (statistic,
// weight) per subset, and reduces chunk results pairwise in index order so
// the outcome is independent of the thread count.
template <typename WeightFn>
std::vector<Atom> aggregate_ranksets(const ScoreVector& scores, SampleSizes sizes,
                                     const ExactOptions& opts, WeightFn weight) {
    const std::uint64_t count = rankset_count(sizes);
    if (count > opts.cap)
        throw CapExceeded("C(N,n) exceeds the enumeration cap; use Monte Carlo");
    const std::uint64_t chunk = std::max<std::uint32_t>(opts.chunk_size, 1);
    const std::uint64_t n_chunks = (count + chunk - 1) / chunk;
    std::vector<std::vector<Atom>> partial(n_chunks);
    detail::parallel_chunks(n_chunks, opts.threads, [&](std::uint64_t c) {
        const std::uint64_t lo = c * chunk;
        const std::uint64_t hi = std::min(lo + chunk, count);
        RanksetEnumerator en(sizes, lo, hi, opts.cap);
        std::vector<Atom> local;
        local.reserve(static_cast<std::size_t>(hi - lo));
        std::vector<int> r;
        while (en.next(r))
            local.push_back({statistic(scores, r), weight(r), 1});
        combine_sorted(local);
        partial[c] = std::move(local);
    });
    // Pairwise reduction over the chunk array.
    while (partial.size() > 1) {
        std::vector<std::vector<Atom>> next;
        next.reserve((partial.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < partial.size(); i += 2)
            next.push_back(merge_two(partial[i], partial[i + 1]));
        if (partial.size() % 2 == 1) next.push_back(std::move(partial.back()));
        partial = std::move(next);
    }
    return partial.empty() ? std::vector<Atom>{} : std::move(partial.front());
}

// Clusters exact atoms whose values agree within kSupportMergeTol and
// accumulates masses compensated.
Pmf cluster_atoms(const std::vector<Atom>& atoms, bool keep_counts,
                  const BigInt& total) {
    Pmf pmf;
    std::size_t i = 0;
    while (i < atoms.size()) {
        double head = atoms[i].value;
        math::KahanSum mass;
        std::uint64_t cluster_count = 0;
        std::size_t j = i;
        while (j < atoms.size() && atoms[j].value <= head + kSupportMergeTol) {
            mass.add(atoms[j].weight);
            cluster_count += atoms[j].count;
            ++j;
        }
        pmf.support.push_back(head);
        pmf.probs.push_back(mass.value());
        if (keep_counts) pmf.counts.push_back(BigInt(cluster_count));
        i = j;
    }
    if (keep_counts) pmf.total = total;
    return pmf;
}

double lehmann_log_prob(std::span<const int> ranks, SampleSizes sizes, double a) {
    const int N = sizes.total();
    double lp = math::log_factorial(sizes.m) + math::log_factorial(sizes.n) -
                math::log_factorial(N) + sizes.n * std::log(a);
    int e = 0;
    std::size_t idx = 0;
    for (int k = 1; k <= N; ++k) {
        if (idx < ranks.size() && ranks[idx] == k) {
            ++e;
            ++idx;
        }
        if (e > 0) lp += std::log(static_cast<double>(k)) - std::log(k + (a - 1.0) * e);
    }
    return lp;
}

std::int64_t score_as_int(double v) { return static_cast<std::int64_t>(std::llround(v)); }

} // namespace

double Pmf::upper_tail(double t) const {
    math::KahanSum tail;
    for (std::size_t i = support.size(); i-- > 0;) {
        if (support[i] > t + kSupportMergeTol)
            tail.add(probs[i]);
        else
            break;
    }
    return tail.value();
}

double Pmf::atom(double t) const {
    auto it = std::lower_bound(support.begin(), support.end(), t - kSupportMergeTol);
    if (it != support.end() && std::fabs(*it - t) <= kSupportMergeTol)
        return probs[static_cast<std::size_t>(it - support.begin())];
    return 0.0;
}

double rankset_prob_lehmann(const RankSet& r, double a) {
    return rankset_prob_lehmann(std::span<const int>(r.ranks), r.sizes, a);
}

double rankset_prob_lehmann(std::span<const int> ranks, SampleSizes sizes, double a) {
    if (!(a > 0.0)) throw InvalidArgument("Lehmann exponent must be > 0");
    const int N = sizes.total();
    if (static_cast<int>(ranks.size()) != sizes.n)
        throw LengthMismatch("rankset length must equal n");
    if (N > 50) return std::exp(lehmann_log_prob(ranks, sizes, a));
    double p = 1.0 / static_cast<double>(math::choose_saturated(N, sizes.n));
    double apow = 1.0;
    for (int j = 0; j < sizes.n; ++j) apow *= a;
    p *= apow;
    int e = 0;
    std::size_t idx = 0;
    for (int k = 1; k <= N; ++k) {
        if (idx < ranks.size() && ranks[idx] == k) {
            ++e;
            ++idx;
        }
        if (e > 0) p *= static_cast<double>(k) / (k + (a - 1.0) * e);
    }
    return p;
}

Pmf null_pmf_enumerated(const ScoreVector& scores, SampleSizes sizes,
                        const ExactOptions& opts) {
    if (scores.size() != sizes.total())
        throw LengthMismatch("score vector length must equal N");
    const std::uint64_t count = rankset_count(sizes);
    const double unit = 1.0 / static_cast<double>(count);
    auto atoms = aggregate_ranksets(scores, sizes, opts,
                                    [&](const std::vector<int>&) { return unit; });
    // The count fields carry the exact subset tally; recompute each mass as
    // count/total so enumerated and DP probabilities agree bit for bit.
    for (auto& atom : atoms)
        atom.weight = static_cast<double>(atom.count) / static_cast<double>(count);
    return cluster_atoms(atoms, scores.integer_valued(), BigInt(count));
}

Pmf null_pmf_dp(const ScoreVector& scores, SampleSizes sizes) {
    const int N = sizes.total();
    const int n = sizes.n;
    if (scores.size() != N) throw LengthMismatch("score vector length must equal N");
    if (!scores.integer_valued())
        throw InvalidArgument("counting DP requires integer-valued scores");
    if (N > 200) throw CapExceeded("counting DP supported up to N = 200");

    std::vector<std::int64_t> k(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) k[i] = score_as_int(scores.values[i]);

    // Reachable sum bounds: j smallest / j largest scores (scores are
    // nondecreasing).
    std::vector<std::int64_t> lo_sum(n + 1, 0), hi_sum(n + 1, 0);
    for (int j = 1; j <= n; ++j) {
        lo_sum[j] = lo_sum[j - 1] + k[j - 1];
        hi_sum[j] = hi_sum[j - 1] + k[N - j];
    }
    std::int64_t LO = 0, HI = 0;
    for (int j = 0; j <= n; ++j) {
        LO = std::min(LO, lo_sum[j]);
        HI = std::max(HI, hi_sum[j]);
    }
    const std::size_t width = static_cast<std::size_t>(HI - LO + 1);
    std::vector<std::vector<BigInt>> dp(static_cast<std::size_t>(n + 1),
                                        std::vector<BigInt>(width));
    dp[0][static_cast<std::size_t>(-LO)] = 1;

    // Reachable window per row as items accumulate.
    std::vector<std::int64_t> row_lo(n + 1, 0), row_hi(n + 1, -1);
    row_lo[0] = row_hi[0] = 0;
    for (int i = 1; i <= N; ++i) {
        const std::int64_t ki = k[i - 1];
        for (int j = std::min(i, n); j >= 1; --j) {
            if (row_hi[j - 1] < row_lo[j - 1]) continue;
            for (std::int64_t s = row_hi[j - 1]; s >= row_lo[j - 1]; --s) {
                const BigInt& src = dp[j - 1][static_cast<std::size_t>(s - LO)];
                if (src != 0) dp[j][static_cast<std::size_t>(s + ki - LO)] += src;
            }
            if (row_hi[j] < row_lo[j]) {
                row_lo[j] = row_lo[j - 1] + ki;
                row_hi[j] = row_hi[j - 1] + ki;
            } else {
                row_lo[j] = std::min(row_lo[j], row_lo[j - 1] + ki);
                row_hi[j] = std::max(row_hi[j], row_hi[j - 1] + ki);
            }
        }
    }

    Pmf pmf;
    BigInt total = 0;
    for (const BigInt& c : dp[n]) total += c;
    const double total_d = total.convert_to<double>();
    for (std::int64_t s = row_lo[n]; s <= row_hi[n]; ++s) {
        const BigInt& c = dp[n][static_cast<std::size_t>(s - LO)];
        if (c == 0) continue;
        pmf.support.push_back(static_cast<double>(s));
        pmf.probs.push_back(c.convert_to<double>() / total_d);
        pmf.counts.push_back(c);
    }
    pmf.total = total;
    return pmf;
}

namespace {

// count / total with counts far beyond double range: scale the numerator
// by 2^64 in integer arithmetic, then divide out. Absolute error below
// 2^-64; relative error negligible anywhere a tail sum can feel it.
double big_ratio(const BigInt& num, const BigInt& den) {
    BigInt scaled = (num << 64) / den;
    return scaled.convert_to<double>() * 0x1.0p-64;
}

} // namespace

Pmf wilcoxon_null_pmf_large(SampleSizes sizes) {
    const int m = sizes.m, n = sizes.n;
    const int N = sizes.total();
    if (N > 2000) throw CapExceeded("Wilcoxon convolution supported up to N = 2000");
    const std::int64_t V = static_cast<std::int64_t>(m) * n;
    // Gaussian binomial [N over n]_q built as prod_i (1-q^{m+i})/(1-q^i) in
    // exact integers (the floating-point variant cancels catastrophically);
    // the coefficient of q^v counts the n-subsets with rank sum
    // n(n+1)/2 + v.
    std::vector<BigInt> c(static_cast<std::size_t>(V + 1));
    c[0] = 1;
    for (int i = 1; i <= n; ++i) {
        const std::int64_t degree = static_cast<std::int64_t>(i) * m;
        for (std::int64_t v = i; v <= degree; ++v) c[v] += c[v - i];
        for (std::int64_t v = degree; v >= m + i; --v) c[v] -= c[v - (m + i)];
    }
    BigInt total = 0;
    for (const BigInt& x : c) total += x;
    Pmf pmf;
    pmf.support.reserve(c.size());
    pmf.probs.reserve(c.size());
    pmf.counts.reserve(c.size());
    const double base = 0.5 * static_cast<double>(n) * (n + 1);
    for (std::int64_t v = 0; v <= V; ++v) {
        const BigInt& count = c[static_cast<std::size_t>(v)];
        if (count == 0) continue;
        double p = big_ratio(count, total);
        if (p <= 0.0) continue; // beyond double resolution in the far tail
        pmf.support.push_back(base + static_cast<double>(v));
        pmf.probs.push_back(p);
        pmf.counts.push_back(count);
    }
    pmf.total = total;
    return pmf;
}

Pmf null_pmf(const ScoreVector& scores, SampleSizes sizes, const ExactOptions& opts) {
    const int N = sizes.total();
    if (scores.integer_valued()) {
        if (N <= 200) return null_pmf_dp(scores, sizes);
        if (scores.kind == ScoreKind::Wilcoxon) return wilcoxon_null_pmf_large(sizes);
    }
    return null_pmf_enumerated(scores, sizes, opts);
}

Pmf alt_pmf(const ScoreVector& scores, SampleSizes sizes, double a,
            const ExactOptions& opts) {
    if (scores.size() != sizes.total())
        throw LengthMismatch("score vector length must equal N");
    auto atoms = aggregate_ranksets(scores, sizes, opts, [&](const std::vector<int>& r) {
        return rankset_prob_lehmann(std::span<const int>(r), sizes, a);
    });
    return cluster_atoms(atoms, false, 0);
}

RandomizedTest critical_value(const ScoreVector& scores, SampleSizes sizes,
                              double alpha, bool conservative,
                              const ExactOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0,1)");
    RandomizedTest test;
    test.alpha = alpha;
    test.scores = scores;
    test.sizes = sizes;
    test.null = null_pmf(scores, sizes, opts);

    const auto& pmf = test.null;
    const std::size_t K = pmf.support.size();
    // tail[i] = P(T > support[i]), accumulated from the top.
    std::vector<double> tail(K, 0.0);
    math::KahanSum acc;
    for (std::size_t i = K; i-- > 0;) {
        tail[i] = acc.value();
        acc.add(pmf.probs[i]);
    }
    std::size_t pick = K - 1;
    for (std::size_t i = 0; i < K; ++i) {
        if (tail[i] <= alpha) {
            pick = i;
            break;
        }
    }
    test.threshold = pmf.support[pick];
    if (!conservative && pmf.probs[pick] > 0.0)
        test.gamma = std::clamp((alpha - tail[pick]) / pmf.probs[pick], 0.0, 1.0);
    else
        test.gamma = 0.0;
    return test;
}

double exact_power(const RandomizedTest& test, double a, const ExactOptions& opts) {
    Pmf alt = alt_pmf(test.scores, test.sizes, a, opts);
    return alt.upper_tail(test.threshold) + test.gamma * alt.atom(test.threshold);
}

MpTest::Region MpTest::classify(double pa_value) const {
    if (!boundary_set.empty()) {
        if (std::fabs(pa_value - boundary_prob) <= kLikelihoodTieTol * boundary_prob)
            return Region::Boundary;
        return pa_value > boundary_prob ? Region::Reject : Region::Accept;
    }
    if (reject_set.empty()) return Region::Accept;
    return pa_value >= boundary_prob * (1.0 - kLikelihoodTieTol) ? Region::Reject
                                                                 : Region::Accept;
}

MpTest mp_test(SampleSizes sizes, double a, double alpha, bool conservative,
               const ExactOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0,1)");
    if (a == 1.0) throw InvalidArgument("mp_test requires a != 1");

    const std::uint64_t count = rankset_count(sizes);
    if (count > opts.cap)
        throw CapExceeded("C(N,n) exceeds the enumeration cap; use Monte Carlo");

    std::vector<std::vector<int>> sets;
    std::vector<double> pa;
    sets.reserve(static_cast<std::size_t>(count));
    pa.reserve(static_cast<std::size_t>(count));
    for_each_rankset(sizes, [&](const std::vector<int>& r) {
        sets.push_back(r);
        pa.push_back(rankset_prob_lehmann(std::span<const int>(r), sizes, a));
    }, opts.cap);

    std::vector<std::size_t> order(sets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return pa[x] > pa[y]; });

    const double alpha_count = alpha * static_cast<double>(count);
    MpTest test;
    test.a = a;
    test.alpha = alpha;
    test.sizes = sizes;

    std::size_t pos = 0;
    std::uint64_t taken = 0;
    while (pos < order.size()) {
        // Tied class: members within relative kLikelihoodTieTol of the head.
        const double head = pa[order[pos]];
        std::size_t end = pos;
        while (end < order.size() &&
               pa[order[end]] >= head * (1.0 - kLikelihoodTieTol))
            ++end;
        const std::uint64_t class_size = end - pos;
        if (static_cast<double>(taken + class_size) <=
            alpha_count * (1.0 + 1e-12) + 1e-12) {
            for (std::size_t i = pos; i < end; ++i)
                test.reject_set.emplace_back(sets[order[i]], sizes);
            taken += class_size;
            test.boundary_prob = head;
            pos = end;
            continue;
        }
        // The class straddles the level: it becomes the randomized boundary.
        const double remaining = alpha_count - static_cast<double>(taken);
        if (remaining > 1e-12) {
            for (std::size_t i = pos; i < end; ++i)
                test.boundary_set.emplace_back(sets[order[i]], sizes);
            test.boundary_prob = head;
            test.gamma = conservative
                             ? 0.0
                             : std::clamp(remaining / static_cast<double>(class_size),
                                          0.0, 1.0);
        }
        break;
    }
    return test;
}

double exact_power(const MpTest& test, double a_eval, const ExactOptions&) {
    math::KahanSum reject, boundary;
    for (const RankSet& r : test.reject_set)
        reject.add(rankset_prob_lehmann(r, a_eval));
    for (const RankSet& r : test.boundary_set)
        boundary.add(rankset_prob_lehmann(r, a_eval));
    return reject.value() + test.gamma * boundary.value();
}

ScoreVector lmp_scores(int N) { return score_vector(ScoreKind::Savage, N); }

} // namespace rankpower::exact
