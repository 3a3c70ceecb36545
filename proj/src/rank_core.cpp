#include "rankpower/rank_core.hpp"
#include "rankpower/math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rankpower {

RankSet::RankSet(std::vector<int> r, SampleSizes s) : ranks(std::move(r)), sizes(s) {
    if (static_cast<int>(ranks.size()) != sizes.n)
        throw LengthMismatch("RankSet length must equal n");
    int prev = 0;
    for (int v : ranks) {
        if (v <= prev || v > sizes.total())
            throw InvalidArgument("RankSet must be strictly increasing within [1, N]");
        prev = v;
    }
}

std::string to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::Wilcoxon: return "wilcoxon";
        case ScoreKind::VanDerWaerden: return "vdw";
        case ScoreKind::NormalExact: return "normal";
        case ScoreKind::Savage: return "savage";
        case ScoreKind::Custom: return "custom";
    }
    return "unknown";
}

bool ScoreVector::integer_valued() const {
    for (double v : values)
        if (v != std::floor(v) || std::fabs(v) > 1e15) return false;
    return true;
}

namespace {

// E[Z_(i)] of N standard normals, by adaptive quadrature of the order
// statistic density in log space.
double expected_normal_order_statistic(int i, int N, double tol) {
    const double lc = std::log(static_cast<double>(N)) + math::log_choose(N - 1, i - 1);
    auto integrand = [&](double z) -> double {
        double lphi = -0.5 * z * z - 0.918938533204672742; // log normal pdf
        double cdf = math::normal_cdf(z);
        if (cdf <= 0.0 || cdf >= 1.0) return 0.0;
        double logw = lc + (i - 1) * std::log(cdf) + (N - i) * std::log1p(-cdf) + lphi;
        if (logw < -745.0) return 0.0;
        return z * std::exp(logw);
    };
    const double R = 10.0; // tail mass beyond is far below any useful tol
    return math::integrate_adaptive(integrand, -R, R, tol * 0.5);
}

} // namespace

ScoreVector score_vector(ScoreKind kind, int N, double tolerance) {
    if (N < 2) throw InvalidArgument("score_vector requires N >= 2");
    if (!(tolerance > 0.0)) throw InvalidArgument("score tolerance must be > 0");
    ScoreVector sv;
    sv.kind = kind;
    sv.values.resize(static_cast<std::size_t>(N));
    switch (kind) {
        case ScoreKind::Wilcoxon:
            for (int i = 1; i <= N; ++i) sv.values[i - 1] = static_cast<double>(i);
            break;
        case ScoreKind::VanDerWaerden:
            for (int i = 1; i <= N; ++i)
                sv.values[i - 1] = math::normal_quantile(static_cast<double>(i) / (N + 1));
            break;
        case ScoreKind::NormalExact:
            // Antisymmetry k(i) = -k(N+1-i) halves the quadrature work.
            for (int i = 1; 2 * i <= N + 1; ++i) {
                double v = expected_normal_order_statistic(i, N, tolerance);
                sv.values[i - 1] = v;
                sv.values[N - i] = -v;
            }
            if (N % 2 == 1) sv.values[N / 2] = 0.0;
            break;
        case ScoreKind::Savage: {
            double tail = 0.0;
            for (int i = N; i >= 1; --i) {
                tail += 1.0 / i;
                sv.values[i - 1] = -tail;
            }
            break;
        }
        case ScoreKind::Custom:
            throw InvalidArgument("custom scores must be built via custom_scores()");
    }
    return sv;
}

ScoreVector custom_scores(std::vector<double> values) {
    if (values.size() < 2) throw InvalidArgument("custom scores require N >= 2");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[i - 1])
            throw InvalidArgument("scores must be nondecreasing");
    ScoreVector sv;
    sv.kind = ScoreKind::Custom;
    sv.values = std::move(values);
    return sv;
}

std::string to_string(DistributionFamily family) {
    switch (family) {
        case DistributionFamily::Uniform01: return "uniform";
        case DistributionFamily::Normal: return "normal";
        case DistributionFamily::Logistic: return "logistic";
        case DistributionFamily::Exponential: return "exponential";
        case DistributionFamily::Cauchy: return "cauchy";
    }
    return "unknown";
}

double family_quantile(DistributionFamily family, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw InvalidArgument("family_quantile requires u in (0,1)");
    switch (family) {
        case DistributionFamily::Uniform01: return u;
        case DistributionFamily::Normal: return math::normal_quantile(u);
        case DistributionFamily::Logistic: return std::log(u / (1.0 - u));
        case DistributionFamily::Exponential: return -std::log1p(-u);
        case DistributionFamily::Cauchy:
            return std::tan(3.14159265358979323846 * (u - 0.5));
    }
    throw InvalidArgument("unknown family");
}

std::string to_string(const Alternative& alt) {
    if (const auto* l = std::get_if<Lehmann>(&alt))
        return "lehmann(a=" + std::to_string(l->a) + ")";
    if (const auto* s = std::get_if<Shift>(&alt))
        return "shift(theta=" + std::to_string(s->theta) + "," + to_string(s->family) + ")";
    const auto& lo = std::get<Local>(alt);
    return "local(c=" + std::to_string(lo.c) + "," + to_string(lo.family) + ")";
}

RankSet ranks_of_second_sample(std::span<const double> x, std::span<const double> y) {
    SampleSizes sizes(static_cast<int>(x.size()), static_cast<int>(y.size()));
    const int N = sizes.total();
    struct Entry {
        double value;
        bool is_y;
    };
    std::vector<Entry> pooled;
    pooled.reserve(static_cast<std::size_t>(N));
    for (double v : x) pooled.push_back({v, false});
    for (double v : y) pooled.push_back({v, true});
    std::sort(pooled.begin(), pooled.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });
    std::vector<int> ranks;
    ranks.reserve(static_cast<std::size_t>(sizes.n));
    for (int i = 0; i < N; ++i) {
        if (i > 0 && pooled[i].value == pooled[i - 1].value)
            throw DuplicateValue("tied observations violate the continuity assumption");
        if (pooled[i].is_y) ranks.push_back(i + 1);
    }
    return RankSet(std::move(ranks), sizes);
}

double statistic(const ScoreVector& scores, const RankSet& r) {
    if (scores.size() != r.sizes.total())
        throw LengthMismatch("score vector length must equal N");
    return statistic(scores, std::span<const int>(r.ranks));
}

double statistic(const ScoreVector& scores, std::span<const int> ranks) {
    double t = 0.0;
    for (int rank : ranks) {
        if (rank < 1 || rank > scores.size())
            throw LengthMismatch("rank outside score vector range");
        t += scores.at(rank);
    }
    return t;
}

std::uint64_t rankset_count(SampleSizes sizes) {
    return math::choose_saturated(sizes.total(), sizes.n);
}

RanksetEnumerator::RanksetEnumerator(SampleSizes sizes, std::uint64_t cap)
    : RanksetEnumerator(sizes, 0, rankset_count(sizes), cap) {}

RanksetEnumerator::RanksetEnumerator(SampleSizes sizes, std::uint64_t first,
                                     std::uint64_t last, std::uint64_t cap)
    : sizes_(sizes), first_(first), last_(last) {
    std::uint64_t total = rankset_count(sizes);
    if (total > cap)
        throw CapExceeded("C(N,n) exceeds the enumeration cap; use Monte Carlo");
    if (first > last || last > total)
        throw InvalidArgument("rankset index range out of bounds");
    index_ = first;
}

bool RanksetEnumerator::next(std::vector<int>& out) {
    if (index_ >= last_) return false;
    if (!started_) {
        current_ = unrank_rankset(sizes_, first_);
        started_ = true;
    } else {
        // Advance to the next combination in lexicographic order.
        const int N = sizes_.total();
        const int n = sizes_.n;
        int i = n - 1;
        while (i >= 0 && current_[i] == N - (n - 1 - i)) --i;
        ++current_[i];
        for (int j = i + 1; j < n; ++j) current_[j] = current_[j - 1] + 1;
    }
    ++index_;
    out = current_;
    return true;
}

std::vector<int> unrank_rankset(SampleSizes sizes, std::uint64_t index) {
    const int N = sizes.total();
    const int n = sizes.n;
    if (index >= rankset_count(sizes))
        throw InvalidArgument("rankset index out of range");
    std::vector<int> out(static_cast<std::size_t>(n));
    int value = 1;
    for (int slot = 0; slot < n; ++slot) {
        while (true) {
            // Subsets starting at `value` in this slot: C(N - value, n - slot - 1).
            std::uint64_t block = math::choose_saturated(N - value, n - slot - 1);
            if (index < block) break;
            index -= block;
            ++value;
        }
        out[slot] = value++;
    }
    return out;
}

void for_each_rankset(SampleSizes sizes,
                      const std::function<void(const std::vector<int>&)>& fn,
                      std::uint64_t cap) {
    RanksetEnumerator en(sizes, cap);
    std::vector<int> r;
    while (en.next(r)) fn(r);
}

} // namespace rankpower
