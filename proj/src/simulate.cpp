#include "rankpower/simulate.hpp"
#include "rankpower/detail/parallel.hpp"
#include "rankpower/math.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rankpower::sim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (kGolden * (tag + 1));
    return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    // Multiply-shift; bias < 2^-64 * bound, irrelevant at our bounds.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
}

std::string to_string(ComparatorKind kind) {
    switch (kind) {
        case ComparatorKind::TwoSampleT: return "t-test";
        case ComparatorKind::PermutationMean: return "perm-mean";
        case ComparatorKind::LogisticScore: return "logistic-score";
    }
    return "unknown";
}

std::string test_id(const TestSpec& spec) {
    if (const auto* r = std::get_if<RankTestSpec>(&spec))
        return "rank:" + to_string(r->scores);
    if (const auto* m = std::get_if<MpTestSpec>(&spec))
        return "mp:a=" + std::to_string(m->a);
    return std::get<ComparatorSpec>(spec).kind == ComparatorKind::TwoSampleT
               ? "t-test"
               : to_string(std::get<ComparatorSpec>(spec).kind);
}

std::pair<std::vector<double>, std::vector<double>>
draw_two_samples(SampleSizes sizes, const Alternative& alt,
                 DistributionFamily family, Rng& rng) {
    if (const auto* s = std::get_if<Shift>(&alt)) {
        if (s->family != family)
            throw InvalidArgument("alternative family differs from sampling family");
    } else if (const auto* l = std::get_if<Local>(&alt)) {
        if (l->family != family)
            throw InvalidArgument("alternative family differs from sampling family");
    }
    std::vector<double> x(static_cast<std::size_t>(sizes.m));
    std::vector<double> y(static_cast<std::size_t>(sizes.n));
    for (double& v : x) v = family_quantile(family, rng.next_uniform());
    if (const auto* l = std::get_if<Lehmann>(&alt)) {
        const double inv_a = 1.0 / l->a;
        for (double& v : y)
            v = family_quantile(family, std::pow(rng.next_uniform(), inv_a));
    } else {
        double theta = 0.0;
        if (const auto* s = std::get_if<Shift>(&alt)) theta = s->theta;
        else theta = std::get<Local>(alt).c / std::sqrt(static_cast<double>(sizes.n));
        for (double& v : y) v = family_quantile(family, rng.next_uniform()) + theta;
    }
    return {std::move(x), std::move(y)};
}

namespace {

// A test instantiated for fixed sample sizes; evaluate() consumes the
// replicate's generator only after the sample draws, so coupled replicates
// stay aligned across alternatives.
struct PreparedTest {
    std::function<bool(const std::vector<double>&, const std::vector<double>&, Rng&)>
        evaluate;
};

PreparedTest prepare_rank_test(const RankTestSpec& spec, SampleSizes sizes,
                               const exact::ExactOptions& exact_opts) {
    auto scores = std::make_shared<ScoreVector>(score_vector(spec.scores, sizes.total()));
    auto test = std::make_shared<exact::RandomizedTest>(
        exact::critical_value(*scores, sizes, spec.alpha, spec.conservative, exact_opts));
    PreparedTest prepared;
    prepared.evaluate = [scores, test](const std::vector<double>& x,
                                       const std::vector<double>& y, Rng& rng) {
        RankSet r = ranks_of_second_sample(x, y);
        double t = statistic(*scores, r);
        if (t > test->threshold + kSupportMergeTol) return true;
        if (std::fabs(t - test->threshold) <= kSupportMergeTol)
            return rng.next_uniform() < test->gamma;
        return false;
    };
    return prepared;
}

PreparedTest prepare_mp_test(const MpTestSpec& spec, SampleSizes sizes,
                             const exact::ExactOptions& exact_opts) {
    auto test = std::make_shared<exact::MpTest>(
        exact::mp_test(sizes, spec.a, spec.alpha, spec.conservative, exact_opts));
    PreparedTest prepared;
    prepared.evaluate = [test, sizes](const std::vector<double>& x,
                                      const std::vector<double>& y, Rng& rng) {
        RankSet r = ranks_of_second_sample(x, y);
        double pa = exact::rankset_prob_lehmann(r, test->a);
        switch (test->classify(pa)) {
            case exact::MpTest::Region::Reject: return true;
            case exact::MpTest::Region::Boundary: return rng.next_uniform() < test->gamma;
            case exact::MpTest::Region::Accept: return false;
        }
        return false;
    };
    return prepared;
}

PreparedTest prepare_t_test(double alpha, SampleSizes sizes) {
    if (sizes.total() < 3)
        throw InvalidArgument("t test requires m + n >= 3");
    const double crit = math::student_t_quantile(1.0 - alpha, sizes.total() - 2);
    PreparedTest prepared;
    prepared.evaluate = [crit](const std::vector<double>& x,
                               const std::vector<double>& y, Rng&) {
        const double m = static_cast<double>(x.size());
        const double n = static_cast<double>(y.size());
        double xbar = std::accumulate(x.begin(), x.end(), 0.0) / m;
        double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : x) ss += (v - xbar) * (v - xbar);
        for (double v : y) ss += (v - ybar) * (v - ybar);
        double sp2 = ss / (m + n - 2.0);
        if (sp2 <= 0.0) return false;
        double t = (ybar - xbar) / std::sqrt(sp2 * (1.0 / m + 1.0 / n));
        return t > crit;
    };
    return prepared;
}

PreparedTest prepare_permutation_mean(const ComparatorSpec& spec, SampleSizes sizes) {
    const std::uint64_t arrangements = rankset_count(sizes);
    const bool exact_mode = arrangements <= spec.exact_cap;
    const double alpha = spec.alpha;
    const int n = sizes.n;
    const int N = sizes.total();
    const int samples = spec.samples;
    PreparedTest prepared;
    prepared.evaluate = [=](const std::vector<double>& x, const std::vector<double>& y,
                            Rng& rng) {
        std::vector<double> pooled;
        pooled.reserve(static_cast<std::size_t>(N));
        pooled.insert(pooled.end(), x.begin(), x.end());
        pooled.insert(pooled.end(), y.begin(), y.end());
        // Ybar - Xbar is an increasing function of the Y-group sum, so the
        // permutation test can rank plain group sums.
        double observed = std::accumulate(y.begin(), y.end(), 0.0);
        std::uint64_t above = 0, equal = 0, count = 0;
        if (exact_mode) {
            SampleSizes local(sizes.m, n);
            for_each_rankset(local, [&](const std::vector<int>& subset) {
                double s = 0.0;
                for (int pos : subset) s += pooled[static_cast<std::size_t>(pos - 1)];
                if (s > observed) ++above;
                else if (s == observed) ++equal;
            });
            count = arrangements;
        } else {
            std::vector<int> idx(static_cast<std::size_t>(N));
            std::iota(idx.begin(), idx.end(), 0);
            for (int p = 0; p < samples; ++p) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) {
                    std::uint64_t pick =
                        j + rng.next_below(static_cast<std::uint64_t>(N - j));
                    std::swap(idx[static_cast<std::size_t>(j)],
                              idx[static_cast<std::size_t>(pick)]);
                    s += pooled[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
                }
                if (s > observed) ++above;
                else if (s == observed) ++equal;
            }
            ++equal; // the observed assignment itself
            count = static_cast<std::uint64_t>(samples) + 1;
        }
        double psi = (alpha * static_cast<double>(count) - static_cast<double>(above)) /
                     static_cast<double>(equal);
        psi = std::clamp(psi, 0.0, 1.0);
        if (psi <= 0.0) return false;
        if (psi >= 1.0) return true;
        return rng.next_uniform() < psi;
    };
    return prepared;
}

PreparedTest prepare_logistic_score(double alpha, SampleSizes sizes) {
    if (sizes.total() < 3)
        throw InvalidArgument("logistic score test requires m + n >= 3");
    const double crit = math::student_t_quantile(1.0 - alpha, sizes.total() - 2);
    PreparedTest prepared;
    prepared.evaluate = [crit](const std::vector<double>& x,
                               const std::vector<double>& y, Rng&) {
        const double m = static_cast<double>(x.size());
        const double n = static_cast<double>(y.size());
        std::vector<double> pooled;
        pooled.reserve(x.size() + y.size());
        pooled.insert(pooled.end(), x.begin(), x.end());
        pooled.insert(pooled.end(), y.begin(), y.end());
        // Pooled median as the location estimate under the common-location
        // nuisance; the logistic score function is tanh((v - mu)/2).
        std::size_t half = pooled.size() / 2;
        std::nth_element(pooled.begin(), pooled.begin() + half, pooled.end());
        double med = pooled[half];
        if (pooled.size() % 2 == 0) {
            double below = *std::max_element(pooled.begin(), pooled.begin() + half);
            med = 0.5 * (med + below);
        }
        double sx = 0.0, sy = 0.0, ss = 0.0;
        for (double v : x) sx += std::tanh(0.5 * (v - med));
        for (double v : y) sy += std::tanh(0.5 * (v - med));
        double xbar = sx / m, ybar = sy / n;
        for (double v : x) {
            double h = std::tanh(0.5 * (v - med)) - xbar;
            ss += h * h;
        }
        for (double v : y) {
            double h = std::tanh(0.5 * (v - med)) - ybar;
            ss += h * h;
        }
        double sp2 = ss / (m + n - 2.0);
        if (sp2 <= 0.0) return false;
        double t = (ybar - xbar) / std::sqrt(sp2 * (1.0 / m + 1.0 / n));
        return t > crit;
    };
    return prepared;
}

PreparedTest prepare(const TestSpec& spec, SampleSizes sizes,
                     const exact::ExactOptions& exact_opts) {
    if (const auto* r = std::get_if<RankTestSpec>(&spec))
        return prepare_rank_test(*r, sizes, exact_opts);
    if (const auto* m = std::get_if<MpTestSpec>(&spec))
        return prepare_mp_test(*m, sizes, exact_opts);
    const auto& c = std::get<ComparatorSpec>(spec);
    switch (c.kind) {
        case ComparatorKind::TwoSampleT: return prepare_t_test(c.alpha, sizes);
        case ComparatorKind::PermutationMean: return prepare_permutation_mean(c, sizes);
        case ComparatorKind::LogisticScore: return prepare_logistic_score(c.alpha, sizes);
    }
    throw InvalidArgument("unknown comparator kind");
}

} // namespace

PowerEstimate power_mc(const TestSpec& spec, SampleSizes sizes,
                       const Alternative& alt, DistributionFamily family,
                       std::uint64_t reps, RngSpec rng, const McOptions& opts) {
    if (reps < 100) throw InvalidArgument("power_mc requires reps >= 100");
    PreparedTest test = prepare(spec, sizes, opts.exact);

    const std::uint64_t chunk = std::max<std::uint32_t>(opts.chunk_size, 1);
    const std::uint64_t n_chunks = (reps + chunk - 1) / chunk;
    std::vector<std::uint64_t> rejections(n_chunks, 0);
    detail::parallel_chunks(n_chunks, opts.threads, [&](std::uint64_t c) {
        const std::uint64_t chunk_seed = derive_seed(rng.seed, c);
        const std::uint64_t lo = c * chunk;
        const std::uint64_t hi = std::min(lo + chunk, reps);
        std::uint64_t hits = 0;
        for (std::uint64_t r = lo; r < hi; ++r) {
            Rng rep_rng(derive_seed(chunk_seed, r - lo));
            // Exactly coincident doubles are an artifact of the finite
            // grid (the model is continuous); redraw the replicate.
            while (true) {
                try {
                    auto [x, y] = draw_two_samples(sizes, alt, family, rep_rng);
                    if (test.evaluate(x, y, rep_rng)) ++hits;
                    break;
                } catch (const DuplicateValue&) {
                    continue;
                }
            }
        }
        rejections[c] = hits;
    });
    std::uint64_t total = 0;
    for (std::uint64_t h : rejections) total += h;

    PowerEstimate est;
    est.estimate = static_cast<double>(total) / static_cast<double>(reps);
    est.std_error =
        std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(reps));
    est.reps = reps;
    est.test_id = test_id(spec);
    est.alternative = alt;
    return est;
}

namespace {

int min_feasible_size(const TestSpec& spec) {
    if (const auto* c = std::get_if<ComparatorSpec>(&spec)) {
        (void)c;
        return 2; // comparator statistics need m + n - 2 >= 2
    }
    return 1;
}

} // namespace

std::vector<MatchPoint> matched_sample_size(const TestSpec& test_B,
                                            const TestSpec& test_A,
                                            const std::vector<int>& n_grid,
                                            const Local& alt_local,
                                            RngSpec rng, const MatchOptions& opts) {
    std::vector<MatchPoint> result;
    result.reserve(n_grid.size());
    const int k_min = min_feasible_size(test_B);

    for (int n : n_grid) {
        if (n < 1) throw InvalidArgument("n grid entries must be >= 1");
        // theta is pinned by the A-side problem K(c, n) and held fixed
        // while the B-side size varies.
        const double theta = alt_local.c / std::sqrt(static_cast<double>(n));
        const Shift alt(theta, alt_local.family);
        const RngSpec point_rng{derive_seed(rng.seed, static_cast<std::uint64_t>(n))};

        PowerEstimate target = power_mc(test_A, SampleSizes(n, n), alt,
                                        alt_local.family, opts.reps, point_rng, opts.mc);
        const double goal = target.estimate - opts.target_tolerance;

        std::map<int, PowerEstimate> probes;
        auto probe_raw = [&](int k) -> const PowerEstimate& {
            auto it = probes.find(k);
            if (it == probes.end()) {
                PowerEstimate p = power_mc(test_B, SampleSizes(k, k), alt,
                                           alt_local.family, opts.reps, point_rng,
                                           opts.mc);
                it = probes.emplace(k, std::move(p)).first;
            }
            return it->second;
        };
        // Decision value: raw estimate, or the isotonic fit over all probes
        // collected so far when smoothing is on.
        auto decide = [&](int k) -> double {
            const PowerEstimate& raw = probe_raw(k);
            if (!opts.isotonic) return raw.estimate;
            std::vector<double> values;
            values.reserve(probes.size());
            for (const auto& [kk, est] : probes) values.push_back(est.estimate);
            std::vector<double> smooth = math::isotonic_fit(values);
            std::size_t pos = static_cast<std::size_t>(
                std::distance(probes.begin(), probes.find(k)));
            return smooth[pos];
        };

        int lo, hi;
        if (decide(std::max(n, k_min)) >= goal) {
            lo = k_min - 1;
            hi = std::max(n, k_min);
        } else {
            lo = std::max(n, k_min);
            hi = 2 * lo;
            while (decide(hi) < goal) {
                lo = hi;
                hi *= 2;
                if (hi > opts.k_max_factor * n)
                    throw NotBracketed(
                        "power of test B never reaches the target within 64n");
            }
        }
        while (hi - lo > 1) {
            int mid = lo + (hi - lo) / 2;
            if (decide(mid) >= goal) hi = mid;
            else lo = mid;
        }

        const PowerEstimate& at_k = probe_raw(hi);
        MatchPoint point;
        point.n = n;
        point.k = hi;
        point.d = hi - n;
        point.target_power = target.estimate;
        point.target_se = target.std_error;
        point.power_at_k = at_k.estimate;
        point.power_se = at_k.std_error;
        const double se = std::sqrt(target.std_error * target.std_error +
                                    at_k.std_error * at_k.std_error);
        point.matched_within_noise = std::fabs(at_k.estimate - target.estimate) < 2.0 * se;
        result.push_back(point);
    }
    return result;
}

} // namespace rankpower::sim
