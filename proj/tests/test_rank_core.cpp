#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rankpower/rank_core.hpp"

using namespace rankpower;

TEST_CASE("ranks of the second sample") {
    {
        std::vector<double> x{0.5}, y{0.9};
        auto r = ranks_of_second_sample(x, y);
        CHECK(r.ranks == std::vector<int>{2});
    }
    {
        std::vector<double> x{3.0, 1.0}, y{2.0, 4.0};
        auto r = ranks_of_second_sample(x, y);
        CHECK(r.ranks == std::vector<int>{2, 4});
        CHECK(r.sizes.m == 2);
        CHECK(r.sizes.n == 2);
    }
    {
        std::vector<double> x{1.0, 2.0}, y{1.0, 3.0};
        CHECK_THROWS_AS(ranks_of_second_sample(x, y), DuplicateValue);
    }
}

TEST_CASE("ranks are invariant under joint increasing transformations") {
    std::mt19937_64 gen(7041);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 1 + static_cast<int>(gen() % 6);
        int n = 1 + static_cast<int>(gen() % 6);
        std::vector<double> x(m), y(n);
        for (double& v : x) v = unif(gen);
        for (double& v : y) v = unif(gen);
        auto base = ranks_of_second_sample(x, y);

        // Random increasing piecewise-linear map on [-3, 3].
        std::vector<double> knots{-3.0, unif(gen), unif(gen), 3.0};
        std::sort(knots.begin(), knots.end());
        double u0 = unif(gen), u1 = unif(gen), u2 = unif(gen);
        std::vector<double> slopes{0.1 + u0 * u0, 0.1 + std::fabs(u1),
                                   0.5 + u2 * u2};
        auto transform = [&](double v) {
            double acc = -5.0;
            double prev = knots.front();
            for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
                double hi = knots[seg + 1];
                double upper = std::min(v, hi);
                if (upper > prev) acc += slopes[seg] * (upper - prev);
                prev = hi;
                if (v <= hi) break;
            }
            return acc;
        };
        std::vector<double> tx(x), ty(y);
        for (double& v : tx) v = transform(v);
        for (double& v : ty) v = transform(v);
        auto mapped = ranks_of_second_sample(tx, ty);
        CHECK(mapped.ranks == base.ranks);
    }
}

TEST_CASE("statistic evaluates score sums and is order-free in y") {
    auto w4 = score_vector(ScoreKind::Wilcoxon, 4);
    CHECK(statistic(w4, RankSet({3, 4}, SampleSizes(2, 2))) == doctest::Approx(7.0));
    CHECK(statistic(w4, RankSet({1, 2}, SampleSizes(2, 2))) == doctest::Approx(3.0));
    auto s2 = score_vector(ScoreKind::Savage, 2);
    CHECK(statistic(s2, RankSet({2}, SampleSizes(1, 1))) ==
          doctest::Approx(-0.5).epsilon(1e-15));

    std::vector<double> x{0.3, 1.7, -0.2};
    std::vector<double> y{0.9, -1.4, 2.5};
    auto w6 = score_vector(ScoreKind::Wilcoxon, 6);
    double t1 = statistic(w6, ranks_of_second_sample(x, y));
    std::vector<double> y_shuffled{2.5, 0.9, -1.4};
    double t2 = statistic(w6, ranks_of_second_sample(x, y_shuffled));
    CHECK(t1 == t2);

    auto w8 = score_vector(ScoreKind::Wilcoxon, 8);
    CHECK_THROWS_AS(statistic(w8, RankSet({1, 2}, SampleSizes(2, 2))), LengthMismatch);
}

TEST_CASE("built-in score vectors") {
    auto w = score_vector(ScoreKind::Wilcoxon, 4);
    CHECK(w.values == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(w.integer_valued());

    auto v = score_vector(ScoreKind::VanDerWaerden, 4);
    for (int i = 1; i <= 4; ++i) {
        double expect = oracles::normal_quantile_bisect(i / 5.0);
        CHECK(std::fabs(v.values[i - 1] - expect) < 1e-10);
    }
    CHECK(v.values[0] == doctest::Approx(-0.8416212335729143).epsilon(1e-10));

    auto ne2 = score_vector(ScoreKind::NormalExact, 2);
    const double inv_sqrt_pi = 0.5641895835477563;
    CHECK(std::fabs(ne2.values[1] - inv_sqrt_pi) < 1e-8);
    CHECK(std::fabs(ne2.values[0] + inv_sqrt_pi) < 1e-8);
    auto ne3 = score_vector(ScoreKind::NormalExact, 3);
    CHECK(ne3.values[1] == 0.0);
    CHECK(std::fabs(ne3.values[2] - 1.5 * inv_sqrt_pi) < 1e-8);

    auto s3 = score_vector(ScoreKind::Savage, 3);
    CHECK(s3.values[0] == doctest::Approx(-11.0 / 6.0).epsilon(1e-15));
    CHECK(s3.values[1] == doctest::Approx(-5.0 / 6.0).epsilon(1e-15));
    CHECK(s3.values[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK_FALSE(s3.integer_valued());

    CHECK_THROWS_AS(score_vector(ScoreKind::Wilcoxon, 1), InvalidArgument);
}

TEST_CASE("score vectors are strictly increasing; normal kinds antisymmetric") {
    for (auto kind : {ScoreKind::Wilcoxon, ScoreKind::VanDerWaerden,
                      ScoreKind::NormalExact, ScoreKind::Savage}) {
        for (int N : {2, 5, 9, 12}) {
            auto sv = score_vector(kind, N);
            for (int i = 1; i < N; ++i) CHECK(sv.values[i] > sv.values[i - 1]);
        }
    }
    for (auto kind : {ScoreKind::VanDerWaerden, ScoreKind::NormalExact}) {
        for (int N : {5, 9, 12}) {
            auto sv = score_vector(kind, N);
            for (int i = 1; i <= N; ++i)
                CHECK(std::fabs(sv.values[i - 1] + sv.values[N - i]) < 1e-9);
        }
    }
}

TEST_CASE("custom scores validate monotonicity") {
    auto ok = custom_scores({-1.0, -1.0, 2.0});
    CHECK(ok.kind == ScoreKind::Custom);
    CHECK_THROWS_AS(custom_scores({1.0, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(custom_scores({1.0}), InvalidArgument);
}

TEST_CASE("rankset enumeration in lexicographic order") {
    {
        std::vector<std::vector<int>> all;
        for_each_rankset(SampleSizes(1, 1),
                         [&](const std::vector<int>& r) { all.push_back(r); });
        CHECK(all == std::vector<std::vector<int>>{{1}, {2}});
    }
    {
        std::vector<std::vector<int>> all;
        for_each_rankset(SampleSizes(2, 2),
                         [&](const std::vector<int>& r) { all.push_back(r); });
        std::vector<std::vector<int>> expect{{1, 2}, {1, 3}, {1, 4},
                                             {2, 3}, {2, 4}, {3, 4}};
        CHECK(all == expect);
    }
    {
        std::uint64_t count = 0;
        for_each_rankset(SampleSizes(4, 4), [&](const std::vector<int>&) { ++count; });
        CHECK(count == 70);
    }
}

TEST_CASE("enumeration yields exactly C(N,n) distinct sets for N <= 12") {
    for (int N = 2; N <= 12; ++N) {
        for (int n = 1; n < N; ++n) {
            SampleSizes sizes(N - n, n);
            std::uint64_t count = 0;
            std::vector<int> prev;
            for_each_rankset(sizes, [&](const std::vector<int>& r) {
                if (!prev.empty()) CHECK(std::lexicographical_compare(
                        prev.begin(), prev.end(), r.begin(), r.end()));
                prev = r;
                ++count;
            });
            CHECK(count == rankset_count(sizes));
        }
    }
}

TEST_CASE("unranking matches sequential order and supports range splits") {
    SampleSizes sizes(3, 4);
    std::vector<std::vector<int>> all;
    for_each_rankset(sizes, [&](const std::vector<int>& r) { all.push_back(r); });
    for (std::uint64_t i = 0; i < all.size(); ++i)
        CHECK(unrank_rankset(sizes, i) == all[i]);

    std::vector<std::vector<int>> spliced;
    for (std::uint64_t lo = 0; lo < all.size(); lo += 7) {
        RanksetEnumerator en(sizes, lo, std::min<std::uint64_t>(lo + 7, all.size()));
        std::vector<int> r;
        while (en.next(r)) spliced.push_back(r);
    }
    CHECK(spliced == all);
}

TEST_CASE("enumeration cap") {
    CHECK_THROWS_AS(for_each_rankset(SampleSizes(20, 20), [](const auto&) {}),
                    CapExceeded);
    CHECK_THROWS_AS(RanksetEnumerator(SampleSizes(4, 4), 10), CapExceeded);
}

TEST_CASE("family quantiles invert the standard members") {
    CHECK(family_quantile(DistributionFamily::Uniform01, 0.3) == 0.3);
    CHECK(family_quantile(DistributionFamily::Normal, 0.5) == doctest::Approx(0.0));
    CHECK(family_quantile(DistributionFamily::Logistic, 0.5) == doctest::Approx(0.0));
    CHECK(family_quantile(DistributionFamily::Logistic, 0.75) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(family_quantile(DistributionFamily::Exponential, 1.0 - std::exp(-2.0)) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(family_quantile(DistributionFamily::Cauchy, 0.75) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(family_quantile(DistributionFamily::Normal, 0.0), InvalidArgument);
}
