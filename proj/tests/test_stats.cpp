#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dialeval/error.hpp"
#include "dialeval/stats.hpp"
#include "support/oracles.hpp"

using namespace dialeval;
using V = std::vector<double>;

namespace {

std::vector<TurnScore> turns_of(const std::string &sys, const std::string &dlg, const V &vals) {
    std::vector<TurnScore> out;
    for (std::size_t i = 0; i < vals.size(); ++i) out.push_back({sys, dlg, int(i) + 1, vals[i]});
    return out;
}

V random_tied(std::mt19937 &rng, std::size_t n) {
    std::uniform_int_distribution<int> d(1, 5);
    V v(n);
    for (auto &x : v) x = d(rng);
    return v;
}

AnnotationRecord ann(const std::string &who, const std::string &item, std::optional<int> turn, int score) {
    return {who, "s", item, turn, score, std::nullopt, ""};
}

} // namespace

TEST_CASE("correlation examples") {
    const V x{1, 2, 3}, y{2, 4, 6};
    CHECK(pearson(x, y).coefficient == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spearman(x, y).coefficient == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kendall(x, y).coefficient == doctest::Approx(1.0).epsilon(1e-15));

    const V z{1, 3, 2};
    CHECK(spearman(x, z).coefficient == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kendall(x, z).coefficient == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const V rev{3, 2, 1};
    CHECK(pearson(x, rev).coefficient == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(spearman(x, rev).coefficient == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(kendall(x, rev).coefficient == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("p-values") {
    const V a{1, 2, 3, 4, 5}, b{2, 1, 4, 3, 5};
    // r = 0.8, t = 2.3094 on 3 df
    const auto r = pearson(a, b);
    CHECK(r.coefficient == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.104088).epsilon(1e-4));
    CHECK(spearman(a, b).p_value == doctest::Approx(0.104088).epsilon(1e-4));
    // S = 6, var(S) = 50/3
    const auto t = kendall(a, b);
    CHECK(t.coefficient == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(t.p_value == doctest::Approx(0.14164).epsilon(1e-3));
    // 28 of the 120 orderings have |tau| >= 0.6
    CHECK(kendall(a, b, PValueMethod::exact_permutation).p_value == doctest::Approx(28.0 / 120.0).epsilon(1e-12));
    CHECK(pearson(a, a).p_value == doctest::Approx(0.0).epsilon(1e-12));
    V ramp(11);
    for (int i = 0; i < 11; ++i) ramp[i] = i;
    CHECK_THROWS_AS(pearson(ramp, ramp, PValueMethod::exact_permutation), ValidationError);
}

TEST_CASE("undefined statistics") {
    CHECK_THROWS_AS(pearson(V{1, 1, 1}, V{1, 2, 3}), UndefinedStatistic);
    CHECK_THROWS_AS(spearman(V{1, 2, 3}, V{4, 4, 4}), UndefinedStatistic);
    CHECK_THROWS_AS(kendall(V{2, 2, 2}, V{1, 2, 3}), UndefinedStatistic);
    CHECK_THROWS_AS(pearson(V{1, 2}, V{1, 2}), UndefinedStatistic);
    CHECK_THROWS_AS(pearson(V{1, 2, 3}, V{1, 2}), ValidationError);
    CHECK_THROWS_AS(pearson(V{1, 2, NAN}, V{1, 2, 3}), ValidationError);
}

TEST_CASE("affine and monotone invariance") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 20; ++rep) {
        V x(40), y(40);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = g(rng);
            y[i] = x[i] + g(rng);
        }
        V ax, my;
        for (double v : x) ax.push_back(3.5 * v - 2.0);
        for (double v : y) my.push_back(std::exp(v));
        CHECK(std::abs(pearson(ax, y).coefficient - pearson(x, y).coefficient) <= 1e-12);
        CHECK(std::abs(spearman(x, my).coefficient - spearman(x, y).coefficient) <= 1e-12);
        CHECK(std::abs(kendall(x, my).coefficient - kendall(x, y).coefficient) <= 1e-12);
        CHECK(std::abs(pearson(x, y).coefficient - oracle::pearson(x, y)) <= 1e-12);
        CHECK(std::abs(spearman(x, y).coefficient - oracle::spearman_no_ties(x, y)) <= 1e-12);
    }
}

TEST_CASE("tau-b and tied spearman match the brute-force oracles") {
    std::mt19937 rng(5);
    int checked = 0;
    while (checked < 100) {
        std::uniform_int_distribution<std::size_t> len(3, 60);
        const auto n = len(rng);
        const V x = random_tied(rng, n), y = random_tied(rng, n);
        if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) continue;
        if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) continue;
        CAPTURE(n);
        CHECK(std::abs(kendall(x, y).coefficient - oracle::kendall_tau_b(x, y)) <= 1e-12);
        const auto rx = oracle::avg_ranks(x), ry = oracle::avg_ranks(y);
        CHECK(average_ranks(x) == rx);
        CHECK(std::abs(spearman(x, y).coefficient - oracle::pearson(rx, ry)) <= 1e-12);
        ++checked;
    }
}

TEST_CASE("average ranks") {
    CHECK(average_ranks(V{10, 20, 20, 30}) == V{1, 2.5, 2.5, 4});
    CHECK(average_ranks(V{3, 1, 2}) == V{3, 1, 2});
}

TEST_CASE("aggregation example") {
    auto turns = turns_of("s", "d1", {4, 5});
    const auto d2 = turns_of("s", "d2", {3, 3});
    turns.insert(turns.end(), d2.begin(), d2.end());
    const auto dl = aggregate(turns, Level::dialogue);
    CHECK(dl.values.at("s/d1") == 4.5);
    CHECK(dl.values.at("s/d2") == 3.0);
    CHECK(aggregate(turns, Level::system).values.at("s") == 3.75);
    CHECK(aggregate(turns, Level::turn).values.at("s/d1/2") == 5.0);

    AggregateOptions strict{3};
    CHECK_THROWS_AS(aggregate(turns, Level::dialogue, strict), ValidationError);
    auto dup = turns;
    dup.push_back(turns[0]);
    CHECK_THROWS_AS(aggregate(dup, Level::dialogue), ValidationError);

    const auto dd = aggregate(std::vector<DialogueScore>{{"s", "d1", 2}, {"s", "d2", 4}, {"t", "d1", 5}}, Level::system);
    CHECK(dd.values.at("s") == 3.0);
    CHECK(dd.values.at("t") == 5.0);
}

TEST_CASE("aggregation is order-independent and system = mean of all turns") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(1, 5);
    std::uniform_int_distribution<int> nd(1, 6), nt(1, 7);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<TurnScore> t;
        std::map<std::string, std::pair<double, int>> sys;
        for (int s = 0; s < 3; ++s)
            for (int d = nd(rng); d > 0; --d)
                for (int k = nt(rng); k > 0; --k) {
                    const double v = u(rng);
                    t.push_back({"s" + std::to_string(s), "d" + std::to_string(d), k, v});
                    sys["s" + std::to_string(s)].first += v;
                    sys["s" + std::to_string(s)].second++;
                }
        const auto a = aggregate(t, Level::system);
        std::shuffle(t.begin(), t.end(), rng);
        const auto b = aggregate(t, Level::system);
        for (const auto &[k, sum] : sys) {
            CHECK(std::abs(a.values.at(k) - sum.first / sum.second) <= 1e-12);
            CHECK(std::abs(a.values.at(k) - b.values.at(k)) <= 1e-12);
        }
    }
}

TEST_CASE("join and aggregate_pairs") {
    LevelTable m{Level::turn, {{"a", 1}, {"b", 2}, {"c", 3}, {"x", 9}}};
    LevelTable h{Level::turn, {{"a", 2}, {"b", 4}, {"c", 5}, {"y", 0}}};
    const auto j = join(m, h);
    CHECK(j.rows.size() == 3);
    CHECK(j.metric_only == 1);
    CHECK(j.human_only == 1);
    const auto rep = correlate(j);
    CHECK(rep.n == 3);
    CHECK(rep.metric_only == 1);
    CHECK_THROWS_AS(join(m, LevelTable{Level::system, {}}), ValidationError);
    CHECK_THROWS_AS(correlate(LevelTable{Level::turn, {{"a", 1}}}, LevelTable{Level::turn, {{"b", 1}}}),
                    UndefinedStatistic);

    auto metric = turns_of("s", "d", {1, 2});
    auto human = turns_of("s", "d", {5, 5});
    const auto over = aggregate_pairs(metric, human, Level::dialogue, {{"s", "d", 2.0}});
    REQUIRE(over.rows.size() == 1);
    CHECK(over.rows[0].metric_value == 1.5);
    CHECK(over.rows[0].human_value == 2.0);
    CHECK(aggregate_pairs(metric, human, Level::dialogue).rows[0].human_value == 5.0);
}

TEST_CASE("human scores average annotators") {
    const std::vector<AnnotationRecord> a{ann("x", "d", 1, 4), ann("y", "d", 1, 3), ann("x", "d", std::nullopt, 5)};
    const auto t = human_turn_scores(a);
    REQUIRE(t.size() == 1);
    CHECK(t[0].value == 3.5);
    const auto d = human_dialogue_scores(a);
    REQUIRE(d.size() == 1);
    CHECK(d[0].value == 5.0);
}

TEST_CASE("krippendorff alpha") {
    const RatingMatrix ex{{1.0, 2.0, 3.0, 4.0}, {2.0, 1.0, 4.0, 3.0}};
    const auto r = krippendorff_alpha(ex);
    CHECK(r.observed_disagreement == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.expected_disagreement == doctest::Approx(160.0 / 56.0).epsilon(1e-12));
    CHECK(r.alpha == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(r.n_annotators == 2);
    CHECK(r.n_items == 4);

    CHECK(krippendorff_alpha({{1.0, 2.0, 5.0}, {1.0, 2.0, 5.0}}).alpha == 1.0);
    CHECK_THROWS_AS(krippendorff_alpha({{1.0, 2.0}}), UndefinedStatistic);
    CHECK_THROWS_AS(krippendorff_alpha({{1.0, std::nullopt}, {std::nullopt, 2.0}}), UndefinedStatistic);

    RatingMatrix worse = ex;
    worse[1][0] = 4.0;
    CHECK(krippendorff_alpha(worse).alpha < r.alpha);

    const RatingMatrix spread{{1.0, 2.0, 5.0, 5.0}, {1.0, 2.0, 4.0, 5.0}};
    CHECK(krippendorff_alpha(spread, AlphaMetric::ordinal).alpha > 0.0);
    CHECK(alpha_metric_from_string("ordinal") == AlphaMetric::ordinal);
}

TEST_CASE("alpha matches the pairwise oracle with missing cells") {
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> score(1, 5), miss(0, 4);
    for (int rep = 0; rep < 50; ++rep) {
        RatingMatrix m(3, std::vector<std::optional<double>>(20));
        for (auto &row : m)
            for (auto &cell : row)
                if (miss(rng) != 0) cell = score(rng);
        CHECK(std::abs(krippendorff_alpha(m).alpha - oracle::alpha_interval(m)) <= 1e-12);
    }
}

TEST_CASE("annotation_agreement") {
    std::vector<AnnotationRecord> a;
    const int xs[] = {1, 2, 3, 4}, ys[] = {2, 1, 4, 3};
    for (int i = 0; i < 4; ++i) {
        a.push_back(ann("x", "d", i + 1, xs[i]));
        a.push_back(ann("y", "d", i + 1, ys[i]));
    }
    CHECK(annotation_agreement(a, Level::turn).alpha == doctest::Approx(0.65).epsilon(1e-12));
    CHECK_THROWS_AS(annotation_agreement(a, Level::dialogue), UndefinedStatistic);
    CHECK_THROWS_AS(annotation_agreement(a, Level::system), ValidationError);
    a.push_back(ann("x", "d", 1, 5));
    CHECK_THROWS_AS(annotation_agreement(a, Level::turn), ValidationError);
}

TEST_CASE("99-system correlation runs") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    LevelTable m{Level::system, {}}, h{Level::system, {}};
    for (int s = 0; s < 99; ++s) {
        const double q = u(rng);
        m.values["s" + std::to_string(s)] = q + 0.1 * u(rng);
        h.values["s" + std::to_string(s)] = 1 + 4 * q;
    }
    const auto rep = correlate(m, h);
    CHECK(rep.n == 99);
    CHECK(rep.rho.coefficient > 0.9);
    CHECK(rep.significant_rho);
    CHECK(rep.rho.p_value < 1e-10);
}
