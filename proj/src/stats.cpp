#include "dialeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dialeval/error.hpp"

namespace dialeval {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, const char *what) {
    if (x.size() != y.size())
        throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()) + ")");
    if (x.size() < 3) throw UndefinedStatistic(std::string(what) + ": need at least 3 pairs");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw ValidationError(std::string(what) + ": non-finite value at " + std::to_string(i));
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) throw UndefinedStatistic(std::string(what) + ": constant input");
}

double pearson_coefficient(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_test_p(double r, std::size_t n) {
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / ((1.0 - r) * (1.0 + r)));
    boost::math::students_t dist(df);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

// Sum over runs of equal values of f(run length).
template <typename F>
double tie_sum(std::vector<double> v, F f) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        s += f(static_cast<double>(j - i));
        i = j;
    }
    return s;
}

// Inversions (i < j, v[i] > v[j]) by merge sort; sorts v.
long long count_inversions(std::vector<double> &v, std::vector<double> &buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    long long inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += static_cast<long long>(mid - i);
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

struct TauParts {
    double tau;
    double s; // concordant minus discordant
};

TauParts tau_b(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(x[a], y[a]) < std::tie(x[b], y[b]);
    });
    double ties_x = 0, ties_xy = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && x[idx[j]] == x[idx[i]]) ++j;
        const double t = static_cast<double>(j - i);
        ties_x += t * (t - 1) / 2;
        for (std::size_t a = i; a < j;) {
            std::size_t b = a;
            while (b < j && y[idx[b]] == y[idx[a]]) ++b;
            const double u = static_cast<double>(b - a);
            ties_xy += u * (u - 1) / 2;
            a = b;
        }
        i = j;
    }
    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    const auto swaps = static_cast<double>(count_inversions(ys, buf, 0, n));
    const double ties_y = tie_sum(ys, [](double t) { return t * (t - 1) / 2; });
    const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2;
    const double s = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
    const double denom = std::sqrt((n0 - ties_x) * (n0 - ties_y));
    if (denom == 0.0) throw UndefinedStatistic("kendall: constant input");
    return {std::clamp(s / denom, -1.0, 1.0), s};
}

double kendall_asymptotic_p(std::span<const double> x, std::span<const double> y, double s) {
    const double n = static_cast<double>(x.size());
    std::vector<double> xv(x.begin(), x.end()), yv(y.begin(), y.end());
    const double x1 = tie_sum(xv, [](double t) { return t * (t - 1) * (2 * t + 5); });
    const double y1 = tie_sum(yv, [](double t) { return t * (t - 1) * (2 * t + 5); });
    const double x2 = tie_sum(xv, [](double t) { return t * (t - 1) * (t - 2); });
    const double y2 = tie_sum(yv, [](double t) { return t * (t - 1) * (t - 2); });
    const double x3 = tie_sum(xv, [](double t) { return t * (t - 1); });
    const double y3 = tie_sum(yv, [](double t) { return t * (t - 1); });
    const double var = (n * (n - 1) * (2 * n + 5) - x1 - y1) / 18.0 + x2 * y2 / (9.0 * n * (n - 1) * (n - 2)) +
                       x3 * y3 / (2.0 * n * (n - 1));
    if (var <= 0.0) return 1.0;
    const double z = s / std::sqrt(var);
    return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

template <typename Stat>
double permutation_p(std::span<const double> x, std::span<const double> y, double observed, Stat stat) {
    constexpr std::size_t kMaxExact = 10;
    if (x.size() > kMaxExact)
        throw ValidationError("exact permutation p-value supports n <= " + std::to_string(kMaxExact));
    std::vector<std::size_t> perm(y.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> yp(y.size());
    long long hits = 0, total = 0;
    do {
        for (std::size_t i = 0; i < perm.size(); ++i) yp[i] = y[perm[i]];
        double v = 0.0;
        try {
            v = stat(x, std::span<const double>(yp));
        } catch (const UndefinedStatistic &) {
            v = 0.0;
        }
        if (std::abs(v) >= std::abs(observed) - 1e-12) ++hits;
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::string lookup_key(const std::string &s, const std::string &d, int t) { return level_key(Level::turn, s, d, t); }

} // namespace

std::string to_string(Level l) {
    switch (l) {
    case Level::turn: return "turn";
    case Level::dialogue: return "dialogue";
    case Level::system: return "system";
    }
    return {};
}

Level level_from_string(std::string_view s) {
    if (s == "turn") return Level::turn;
    if (s == "dialogue") return Level::dialogue;
    if (s == "system") return Level::system;
    throw ValidationError("unknown level '" + std::string(s) + "'");
}

std::string level_key(Level l, const std::string &system, const std::string &dialogue, int turn) {
    switch (l) {
    case Level::system: return system;
    case Level::dialogue: return system + "/" + dialogue;
    case Level::turn: return system + "/" + dialogue + "/" + std::to_string(turn);
    }
    return {};
}

LevelTable aggregate(const std::vector<TurnScore> &turns, Level target, const AggregateOptions &opts) {
    LevelTable out{target, {}};
    std::set<std::string> seen;
    std::map<std::pair<std::string, std::string>, std::set<int>> per_dialogue;
    for (const auto &t : turns) {
        if (!std::isfinite(t.value))
            throw ValidationError("non-finite score at " + lookup_key(t.system_id, t.dialogue_id, t.turn_index));
        if (!seen.insert(lookup_key(t.system_id, t.dialogue_id, t.turn_index)).second)
            throw ValidationError("duplicate turn score " + lookup_key(t.system_id, t.dialogue_id, t.turn_index));
        per_dialogue[{t.system_id, t.dialogue_id}].insert(t.turn_index);
    }
    for (const auto &[sd, idx] : per_dialogue) {
        const int k = static_cast<int>(idx.size());
        const bool gapless = *idx.begin() == 1 && *idx.rbegin() == k;
        if (target != Level::turn && (!gapless || (opts.turns_per_dialogue && k != *opts.turns_per_dialogue)))
            throw ValidationError("missing turns for dialogue " + sd.first + "/" + sd.second + " (have " +
                                  std::to_string(k) + ")");
    }

    std::map<std::string, std::pair<double, long>> sums;
    for (const auto &t : turns) {
        auto &[sum, count] = sums[level_key(target, t.system_id, t.dialogue_id, t.turn_index)];
        sum += t.value;
        ++count;
    }
    for (const auto &[key, sc] : sums) out.values[key] = sc.first / static_cast<double>(sc.second);
    return out;
}

LevelTable aggregate(const std::vector<DialogueScore> &dialogues, Level target) {
    if (target == Level::turn) throw ValidationError("dialogue-level scores cannot be lowered to turn level");
    LevelTable out{target, {}};
    std::map<std::string, std::pair<double, long>> sums;
    std::set<std::string> seen;
    for (const auto &d : dialogues) {
        if (!seen.insert(level_key(Level::dialogue, d.system_id, d.dialogue_id)).second)
            throw ValidationError("duplicate dialogue score " + level_key(Level::dialogue, d.system_id, d.dialogue_id));
        auto &[sum, count] = sums[level_key(target, d.system_id, d.dialogue_id)];
        sum += d.value;
        ++count;
    }
    for (const auto &[key, sc] : sums) out.values[key] = sc.first / static_cast<double>(sc.second);
    return out;
}

ScoreTable join(const LevelTable &metric, const LevelTable &human) {
    if (metric.level != human.level) throw ValidationError("cannot join tables of different levels");
    ScoreTable t{metric.level, {}, 0, 0};
    for (const auto &[key, v] : metric.values) {
        auto it = human.values.find(key);
        if (it == human.values.end()) {
            ++t.metric_only;
            continue;
        }
        t.rows.push_back({key, v, it->second});
    }
    for (const auto &[key, v] : human.values)
        if (!metric.values.count(key)) ++t.human_only;
    return t;
}

ScoreTable aggregate_pairs(const std::vector<TurnScore> &metric_turns, const std::vector<TurnScore> &human_turns,
                           Level target, const std::vector<DialogueScore> &human_dialogue_override,
                           const AggregateOptions &opts) {
    const LevelTable metric = aggregate(metric_turns, target, opts);
    const LevelTable human = (target != Level::turn && !human_dialogue_override.empty())
                                 ? aggregate(human_dialogue_override, target)
                                 : aggregate(human_turns, target, opts);
    return join(metric, human);
}

std::vector<TurnScore> human_turn_scores(const std::vector<AnnotationRecord> &annotations) {
    std::map<std::tuple<std::string, std::string, int>, std::pair<double, int>> acc;
    for (const auto &a : annotations) {
        if (!a.turn_index) continue;
        auto &[sum, count] = acc[{a.system_id, a.dialogue_id, *a.turn_index}];
        sum += a.score;
        ++count;
    }
    std::vector<TurnScore> out;
    for (const auto &[k, sc] : acc)
        out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), sc.first / sc.second});
    return out;
}

std::vector<DialogueScore> human_dialogue_scores(const std::vector<AnnotationRecord> &annotations) {
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
    for (const auto &a : annotations) {
        if (a.turn_index) continue;
        auto &[sum, count] = acc[{a.system_id, a.dialogue_id}];
        sum += a.score;
        ++count;
    }
    std::vector<DialogueScore> out;
    for (const auto &[k, sc] : acc) out.push_back({k.first, k.second, sc.first / sc.second});
    return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
        i = j;
    }
    return ranks;
}

Correlation pearson(std::span<const double> x, std::span<const double> y, PValueMethod method) {
    check_pair(x, y, "pearson");
    const double r = pearson_coefficient(x, y);
    const double p = method == PValueMethod::asymptotic
                         ? t_test_p(r, x.size())
                         : permutation_p(x, y, r, [](auto a, auto b) { return pearson_coefficient(a, b); });
    return {r, p};
}

Correlation spearman(std::span<const double> x, std::span<const double> y, PValueMethod method) {
    check_pair(x, y, "spearman");
    auto rho_of = [](std::span<const double> a, std::span<const double> b) {
        const auto ra = average_ranks(a), rb = average_ranks(b);
        return pearson_coefficient(ra, rb);
    };
    const double rho = rho_of(x, y);
    const double p = method == PValueMethod::asymptotic ? t_test_p(rho, x.size()) : permutation_p(x, y, rho, rho_of);
    return {rho, p};
}

Correlation kendall(std::span<const double> x, std::span<const double> y, PValueMethod method) {
    check_pair(x, y, "kendall");
    const auto parts = tau_b(x, y);
    const double p = method == PValueMethod::asymptotic
                         ? kendall_asymptotic_p(x, y, parts.s)
                         : permutation_p(x, y, parts.tau, [](auto a, auto b) { return tau_b(a, b).tau; });
    return {parts.tau, p};
}

CorrelationReport correlate(const ScoreTable &table, PValueMethod method) {
    if (table.rows.empty()) throw UndefinedStatistic("empty join at " + to_string(table.level) + " level");
    std::vector<double> m, h;
    for (const auto &r : table.rows) {
        m.push_back(r.metric_value);
        h.push_back(r.human_value);
    }
    CorrelationReport rep;
    rep.level = table.level;
    rep.n = table.rows.size();
    rep.metric_only = table.metric_only;
    rep.human_only = table.human_only;
    rep.r = pearson(m, h, method);
    rep.rho = spearman(m, h, method);
    rep.tau = kendall(m, h, method);
    rep.significant_r = rep.r.p_value < kSignificance;
    rep.significant_rho = rep.rho.p_value < kSignificance;
    rep.significant_tau = rep.tau.p_value < kSignificance;
    return rep;
}

CorrelationReport correlate(const LevelTable &metric, const LevelTable &human, PValueMethod method) {
    return correlate(join(metric, human), method);
}

std::string to_string(AlphaMetric m) { return m == AlphaMetric::interval ? "interval" : "ordinal"; }

AlphaMetric alpha_metric_from_string(std::string_view s) {
    if (s == "interval") return AlphaMetric::interval;
    if (s == "ordinal") return AlphaMetric::ordinal;
    throw ValidationError("unknown alpha metric '" + std::string(s) + "'");
}

AgreementReport krippendorff_alpha(const RatingMatrix &matrix, AlphaMetric metric) {
    if (matrix.size() < 2) throw UndefinedStatistic("krippendorff_alpha: need at least 2 annotators");
    std::size_t items = 0;
    for (const auto &row : matrix) items = std::max(items, row.size());

    // Pairable units and the value inventory.
    std::vector<std::vector<double>> units;
    for (std::size_t i = 0; i < items; ++i) {
        std::vector<double> vals;
        for (const auto &row : matrix)
            if (i < row.size() && row[i]) {
                if (!std::isfinite(*row[i])) throw ValidationError("krippendorff_alpha: non-finite rating");
                vals.push_back(*row[i]);
            }
        if (vals.size() >= 2) units.push_back(std::move(vals));
    }
    if (units.empty()) throw UndefinedStatistic("krippendorff_alpha: no pairable values");

    std::vector<double> values;
    for (const auto &u : units) values.insert(values.end(), u.begin(), u.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    const std::size_t V = values.size();
    auto index_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), v) - values.begin());
    };

    // Coincidence matrix o[c][k] and marginals n_c.
    std::vector<std::vector<double>> o(V, std::vector<double>(V, 0.0));
    for (const auto &u : units) {
        const double w = 1.0 / static_cast<double>(u.size() - 1);
        for (std::size_t a = 0; a < u.size(); ++a)
            for (std::size_t b = 0; b < u.size(); ++b)
                if (a != b) o[index_of(u[a])][index_of(u[b])] += w;
    }
    std::vector<double> nc(V, 0.0);
    for (std::size_t c = 0; c < V; ++c) nc[c] = std::accumulate(o[c].begin(), o[c].end(), 0.0);
    const double n = std::accumulate(nc.begin(), nc.end(), 0.0);

    auto delta2 = [&](std::size_t c, std::size_t k) {
        if (metric == AlphaMetric::interval) {
            const double d = values[c] - values[k];
            return d * d;
        }
        const auto lo = std::min(c, k), hi = std::max(c, k);
        double s = 0.0;
        for (std::size_t g = lo; g <= hi; ++g) s += nc[g];
        s -= (nc[c] + nc[k]) / 2.0;
        return s * s;
    };

    double Do = 0.0, De = 0.0;
    for (std::size_t c = 0; c < V; ++c)
        for (std::size_t k = 0; k < V; ++k) {
            if (c == k) continue;
            const double d = delta2(c, k);
            Do += o[c][k] * d;
            De += nc[c] * nc[k] * d;
        }
    Do /= n;
    De /= n * (n - 1.0);

    AgreementReport rep;
    rep.n_annotators = matrix.size();
    rep.n_items = units.size();
    rep.observed_disagreement = Do;
    rep.expected_disagreement = De;
    rep.alpha = De == 0.0 ? 1.0 : 1.0 - Do / De;
    return rep;
}

AgreementReport annotation_agreement(const std::vector<AnnotationRecord> &annotations, Level level,
                                     AlphaMetric metric) {
    if (level == Level::system) throw ValidationError("agreement is defined at turn or dialogue level");
    std::map<std::string, std::size_t> annotators, items;
    for (const auto &a : annotations) {
        if ((level == Level::turn) != a.turn_index.has_value()) continue;
        annotators.emplace(a.annotator_id, annotators.size());
        items.emplace(level_key(level, a.system_id, a.dialogue_id, a.turn_index.value_or(0)), items.size());
    }
    RatingMatrix m(annotators.size(), std::vector<std::optional<double>>(items.size()));
    for (const auto &a : annotations) {
        if ((level == Level::turn) != a.turn_index.has_value()) continue;
        auto &cell = m[annotators.at(a.annotator_id)]
                      [items.at(level_key(level, a.system_id, a.dialogue_id, a.turn_index.value_or(0)))];
        if (cell)
            throw ValidationError("annotator '" + a.annotator_id + "' rated " +
                                  level_key(level, a.system_id, a.dialogue_id, a.turn_index.value_or(0)) + " twice");
        cell = static_cast<double>(a.score);
    }
    auto rep = krippendorff_alpha(m, metric);
    rep.level = level;
    return rep;
}

} // namespace dialeval
