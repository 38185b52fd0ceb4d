#include "dialeval/refmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dialeval/adapter_client.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/error.hpp"
#include "dialeval/porter_stemmer.hpp"

namespace dialeval {

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Tokens &t, std::size_t n) {
    NgramCounts out;
    if (t.size() < n) return out;
    for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

int clipped_overlap(const NgramCounts &cand, const NgramCounts &ref) {
    int hits = 0;
    for (const auto &[g, c] : cand) {
        if (auto it = ref.find(g); it != ref.end()) hits += std::min(c, it->second);
    }
    return hits;
}

double harmonic(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

MetricScore prf(MetricKind kind, int overlap, std::size_t cand_total, std::size_t ref_total) {
    MetricScore s{{kind, {}}, 0.0, PrecisionRecall{}};
    if (overlap == 0 || cand_total == 0 || ref_total == 0) return s;
    s.components->precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
    s.components->recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
    s.value = harmonic(s.components->precision, s.components->recall);
    return s;
}

std::size_t lcs_length(const Tokens &a, const Tokens &b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

using Indexed = std::vector<std::pair<std::size_t, std::string>>;
using Alignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Greedy alignment scanning both sides from the back; matched words leave the pools.
void match_stage(Indexed &hyp, Indexed &ref, Alignment &out) {
    for (std::size_t i = hyp.size(); i-- > 0;) {
        for (std::size_t j = ref.size(); j-- > 0;) {
            if (hyp[i].second == ref[j].second) {
                out.emplace_back(hyp[i].first, ref[j].first);
                hyp.erase(hyp.begin() + static_cast<std::ptrdiff_t>(i));
                ref.erase(ref.begin() + static_cast<std::ptrdiff_t>(j));
                break;
            }
        }
    }
}

} // namespace

std::string MetricId::name() const {
    switch (kind) {
    case MetricKind::f1: return "f1";
    case MetricKind::bleu: return "bleu";
    case MetricKind::rouge1: return "rouge1";
    case MetricKind::rouge2: return "rouge2";
    case MetricKind::rougeL: return "rougeL";
    case MetricKind::meteor: return "meteor";
    case MetricKind::external: return "external:" + external_name;
    }
    return {};
}

MetricId MetricId::parse(std::string_view s) {
    if (s == "f1") return {MetricKind::f1, {}};
    if (s == "bleu") return {MetricKind::bleu, {}};
    if (s == "rouge1") return {MetricKind::rouge1, {}};
    if (s == "rouge2") return {MetricKind::rouge2, {}};
    if (s == "rougeL") return {MetricKind::rougeL, {}};
    if (s == "meteor") return {MetricKind::meteor, {}};
    constexpr std::string_view ext = "external:";
    if (s.substr(0, ext.size()) == ext && s.size() > ext.size())
        return {MetricKind::external, std::string(s.substr(ext.size()))};
    throw ValidationError("unknown metric '" + std::string(s) + "'");
}

MetricScore word_f1(const Tokens &candidate, const Tokens &reference) {
    std::map<std::string, int> ref_counts, cand_counts;
    for (const auto &t : reference) ++ref_counts[t];
    for (const auto &t : candidate) ++cand_counts[t];
    int same = 0;
    for (const auto &[t, c] : cand_counts)
        if (auto it = ref_counts.find(t); it != ref_counts.end()) same += std::min(c, it->second);
    return prf(MetricKind::f1, same, candidate.size(), reference.size());
}

MetricScore bleu(const Tokens &candidate, const Tokens &reference) {
    MetricScore s{{MetricKind::bleu, {}}, 0.0, std::nullopt};
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    if (candidate.empty()) return s;
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cand = ngrams(candidate, n);
        const auto ref = ngrams(reference, n);
        const int num = clipped_overlap(cand, ref);
        const std::size_t den = std::max<std::size_t>(1, candidate.size() >= n ? candidate.size() - n + 1 : 0);
        const double p = num == 0 ? kBleuEpsilon / static_cast<double>(den)
                                  : static_cast<double>(num) / static_cast<double>(den);
        log_sum += 0.25 * std::log(p);
    }
    s.value = std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
    return s;
}

RougeScores rouge(const Tokens &candidate, const Tokens &reference) {
    auto by_n = [&](std::size_t n, MetricKind kind) {
        const auto cand = ngrams(candidate, n);
        const auto ref = ngrams(reference, n);
        const std::size_t ct = candidate.size() >= n ? candidate.size() - n + 1 : 0;
        const std::size_t rt = reference.size() >= n ? reference.size() - n + 1 : 0;
        return prf(kind, clipped_overlap(cand, ref), ct, rt);
    };
    RougeScores out{by_n(1, MetricKind::rouge1), by_n(2, MetricKind::rouge2), {}};
    out.rougeL = prf(MetricKind::rougeL, static_cast<int>(lcs_length(candidate, reference)), candidate.size(),
                     reference.size());
    return out;
}

MetricScore meteor(const Tokens &candidate, const Tokens &reference, const MeteorParams &params) {
    MetricScore s{{MetricKind::meteor, {}}, 0.0, std::nullopt};
    if (candidate.empty() || reference.empty()) return s;

    Indexed hyp, ref;
    for (std::size_t i = 0; i < candidate.size(); ++i) hyp.emplace_back(i, candidate[i]);
    for (std::size_t j = 0; j < reference.size(); ++j) ref.emplace_back(j, reference[j]);

    Alignment matches;
    match_stage(hyp, ref, matches);
    for (auto &h : hyp) h.second = porter_stem(h.second);
    for (auto &r : ref) r.second = porter_stem(r.second);
    match_stage(hyp, ref, matches);

    if (matches.empty()) return s;
    std::sort(matches.begin(), matches.end(), [](const auto &a, const auto &b) { return a.first < b.first; });

    std::size_t chunks = 1;
    for (std::size_t i = 0; i + 1 < matches.size(); ++i) {
        const bool adjacent = matches[i + 1].first == matches[i].first + 1 && matches[i + 1].second == matches[i].second + 1;
        if (!adjacent) ++chunks;
    }
    const double m = static_cast<double>(matches.size());
    const double precision = m / static_cast<double>(candidate.size());
    const double recall = m / static_cast<double>(reference.size());
    const double fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    const double penalty = params.gamma * std::pow(static_cast<double>(chunks) / m, params.beta);
    s.value = std::clamp((1.0 - penalty) * fmean, 0.0, 1.0);
    return s;
}

MetricScore meteor(const Tokens &candidate, const Tokens &reference) { return meteor(candidate, reference, {}); }

MetricScore word_f1(std::string_view candidate, std::string_view reference) {
    return word_f1(normalize_text(candidate), normalize_text(reference));
}
MetricScore bleu(std::string_view candidate, std::string_view reference) {
    return bleu(normalize_text(candidate), normalize_text(reference));
}
RougeScores rouge(std::string_view candidate, std::string_view reference) {
    return rouge(normalize_text(candidate), normalize_text(reference));
}
MetricScore meteor(std::string_view candidate, std::string_view reference) {
    return meteor(normalize_text(candidate), normalize_text(reference));
}

MetricScore internal_metric(const MetricId &id, std::string_view candidate, std::string_view reference) {
    switch (id.kind) {
    case MetricKind::f1: return word_f1(candidate, reference);
    case MetricKind::bleu: return bleu(candidate, reference);
    case MetricKind::rouge1: return rouge(candidate, reference).rouge1;
    case MetricKind::rouge2: return rouge(candidate, reference).rouge2;
    case MetricKind::rougeL: return rouge(candidate, reference).rougeL;
    case MetricKind::meteor: return meteor(candidate, reference);
    case MetricKind::external: break;
    }
    throw ValidationError("'" + id.name() + "' is not an internal metric");
}

MetricScore external_metric(const std::string &name, std::string_view candidate, std::string_view reference,
                            AdapterClient &client, std::string *warning) {
    if (!client.supports(name)) throw AdapterError("adapter does not advertise metric '" + name + "'");
    const double raw = client.score(name, candidate, reference);
    MetricScore s{{MetricKind::external, name}, std::clamp(raw, 0.0, 1.0), std::nullopt};
    if (!std::isfinite(raw)) throw AdapterError("adapter returned a non-finite score for '" + name + "'");
    if (s.value != raw && warning) *warning = name + ": clamped out-of-range score " + std::to_string(raw);
    return s;
}

} // namespace dialeval
