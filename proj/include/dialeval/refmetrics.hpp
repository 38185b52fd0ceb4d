#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval {

class AdapterClient;

enum class MetricKind { f1, bleu, rouge1, rouge2, rougeL, meteor, external };

struct MetricId {
    MetricKind kind = MetricKind::f1;
    std::string external_name; // only for MetricKind::external

    std::string name() const; // "f1", ..., "external:bertscore"
    static MetricId parse(std::string_view s);
    bool operator==(const MetricId &) const = default;
};

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

struct MetricScore {
    MetricId metric;
    double value = 0.0;
    std::optional<PrecisionRecall> components; // f1 and rouge variants only
};

using Tokens = std::vector<std::string>;

// Token-level primitives; the string overloads normalize first.
MetricScore word_f1(const Tokens &candidate, const Tokens &reference);
MetricScore bleu(const Tokens &candidate, const Tokens &reference);
MetricScore meteor(const Tokens &candidate, const Tokens &reference);

struct RougeScores {
    MetricScore rouge1;
    MetricScore rouge2;
    MetricScore rougeL;
};
RougeScores rouge(const Tokens &candidate, const Tokens &reference);

MetricScore word_f1(std::string_view candidate, std::string_view reference);
MetricScore bleu(std::string_view candidate, std::string_view reference);
RougeScores rouge(std::string_view candidate, std::string_view reference);
MetricScore meteor(std::string_view candidate, std::string_view reference);

/// Smoothing constant for zero n-gram precisions.
inline constexpr double kBleuEpsilon = 1e-12;

struct MeteorParams {
    double alpha = 0.9;
    double beta = 3.0;
    double gamma = 0.5;
};
MetricScore meteor(const Tokens &candidate, const Tokens &reference, const MeteorParams &params);

/// Any internal metric by id. Throws for external ids.
MetricScore internal_metric(const MetricId &id, std::string_view candidate, std::string_view reference);

/// Score from the adapter process, clamped into [0,1]. `warning` receives a note when clamping.
MetricScore external_metric(const std::string &name, std::string_view candidate, std::string_view reference,
                            AdapterClient &client, std::string *warning = nullptr);

} // namespace dialeval
