#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/corpus.hpp"

namespace dialeval {

enum class Level { turn, dialogue, system };
std::string to_string(Level l);
Level level_from_string(std::string_view s);

/// One turn-level value for (system, dialogue, turn).
struct TurnScore {
    std::string system_id;
    std::string dialogue_id;
    int turn_index = 0;
    double value = 0.0;
};

/// One dialogue-level value for (system, dialogue).
struct DialogueScore {
    std::string system_id;
    std::string dialogue_id;
    double value = 0.0;
};

/// Composite key: "system", "system/dialogue" or "system/dialogue/turn".
std::string level_key(Level l, const std::string &system, const std::string &dialogue = {}, int turn = 0);

/// Values of one side (metric or human) at one level, keyed by level_key.
struct LevelTable {
    Level level = Level::turn;
    std::map<std::string, double> values;
};

struct ScoreRow {
    std::string key;
    double metric_value = 0.0;
    double human_value = 0.0;
};

struct ScoreTable {
    Level level = Level::turn;
    std::vector<ScoreRow> rows;
    std::size_t metric_only = 0; // keys dropped by the inner join
    std::size_t human_only = 0;
};

struct AggregateOptions {
    /// When set, every dialogue must carry exactly this many turns (1..k without gaps).
    std::optional<int> turns_per_dialogue;
};

/// Dialogue value = mean of its turns; system value = mean of ALL of the system's turns.
LevelTable aggregate(const std::vector<TurnScore> &turns, Level target, const AggregateOptions &opts = {});

/// Dialogue-level scores lifted to `target` (dialogue or system = mean of the system's dialogues).
LevelTable aggregate(const std::vector<DialogueScore> &dialogues, Level target);

/// Both sides aggregated identically; dialogue-level human scores, when given, replace the
/// aggregated human values at dialogue and system level.
ScoreTable aggregate_pairs(const std::vector<TurnScore> &metric_turns, const std::vector<TurnScore> &human_turns,
                           Level target, const std::vector<DialogueScore> &human_dialogue_override = {},
                           const AggregateOptions &opts = {});

ScoreTable join(const LevelTable &metric, const LevelTable &human);

/// Mean over annotators for each turn-level record.
std::vector<TurnScore> human_turn_scores(const std::vector<AnnotationRecord> &annotations);
/// Mean over annotators for each dialogue-level record.
std::vector<DialogueScore> human_dialogue_scores(const std::vector<AnnotationRecord> &annotations);

struct Correlation {
    double coefficient = 0.0;
    double p_value = 1.0;
};

enum class PValueMethod { asymptotic, exact_permutation };

/// p from the t statistic with n-2 degrees of freedom.
Correlation pearson(std::span<const double> x, std::span<const double> y,
                    PValueMethod method = PValueMethod::asymptotic);
/// Pearson on average ranks; p from the same t approximation.
Correlation spearman(std::span<const double> x, std::span<const double> y,
                     PValueMethod method = PValueMethod::asymptotic);
/// Tie-corrected tau-b in O(n log n); p from the normal approximation with tie-adjusted variance.
Correlation kendall(std::span<const double> x, std::span<const double> y,
                    PValueMethod method = PValueMethod::asymptotic);

/// Average (fractional) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> v);

inline constexpr double kSignificance = 0.05;

struct CorrelationReport {
    Level level = Level::turn;
    std::size_t n = 0;
    Correlation r, rho, tau;
    bool significant_r = false, significant_rho = false, significant_tau = false;
    std::size_t metric_only = 0;
    std::size_t human_only = 0;
};

CorrelationReport correlate(const ScoreTable &table, PValueMethod method = PValueMethod::asymptotic);
CorrelationReport correlate(const LevelTable &metric, const LevelTable &human,
                            PValueMethod method = PValueMethod::asymptotic);

enum class AlphaMetric { interval, ordinal };
std::string to_string(AlphaMetric m);
AlphaMetric alpha_metric_from_string(std::string_view s);

/// annotator x item; nullopt marks a missing cell.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

struct AgreementReport {
    double alpha = 0.0;
    Level level = Level::turn;
    std::size_t n_annotators = 0;
    std::size_t n_items = 0;
    double observed_disagreement = 0.0;
    double expected_disagreement = 0.0;
};

/// Coincidence-matrix alpha = 1 - D_o / D_e. Units with fewer than two values are not pairable.
AgreementReport krippendorff_alpha(const RatingMatrix &matrix, AlphaMetric metric = AlphaMetric::interval);

/// Builds the rating matrix from turn-level (or dialogue-level) records and computes alpha.
AgreementReport annotation_agreement(const std::vector<AnnotationRecord> &annotations, Level level,
                                     AlphaMetric metric = AlphaMetric::interval);

} // namespace dialeval
