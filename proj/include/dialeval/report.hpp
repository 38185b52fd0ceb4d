#pragma once

#include <string>
#include <vector>

#include "dialeval/stats.hpp"

namespace dialeval {

struct MethodReport {
    std::string method; // metric or judge name
    CorrelationReport report;
};

/// Coefficient with three decimals, suffixed by "*" when not significant at p < 0.05.
std::string format_cell(double coefficient, bool significant);

std::string correlations_csv(const std::vector<MethodReport> &rows);
std::vector<MethodReport> parse_correlations_csv(const std::string &text);

/// One Markdown table block per level: | Method | r | ρ | τ | n |.
std::string correlations_markdown(const std::vector<MethodReport> &rows);

/// Levels side by side: | Method | <Level> r | ρ | τ | ... | (one row per method).
std::string combined_markdown(const std::vector<MethodReport> &rows);

std::string agreement_csv(const std::vector<std::pair<AgreementReport, AlphaMetric>> &rows);

} // namespace dialeval
