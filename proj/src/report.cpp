#include "dialeval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "dialeval/csv.hpp"
#include "dialeval/error.hpp"

namespace dialeval {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string level_title(Level l) {
    switch (l) {
    case Level::turn: return "Turn-level";
    case Level::dialogue: return "Dialogue-level";
    case Level::system: return "System-level";
    }
    return {};
}

std::vector<Level> levels_in(const std::vector<MethodReport> &rows) {
    std::set<Level> seen;
    std::vector<Level> out;
    for (const auto &r : rows)
        if (seen.insert(r.report.level).second) out.push_back(r.report.level);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::string format_cell(double coefficient, bool significant) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", coefficient);
    return std::string(buf) + (significant ? "" : "*");
}

std::string correlations_csv(const std::vector<MethodReport> &rows) {
    std::string out = "method,level,n,r,p_r,rho,p_rho,tau,p_tau,metric_only,human_only\n";
    for (const auto &m : rows) {
        const auto &r = m.report;
        out += csv::format_row({m.method, to_string(r.level), std::to_string(r.n), num(r.r.coefficient),
                                num(r.r.p_value), num(r.rho.coefficient), num(r.rho.p_value), num(r.tau.coefficient),
                                num(r.tau.p_value), std::to_string(r.metric_only), std::to_string(r.human_only)});
        out.push_back('\n');
    }
    return out;
}

std::vector<MethodReport> parse_correlations_csv(const std::string &text) {
    const auto rows = csv::parse(text);
    if (rows.empty()) throw FormatError("correlations CSV has no header");
    const auto &h = rows.front();
    const auto c_method = csv::column(h, "method"), c_level = csv::column(h, "level"), c_n = csv::column(h, "n"),
               c_r = csv::column(h, "r"), c_pr = csv::column(h, "p_r"), c_rho = csv::column(h, "rho"),
               c_prho = csv::column(h, "p_rho"), c_tau = csv::column(h, "tau"), c_ptau = csv::column(h, "p_tau");
    std::vector<MethodReport> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &row = rows[i];
        if (row.size() < h.size()) throw FormatError("short correlations row", i + 1);
        MethodReport m;
        m.method = row[c_method];
        m.report.level = level_from_string(row[c_level]);
        m.report.n = std::stoul(row[c_n]);
        m.report.r = {std::stod(row[c_r]), std::stod(row[c_pr])};
        m.report.rho = {std::stod(row[c_rho]), std::stod(row[c_prho])};
        m.report.tau = {std::stod(row[c_tau]), std::stod(row[c_ptau])};
        m.report.significant_r = m.report.r.p_value < kSignificance;
        m.report.significant_rho = m.report.rho.p_value < kSignificance;
        m.report.significant_tau = m.report.tau.p_value < kSignificance;
        out.push_back(std::move(m));
    }
    return out;
}

std::string correlations_markdown(const std::vector<MethodReport> &rows) {
    std::string out;
    for (Level l : levels_in(rows)) {
        if (!out.empty()) out += "\n";
        out += "### " + level_title(l) + "\n\n";
        out += "| Method | r | ρ | τ | n |\n|---|---|---|---|---|\n";
        for (const auto &m : rows) {
            if (m.report.level != l) continue;
            const auto &r = m.report;
            out += "| " + m.method + " | " + format_cell(r.r.coefficient, r.significant_r) + " | " +
                   format_cell(r.rho.coefficient, r.significant_rho) + " | " +
                   format_cell(r.tau.coefficient, r.significant_tau) + " | " + std::to_string(r.n) + " |\n";
        }
    }
    if (!out.empty()) out += "\n`*` marks coefficients that are not significant at p < 0.05.\n";
    return out;
}

std::string combined_markdown(const std::vector<MethodReport> &rows) {
    const auto levels = levels_in(rows);
    std::vector<std::string> methods;
    std::map<std::pair<std::string, Level>, const CorrelationReport *> cells;
    for (const auto &m : rows) {
        if (std::find(methods.begin(), methods.end(), m.method) == methods.end()) methods.push_back(m.method);
        cells[{m.method, m.report.level}] = &m.report;
    }
    std::string out = "| Method |";
    std::string rule = "|---|";
    for (Level l : levels) {
        out += " " + level_title(l) + " r | ρ | τ |";
        rule += "---|---|---|";
    }
    out += "\n" + rule + "\n";
    for (const auto &method : methods) {
        out += "| " + method + " |";
        for (Level l : levels) {
            auto it = cells.find({method, l});
            if (it == cells.end()) {
                out += " - | - | - |";
                continue;
            }
            const auto &r = *it->second;
            out += " " + format_cell(r.r.coefficient, r.significant_r) + " | " +
                   format_cell(r.rho.coefficient, r.significant_rho) + " | " +
                   format_cell(r.tau.coefficient, r.significant_tau) + " |";
        }
        out += "\n";
    }
    out += "\n`*` marks coefficients that are not significant at p < 0.05.\n";
    return out;
}

std::string agreement_csv(const std::vector<std::pair<AgreementReport, AlphaMetric>> &rows) {
    std::string out = "level,metric,alpha,n_annotators,n_items,observed_disagreement,expected_disagreement\n";
    for (const auto &[a, metric] : rows) {
        out += csv::format_row({to_string(a.level), to_string(metric), num(a.alpha), std::to_string(a.n_annotators),
                                std::to_string(a.n_items), num(a.observed_disagreement),
                                num(a.expected_disagreement)});
        out.push_back('\n');
    }
    return out;
}

} // namespace dialeval
