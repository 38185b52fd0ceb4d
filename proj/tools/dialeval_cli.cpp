#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dialeval/error.hpp"
#include "dialeval/harness.hpp"
#include "dialeval/refmetrics.hpp"

using namespace dialeval;

namespace {

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::string cache_dir;
    std::string metrics;
    std::string level;
    std::string output_dir;
    std::string dialogues, runs, annotations, profiles, tables_dir, variant;
    std::vector<std::string> tables;
    std::vector<std::string> adapter;
};

void summary(const std::string &cmd, const CommandResult &r) {
    std::cerr << cmd << ": " << r.counts.rows_written << " rows written";
    if (r.counts.rows_skipped) std::cerr << ", " << r.counts.rows_skipped << " already present";
    if (r.counts.errors) std::cerr << ", " << r.counts.errors << " errors";
    if (r.counts.judge.client_calls || r.counts.judge.cache_hits)
        std::cerr << ", " << r.counts.judge.client_calls << " judge calls, " << r.counts.judge.cache_hits
                  << " cache hits";
    std::cerr << "\n";
    for (const auto &p : r.outputs) std::cout << p.string() << "\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"dialeval: dialogue evaluation benchmark harness"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "RNG seed");
        sub->add_option("-o,--output-dir", f.output_dir, "output directory");
        sub->add_option("--dialogues", f.dialogues, "dialogues.jsonl");
        sub->add_option("--runs", f.runs, "system_runs.jsonl");
        sub->add_option("--annotations", f.annotations, "annotations.jsonl");
    };

    auto *gen = app.add_subcommand("generate", "build FPI personas and dialogue skeletons");
    common(gen);
    gen->add_option("--profiles", f.profiles, "source profiles (jsonl)");
    gen->add_option("--tables-dir", f.tables_dir, "directory with heads.csv, names.csv, family.csv");

    auto *score = app.add_subcommand("score", "reference-based metrics per turn");
    common(score);
    score->add_option("--metrics", f.metrics, "comma list, e.g. f1,bleu,rougeL,meteor,external:bertscore");
    score->add_option("--adapter", f.adapter, "adapter command line")->expected(1, -1);

    auto *judge = app.add_subcommand("judge", "LLM judge scores per turn and per dialogue");
    common(judge);
    judge->add_flag("--deterministic", f.deterministic, "temperature 0, one call per turn");
    judge->add_option("--cache-dir", f.cache_dir, "judge reply cache");
    judge->add_option("--variant", f.variant, "prompt variant for turn scoring");

    auto *corr = app.add_subcommand("correlate", "correlations against human scores");
    common(corr);
    corr->add_option("--level", f.level, "comma list of turn,dialogue,system");
    corr->add_option("--tables", f.tables, "metric tables (scores.csv, judge_*.csv)");

    auto *agree = app.add_subcommand("agreement", "Krippendorff alpha among annotators");
    common(agree);

    auto *report = app.add_subcommand("report", "merge correlations.csv files into one Markdown table");
    common(report);
    report->add_option("--tables", f.tables, "correlations.csv files");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!f.config.empty()) cfg.merge_json_file(f.config);
        CLI::App *sub = app.get_subcommands().front();
        auto given = [&](const char *name) { return sub->count(name) > 0; };
        if (given("--seed")) cfg.seed = f.seed;
        if (given("--output-dir")) cfg.output_dir = f.output_dir;
        if (given("--dialogues")) cfg.dialogues = f.dialogues;
        if (given("--runs")) cfg.runs = f.runs;
        if (given("--annotations")) cfg.annotations = f.annotations;

        LogSink log = stderr_sink();
        const std::string name = sub->get_name();
        CommandResult r;
        if (sub == gen) {
            if (given("--profiles")) cfg.profiles = f.profiles;
            if (given("--tables-dir")) cfg.tables_dir = f.tables_dir;
            r = cmd_generate(cfg, log);
        } else if (sub == score) {
            if (given("--metrics")) cfg.metrics = split_list(f.metrics);
            if (given("--adapter")) cfg.adapter_command = f.adapter;
            r = cmd_score(cfg, log);
        } else if (sub == judge) {
            if (given("--deterministic")) cfg.deterministic = true;
            if (given("--cache-dir")) cfg.cache_dir = f.cache_dir;
            if (given("--variant")) cfg.judge.variant = prompt_variant_from_string(f.variant);
            r = cmd_judge(cfg, log);
        } else if (sub == corr) {
            if (given("--level")) {
                cfg.levels.clear();
                for (const auto &l : split_list(f.level)) cfg.levels.push_back(level_from_string(l));
            }
            if (given("--tables")) cfg.metric_tables.assign(f.tables.begin(), f.tables.end());
            r = cmd_correlate(cfg, log);
        } else if (sub == agree) {
            r = cmd_agreement(cfg, log);
        } else {
            if (given("--tables")) cfg.report_inputs.assign(f.tables.begin(), f.tables.end());
            r = cmd_report(cfg, log);
        }
        summary(name, r);
        return r.counts.errors ? 3 : 0;
    } catch (const FormatError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
