#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dialeval/chat_client.hpp"
#include "dialeval/judge.hpp"
#include "dialeval/log.hpp"
#include "dialeval/stats.hpp"

namespace dialeval {

inline constexpr const char *kToolVersion = "0.3.0";

struct RunConfig {
    // corpus
    std::filesystem::path dialogues;
    std::filesystem::path runs;
    std::filesystem::path annotations;
    std::optional<int> turns_per_dialogue = 7;

    // generate
    std::filesystem::path tables_dir; // empty: built-in tables
    std::filesystem::path profiles;
    int persona_count = 10;
    int items_per_aspect = 1;

    // score
    std::vector<std::string> metrics{"f1", "bleu", "rougeL", "meteor"};
    std::vector<std::string> adapter_command;

    // judge
    JudgeSettings judge;
    std::filesystem::path cache_dir;
    bool judge_dialogue = true;
    bool deterministic = false;

    // correlate / agreement / report
    std::vector<Level> levels{Level::turn, Level::system};
    std::vector<std::filesystem::path> metric_tables; // empty: whatever score/judge wrote to output_dir
    PValueMethod p_method = PValueMethod::asymptotic;
    AlphaMetric alpha_metric = AlphaMetric::interval;
    std::vector<std::filesystem::path> report_inputs;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;

    /// Overlays the keys present in a JSON config file onto this config.
    void merge_json_file(const std::filesystem::path &path);
    std::string to_json() const;
};

/// Counters surfaced in the manifest.
struct RunCounts {
    long systems = 0;
    long dialogues = 0;
    long turns = 0;
    long rows_written = 0;
    long rows_skipped = 0;
    long errors = 0;
    JudgeStats judge;
};

struct CommandResult {
    RunCounts counts;
    std::vector<std::filesystem::path> outputs;
};

CommandResult cmd_generate(const RunConfig &cfg, const LogSink &log);
CommandResult cmd_score(const RunConfig &cfg, const LogSink &log);
/// `client` overrides the HTTP client built from the environment.
CommandResult cmd_judge(const RunConfig &cfg, const LogSink &log, ChatClient *client = nullptr);
CommandResult cmd_correlate(const RunConfig &cfg, const LogSink &log);
CommandResult cmd_agreement(const RunConfig &cfg, const LogSink &log);
CommandResult cmd_report(const RunConfig &cfg, const LogSink &log);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path &path);

/// Writes `content` to `path` via a temp file and rename.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

} // namespace dialeval
