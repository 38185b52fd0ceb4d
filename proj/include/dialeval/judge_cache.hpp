#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dialeval/log.hpp"
#include "dialeval/prompts.hpp"

namespace dialeval {

struct CacheKeyParts {
    std::string model_id;
    double temperature = 0.0;
    PromptVariant variant = PromptVariant::cpds_s_noref;
    std::string rendered_prompt;
    int call_index = 0;
};

/// Lowercase hex SHA-256 over a canonical JSON encoding of the key parts.
std::string cache_key(const CacheKeyParts &parts);

/// Content-addressed replay store: one `<key>.json` file per entry holding
/// {"key","raw","model","created_at"}. Writes go through a temp file and rename, so
/// concurrent readers never observe a partial entry.
class JudgeCache {
  public:
    /// Empty `dir` disables caching.
    explicit JudgeCache(std::filesystem::path dir, LogSink log = null_sink());

    bool enabled() const { return !dir_.empty(); }
    std::optional<std::string> get(const std::string &key) const;
    void put(const std::string &key, const std::string &raw, const std::string &model) const;

  private:
    std::filesystem::path entry_path(const std::string &key) const;

    std::filesystem::path dir_;
    LogSink log_;
};

} // namespace dialeval
