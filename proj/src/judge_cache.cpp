#include "dialeval/judge_cache.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include <json.hpp>

#include "dialeval/error.hpp"

namespace dialeval {

using nlohmann::json;

std::string cache_key(const CacheKeyParts &parts) {
    // %.17g keeps distinct doubles distinct in the key
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.17g", parts.temperature);
    const json canonical = json::array({parts.model_id, std::string(temp), to_string(parts.variant),
                                        parts.rendered_prompt, parts.call_index});
    const std::string bytes = canonical.dump();

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static const char *hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

JudgeCache::JudgeCache(std::filesystem::path dir, LogSink log) : dir_(std::move(dir)), log_(std::move(log)) {
    if (!dir_.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache dir " + dir_.string() + ": " + ec.message());
    }
}

std::filesystem::path JudgeCache::entry_path(const std::string &key) const { return dir_ / (key + ".json"); }

std::optional<std::string> JudgeCache::get(const std::string &key) const {
    if (!enabled()) return std::nullopt;
    const auto path = entry_path(key);
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        const auto j = json::parse(ss.str());
        if (j.at("key").get<std::string>() != key) throw std::runtime_error("key mismatch");
        return j.at("raw").get<std::string>();
    } catch (const std::exception &e) {
        log_("warning: corrupt cache entry " + path.string() + " treated as miss (" + e.what() + ")");
        return std::nullopt;
    }
}

void JudgeCache::put(const std::string &key, const std::string &raw, const std::string &model) const {
    if (!enabled()) return;
    static std::atomic<unsigned long> counter{0};
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    const json entry{{"key", key}, {"raw", raw}, {"model", model}, {"created_at", stamp}};
    std::ostringstream tmpname;
    tmpname << key << ".tmp." << std::this_thread::get_id() << '.' << counter++;
    const auto tmp = dir_ / tmpname.str();
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot write cache entry " + tmp.string());
        os << entry.dump();
        if (!os) throw IoError("cache write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, entry_path(key), ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot commit cache entry " + key);
    }
}

} // namespace dialeval
