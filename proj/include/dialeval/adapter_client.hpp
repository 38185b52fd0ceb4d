#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval {

/// Protocol version spoken by the primary.
inline constexpr int kAdapterProtocolVersion = 1;

/// Child process speaking NDJSON on stdin/stdout. The first line from the child must be
/// {"op":"hello","metrics":[...],"version":1}. Requests are serialized per process.
class AdapterClient {
  public:
    struct Options {
        std::chrono::milliseconds startup_timeout{60000};
        std::chrono::milliseconds request_timeout{30000};
    };

    /// Spawns `argv` and completes the handshake. Throws AdapterError on spawn failure,
    /// handshake timeout, malformed hello or version mismatch.
    explicit AdapterClient(std::vector<std::string> argv) : AdapterClient(std::move(argv), Options{}) {}
    AdapterClient(std::vector<std::string> argv, Options opts);
    ~AdapterClient();

    AdapterClient(const AdapterClient &) = delete;
    AdapterClient &operator=(const AdapterClient &) = delete;

    const std::set<std::string> &metrics() const { return metrics_; }
    bool supports(const std::string &metric) const { return metrics_.count(metric) > 0; }
    /// True when the handshake advertised no metrics.
    bool unusable() const { return metrics_.empty(); }

    /// Raw (unclamped) score. Throws AdapterError on error reply, crash or timeout.
    double score(const std::string &metric, std::string_view candidate, std::string_view reference);

    /// Writes one raw line to the child (test hook for protocol robustness).
    void send_raw_line(const std::string &line);
    /// Reads the next reply object as JSON text (test hook).
    std::string read_raw_line();

  private:
    std::string read_line(std::chrono::milliseconds timeout);
    void write_line(const std::string &line);
    void shutdown();

    Options opts_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    long next_id_ = 1;
    std::string buffer_;
    std::set<std::string> metrics_;
    std::map<long, std::string> pending_; // out-of-order replies keyed by id
    std::mutex mu_;
};

} // namespace dialeval
