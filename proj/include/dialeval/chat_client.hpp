#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "dialeval/log.hpp"

namespace dialeval {

struct ChatRequest {
    std::string model;
    double temperature = 1.0;
    std::string prompt; // sent as a single user message
};

/// Provider-agnostic chat completion. `complete` may be called from several threads.
class ChatClient {
  public:
    virtual ~ChatClient() = default;
    /// Returns the completion text. Throws TransportError; `retryable()` marks 429/5xx/network faults.
    virtual std::string complete(const ChatRequest &req) = 0;
};

/// Chat-completions wire shape: POST {base}/chat/completions with
/// {"model","temperature","messages":[{"role":"user","content":...}]}, reads choices[0].message.content.
class HttpChatClient : public ChatClient {
  public:
    struct Options {
        std::string api_base; // e.g. https://api.openai.com/v1
        std::string api_key;
        std::chrono::seconds timeout{120};
    };

    explicit HttpChatClient(Options opts);
    /// Reads JUDGE_API_BASE and JUDGE_API_KEY. Throws Error when the base URL is unset.
    static HttpChatClient from_env();

    std::string complete(const ChatRequest &req) override;

  private:
    Options opts_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

struct BackoffPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds initial_delay{500};
    double multiplier = 2.0;
};

/// Retries retryable TransportErrors with exponential backoff.
std::string complete_with_backoff(ChatClient &client, const ChatRequest &req, const BackoffPolicy &policy,
                                  const LogSink &log);

} // namespace dialeval
