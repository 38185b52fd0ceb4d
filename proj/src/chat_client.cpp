#include "dialeval/chat_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dialeval/error.hpp"

namespace dialeval {

using nlohmann::json;

HttpChatClient::HttpChatClient(Options opts) : opts_(std::move(opts)) {
    std::string base = opts_.api_base;
    while (!base.empty() && base.back() == '/') base.pop_back();
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw Error("judge API base must include a scheme: '" + base + "'");
    const auto path_start = base.find('/', scheme_end + 3);
    scheme_host_port_ = base.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : base.substr(path_start);
}

HttpChatClient HttpChatClient::from_env() {
    const char *base = std::getenv("JUDGE_API_BASE");
    const char *key = std::getenv("JUDGE_API_KEY");
    if (!base || !*base) throw Error("JUDGE_API_BASE is not set");
    return HttpChatClient(Options{base, key ? key : "", std::chrono::seconds{120}});
}

std::string HttpChatClient::complete(const ChatRequest &req) {
    httplib::Client cli(scheme_host_port_);
    cli.set_connection_timeout(std::chrono::seconds{30});
    cli.set_read_timeout(opts_.timeout);
    cli.set_write_timeout(opts_.timeout);
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    const json body{{"model", req.model},
                    {"temperature", req.temperature},
                    {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})}};
    auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("chat request failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status), true);
    if (res->status != 200)
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body, false);
    try {
        const auto j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception &e) {
        throw TransportError(std::string("unexpected chat response shape: ") + e.what(), false);
    }
}

std::string complete_with_backoff(ChatClient &client, const ChatRequest &req, const BackoffPolicy &policy,
                                  const LogSink &log) {
    auto delay = policy.initial_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            return client.complete(req);
        } catch (const TransportError &e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
            log("warning: " + std::string(e.what()) + "; retrying in " + std::to_string(delay.count()) + " ms");
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(static_cast<long>(static_cast<double>(delay.count()) * policy.multiplier));
        }
    }
}

} // namespace dialeval
