#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <deque>
#include <set>

#include "dialeval/error.hpp"
#include "dialeval/judge.hpp"
#include "support/fixtures.hpp"

using namespace dialeval;
using fixtures::TempDir;

namespace {

// Replies from a queue; the last one repeats once the queue is drained.
class QueueClient : public ChatClient {
  public:
    explicit QueueClient(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
    std::string complete(const ChatRequest &req) override {
        std::lock_guard lock(mu_);
        ++calls;
        seen.push_back(req);
        if (replies_.size() > 1) {
            auto r = replies_.front();
            replies_.pop_front();
            return r;
        }
        return replies_.front();
    }
    std::atomic<int> calls{0};
    std::vector<ChatRequest> seen;

  private:
    std::mutex mu_;
    std::deque<std::string> replies_;
};

// Fails with a retryable error `failures` times, then answers.
class FlakyClient : public ChatClient {
  public:
    explicit FlakyClient(int failures, bool retryable = true) : left_(failures), retryable_(retryable) {}
    std::string complete(const ChatRequest &) override {
        ++calls;
        if (left_-- > 0) throw TransportError("HTTP 503", retryable_);
        return "- Humanness: 4";
    }
    int calls = 0;

  private:
    int left_;
    bool retryable_;
};

EvalInstance instance(const std::string &candidate = "I protect people for a living.") {
    EvalInstance inst;
    inst.dialogue_id = "d";
    inst.turn_index = 1;
    inst.context = {{Speaker::A, "What do you do?"}};
    inst.reference = "I'm a bodyguard.";
    inst.persona_b.sentences = {"My name is Kristy."};
    inst.candidate = candidate;
    return inst;
}

JudgeSettings quick() {
    JudgeSettings s;
    s.backoff.initial_delay = std::chrono::milliseconds(1);
    return s;
}

} // namespace

TEST_CASE("stub judge scoring") {
    const JudgeCache nocache({});
    SUBCASE("constant reply") {
        QueueClient c({"- Humanness: 4"});
        Judge j(c, nocache, quick());
        const auto t = j.score_turn(instance());
        CHECK(t.mean == 4.0);
        CHECK(t.overalls.size() == 3);
        CHECK(c.calls == 3);
        CHECK(c.seen[0].temperature == 1.0);
        CHECK(c.seen[0].model == "gpt-4-turbo-2024-04-09");
    }
    SUBCASE("three different replies average") {
        QueueClient c({"- Humanness: 3", "- Humanness: 4", "- Humanness: 5"});
        Judge j(c, nocache, quick());
        CHECK(j.score_turn(instance()).mean == 4.0);
    }
    SUBCASE("persistent garbage is a per-turn error") {
        QueueClient c({"no idea"});
        Judge j(c, nocache, quick());
        CHECK_THROWS_AS(j.score_turn(instance()), ParseFailure);
        CHECK(c.calls == 3); // one call plus two retries
        CHECK(j.stats().parse_failures == 3);
        const auto batch = j.score_turns({instance()}, PromptVariant::cpds_d_noref);
        CHECK_FALSE(batch[0].value);
        CHECK(batch[0].error.find("humanness") != std::string::npos);
    }
    SUBCASE("a retry after garbage recovers") {
        QueueClient c({"hmm", "- Humanness: 2"});
        auto s = quick();
        s.n_calls = 1;
        Judge j(c, nocache, s);
        CHECK(j.score_turn(instance()).mean == 2.0);
        CHECK(c.calls == 2);
    }
    SUBCASE("deterministic mode") {
        QueueClient c({"- Humanness: 5"});
        auto s = quick();
        s.make_deterministic();
        Judge j(c, nocache, s);
        j.score_turn(instance());
        CHECK(c.calls == 1);
        CHECK(c.seen[0].temperature == 0.0);
    }
    SUBCASE("clamps are counted") {
        QueueClient c({"- Humanness: 9"});
        Judge j(c, nocache, quick());
        CHECK(j.score_turn(instance()).mean == 5.0);
        CHECK(j.stats().clamp_events == 3);
    }
    SUBCASE("bad settings") {
        QueueClient c({"x"});
        auto s = quick();
        s.n_calls = 0;
        CHECK_THROWS_AS(Judge(c, nocache, s), ValidationError);
    }
}

TEST_CASE("cache keys") {
    CacheKeyParts p{"m", 1.0, PromptVariant::cpds_d_noref, "prompt", 0};
    const auto k0 = cache_key(p);
    CHECK(k0.size() == 64);
    CHECK(k0 == cache_key(p));
    std::set<std::string> keys{k0};
    p.call_index = 1;
    keys.insert(cache_key(p));
    p.temperature = 0.0;
    keys.insert(cache_key(p));
    p.model_id = "other";
    keys.insert(cache_key(p));
    p.variant = PromptVariant::cpds_s_noref;
    keys.insert(cache_key(p));
    p.rendered_prompt = "prompt ";
    keys.insert(cache_key(p));
    CHECK(keys.size() == 6);
}

TEST_CASE("judge cache store") {
    TempDir dir("cache");
    std::vector<std::string> warnings;
    std::mutex mu;
    JudgeCache cache(dir / "c", [&](std::string_view m) {
        std::lock_guard lock(mu);
        warnings.emplace_back(m);
    });
    const auto key = cache_key({"m", 1.0, PromptVariant::cpds_d_noref, "p", 0});
    CHECK_FALSE(cache.get(key));
    cache.put(key, "- Humanness: 4", "m");
    CHECK(cache.get(key) == std::optional<std::string>("- Humanness: 4"));

    fixtures::spit(dir / "c" / (key + ".json"), "{\"key\": \"tru");
    CHECK_FALSE(cache.get(key));
    CHECK(warnings.size() == 1);

    const JudgeCache off({});
    CHECK_FALSE(off.enabled());
    off.put(key, "x", "m");
    CHECK_FALSE(off.get(key));
}

TEST_CASE("warm cache replays without client calls") {
    TempDir dir("warm");
    const JudgeCache cache(dir / "c");
    std::vector<EvalInstance> turns;
    for (int i = 0; i < 5; ++i) turns.push_back(instance("reply " + std::to_string(i)));

    QueueClient cold({"- Humanness: 2", "- Humanness: 3", "- Humanness: 4"});
    Judge a(cold, cache, quick());
    std::vector<double> first;
    for (const auto &t : turns) first.push_back(a.score_turn(t).mean);
    CHECK(cold.calls == 15);

    QueueClient warm({"- Humanness: 1"});
    Judge b(warm, cache, quick());
    std::vector<double> second;
    for (const auto &t : turns) second.push_back(b.score_turn(t).mean);
    CHECK(warm.calls == 0);
    CHECK(second == first);
    CHECK(b.stats().cache_hits == 15);

    // a different temperature is a different key
    auto s = quick();
    s.temperature = 0.5;
    Judge c(warm, cache, s);
    c.score_turn(turns[0]);
    CHECK(warm.calls == 3);
}

TEST_CASE("backoff") {
    BackoffPolicy p;
    p.initial_delay = std::chrono::milliseconds(1);
    const ChatRequest req{"m", 1.0, "p"};
    FlakyClient ok(2);
    CHECK(complete_with_backoff(ok, req, p, null_sink()) == "- Humanness: 4");
    CHECK(ok.calls == 3);
    FlakyClient never(10);
    CHECK_THROWS_AS(complete_with_backoff(never, req, p, null_sink()), TransportError);
    CHECK(never.calls == 5);
    FlakyClient fatal(1, false);
    CHECK_THROWS_AS(complete_with_backoff(fatal, req, p, null_sink()), TransportError);
    CHECK(fatal.calls == 1);
}

TEST_CASE("parallel_for") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
    for (const auto &h : hits) CHECK(h.load() == 1);
    int serial = 0;
    parallel_for(10, 1, [&](std::size_t) { ++serial; });
    CHECK(serial == 10);
    parallel_for(0, 4, [&](std::size_t) { FAIL("no items"); });
}

TEST_CASE("concurrency window bounds in-flight calls") {
    class Slow : public ChatClient {
      public:
        std::string complete(const ChatRequest &) override {
            const int now = ++in_flight;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --in_flight;
            return "- Humanness: 3";
        }
        std::atomic<int> in_flight{0}, peak{0};
    } slow;
    auto s = quick();
    s.concurrency = 2;
    const JudgeCache nocache({});
    Judge j(slow, nocache, s);
    std::vector<EvalInstance> turns;
    for (int i = 0; i < 12; ++i) turns.push_back(instance("r" + std::to_string(i)));
    const auto out = j.score_turns(turns, PromptVariant::cpds_d_noref);
    for (const auto &o : out) CHECK(o.value);
    CHECK(slow.peak.load() <= 2);
}

TEST_CASE("two-step dialogue scoring") {
    const JudgeCache nocache({});
    QueueClient c({"- Humanness: 4"});
    auto s = quick();
    s.n_calls = 1;
    Judge j(c, nocache, s);
    std::vector<EvalInstance> turns;
    for (int i = 1; i <= 7; ++i) {
        auto t = instance("turn " + std::to_string(i));
        t.turn_index = i;
        turns.push_back(t);
    }
    SUBCASE("ok") {
        QueueClient d({"- Humanness: 4", "- Humanness: 4", "- Humanness: 4", "- Humanness: 4", "- Humanness: 4",
                       "- Humanness: 4", "- Humanness: 2",
                       "Overall Dialogue Turn Score - 3.8\nDialogue Interaction Score - 2.5\nFinal Score - 3.2"});
        Judge jd(d, nocache, s);
        const auto out = jd.score_dialogue_two_step(turns, PromptVariant::cpds_d_noref);
        CHECK(out.turns.size() == 7);
        CHECK(out.turns[6].mean == 2.0);
        CHECK(out.verdict.final_score == 3.2);
        CHECK(out.verdict.overall_turn_score == 3.8);
        CHECK(out.verdict.interaction_score == 2.5);
        const auto &step2 = d.seen.back().prompt;
        CHECK(step2.find("Turn_7 Score - 2.0") != std::string::npos);
        CHECK(step2.find("Turn_3: turn 3") != std::string::npos);
    }
    SUBCASE("unparseable step 2") {
        const auto out = j.score_dialogues({turns}, PromptVariant::cpds_d_noref);
        REQUIRE(out.size() == 1);
        CHECK_FALSE(out[0].value);
        CHECK(out[0].error.find("Overall Dialogue Turn Score") != std::string::npos);
    }
}

TEST_CASE("HttpChatClient against a local endpoint") {
    httplib::Server srv;
    std::string seen_auth;
    nlohmann::json seen_body;
    int fail_first = 1;
    std::mutex mu;
    srv.Post("/v1/chat/completions", [&](const httplib::Request &req, httplib::Response &res) {
        std::lock_guard lock(mu);
        seen_auth = req.get_header_value("Authorization");
        seen_body = nlohmann::json::parse(req.body);
        if (fail_first-- > 0) {
            res.status = 503;
            return;
        }
        const nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "- Humanness: 5"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    srv.Post("/bad/chat/completions", [](const httplib::Request &, httplib::Response &res) {
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    HttpChatClient client({"http://127.0.0.1:" + std::to_string(port) + "/v1/", "sk-test", std::chrono::seconds{5}});
    CHECK_THROWS_AS(client.complete({"m", 0.0, "hi"}), TransportError);
    BackoffPolicy p;
    p.initial_delay = std::chrono::milliseconds(1);
    fail_first = 1;
    CHECK(complete_with_backoff(client, {"gpt-x", 0.0, "hello judge"}, p, null_sink()) == "- Humanness: 5");
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body["model"] == "gpt-x");
    CHECK(seen_body["temperature"] == 0.0);
    CHECK(seen_body["messages"][0]["role"] == "user");
    CHECK(seen_body["messages"][0]["content"] == "hello judge");

    HttpChatClient bad({"http://127.0.0.1:" + std::to_string(port) + "/bad", "", std::chrono::seconds{5}});
    try {
        bad.complete({"m", 0.0, "x"});
        FAIL("expected TransportError");
    } catch (const TransportError &e) {
        CHECK_FALSE(e.retryable());
    }
    srv.stop();
    t.join();

    CHECK_THROWS_AS(HttpChatClient({"127.0.0.1:9", "", std::chrono::seconds{1}}), Error);
}
