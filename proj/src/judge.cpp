#include "dialeval/judge.hpp"

#include <numeric>
#include <thread>

#include "dialeval/error.hpp"

namespace dialeval {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn) {
    const auto count = static_cast<std::size_t>(std::max(1, workers));
    if (count == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(count, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

Judge::Judge(ChatClient &client, const JudgeCache &cache, JudgeSettings settings, LogSink log)
    : client_(client), cache_(cache), settings_(std::move(settings)), log_(std::move(log)),
      window_(std::clamp(settings_.concurrency, 1, 1024)) {
    if (settings_.n_calls < 1) throw ValidationError("n_calls must be >= 1");
    if (settings_.temperature < 0) throw ValidationError("temperature must be >= 0");
}

std::string Judge::call(PromptVariant variant, const std::string &prompt, int call_index,
                        const std::function<void(const std::string &)> &validate) {
    const auto key = cache_key({settings_.model_id, settings_.temperature, variant, prompt, call_index});
    if (auto hit = cache_.get(key)) {
        try {
            validate(*hit);
            ++cache_hits_;
            return *hit;
        } catch (const ParseFailure &) {
            log_("warning: cached reply " + key + " no longer parses; refetching");
        }
    }
    const ChatRequest req{settings_.model_id, settings_.temperature, prompt};
    std::string last_error;
    for (int attempt = 0; attempt <= settings_.parse_retries; ++attempt) {
        std::string raw;
        {
            window_.acquire();
            struct Release {
                std::counting_semaphore<1024> &s;
                ~Release() { s.release(); }
            } release{window_};
            ++client_calls_;
            raw = complete_with_backoff(client_, req, settings_.backoff, log_);
        }
        try {
            validate(raw);
        } catch (const ParseFailure &e) {
            ++parse_failures_;
            last_error = e.what();
            continue;
        }
        cache_.put(key, raw, settings_.model_id);
        return raw;
    }
    throw ParseFailure(last_error + " (gave up after " + std::to_string(settings_.parse_retries + 1) + " attempts)");
}

TurnJudgement Judge::score_turn(const EvalInstance &instance, PromptVariant variant) {
    if (!is_turn_level(variant)) throw ValidationError(to_string(variant) + " is not a turn-level variant");
    const std::string prompt = build_prompt(variant, instance);
    TurnJudgement out;
    for (int k = 0; k < settings_.n_calls; ++k) {
        const std::string raw = call(variant, prompt, k, [&](const std::string &r) { parse_verdict(variant, r); });
        const auto verdict = parse_verdict(variant, raw);
        clamp_events_ += verdict.clamped;
        out.overalls.push_back(verdict.overall);
    }
    out.mean = std::accumulate(out.overalls.begin(), out.overalls.end(), 0.0) / static_cast<double>(out.overalls.size());
    return out;
}

Judge::DialogueJudgement Judge::score_dialogue_two_step(const std::vector<EvalInstance> &turns, PromptVariant step1) {
    if (turns.empty()) throw ValidationError("dialogue has no turns to judge");
    DialogueJudgement out;
    std::vector<double> scores;
    std::vector<std::string> responses;
    for (const auto &t : turns) {
        out.turns.push_back(score_turn(t, step1));
        scores.push_back(out.turns.back().mean);
        responses.push_back(t.candidate);
    }
    out.verdict = judge_dialogue(scores, responses);
    return out;
}

DialogueVerdict Judge::judge_dialogue(const std::vector<double> &turn_scores, const std::vector<std::string> &responses) {
    const std::string prompt = build_dialogue_prompt(turn_scores, responses);
    const std::string raw =
        call(PromptVariant::cpds_dial_step2, prompt, 0, [](const std::string &r) { parse_dialogue_verdict(r); });
    auto verdict = parse_dialogue_verdict(raw);
    clamp_events_ += verdict.clamped;
    return verdict;
}

std::vector<Outcome<Judge::DialogueJudgement>>
Judge::score_dialogues(const std::vector<std::vector<EvalInstance>> &dialogues, PromptVariant step1) {
    std::vector<Outcome<DialogueJudgement>> out(dialogues.size());
    parallel_for(dialogues.size(), settings_.concurrency, [&](std::size_t i) {
        try {
            out[i].value = score_dialogue_two_step(dialogues[i], step1);
        } catch (const Error &e) {
            out[i].error = e.what();
        }
    });
    return out;
}

std::vector<Outcome<TurnJudgement>> Judge::score_turns(const std::vector<EvalInstance> &instances,
                                                       PromptVariant variant) {
    std::vector<Outcome<TurnJudgement>> out(instances.size());
    parallel_for(instances.size(), settings_.concurrency, [&](std::size_t i) {
        try {
            out[i].value = score_turn(instances[i], variant);
        } catch (const Error &e) {
            out[i].error = e.what();
        }
    });
    return out;
}

JudgeStats Judge::stats() const {
    return {client_calls_.load(), cache_hits_.load(), clamp_events_.load(), parse_failures_.load()};
}

} // namespace dialeval
