#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "dialeval/chat_client.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/judge_cache.hpp"
#include "dialeval/log.hpp"
#include "dialeval/prompts.hpp"

namespace dialeval {

struct JudgeSettings {
    PromptVariant variant = PromptVariant::cpds_d_noref;
    std::string model_id = "gpt-4-turbo-2024-04-09";
    double temperature = 1.0;
    int n_calls = 3;
    int concurrency = 4;
    int parse_retries = 2; // extra attempts per call after a ParseFailure
    BackoffPolicy backoff;

    /// Temperature 0 and a single call per turn.
    void make_deterministic() {
        temperature = 0.0;
        n_calls = 1;
    }
};

struct JudgeStats {
    long client_calls = 0;
    long cache_hits = 0;
    long clamp_events = 0;
    long parse_failures = 0;
};

struct TurnJudgement {
    double mean = 0.0;
    std::vector<double> overalls; // one per call_index
};

/// Outcome of one item in a batch; exactly one of value/error is meaningful.
template <typename T>
struct Outcome {
    std::optional<T> value;
    std::string error;
};

class Judge {
  public:
    Judge(ChatClient &client, const JudgeCache &cache, JudgeSettings settings, LogSink log = null_sink());

    const JudgeSettings &settings() const { return settings_; }

    /// Mean overall over n_calls independent calls (cache first, per call_index).
    TurnJudgement score_turn(const EvalInstance &instance, PromptVariant variant);
    TurnJudgement score_turn(const EvalInstance &instance) { return score_turn(instance, settings_.variant); }

    /// Step 1 scores every turn with `step1`; step 2 sends one dialogue prompt and parses the
    /// three-score form. Host code does no arithmetic on the final score.
    struct DialogueJudgement {
        std::vector<TurnJudgement> turns;
        DialogueVerdict verdict;
    };
    DialogueJudgement score_dialogue_two_step(const std::vector<EvalInstance> &turns, PromptVariant step1);

    /// Step 2 alone, given step-1 turn means and the judged responses.
    DialogueVerdict judge_dialogue(const std::vector<double> &turn_scores, const std::vector<std::string> &responses);

    /// Runs independent dialogues on `concurrency` workers; failures become per-item errors.
    std::vector<Outcome<DialogueJudgement>> score_dialogues(const std::vector<std::vector<EvalInstance>> &dialogues,
                                                            PromptVariant step1);
    std::vector<Outcome<TurnJudgement>> score_turns(const std::vector<EvalInstance> &instances, PromptVariant variant);

    JudgeStats stats() const;

  private:
    std::string call(PromptVariant variant, const std::string &prompt, int call_index,
                     const std::function<void(const std::string &)> &validate);

    ChatClient &client_;
    const JudgeCache &cache_;
    JudgeSettings settings_;
    LogSink log_;
    std::counting_semaphore<1024> window_;
    std::atomic<long> client_calls_{0};
    std::atomic<long> cache_hits_{0};
    std::atomic<long> clamp_events_{0};
    std::atomic<long> parse_failures_{0};
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn);

} // namespace dialeval
