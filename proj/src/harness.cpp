#include "dialeval/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dialeval/adapter_client.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/csv.hpp"
#include "dialeval/error.hpp"
#include "dialeval/personagen.hpp"
#include "dialeval/refmetrics.hpp"
#include "dialeval/report.hpp"

namespace dialeval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_text(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void require_file(const fs::path &p, const std::string &what) {
    if (p.empty()) throw ValidationError(what + " path is not set");
    if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> path_strings(const std::vector<fs::path> &ps) {
    std::vector<std::string> out;
    for (const auto &p : ps) out.push_back(p.string());
    return out;
}

// Accumulates what the manifest needs while a command runs.
class Manifest {
  public:
    Manifest(std::string command, const RunConfig &cfg)
        : command_(std::move(command)), cfg_(cfg), start_(std::chrono::steady_clock::now()), started_at_(utc_now()) {}

    void input(const fs::path &p) {
        if (!p.empty() && fs::is_regular_file(p)) inputs_[p.string()] = file_digest(p);
    }

    void finish(const CommandResult &r) const {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json entry;
        entry["config"] = json::parse(cfg_.to_json());
        entry["tool_version"] = kToolVersion;
        entry["inputs"] = inputs_;
        entry["outputs"] = path_strings(r.outputs);
        entry["counts"] = {{"systems", r.counts.systems},       {"dialogues", r.counts.dialogues},
                           {"turns", r.counts.turns},           {"rows_written", r.counts.rows_written},
                           {"rows_skipped", r.counts.rows_skipped}, {"errors", r.counts.errors}};
        entry["judge"] = {{"client_calls", r.counts.judge.client_calls},
                          {"cache_hits", r.counts.judge.cache_hits},
                          {"clamp_events", r.counts.judge.clamp_events},
                          {"parse_failures", r.counts.judge.parse_failures}};
        entry["started_at"] = started_at_;
        entry["wall_time_s"] = wall;

        const fs::path path = cfg_.output_dir / "manifest.json";
        json doc = json::object();
        if (fs::exists(path)) {
            try {
                doc = json::parse(read_text(path));
            } catch (const json::exception &) {
                doc = json::object();
            }
        }
        doc["tool_version"] = kToolVersion;
        doc["commands"][command_] = entry;
        write_file_atomic(path, doc.dump(2) + "\n");
    }

  private:
    std::string command_;
    const RunConfig &cfg_;
    std::chrono::steady_clock::time_point start_;
    std::string started_at_;
    std::map<std::string, std::string> inputs_;
};

struct Corpus {
    std::vector<Dialogue> dialogues;
    std::vector<SystemRun> runs;
    // system -> dialogue -> runs, systems sorted, dialogues in file order
    std::vector<std::pair<std::string, std::vector<std::pair<const Dialogue *, std::vector<SystemRun>>>>> grouped;
};

Corpus load_corpus(const RunConfig &cfg, Manifest &m) {
    require_file(cfg.dialogues, "dialogues");
    require_file(cfg.runs, "system runs");
    m.input(cfg.dialogues);
    m.input(cfg.runs);
    Corpus c;
    c.dialogues = load_dialogues(cfg.dialogues, CorpusOptions{cfg.turns_per_dialogue});
    c.runs = load_system_runs(cfg.runs);
    check_runs_against(c.runs, c.dialogues);

    std::map<std::string, std::map<std::string, std::vector<SystemRun>>> by;
    for (const auto &r : c.runs) by[r.system_id][r.dialogue_id].push_back(r);
    for (auto &[sys, per_dialogue] : by) {
        std::vector<std::pair<const Dialogue *, std::vector<SystemRun>>> ds;
        for (const auto &d : c.dialogues) {
            auto it = per_dialogue.find(d.dialogue_id);
            if (it != per_dialogue.end()) ds.emplace_back(&d, std::move(it->second));
        }
        c.grouped.emplace_back(sys, std::move(ds));
    }
    return c;
}

void count_corpus(const Corpus &c, RunCounts &counts) {
    counts.systems = static_cast<long>(c.grouped.size());
    counts.dialogues = static_cast<long>(c.dialogues.size());
    counts.turns = static_cast<long>(c.runs.size());
}

json persona_json(const GeneratedPersona &g) {
    json flags = json::array();
    for (const auto &f : g.flags) flags.push_back({{"sentence", f.sentence}, {"reason", f.reason}});
    return {{"persona_id", g.profile.persona_id},
            {"sentences", g.profile.sentences},
            {"hidden_gender", to_string(g.fpi.gender)},
            {"head", g.head},
            {"fpi", {{"name", g.fpi.name}, {"age", g.fpi.age}, {"family", g.fpi.family}}},
            {"contradictions", flags}};
}

// Method name -> turn-level or dialogue-level metric values read from one output table.
struct MetricTables {
    std::vector<std::string> order;
    std::map<std::string, std::vector<TurnScore>> turn;
    std::map<std::string, std::vector<DialogueScore>> dialogue;

    void note(const std::string &method) {
        if (std::find(order.begin(), order.end(), method) == order.end()) order.push_back(method);
    }
};

bool has_column(const csv::Row &h, const std::string &name) {
    return std::find(h.begin(), h.end(), name) != h.end();
}

void read_metric_table(const fs::path &p, MetricTables &out) {
    const auto rows = csv::read_file(p);
    if (rows.empty()) throw FormatError("empty table " + p.string());
    const auto &h = rows.front();
    auto cell = [&](std::size_t i, std::string_view col) -> const std::string & {
        const auto c = csv::column(h, col);
        if (rows[i].size() <= c) throw FormatError("short row in " + p.string(), i + 1);
        return rows[i][c];
    };
    if (has_column(h, "final_score")) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!cell(i, "error").empty()) continue;
            const auto &sys = cell(i, "system_id");
            const auto &dlg = cell(i, "dialogue_id");
            out.note("judge:dial:final");
            out.dialogue["judge:dial:final"].push_back({sys, dlg, std::stod(cell(i, "final_score"))});
            out.note("judge:dial:intermediate");
            out.dialogue["judge:dial:intermediate"].push_back({sys, dlg, std::stod(cell(i, "overall_turn_score"))});
        }
    } else if (has_column(h, "variant") && has_column(h, "score")) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!cell(i, "error").empty()) continue;
            const std::string method = "judge:" + cell(i, "variant");
            out.note(method);
            out.turn[method].push_back({cell(i, "system_id"), cell(i, "dialogue_id"), std::stoi(cell(i, "turn_index")),
                                        std::stod(cell(i, "score"))});
        }
    } else if (has_column(h, "metric") && has_column(h, "value")) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const std::string &method = cell(i, "metric");
            out.note(method);
            out.turn[method].push_back({cell(i, "system_id"), cell(i, "dialogue_id"), std::stoi(cell(i, "turn_index")),
                                        std::stod(cell(i, "value"))});
        }
    } else {
        throw FormatError("unrecognised metric table " + p.string());
    }
}

const char *kScoresHeader = "system_id,dialogue_id,turn_index,metric,value,precision,recall";

} // namespace

// ---- config ----------------------------------------------------------------

void RunConfig::merge_json_file(const fs::path &path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception &e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("config " + path.string() + " is not a JSON object");
    const fs::path base = path.parent_path();
    auto rel = [&](const json &v) {
        fs::path p = v.get<std::string>();
        return p.is_relative() && !base.empty() ? base / p : p;
    };
    try {
        if (j.contains("dialogues")) dialogues = rel(j["dialogues"]);
        if (j.contains("runs")) runs = rel(j["runs"]);
        if (j.contains("annotations")) annotations = rel(j["annotations"]);
        if (j.contains("turns_per_dialogue")) {
            if (j["turns_per_dialogue"].is_null())
                turns_per_dialogue.reset();
            else
                turns_per_dialogue = j["turns_per_dialogue"].get<int>();
        }
        if (j.contains("tables_dir")) tables_dir = rel(j["tables_dir"]);
        if (j.contains("profiles")) profiles = rel(j["profiles"]);
        if (j.contains("persona_count")) persona_count = j["persona_count"].get<int>();
        if (j.contains("items_per_aspect")) items_per_aspect = j["items_per_aspect"].get<int>();
        if (j.contains("metrics")) metrics = j["metrics"].get<std::vector<std::string>>();
        if (j.contains("adapter_command")) adapter_command = j["adapter_command"].get<std::vector<std::string>>();
        if (j.contains("judge")) {
            const auto &jj = j["judge"];
            if (jj.contains("variant")) judge.variant = prompt_variant_from_string(jj["variant"].get<std::string>());
            if (jj.contains("model_id")) judge.model_id = jj["model_id"].get<std::string>();
            if (jj.contains("temperature")) judge.temperature = jj["temperature"].get<double>();
            if (jj.contains("n_calls")) judge.n_calls = jj["n_calls"].get<int>();
            if (jj.contains("concurrency")) judge.concurrency = jj["concurrency"].get<int>();
            if (jj.contains("parse_retries")) judge.parse_retries = jj["parse_retries"].get<int>();
            if (jj.contains("cache_dir")) cache_dir = rel(jj["cache_dir"]);
            if (jj.contains("dialogue")) judge_dialogue = jj["dialogue"].get<bool>();
            if (jj.contains("deterministic")) deterministic = jj["deterministic"].get<bool>();
        }
        if (j.contains("levels")) {
            levels.clear();
            for (const auto &l : j["levels"]) levels.push_back(level_from_string(l.get<std::string>()));
        }
        if (j.contains("metric_tables")) {
            metric_tables.clear();
            for (const auto &p : j["metric_tables"]) metric_tables.push_back(rel(p));
        }
        if (j.contains("p_value")) {
            const auto s = j["p_value"].get<std::string>();
            if (s == "asymptotic")
                p_method = PValueMethod::asymptotic;
            else if (s == "exact")
                p_method = PValueMethod::exact_permutation;
            else
                throw ValidationError("p_value must be asymptotic or exact, got '" + s + "'");
        }
        if (j.contains("alpha_metric")) alpha_metric = alpha_metric_from_string(j["alpha_metric"].get<std::string>());
        if (j.contains("report_inputs")) {
            report_inputs.clear();
            for (const auto &p : j["report_inputs"]) report_inputs.push_back(rel(p));
        }
        if (j.contains("output_dir")) output_dir = rel(j["output_dir"]);
        if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception &e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
}

std::string RunConfig::to_json() const {
    std::vector<std::string> lv;
    for (Level l : levels) lv.push_back(to_string(l));
    json j = {
        {"dialogues", dialogues.string()},
        {"runs", runs.string()},
        {"annotations", annotations.string()},
        {"turns_per_dialogue", turns_per_dialogue ? json(*turns_per_dialogue) : json(nullptr)},
        {"tables_dir", tables_dir.string()},
        {"profiles", profiles.string()},
        {"persona_count", persona_count},
        {"items_per_aspect", items_per_aspect},
        {"metrics", metrics},
        {"adapter_command", adapter_command},
        {"judge",
         {{"variant", to_string(judge.variant)},
          {"model_id", judge.model_id},
          {"temperature", judge.temperature},
          {"n_calls", judge.n_calls},
          {"concurrency", judge.concurrency},
          {"parse_retries", judge.parse_retries},
          {"cache_dir", cache_dir.string()},
          {"dialogue", judge_dialogue},
          {"deterministic", deterministic}}},
        {"levels", lv},
        {"metric_tables", path_strings(metric_tables)},
        {"p_value", p_method == PValueMethod::asymptotic ? "asymptotic" : "exact"},
        {"alpha_metric", to_string(alpha_metric)},
        {"report_inputs", path_strings(report_inputs)},
        {"output_dir", output_dir.string()},
        {"seed", seed},
    };
    return j.dump();
}

// ---- io helpers ------------------------------------------------------------

std::string file_digest(const fs::path &path) {
    const std::string bytes = read_text(path);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed for " + path.string());
    static const char *hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

void write_file_atomic(const fs::path &path, const std::string &content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

// ---- generate --------------------------------------------------------------

CommandResult cmd_generate(const RunConfig &cfg, const LogSink &log) {
    Manifest m("generate", cfg);
    require_file(cfg.profiles, "profiles");
    m.input(cfg.profiles);

    PersonaTables tables;
    if (cfg.tables_dir.empty()) {
        tables = default_tables();
    } else {
        auto table = [&](const char *name) {
            const fs::path p = cfg.tables_dir / name;
            require_file(p, name);
            m.input(p);
            return p;
        };
        tables.heads = load_heads_csv(table("heads.csv"));
        tables.names = load_names_csv(table("names.csv"));
        tables.family = load_family_csv(table("family.csv"));
        const fs::path bl = cfg.tables_dir / "blocklist.txt";
        if (fs::exists(bl)) {
            m.input(bl);
            tables.blocklist = load_blocklist(bl);
        } else {
            tables.blocklist = default_tables().blocklist;
        }
        const fs::path gm = cfg.tables_dir / "gender_map.csv";
        if (fs::exists(gm)) {
            m.input(gm);
            tables.gender_map = load_gender_map_csv(gm);
        } else {
            tables.gender_map = default_tables().gender_map;
        }
    }
    const auto pool = load_source_profiles(cfg.profiles);

    GenerationOptions opts;
    opts.count = cfg.persona_count;
    opts.items_per_aspect = cfg.items_per_aspect;
    const auto gen = generate_personas(tables, pool, opts, cfg.seed);

    std::string personas, pairs, log_text;
    for (const auto &g : gen.personas) personas += persona_json(g).dump() + "\n";
    for (std::size_t i = 0; i + 1 < gen.personas.size(); i += 2) {
        char id[32];
        std::snprintf(id, sizeof id, "pair-%05zu", i / 2);
        json skeleton = {{"dialogue_id", id},
                         {"persona_a", {{"persona_id", gen.personas[i].profile.persona_id},
                                        {"sentences", gen.personas[i].profile.sentences}}},
                         {"persona_b", {{"persona_id", gen.personas[i + 1].profile.persona_id},
                                        {"sentences", gen.personas[i + 1].profile.sentences}}},
                         {"utterances", json::array()}};
        pairs += skeleton.dump() + "\n";
    }
    for (const auto &line : gen.log) {
        log(line);
        log_text += line + "\n";
    }

    CommandResult r;
    r.outputs = {cfg.output_dir / "personas.jsonl", cfg.output_dir / "dialogue_skeletons.jsonl",
                 cfg.output_dir / "generate_log.txt"};
    write_file_atomic(r.outputs[0], personas);
    write_file_atomic(r.outputs[1], pairs);
    write_file_atomic(r.outputs[2], log_text);
    r.counts.rows_written = static_cast<long>(gen.personas.size());
    for (const auto &g : gen.personas) r.counts.errors += static_cast<long>(g.flags.size());
    m.finish(r);
    return r;
}

// ---- score -----------------------------------------------------------------

CommandResult cmd_score(const RunConfig &cfg, const LogSink &log) {
    Manifest m("score", cfg);
    const Corpus corpus = load_corpus(cfg, m);
    if (cfg.metrics.empty()) throw ValidationError("no metrics selected");
    std::vector<MetricId> metrics;
    for (const auto &s : cfg.metrics) metrics.push_back(MetricId::parse(s));

    CommandResult r;
    count_corpus(corpus, r.counts);
    const fs::path out_path = cfg.output_dir / "scores.csv";
    r.outputs = {out_path};
    fs::create_directories(cfg.output_dir);

    // Rows already on disk from an earlier, possibly interrupted, run.
    std::set<std::string> done;
    bool fresh = true;
    if (fs::exists(out_path) && fs::file_size(out_path) > 0) {
        const std::string text = read_text(out_path);
        const auto rows = csv::parse(text);
        if (!rows.empty()) {
            if (csv::format_row(rows.front()) != kScoresHeader)
                throw FormatError("existing " + out_path.string() + " has a different header");
            fresh = false;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                if (rows[i].size() < 7) continue; // torn final line
                done.insert(rows[i][0] + "\x1f" + rows[i][1] + "\x1f" + rows[i][2] + "\x1f" + rows[i][3]);
            }
            // drop a torn trailing line so appends start on a fresh line
            if (!text.empty() && text.back() != '\n') {
                std::string kept = text.substr(0, text.rfind('\n') + 1);
                write_file_atomic(out_path, kept);
            }
        }
    }

    std::unique_ptr<AdapterClient> adapter;
    std::map<std::string, std::string> failed; // metric name -> reason
    bool want_external = false;
    for (const auto &id : metrics) want_external |= id.kind == MetricKind::external;
    if (want_external) {
        if (cfg.adapter_command.empty()) {
            for (const auto &id : metrics)
                if (id.kind == MetricKind::external) failed[id.name()] = "no adapter_command configured";
        } else {
            try {
                adapter = std::make_unique<AdapterClient>(cfg.adapter_command);
                if (adapter->unusable()) log("warning: adapter advertised no metrics");
            } catch (const Error &e) {
                for (const auto &id : metrics)
                    if (id.kind == MetricKind::external) failed[id.name()] = e.what();
            }
        }
        for (const auto &id : metrics) {
            if (id.kind != MetricKind::external || failed.count(id.name())) continue;
            if (!adapter->supports(id.external_name))
                failed[id.name()] = "adapter does not serve '" + id.external_name + "'";
        }
        for (const auto &[name, why] : failed) {
            log("error: metric " + name + " unavailable: " + why);
            ++r.counts.errors;
        }
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot write " + out_path.string());
    if (fresh) out << kScoresHeader << "\n";

    for (const auto &[sys, dialogues] : corpus.grouped) {
        for (const auto &[d, runs] : dialogues) {
            for (const auto &inst : build_eval_instances(*d, runs)) {
                const std::string ref = inst.reference.value_or("");
                for (const auto &id : metrics) {
                    const std::string name = id.name();
                    const std::string key =
                        sys + "\x1f" + inst.dialogue_id + "\x1f" + std::to_string(inst.turn_index) + "\x1f" + name;
                    if (done.count(key)) {
                        ++r.counts.rows_skipped;
                        continue;
                    }
                    if (failed.count(name)) continue;
                    MetricScore s;
                    try {
                        if (id.kind == MetricKind::external) {
                            std::string warning;
                            s = external_metric(id.external_name, inst.candidate, ref, *adapter, &warning);
                            if (!warning.empty()) log("warning: " + warning);
                        } else {
                            s = internal_metric(id, inst.candidate, ref);
                        }
                    } catch (const Error &e) {
                        failed[name] = e.what();
                        log("error: metric " + name + " failed at " + sys + "/" + inst.dialogue_id + "/" +
                            std::to_string(inst.turn_index) + ": " + e.what() + "; skipping its remaining rows");
                        ++r.counts.errors;
                        continue;
                    }
                    csv::Row row{sys, inst.dialogue_id, std::to_string(inst.turn_index), name, num(s.value), "", ""};
                    if (s.components) {
                        row[5] = num(s.components->precision);
                        row[6] = num(s.components->recall);
                    }
                    out << csv::format_row(row) << "\n";
                    ++r.counts.rows_written;
                }
            }
            out.flush();
        }
    }
    out.close();
    m.finish(r);
    return r;
}

// ---- judge -----------------------------------------------------------------

CommandResult cmd_judge(const RunConfig &cfg, const LogSink &log, ChatClient *client) {
    Manifest m("judge", cfg);
    const Corpus corpus = load_corpus(cfg, m);
    JudgeSettings settings = cfg.judge;
    if (cfg.deterministic) settings.make_deterministic();
    if (!is_turn_level(settings.variant))
        throw ValidationError("judge variant must be turn-level, got " + to_string(settings.variant));

    std::unique_ptr<HttpChatClient> http;
    if (!client) {
        http = std::make_unique<HttpChatClient>(HttpChatClient::from_env());
        client = http.get();
    }
    JudgeCache cache(cfg.cache_dir, log);
    Judge judge(*client, cache, settings, log);

    // Flatten every (system, dialogue, turn) so step 1 runs in one bounded pool.
    struct Slot {
        std::string system;
        std::size_t dialogue_group; // index into groups
    };
    std::vector<EvalInstance> instances;
    std::vector<Slot> slots;
    std::vector<std::pair<std::string, std::string>> groups; // (system, dialogue)
    std::vector<std::vector<std::size_t>> group_members;
    for (const auto &[sys, dialogues] : corpus.grouped) {
        for (const auto &[d, runs] : dialogues) {
            groups.emplace_back(sys, d->dialogue_id);
            group_members.emplace_back();
            for (auto &inst : build_eval_instances(*d, runs)) {
                group_members.back().push_back(instances.size());
                slots.push_back({sys, groups.size() - 1});
                instances.push_back(std::move(inst));
            }
        }
    }

    const auto turn_out = judge.score_turns(instances, settings.variant);

    CommandResult r;
    count_corpus(corpus, r.counts);
    const std::string temp = num(settings.temperature);
    std::string turn_csv =
        "system_id,dialogue_id,turn_index,variant,model,temperature,n_calls,score,calls,fact_source,error\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto &o = turn_out[i];
        std::string score, calls;
        if (o.value) {
            score = num(o.value->mean);
            for (std::size_t k = 0; k < o.value->overalls.size(); ++k)
                calls += (k ? ";" : "") + num(o.value->overalls[k]);
        } else {
            ++r.counts.errors;
            log("error: " + slots[i].system + "/" + instances[i].dialogue_id + "/" +
                std::to_string(instances[i].turn_index) + ": " + o.error);
        }
        turn_csv += csv::format_row({slots[i].system, instances[i].dialogue_id, std::to_string(instances[i].turn_index),
                                     to_string(settings.variant), settings.model_id, temp,
                                     std::to_string(settings.n_calls), score, calls, "persona_b", o.error}) +
                    "\n";
    }
    r.outputs.push_back(cfg.output_dir / "judge_turn.csv");
    write_file_atomic(r.outputs.back(), turn_csv);

    if (cfg.judge_dialogue) {
        std::vector<Outcome<DialogueVerdict>> dial(groups.size());
        parallel_for(groups.size(), settings.concurrency, [&](std::size_t g) {
            std::vector<double> scores;
            std::vector<std::string> responses;
            for (std::size_t i : group_members[g]) {
                if (!turn_out[i].value) {
                    dial[g].error = "step 1 failed for turn " + std::to_string(instances[i].turn_index);
                    return;
                }
                scores.push_back(turn_out[i].value->mean);
                responses.push_back(instances[i].candidate);
            }
            try {
                dial[g].value = judge.judge_dialogue(scores, responses);
            } catch (const Error &e) {
                dial[g].error = e.what();
            }
        });
        std::string dial_csv =
            "system_id,dialogue_id,step1_variant,model,overall_turn_score,interaction_score,final_score,error\n";
        for (std::size_t g = 0; g < groups.size(); ++g) {
            csv::Row row{groups[g].first, groups[g].second, to_string(settings.variant), settings.model_id, "", "",
                         "", dial[g].error};
            if (dial[g].value) {
                row[4] = num(dial[g].value->overall_turn_score);
                row[5] = num(dial[g].value->interaction_score);
                row[6] = num(dial[g].value->final_score);
            } else {
                ++r.counts.errors;
                log("error: " + groups[g].first + "/" + groups[g].second + ": " + dial[g].error);
            }
            dial_csv += csv::format_row(row) + "\n";
        }
        r.outputs.push_back(cfg.output_dir / "judge_dialogue.csv");
        write_file_atomic(r.outputs.back(), dial_csv);
    }

    r.counts.judge = judge.stats();
    r.counts.rows_written = static_cast<long>(instances.size() + (cfg.judge_dialogue ? groups.size() : 0));
    m.finish(r);
    return r;
}

// ---- correlate -------------------------------------------------------------

CommandResult cmd_correlate(const RunConfig &cfg, const LogSink &log) {
    Manifest m("correlate", cfg);
    require_file(cfg.annotations, "annotations");
    m.input(cfg.annotations);
    const auto annotations = load_annotations(cfg.annotations);
    const auto human_turns = human_turn_scores(annotations);
    const auto human_dialogues = human_dialogue_scores(annotations);

    std::vector<fs::path> tables = cfg.metric_tables;
    if (tables.empty()) {
        for (const char *name : {"scores.csv", "judge_turn.csv", "judge_dialogue.csv"})
            if (fs::exists(cfg.output_dir / name)) tables.push_back(cfg.output_dir / name);
    }
    if (tables.empty()) throw ValidationError("no metric tables to correlate");
    MetricTables mt;
    for (const auto &p : tables) {
        require_file(p, "metric table");
        m.input(p);
        read_metric_table(p, mt);
    }

    AggregateOptions agg{cfg.turns_per_dialogue};
    CommandResult r;
    std::vector<MethodReport> rows;
    for (Level level : cfg.levels) {
        for (const auto &method : mt.order) {
            try {
                CorrelationReport rep;
                if (auto it = mt.turn.find(method); it != mt.turn.end()) {
                    const auto table = aggregate_pairs(it->second, human_turns, level, human_dialogues, agg);
                    if (table.rows.empty()) throw ValidationError("empty join");
                    rep = correlate(table, cfg.p_method);
                } else {
                    if (level == Level::turn) continue;
                    const auto metric_side = aggregate(mt.dialogue.at(method), level);
                    const auto human_side =
                        human_dialogues.empty() ? aggregate(human_turns, level, agg) : aggregate(human_dialogues, level);
                    rep = correlate(metric_side, human_side, cfg.p_method);
                }
                rows.push_back({method, rep});
            } catch (const Error &e) {
                ++r.counts.errors;
                log("error: " + method + " at " + to_string(level) + " level: " + e.what());
            }
        }
    }
    if (rows.empty()) throw ValidationError("no correlation could be computed (empty joins)");

    r.outputs = {cfg.output_dir / "correlations.csv", cfg.output_dir / "correlations.md"};
    write_file_atomic(r.outputs[0], correlations_csv(rows));
    write_file_atomic(r.outputs[1], correlations_markdown(rows));
    r.counts.rows_written = static_cast<long>(rows.size());
    m.finish(r);
    return r;
}

// ---- agreement -------------------------------------------------------------

CommandResult cmd_agreement(const RunConfig &cfg, const LogSink &log) {
    Manifest m("agreement", cfg);
    require_file(cfg.annotations, "annotations");
    m.input(cfg.annotations);
    const auto annotations = load_annotations(cfg.annotations);

    bool any_turn = false, any_dialogue = false;
    for (const auto &a : annotations) (a.is_dialogue_level() ? any_dialogue : any_turn) = true;

    std::vector<std::pair<AgreementReport, AlphaMetric>> rows;
    for (Level level : {Level::turn, Level::dialogue}) {
        if ((level == Level::turn && !any_turn) || (level == Level::dialogue && !any_dialogue)) continue;
        rows.emplace_back(annotation_agreement(annotations, level, cfg.alpha_metric), cfg.alpha_metric);
        log(to_string(level) + "-level alpha = " + num(rows.back().first.alpha));
    }
    if (rows.empty()) throw ValidationError("annotations file has no records");

    CommandResult r;
    r.outputs = {cfg.output_dir / "agreement.csv"};
    write_file_atomic(r.outputs[0], agreement_csv(rows));
    r.counts.rows_written = static_cast<long>(rows.size());
    m.finish(r);
    return r;
}

// ---- report ----------------------------------------------------------------

CommandResult cmd_report(const RunConfig &cfg, const LogSink &log) {
    Manifest m("report", cfg);
    std::vector<fs::path> inputs = cfg.report_inputs;
    if (inputs.empty()) inputs.push_back(cfg.output_dir / "correlations.csv");
    std::vector<MethodReport> rows;
    for (const auto &p : inputs) {
        require_file(p, "correlations table");
        m.input(p);
        auto part = parse_correlations_csv(read_text(p));
        log("read " + std::to_string(part.size()) + " rows from " + p.string());
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) throw ValidationError("nothing to report");

    CommandResult r;
    r.outputs = {cfg.output_dir / "report.md"};
    write_file_atomic(r.outputs[0], combined_markdown(rows));
    r.counts.rows_written = static_cast<long>(rows.size());
    m.finish(r);
    return r;
}

} // namespace dialeval
