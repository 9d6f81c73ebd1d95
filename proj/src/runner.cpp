// Copyright 2026 The convprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convprompt/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "convprompt/errors.hpp"
#include "convprompt/negatives.hpp"
#include "convprompt/serialize.hpp"

namespace convprompt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kInstancesFile = "instances.jsonl";
constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kGenerationsFile = "generations.jsonl";
constexpr const char* kFailuresFile = "failures.jsonl";

std::string fmt_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

Backend parse_backend(const std::string& text) {
  if (text == "fallback") return Backend::fallback;
  if (text == "sidecar") return Backend::sidecar;
  throw ConfigError("expected 'fallback' or 'sidecar', got '" + text + "'");
}

std::string_view to_string(Backend b) { return b == Backend::sidecar ? "sidecar" : "fallback"; }

ModelConfig model_from_json(const json& j, const ModelConfig* base) {
  check_keys(j,
             {"name", "provider", "model", "version", "temperature", "max_output_tokens",
              "price_in", "price_out", "endpoint", "credentials_env", "policy", "seed"},
             "model");
  ModelConfig m = base ? *base : ModelConfig{};
  m.name = get_or<std::string>(j, "name", m.name);
  m.provider = get_or<std::string>(j, "provider", m.provider);
  m.api_model = get_or<std::string>(j, "model", m.api_model.empty() ? m.name : m.api_model);
  m.version = get_or<std::string>(j, "version", m.version);
  m.temperature = get_or<double>(j, "temperature", m.temperature);
  m.max_output_tokens = get_or<int>(j, "max_output_tokens", m.max_output_tokens);
  m.price_in = get_or<double>(j, "price_in", m.price_in);
  m.price_out = get_or<double>(j, "price_out", m.price_out);
  m.endpoint = get_or<std::string>(j, "endpoint", m.endpoint);
  m.credentials_env = get_or<std::string>(j, "credentials_env", m.credentials_env);
  if (j.contains("policy")) m.mock_policy = parse_mock_policy(j.at("policy").get<std::string>());
  m.mock_seed = get_or<std::uint64_t>(j, "seed", m.mock_seed);
  m.validate();
  return m;
}

ordered_json model_to_json(const ModelConfig& m) {
  ordered_json j;
  j["name"] = m.name;
  j["provider"] = m.provider;
  j["model"] = m.api_model;
  j["version"] = m.version;
  j["temperature"] = m.temperature;
  j["max_output_tokens"] = m.max_output_tokens;
  j["price_in"] = m.price_in;
  j["price_out"] = m.price_out;
  j["endpoint"] = m.endpoint;
  if (m.is_mock()) {
    j["policy"] = std::string(to_string(m.mock_policy));
    j["seed"] = m.mock_seed;
  }
  return j;
}

ordered_json score_json(const SimilarityScore& s, bool with_kind) {
  ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f"] = s.f;
  if (with_kind) j["kind"] = std::string(to_string(s.kind));
  return j;
}

std::vector<ordered_json> read_jsonl(const fs::path& path, bool required) {
  std::vector<ordered_json> rows;
  std::ifstream in(path);
  if (!in) {
    if (required) throw ConfigError("cannot open " + path.string());
    return rows;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(ordered_json::parse(line));
    } catch (const json::exception&) {
      break;  // torn tail of an interrupted run
    }
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::unique_ptr<ChatBackend> default_backend(const ModelConfig& model,
                                             const PromptTemplates& templates) {
  if (model.is_mock()) {
    MockOptions options;
    options.policy = model.mock_policy;
    options.seed = model.mock_seed;
    options.rejection_text = templates.rejection;
    return std::make_unique<MockBackend>(options);
  }
  return std::make_unique<OpenAIBackend>();
}

}  // namespace

std::string default_label(const PromptPlan& plan, std::size_t n) {
  std::string label = plan.name();
  if (plan.method == PromptMethod::baseline) return label;
  const std::size_t default_turns = n == 0 ? 0 : n - 1;
  const bool odd_turns = plan.turns != default_turns;
  const bool odd_negatives = plan.method == PromptMethod::ccp && plan.negatives != plan.turns;
  if (odd_turns || odd_negatives) {
    label += "[l=" + std::to_string(plan.turns);
    if (plan.method == PromptMethod::ccp) label += ",m=" + std::to_string(plan.negatives);
    label += "]";
  }
  return label;
}

std::string base_label(const MethodSpec& method, std::size_t n) {
  if (!method.plan.self_refine) return method.label;
  PromptPlan base = method.plan;
  base.self_refine = false;
  return default_label(base, n);
}

void RunConfig::validate() const {
  if (n == 0) throw ConfigError("n must be positive");
  if (methods.empty()) throw ConfigError("no methods configured");
  if (models.empty()) throw ConfigError("no models configured");
  if (parallelism == 0) throw ConfigError("parallelism must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (bootstrap_resamples == 0) throw ConfigError("bootstrap_resamples must be positive");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    try {
      m.plan.validate(n);
    } catch (const PromptError& e) {
      throw ConfigError(m.label + ": " + e.what());
    }
    if (m.label.empty()) throw ConfigError("empty method label");
    if (!labels.insert(m.label).second) throw ConfigError("duplicate method label " + m.label);
  }
  std::set<std::string> names;
  for (const auto& m : models) {
    m.validate();
    if (!names.insert(m.name).second) throw ConfigError("duplicate model " + m.name);
  }
}

ordered_json RunConfig::snapshot() const {
  ordered_json j;
  j["corpus"] = corpus.filename().string();
  j["dataset"] = dataset;
  j["filter"] = {{"min_user_reviews", filter.min_user_reviews},
                 {"min_other_reviews", filter.min_other_reviews},
                 {"token_min", filter.token_min},
                 {"token_max", filter.token_max}};
  j["n"] = n;
  j["users"] = users;
  j["seed"] = seed;
  j["models"] = ordered_json::array();
  for (const auto& m : models) j["models"].push_back(model_to_json(m));
  j["methods"] = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json e;
    e["label"] = m.label;
    e["name"] = m.plan.name();
    e["turns"] = m.plan.turns;
    e["negatives"] = m.plan.negatives;
    j["methods"].push_back(e);
  }
  j["scorer"] = std::string(to_string(scorer));
  if (scorer == Backend::sidecar) {
    j["sidecar"] = {{"endpoint", sidecar.endpoint},
                    {"model_id", sidecar.model_id},
                    {"rescale", sidecar.rescale}};
  }
  j["sentiment"] = std::string(to_string(sentiment));
  if (sentiment == Backend::sidecar) {
    j["sentiment_sidecar"] = {{"endpoint", sentiment_sidecar.endpoint},
                              {"model_id", sentiment_sidecar.model_id}};
  }
  const PromptTemplates templates =
      templates_dir ? PromptTemplates::load(*templates_dir) : PromptTemplates::defaults();
  j["templates_sha256"] = sha256_hex(templates.first_instruction + '\0' + templates.acceptance +
                                     '\0' + templates.rejection + '\0' +
                                     templates.refine_critique + '\0' +
                                     templates.refine_request);
  j["description_limit"] = render.description_limit ? json(*render.description_limit) : json();
  j["alpha"] = alpha;
  j["level"] = level;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["kl_epsilon"] = kl_epsilon;
  j["significance"] = {{"better_than", better_than}, {"baseline", baseline}};
  return j;
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  check_keys(j,
             {"corpus", "dataset", "filter", "n", "users", "seed", "models", "models_file",
              "methods", "scorer", "sidecar", "sentiment", "sentiment_sidecar", "parallelism",
              "max_in_flight", "cache_dir", "output_dir", "templates_dir", "description_limit",
              "alpha", "level", "bootstrap_resamples", "kl_epsilon", "significance"},
             "run config");
  RunConfig c;
  if (!j.contains("corpus")) throw ConfigError("run config needs 'corpus'");
  c.corpus = resolve(base_dir, j.at("corpus").get<std::string>());
  c.dataset = get_or<std::string>(j, "dataset", c.corpus.stem().string());
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    check_keys(f, {"min_user_reviews", "min_other_reviews", "token_min", "token_max"}, "filter");
    c.filter.min_user_reviews = get_or(f, "min_user_reviews", c.filter.min_user_reviews);
    c.filter.min_other_reviews = get_or(f, "min_other_reviews", c.filter.min_other_reviews);
    c.filter.token_min = get_or(f, "token_min", c.filter.token_min);
    c.filter.token_max = get_or(f, "token_max", c.filter.token_max);
  }
  c.n = get_or(j, "n", c.n);
  c.users = get_or(j, "users", c.users);
  c.seed = get_or(j, "seed", c.seed);

  std::vector<ModelConfig> table = default_model_table();
  if (j.contains("models_file")) {
    table = load_models_cfg(resolve(base_dir, j.at("models_file").get<std::string>()));
  }
  if (!j.contains("models")) throw ConfigError("run config needs 'models'");
  for (const auto& m : j.at("models")) {
    if (m.is_string()) {
      c.models.push_back(find_model(table, m.get<std::string>()));
    } else {
      const ModelConfig* base = nullptr;
      if (m.contains("name")) {
        auto it = std::find_if(table.begin(), table.end(), [&](const ModelConfig& t) {
          return t.name == m.at("name").get<std::string>();
        });
        if (it != table.end()) base = &*it;
      }
      c.models.push_back(model_from_json(m, base));
    }
  }

  if (!j.contains("methods")) throw ConfigError("run config needs 'methods'");
  for (const auto& m : j.at("methods")) {
    MethodSpec spec;
    try {
      if (m.is_string()) {
        spec.plan = PromptPlan::parse(m.get<std::string>(), c.n);
      } else {
        check_keys(m, {"name", "turns", "negatives", "label"}, "method");
        std::optional<std::size_t> turns, negatives;
        if (m.contains("turns")) turns = m.at("turns").get<std::size_t>();
        if (m.contains("negatives")) negatives = m.at("negatives").get<std::size_t>();
        spec.plan = PromptPlan::parse(m.at("name").get<std::string>(), c.n, turns, negatives);
        spec.label = get_or<std::string>(m, "label", "");
      }
    } catch (const PromptError& e) {
      throw ConfigError(e.what());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad method entry: ") + e.what());
    }
    if (spec.label.empty()) spec.label = default_label(spec.plan, c.n);
    c.methods.push_back(std::move(spec));
  }

  c.scorer = parse_backend(get_or<std::string>(j, "scorer", "fallback"));
  if (j.contains("sidecar")) {
    const auto& s = j.at("sidecar");
    if (s.is_string()) {
      c.sidecar.endpoint = s.get<std::string>();
    } else {
      check_keys(s, {"endpoint", "model_id", "rescale", "batch_size", "timeout"}, "sidecar");
      c.sidecar.endpoint = get_or(s, "endpoint", c.sidecar.endpoint);
      c.sidecar.model_id = get_or(s, "model_id", c.sidecar.model_id);
      c.sidecar.rescale = get_or(s, "rescale", c.sidecar.rescale);
      c.sidecar.batch_size = get_or(s, "batch_size", c.sidecar.batch_size);
      c.sidecar.timeout_seconds = get_or(s, "timeout", c.sidecar.timeout_seconds);
    }
    c.sentiment_sidecar.endpoint = c.sidecar.endpoint;
  }
  c.sentiment = parse_backend(get_or<std::string>(j, "sentiment", "fallback"));
  if (j.contains("sentiment_sidecar")) {
    const auto& s = j.at("sentiment_sidecar");
    check_keys(s, {"endpoint", "model_id", "batch_size", "timeout"}, "sentiment_sidecar");
    c.sentiment_sidecar.endpoint = get_or(s, "endpoint", c.sentiment_sidecar.endpoint);
    c.sentiment_sidecar.model_id = get_or(s, "model_id", c.sentiment_sidecar.model_id);
    c.sentiment_sidecar.batch_size = get_or(s, "batch_size", c.sentiment_sidecar.batch_size);
    c.sentiment_sidecar.timeout_seconds =
        get_or(s, "timeout", c.sentiment_sidecar.timeout_seconds);
  }
  c.parallelism = get_or(j, "parallelism", c.parallelism);
  c.max_in_flight = get_or(j, "max_in_flight", c.max_in_flight);
  if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) {
    c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
  }
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "runs/latest"));
  if (j.contains("templates_dir") && !j.at("templates_dir").is_null()) {
    c.templates_dir = resolve(base_dir, j.at("templates_dir").get<std::string>());
  }
  if (j.contains("description_limit") && !j.at("description_limit").is_null()) {
    c.render.description_limit = j.at("description_limit").get<std::size_t>();
  }
  c.alpha = get_or(j, "alpha", c.alpha);
  c.level = get_or(j, "level", c.level);
  c.bootstrap_resamples = get_or(j, "bootstrap_resamples", c.bootstrap_resamples);
  c.kl_epsilon = get_or(j, "kl_epsilon", c.kl_epsilon);
  if (j.contains("significance")) {
    const auto& s = j.at("significance");
    check_keys(s, {"better_than", "baseline"}, "significance");
    c.better_than = get_or(s, "better_than", c.better_than);
    c.baseline = get_or(s, "baseline", c.baseline);
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed run config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// run

namespace {

struct InstanceOutput {
  bool done = false;
  std::optional<std::string> failure;
  std::vector<ordered_json> records;
  std::vector<GenerationRecord> generations;
};

class Runner {
 public:
  Runner(const RunConfig& config, const RunHooks& hooks)
      : config_(config),
        hooks_(hooks),
        templates_(config.templates_dir ? PromptTemplates::load(*config.templates_dir)
                                        : PromptTemplates::defaults()),
        forge_(templates_, config.render) {
    semantic_ = hooks.semantic_scorer;
    if (!semantic_) {
      if (config.scorer == Backend::sidecar) {
        semantic_ = std::make_shared<SidecarScorer>(config.sidecar);
      } else {
        semantic_ = std::make_shared<LexicalFallbackScorer>();
      }
    }
    sentiment_ = hooks.sentiment;
    if (!sentiment_) {
      if (config.sentiment == Backend::sidecar) {
        sentiment_ = std::make_shared<SidecarSentiment>(config.sentiment_sidecar);
      } else {
        sentiment_ = std::make_shared<LexiconSentiment>();
      }
    }
    if (!config.cache_dir.empty()) cache_ = std::make_unique<ResponseCache>(config.cache_dir);
    for (const auto& model : config.models) {
      backends_.push_back(hooks.make_backend ? hooks.make_backend(model)
                                             : default_backend(model, templates_));
      gateways_.push_back(std::make_unique<Gateway>(*backends_.back(), cache_.get(),
                                                    hooks.retry, config.max_in_flight));
    }
  }

  RunSummary execute();

 private:
  void log(const std::string& line) const {
    if (hooks_.log) hooks_.log(line);
  }
  std::vector<EvalInstance> build_instances();
  InstanceOutput process(const EvalInstance& inst);
  void append_partial(const InstanceOutput& out);

  const RunConfig& config_;
  const RunHooks& hooks_;
  PromptTemplates templates_;
  PromptForge forge_;
  std::shared_ptr<SimilarityScorer> semantic_;
  std::shared_ptr<SentimentClassifier> sentiment_;
  RougeLScorer rouge_;
  std::unique_ptr<ResponseCache> cache_;
  std::vector<std::unique_ptr<ChatBackend>> backends_;
  std::vector<std::unique_ptr<Gateway>> gateways_;
  Corpus corpus_;
  std::mutex write_mutex_;
};

std::vector<EvalInstance> Runner::build_instances() {
  LoadResult loaded = load_reviews(config_.corpus);
  for (const auto& d : loaded.diagnostics) {
    log(config_.corpus.string() + ":" + std::to_string(d.line) + ": " + d.message);
  }
  corpus_ = filter_corpus(loaded.corpus, config_.filter);

  // Only users with a usable history of length n can be sampled.
  const auto histories = group_histories(corpus_);
  std::map<std::string, EvalInstance> eligible;
  for (const auto& [user, history] : histories) {
    if (history.entries.size() < config_.n + 1) continue;
    try {
      EvalInstance inst = build_instance(history, config_.n);
      inst.dataset = config_.dataset;
      eligible.emplace(user, std::move(inst));
    } catch (const CorpusError&) {
    }
  }
  Corpus sampling;
  for (const auto& r : corpus_.reviews) {
    if (eligible.count(r.user_id)) sampling.reviews.push_back(r);
  }
  const std::size_t k = config_.users == 0 ? eligible.size() : config_.users;
  std::vector<EvalInstance> out;
  for (const auto& user : sample_users(sampling, k, config_.seed)) {
    out.push_back(eligible.at(user));
  }
  return out;
}

InstanceOutput Runner::process(const EvalInstance& inst) {
  InstanceOutput out;
  const std::string& truth = inst.target_review.text;
  try {
    const Sentiment truth_label = classify_sentiment(truth, *sentiment_).label;
    const ReferencePool pool =
        reference_pool(corpus_, inst.target_item.item_id, inst.history.user_id, 1);
    std::vector<TextPair> pool_pairs;
    for (const auto& r : pool.reviews) pool_pairs.push_back({r.text, truth});
    std::vector<double> pool_scores;
    for (const auto& s : semantic_->score_batch(pool_pairs)) pool_scores.push_back(s.f);

    for (std::size_t mi = 0; mi < config_.models.size(); ++mi) {
      const ModelConfig& model = config_.models[mi];
      Gateway& gateway = *gateways_[mi];
      // Identical requests within an instance are issued once.
      std::map<std::pair<std::string, unsigned>, Completion> memo;
      std::set<std::tuple<std::string, unsigned, std::string>> attributed;

      for (const auto& method : config_.methods) {
        const std::string category = base_label(method, config_.n);
        Usage usage;
        auto call = [&](const Conversation& conv, unsigned sample, const std::string& cat,
                        const char* stage) {
          const std::string hash = conversation_hash(conv);
          auto key = std::make_pair(hash, sample);
          auto it = memo.find(key);
          const bool fresh = it == memo.end();
          if (fresh) it = memo.emplace(key, gateway.complete(conv, model, sample)).first;
          if (attributed.emplace(hash, sample, cat).second) {
            const Completion& c = it->second;
            GenerationRecord g;
            g.instance_id = inst.id;
            g.method = method.label;
            g.cost_category = cat;
            g.stage = stage;
            g.model_name = model.name;
            g.conversation_hash = hash;
            g.sample_index = sample;
            g.output_text = c.text;
            g.usage = c.usage;
            g.cost_usd = cost(c.usage, model);
            g.cached = c.cached || !fresh;
            g.timestamp = c.created;
            out.generations.push_back(std::move(g));
          }
          usage += it->second.usage;
          return it->second;
        };

        const PromptPlan& plan = method.plan;
        NegativeAssignments negatives;
        switch (plan.negative_kind) {
          case NegativeKind::none:
            break;
          case NegativeKind::high_semantic:
            negatives = select_negatives(corpus_, inst, plan.negatives, *semantic_,
                                         SelectMode::highest);
            break;
          case NegativeKind::low_semantic:
            negatives = select_negatives(corpus_, inst, plan.negatives, *semantic_,
                                         SelectMode::lowest);
            break;
          case NegativeKind::high_lexical:
            negatives =
                select_negatives(corpus_, inst, plan.negatives, rouge_, SelectMode::highest);
            break;
          case NegativeKind::low_lexical:
            negatives =
                select_negatives(corpus_, inst, plan.negatives, rouge_, SelectMode::lowest);
            break;
          case NegativeKind::generated:
            negatives = generate_negatives(
                inst, plan.turns, forge_,
                [&](const Conversation& conv, unsigned sample) {
                  return call(conv, sample, category, "negative");
                },
                plan.negatives);
            break;
        }

        Conversation conv;
        switch (plan.method) {
          case PromptMethod::baseline:
            conv = forge_.build_baseline(inst);
            break;
          case PromptMethod::scp:
            conv = forge_.build_scp(inst, plan.turns);
            break;
          case PromptMethod::ccp:
            conv = forge_.build_ccp(inst, plan.turns, plan.negatives,
                                    to_negative_map(negatives));
            break;
        }
        std::string output = call(conv, 0, category, "final").text;
        Usage refine_usage;
        if (plan.self_refine) {
          const Usage before = usage;
          const std::string sr = "SR[" + category + "]";
          SelfRefine refine = forge_.build_self_refine(conv, output);
          const std::string critique =
              call(refine.critique_conversation(), 0, sr, "refine_critique").text;
          output = call(refine.rewrite(critique), 0, sr, "refine_rewrite").text;
          refine_usage.input_tokens = usage.input_tokens - before.input_tokens;
          refine_usage.output_tokens = usage.output_tokens - before.output_tokens;
        }

        const SimilarityScore rouge = rouge_l(output, truth);
        const SimilarityScore semantic = semantic_->score(output, truth);
        const RankingResult rank = rank_generated(semantic.f, pool_scores, inst.id);
        const Sentiment label = classify_sentiment(output, *sentiment_).label;

        ordered_json r;
        r["instance_id"] = inst.id;
        r["dataset"] = inst.dataset;
        r["model"] = model.name;
        r["method"] = method.label;
        r["conversation_hash"] = conversation_hash(conv);
        r["messages"] = conv.size();
        r["output"] = output;
        r["rouge_l"] = score_json(rouge, false);
        r["semantic"] = score_json(semantic, true);
        r["ranking"] = {{"rank", rank.rank},
                        {"pool_size", rank.pool_size},
                        {"reciprocal_rank", rank.reciprocal_rank},
                        {"hit_at_5", rank.hit_at_5}};
        r["sentiment"] = {{"generated", std::string(to_string(label))},
                          {"truth", std::string(to_string(truth_label))}};
        r["negatives"] = ordered_json::array();
        for (const auto& [turn, a] : negatives) {
          ordered_json n;
          n["turn"] = turn;
          n["source"] = std::string(to_string(a.source));
          n["score"] = a.score ? json(*a.score) : json();
          n["author"] = a.author;
          n["text"] = a.text;
          r["negatives"].push_back(n);
        }
        r["usage"] = {{"input_tokens", usage.input_tokens},
                      {"output_tokens", usage.output_tokens}};
        r["cost_usd"] = cost(usage, model);
        r["refine_cost_usd"] = cost(refine_usage, model);
        out.records.push_back(std::move(r));
      }
    }
    out.done = true;
  } catch (const LlmError& e) {
    out.failure = e.what();
  } catch (const ScorerError& e) {
    out.failure = e.what();
  } catch (const CorpusError& e) {
    out.failure = e.what();
  } catch (const PromptError& e) {
    out.failure = e.what();
  }
  if (out.failure) out.records.clear();
  return out;
}

void Runner::append_partial(const InstanceOutput& out) {
  std::lock_guard lock(write_mutex_);
  std::ofstream records(config_.output_dir / kRecordsFile, std::ios::app | std::ios::binary);
  for (const auto& r : out.records) records << r.dump() << '\n';
  std::ofstream gens(config_.output_dir / kGenerationsFile, std::ios::app | std::ios::binary);
  for (const auto& g : out.generations) gens << to_json(g).dump() << '\n';
}

RunSummary Runner::execute() {
  config_.validate();
  const fs::path& dir = config_.output_dir;
  fs::create_directories(dir);
  for (const char* f : {kRecordsFile, kGenerationsFile, kFailuresFile, "report.md",
                        "report.csv", "cost.csv"}) {
    fs::remove(dir / f);
  }
  write_text(dir / kConfigFile, config_.snapshot().dump(2) + "\n");

  const std::vector<EvalInstance> instances = build_instances();
  {
    std::ostringstream os;
    for (const auto& inst : instances) os << to_json(inst).dump() << '\n';
    write_text(dir / kInstancesFile, os.str());
  }
  log("instances: " + std::to_string(instances.size()));

  std::vector<InstanceOutput> outputs(instances.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) return;
      try {
        outputs[i] = process(instances[i]);
        append_partial(outputs[i]);
        if (outputs[i].failure) log(instances[i].id + ": failed: " + *outputs[i].failure);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t threads = std::min(config_.parallelism, std::max<std::size_t>(1, instances.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  RunSummary summary;
  summary.dir = dir;
  summary.instances = instances.size();
  std::ostringstream records, gens, failures;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const InstanceOutput& o = outputs[i];
    for (const auto& r : o.records) records << r.dump() << '\n';
    for (const auto& g : o.generations) gens << to_json(g).dump() << '\n';
    if (o.failure) {
      ordered_json f;
      f["instance_id"] = instances[i].id;
      f["error"] = *o.failure;
      failures << f.dump() << '\n';
    } else {
      ++summary.completed;
    }
    summary.records += o.records.size();
  }
  write_text(dir / kRecordsFile, records.str());
  write_text(dir / kGenerationsFile, gens.str());
  write_text(dir / kFailuresFile, failures.str());
  for (const auto& g : gateways_) summary.backend_calls += g->backend_calls();
  if (summary.completed > 0) write_reports(dir);
  return summary;
}

}  // namespace

RunSummary run(const RunConfig& config, const RunHooks& hooks) {
  Runner runner(config, hooks);
  return runner.execute();
}

// ---------------------------------------------------------------------------
// report

namespace {

struct RecordView {
  std::string instance_id;
  double rouge = 0.0;
  double semantic = 0.0;
  std::string semantic_kind;
  RankingResult rank;
  Sentiment generated = Sentiment::neutral;
  Sentiment truth = Sentiment::neutral;
};

ConfidenceInterval mean_interval(const std::vector<double>& xs, double level) {
  if (xs.size() >= 2) return mean_ci_t(xs, level);
  ConfidenceInterval ci;
  ci.point = ci.lower = ci.upper = xs.empty() ? 0.0 : xs.front();
  ci.level = level;
  return ci;
}

std::optional<double> one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return wilcoxon_one_sided(a, b).p_value;
  } catch (const DegenerateSampleError&) {
    return 1.0;  // no nonzero differences: not better
  }
}

std::string fmt_p(const std::optional<double>& p) {
  return p ? fmt_double("%.6g", *p) : std::string();
}

std::string fmt_kl(double kl) {
  return std::isinf(kl) ? std::string("inf") : fmt_double("%.3f", kl);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

MetricReport report(const fs::path& run_dir) {
  std::ifstream cfg_in(run_dir / kConfigFile);
  if (!cfg_in) throw ConfigError("not a run directory: " + run_dir.string());
  const json cfg = json::parse(cfg_in);

  std::vector<std::string> models, methods;
  for (const auto& m : cfg.at("models")) models.push_back(m.at("name").get<std::string>());
  for (const auto& m : cfg.at("methods")) methods.push_back(m.at("label").get<std::string>());
  const double alpha = cfg.value("alpha", 0.01);
  const double level = cfg.value("level", 0.95);
  const std::size_t resamples = cfg.value("bootstrap_resamples", std::size_t{1000});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
  const double epsilon = cfg.value("kl_epsilon", 0.0);
  const json sig = cfg.value("significance", json::object());

  MetricReport rep;
  rep.alpha = alpha;
  rep.better_than = sig.value("better_than", std::string("SCP"));
  rep.baseline = sig.value("baseline", std::string("Baseline"));

  std::vector<std::string> order;
  for (const auto& inst : read_jsonl(run_dir / kInstancesFile, false)) {
    order.push_back(inst.at("id").get<std::string>());
  }

  // (model, method) -> instance id -> record
  std::map<std::pair<std::string, std::string>, std::map<std::string, RecordView>> cells;
  for (const auto& r : read_jsonl(run_dir / kRecordsFile, false)) {
    RecordView v;
    v.instance_id = r.at("instance_id").get<std::string>();
    v.rouge = r.at("rouge_l").at("f").get<double>();
    v.semantic = r.at("semantic").at("f").get<double>();
    v.semantic_kind = r.at("semantic").at("kind").get<std::string>();
    const auto& rk = r.at("ranking");
    v.rank.instance_id = v.instance_id;
    v.rank.rank = rk.at("rank").get<std::size_t>();
    v.rank.pool_size = rk.at("pool_size").get<std::size_t>();
    v.rank.reciprocal_rank = rk.at("reciprocal_rank").get<double>();
    v.rank.hit_at_5 = rk.at("hit_at_5").get<bool>();
    v.generated = parse_sentiment(r.at("sentiment").at("generated").get<std::string>());
    v.truth = parse_sentiment(r.at("sentiment").at("truth").get<std::string>());
    if (rep.semantic_metric.empty()) rep.semantic_metric = v.semantic_kind;
    cells[{r.at("model").get<std::string>(), r.at("method").get<std::string>()}][v.instance_id] =
        std::move(v);
  }
  if (cells.empty()) throw ConfigError("run has no completed records: " + run_dir.string());

  // Paired design: keep the instances present in every (model, method) cell.
  std::vector<std::string> common;
  for (const auto& id : order) {
    bool everywhere = true;
    for (const auto& model : models) {
      for (const auto& method : methods) {
        auto it = cells.find({model, method});
        if (it == cells.end() || !it->second.count(id)) everywhere = false;
      }
    }
    if (everywhere) common.push_back(id);
  }
  if (common.empty()) throw ConfigError("no instance completed every method");
  rep.instances = common.size();
  rep.excluded = order.size() - common.size();

  const auto costs = cost_report(run_dir);
  auto cost_of = [&](const std::string& model, const std::string& category) {
    double sum = 0.0;
    for (const auto& c : costs) {
      if (c.model == model && c.category == category) sum += c.cost_usd;
    }
    return sum;
  };
  std::map<std::string, bool> self_refine;
  std::map<std::string, std::string> base_of;
  const std::size_t n = cfg.value("n", std::size_t{5});
  for (const auto& m : cfg.at("methods")) {
    MethodSpec spec;
    spec.label = m.at("label").get<std::string>();
    spec.plan = PromptPlan::parse(m.at("name").get<std::string>(), n,
                                  m.at("turns").get<std::size_t>(),
                                  m.at("negatives").get<std::size_t>());
    self_refine[spec.label] = spec.plan.self_refine;
    base_of[spec.label] = base_label(spec, n);
  }

  auto column = [&](const std::string& model, const std::string& method, auto field) {
    std::vector<double> xs;
    const auto& cell = cells.at({model, method});
    for (const auto& id : common) xs.push_back(field(cell.at(id)));
    return xs;
  };
  auto rouge_of = [](const RecordView& v) { return v.rouge; };
  auto sem_of = [](const RecordView& v) { return v.semantic; };
  auto hit_of = [](const RecordView& v) { return v.rank.hit_at_5 ? 1.0 : 0.0; };
  auto rr_of = [](const RecordView& v) { return v.rank.reciprocal_rank; };

  bool truth_done = false;
  std::vector<std::size_t> pool_sizes;
  const Statistic mean_stat = [](std::span<const double> xs) { return mean(xs); };
  for (const auto& model : models) {
    const bool has_better =
        std::find(methods.begin(), methods.end(), rep.better_than) != methods.end();
    const bool has_base =
        std::find(methods.begin(), methods.end(), rep.baseline) != methods.end();
    for (const auto& method : methods) {
      MethodRow row;
      row.model = model;
      row.method = method;
      row.instances = common.size();
      const auto rouge = column(model, method, rouge_of);
      const auto sem = column(model, method, sem_of);
      row.rouge = mean_interval(rouge, level);
      row.semantic = mean_interval(sem, level);
      if (has_better && method != rep.better_than) {
        row.rouge_p_better = one_sided_p(rouge, column(model, rep.better_than, rouge_of));
        row.semantic_p_better = one_sided_p(sem, column(model, rep.better_than, sem_of));
        if (*row.rouge_p_better < alpha) row.rouge_marker += "*";
        if (*row.semantic_p_better < alpha) row.semantic_marker += "*";
      }
      if (has_base && method != rep.baseline) {
        row.rouge_p_baseline = one_sided_p(rouge, column(model, rep.baseline, rouge_of));
        row.semantic_p_baseline = one_sided_p(sem, column(model, rep.baseline, sem_of));
        if (!(*row.rouge_p_baseline < alpha)) row.rouge_marker += "⋄";
        if (!(*row.semantic_p_baseline < alpha)) row.semantic_marker += "⋄";
      }
      row.hit_at_5 = bootstrap_ci(column(model, method, hit_of), mean_stat, resamples, level,
                                  seed);
      row.mrr = bootstrap_ci(column(model, method, rr_of), mean_stat, resamples, level, seed);

      std::vector<Sentiment> truth, generated;
      const auto& cell = cells.at({model, method});
      for (const auto& id : common) {
        truth.push_back(cell.at(id).truth);
        generated.push_back(cell.at(id).generated);
      }
      if (!truth_done) {
        rep.truth_sentiment = LabelHistogram::from_labels(truth);
        for (const auto& id : common) pool_sizes.push_back(cell.at(id).rank.pool_size);
        truth_done = true;
      }
      row.sentiment = LabelHistogram::from_labels(generated);
      try {
        row.kl = kl_divergence(LabelHistogram::from_labels(truth), row.sentiment, epsilon);
      } catch (const StatsError&) {
        row.kl = std::numeric_limits<double>::infinity();
      }
      row.f1 = f1_scores(truth, generated);
      row.cost_usd = self_refine[method] ? cost_of(model, "SR[" + base_of[method] + "]")
                                         : cost_of(model, method);
      rep.rows.push_back(std::move(row));
    }
  }
  rep.random_hit_at_5 = expected_random_hit_at_k(pool_sizes, 5);
  rep.random_mrr = expected_random_mrr(pool_sizes);
  return rep;
}

std::string render_markdown(const MetricReport& rep) {
  std::ostringstream os;
  os << "# Results\n\n";
  os << "Instances: " << rep.instances;
  if (rep.excluded > 0) os << " (" << rep.excluded << " excluded: incomplete or failed)";
  os << "\n\nSemantic metric: " << rep.semantic_metric << "\n\n";
  os << "`*` significantly better than " << rep.better_than << ", `⋄` not significantly "
     << "better than " << rep.baseline << " (one-sided Wilcoxon, alpha = "
     << fmt_double("%g", rep.alpha) << ").\n\n";
  os << "| Model | Method | ROUGE-L | Semantic | Hit@5 | MRR | KL | Weighted-F1 | Macro-F1 "
        "| Cost (USD) |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rep.rows) {
    os << "| " << r.model << " | " << r.method << " | "
       << fmt_double("%.4f", r.rouge.point) << " ± " << fmt_double("%.4f", r.rouge.half_width())
       << r.rouge_marker << " | " << fmt_double("%.4f", r.semantic.point) << " ± "
       << fmt_double("%.4f", r.semantic.half_width()) << r.semantic_marker << " | "
       << fmt_double("%.3f", r.hit_at_5.point) << " [" << fmt_double("%.3f", r.hit_at_5.lower)
       << ", " << fmt_double("%.3f", r.hit_at_5.upper) << "] | "
       << fmt_double("%.3f", r.mrr.point) << " [" << fmt_double("%.3f", r.mrr.lower) << ", "
       << fmt_double("%.3f", r.mrr.upper) << "] | " << fmt_kl(r.kl) << " | "
       << fmt_double("%.3f", r.f1.weighted_f1) << " | " << fmt_double("%.3f", r.f1.macro_f1)
       << " | " << fmt_double("%.4f", r.cost_usd) << " |\n";
  }
  os << "| - | Random | - | - | " << fmt_double("%.3f", rep.random_hit_at_5) << " | "
     << fmt_double("%.3f", rep.random_mrr) << " | - | - | - | - |\n\n";
  os << "Ground-truth sentiment: positive " << rep.truth_sentiment[Sentiment::positive]
     << ", neutral " << rep.truth_sentiment[Sentiment::neutral] << ", negative "
     << rep.truth_sentiment[Sentiment::negative] << "\n";
  return os.str();
}

std::string render_csv(const MetricReport& rep) {
  std::ostringstream os;
  os << "model,method,instances,rouge_l,rouge_l_lower,rouge_l_upper,rouge_l_marker,"
        "rouge_l_p_better,rouge_l_p_baseline,semantic,semantic_lower,semantic_upper,"
        "semantic_marker,semantic_p_better,semantic_p_baseline,hit_at_5,hit_at_5_lower,"
        "hit_at_5_upper,mrr,mrr_lower,mrr_upper,positive,neutral,negative,kl,weighted_f1,"
        "macro_f1,cost_usd\n";
  auto g = [](double v) { return fmt_double("%.10g", v); };
  for (const auto& r : rep.rows) {
    os << csv_escape(r.model) << ',' << csv_escape(r.method) << ',' << r.instances << ','
       << g(r.rouge.point) << ',' << g(r.rouge.lower) << ',' << g(r.rouge.upper) << ','
       << r.rouge_marker << ',' << fmt_p(r.rouge_p_better) << ','
       << fmt_p(r.rouge_p_baseline) << ',' << g(r.semantic.point) << ','
       << g(r.semantic.lower) << ',' << g(r.semantic.upper) << ',' << r.semantic_marker << ','
       << fmt_p(r.semantic_p_better) << ',' << fmt_p(r.semantic_p_baseline) << ','
       << g(r.hit_at_5.point) << ',' << g(r.hit_at_5.lower) << ',' << g(r.hit_at_5.upper)
       << ',' << g(r.mrr.point) << ',' << g(r.mrr.lower) << ',' << g(r.mrr.upper) << ','
       << r.sentiment[Sentiment::positive] << ',' << r.sentiment[Sentiment::neutral] << ','
       << r.sentiment[Sentiment::negative] << ',' << (std::isinf(r.kl) ? "inf" : g(r.kl))
       << ',' << g(r.f1.weighted_f1) << ',' << g(r.f1.macro_f1) << ',' << g(r.cost_usd)
       << '\n';
  }
  os << ",Random," << rep.instances << ",,,,,,,,,,,,," << g(rep.random_hit_at_5) << ",,,"
     << g(rep.random_mrr) << ",,,,,,,,,\n";
  return os.str();
}

std::vector<CostRow> cost_report(const std::vector<GenerationRecord>& records) {
  std::vector<CostRow> rows;
  for (const auto& g : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const CostRow& r) {
      return r.model == g.model_name && r.category == g.cost_category;
    });
    if (it == rows.end()) {
      rows.push_back({g.model_name, g.cost_category, 0, {}, 0.0});
      it = std::prev(rows.end());
    }
    ++it->calls;
    it->usage += g.usage;
    it->cost_usd += g.cost_usd;
  }
  return rows;
}

std::vector<CostRow> cost_report(const fs::path& run_dir) {
  std::vector<GenerationRecord> records;
  for (const auto& j : read_jsonl(run_dir / kGenerationsFile, false)) {
    records.push_back(generation_from_json(j));
  }
  return cost_report(records);
}

std::string render_cost_markdown(const std::vector<CostRow>& rows) {
  std::ostringstream os;
  os << "| Model | Method | Calls | Input tokens | Output tokens | API fee (USD) |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.model << " | " << r.category << " | " << r.calls << " | "
       << r.usage.input_tokens << " | " << r.usage.output_tokens << " | "
       << fmt_double("%.4f", r.cost_usd) << " |\n";
  }
  return os.str();
}

std::string render_cost_csv(const std::vector<CostRow>& rows) {
  std::ostringstream os;
  os << "model,method,calls,input_tokens,output_tokens,cost_usd\n";
  for (const auto& r : rows) {
    os << csv_escape(r.model) << ',' << csv_escape(r.category) << ',' << r.calls << ','
       << r.usage.input_tokens << ',' << r.usage.output_tokens << ','
       << fmt_double("%.10g", r.cost_usd) << '\n';
  }
  return os.str();
}

void write_reports(const fs::path& run_dir) {
  const MetricReport rep = report(run_dir);
  write_text(run_dir / "report.md", render_markdown(rep));
  write_text(run_dir / "report.csv", render_csv(rep));
  write_text(run_dir / "cost.csv", render_cost_csv(cost_report(run_dir)));
}

}  // namespace convprompt
