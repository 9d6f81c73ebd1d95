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

#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "convprompt/corpus.hpp"
#include "convprompt/downstream.hpp"
#include "convprompt/llm.hpp"
#include "convprompt/metrics.hpp"
#include "convprompt/prompt.hpp"
#include "convprompt/stats.hpp"

namespace convprompt {

struct MethodSpec {
  PromptPlan plan;
  std::string label;  // unique within a run
};

/// Label for a plan at history length n: the plan name, with "[l=…,m=…]"
/// appended when turns or negatives differ from their defaults.
std::string default_label(const PromptPlan& plan, std::size_t n);

/// Label of the same plan without Self-Refine, used as its cost category.
std::string base_label(const MethodSpec& method, std::size_t n);

enum class Backend { fallback, sidecar };

struct RunConfig {
  std::filesystem::path corpus;
  std::string dataset;  // defaults to the corpus file stem
  FilterOptions filter;
  std::size_t n = 5;
  std::size_t users = 0;  // 0 samples every eligible user
  std::uint64_t seed = 0;
  std::vector<ModelConfig> models;
  std::vector<MethodSpec> methods;
  Backend scorer = Backend::fallback;
  SidecarOptions sidecar;
  Backend sentiment = Backend::fallback;
  SentimentSidecarOptions sentiment_sidecar;
  std::size_t parallelism = 4;
  std::filesystem::path cache_dir;  // empty disables the response cache
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> templates_dir;
  RenderOptions render;
  double alpha = 0.01;
  double level = 0.95;
  std::size_t bootstrap_resamples = 1000;
  double kl_epsilon = 0.0;
  std::string better_than = "SCP";     // reference for the * marker
  std::string baseline = "Baseline";   // reference for the ⋄ marker
  std::size_t max_in_flight = 4;

  /// Throws ConfigError on an empty method or model list, duplicate labels,
  /// plans that do not fit n, or zero parallelism.
  void validate() const;

  /// Everything that affects results, with defaults filled in. Output and
  /// cache locations are left out so the snapshot is location independent.
  nlohmann::ordered_json snapshot() const;
};

/// Parses a JSON run configuration. Relative paths resolve against
/// `base_dir`. Models are names looked up in `models_file` (or the built-in
/// table) or inline objects with the models.cfg keys.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Injection points for tests and offline runs.
struct RunHooks {
  /// Defaults to MockBackend for mock models and OpenAIBackend otherwise.
  std::function<std::unique_ptr<ChatBackend>(const ModelConfig&)> make_backend;
  std::shared_ptr<SimilarityScorer> semantic_scorer;  // overrides config.scorer
  std::shared_ptr<SentimentClassifier> sentiment;     // overrides config.sentiment
  RetryPolicy retry;
  std::function<void(std::string_view)> log;
};

struct RunSummary {
  std::filesystem::path dir;
  std::size_t instances = 0;
  std::size_t completed = 0;
  std::size_t records = 0;
  std::size_t backend_calls = 0;
};

/// Ingests, samples, generates and scores, then writes the run directory:
/// config.json, instances.jsonl, records.jsonl, generations.jsonl,
/// failures.jsonl, report.{md,csv} and cost.csv. Instances whose calls fail
/// after retries are excluded from every method and listed in failures.jsonl;
/// any other exception aborts the run and propagates.
RunSummary run(const RunConfig& config, const RunHooks& hooks = {});

struct MethodRow {
  std::string model;
  std::string method;
  std::size_t instances = 0;
  ConfidenceInterval rouge;
  ConfidenceInterval semantic;
  std::optional<double> rouge_p_better;  // one-sided vs the * reference
  std::optional<double> semantic_p_better;
  std::optional<double> rouge_p_baseline;  // one-sided vs the ⋄ reference
  std::optional<double> semantic_p_baseline;
  std::string rouge_marker;
  std::string semantic_marker;
  ConfidenceInterval hit_at_5;
  ConfidenceInterval mrr;
  LabelHistogram sentiment;
  double kl = 0.0;  // +inf when a generated class is empty and epsilon is 0
  F1Scores f1;
  double cost_usd = 0.0;
  double refine_cost_usd = 0.0;
};

struct MetricReport {
  std::vector<MethodRow> rows;
  std::string semantic_metric;  // "semantic_external" or "lexical_fallback"
  std::size_t instances = 0;
  std::size_t excluded = 0;
  LabelHistogram truth_sentiment;
  double random_hit_at_5 = 0.0;
  double random_mrr = 0.0;
  double alpha = 0.01;
  std::string better_than;
  std::string baseline;
};

/// Aggregates records.jsonl over the instances completed by every method
/// and model. Throws ConfigError on a missing or empty run.
MetricReport report(const std::filesystem::path& run_dir);

std::string render_markdown(const MetricReport& report);
std::string render_csv(const MetricReport& report);

struct CostRow {
  std::string model;
  std::string category;
  std::size_t calls = 0;
  Usage usage;
  double cost_usd = 0.0;
};

/// Sums generations.jsonl by (model, cost category). Self-Refine calls are
/// grouped under "SR[label]", apart from their base method.
std::vector<CostRow> cost_report(const std::filesystem::path& run_dir);
std::vector<CostRow> cost_report(const std::vector<GenerationRecord>& records);

std::string render_cost_markdown(const std::vector<CostRow>& rows);
std::string render_cost_csv(const std::vector<CostRow>& rows);

/// Writes report.md, report.csv and cost.csv into the run directory.
void write_reports(const std::filesystem::path& run_dir);

}  // namespace convprompt
