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

// Command-line front end: corpus preparation, prompt rendering, runs and
// reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "convprompt/corpus.hpp"
#include "convprompt/errors.hpp"
#include "convprompt/metrics.hpp"
#include "convprompt/negatives.hpp"
#include "convprompt/prompt.hpp"
#include "convprompt/runner.hpp"
#include "convprompt/serialize.hpp"
#include "convprompt/synthetic.hpp"

namespace fs = std::filesystem;
using namespace convprompt;

namespace {

struct CorpusArgs {
  std::string input;
  std::string output;
  std::string dataset;
  FilterOptions filter;
  std::size_t n = 5;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  bool stats = false;
  std::string sidecar;
};

struct RenderArgs {
  std::string instances;
  std::string id;
  std::string method = "SCP";
  std::optional<std::size_t> turns;
  std::optional<std::size_t> negatives;
  std::string corpus;
  std::string templates;
  std::optional<std::size_t> description_limit;
  std::string sidecar;
};

std::unique_ptr<SimilarityScorer> make_scorer(const std::string& sidecar) {
  if (sidecar.empty()) return std::make_unique<LexicalFallbackScorer>();
  SidecarOptions options;
  options.endpoint = sidecar;
  return std::make_unique<SidecarScorer>(options);
}

int cmd_corpus(const CorpusArgs& a) {
  LoadResult loaded = load_reviews(a.input);
  for (const auto& d : loaded.diagnostics) {
    std::cerr << a.input << ":" << d.line << ": " << d.message << "\n";
  }
  const Corpus corpus = filter_corpus(loaded.corpus, a.filter);
  const std::string dataset = a.dataset.empty() ? fs::path(a.input).stem().string() : a.dataset;

  std::vector<EvalInstance> instances;
  const auto histories = group_histories(corpus);
  std::vector<std::string> users = corpus_users(corpus);
  if (a.sample > 0) users = sample_users(corpus, a.sample, a.seed);
  for (const auto& user : users) {
    try {
      EvalInstance inst = build_instance(histories.at(user), a.n);
      inst.dataset = dataset;
      instances.push_back(std::move(inst));
    } catch (const CorpusError& e) {
      std::cerr << "skipping " << user << ": " << e.what() << "\n";
    }
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!a.output.empty() && a.output != "-") {
    file.open(a.output, std::ios::binary);
    if (!file) throw ConfigError("cannot write " + a.output);
    out = &file;
  }
  for (const auto& inst : instances) *out << to_json(inst).dump() << '\n';
  std::cerr << corpus.reviews.size() << " reviews after filtering, " << instances.size()
            << " instances\n";

  if (a.stats) {
    auto scorer = make_scorer(a.sidecar);
    std::cerr << "dataset\tinstances\tmax\trandom\tmin\tpool_median\tpool_mean\tpool_sd\n";
    for (const auto& row : dataset_stats(corpus, instances, *scorer, a.seed)) {
      std::cerr << row.dataset << '\t' << row.instances << '\t' << row.max_similarity << '\t'
                << row.random_similarity << '\t' << row.min_similarity << '\t'
                << row.pool_median << '\t' << row.pool_mean << '\t' << row.pool_sd << '\n';
    }
  }
  return 0;
}

int cmd_render(const RenderArgs& a) {
  std::ifstream in(a.instances);
  if (!in) throw ConfigError("cannot open " + a.instances);
  std::optional<EvalInstance> found;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EvalInstance inst = instance_from_json(nlohmann::ordered_json::parse(line));
    if (inst.id == a.id) {
      found = std::move(inst);
      break;
    }
  }
  if (!found) throw ConfigError("instance " + a.id + " not found in " + a.instances);

  const PromptPlan plan = PromptPlan::parse(a.method, found->n(), a.turns, a.negatives);
  if (plan.self_refine) throw PromptError("Self-Refine needs a model output; render the base method");
  RenderOptions options;
  options.description_limit = a.description_limit;
  PromptForge forge(a.templates.empty() ? PromptTemplates::defaults()
                                        : PromptTemplates::load(a.templates),
                    options);

  Conversation conv;
  switch (plan.method) {
    case PromptMethod::baseline:
      conv = forge.build_baseline(*found);
      break;
    case PromptMethod::scp:
      conv = forge.build_scp(*found, plan.turns);
      break;
    case PromptMethod::ccp: {
      if (plan.negative_kind == NegativeKind::generated) {
        throw PromptError("CCP(G) negatives come from a model; use `run`");
      }
      if (a.corpus.empty()) throw ConfigError("--corpus is required for CCP negatives");
      const Corpus corpus = load_reviews(a.corpus).corpus;
      const bool semantic = plan.negative_kind == NegativeKind::high_semantic ||
                            plan.negative_kind == NegativeKind::low_semantic;
      const bool high = plan.negative_kind == NegativeKind::high_semantic ||
                        plan.negative_kind == NegativeKind::high_lexical;
      RougeLScorer rouge;
      auto semantic_scorer = make_scorer(a.sidecar);
      SimilarityScorer& scorer = semantic ? *semantic_scorer : rouge;
      const auto negatives = select_negatives(corpus, *found, plan.negatives, scorer,
                                              high ? SelectMode::highest : SelectMode::lowest);
      conv = forge.build_ccp(*found, plan.turns, plan.negatives, to_negative_map(negatives));
      break;
    }
  }
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& m : conv.messages) {
    j.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, bool quiet) {
  const RunConfig config = load_run_config(config_path);
  RunHooks hooks;
  if (!quiet) hooks.log = [](std::string_view line) { std::cerr << line << '\n'; };
  const RunSummary s = run(config, hooks);
  std::cerr << "run directory: " << s.dir.string() << "\n"
            << "instances: " << s.instances << " (" << s.completed << " completed)\n"
            << "records: " << s.records << ", backend calls: " << s.backend_calls << "\n";
  if (s.completed > 0) std::cout << render_markdown(report(s.dir));
  return s.completed > 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational prompting for personalized review generation"};
  app.require_subcommand(1);

  CorpusArgs corpus_args;
  auto* corpus = app.add_subcommand("corpus", "Filter a review corpus and emit instances");
  corpus->add_option("--input", corpus_args.input, "JSONL corpus (items and reviews)")
      ->required();
  corpus->add_option("--out", corpus_args.output, "Instances JSONL (default stdout)");
  corpus->add_option("--dataset", corpus_args.dataset, "Dataset label (default file stem)");
  corpus->add_option("--min-user-reviews", corpus_args.filter.min_user_reviews)
      ->capture_default_str();
  corpus->add_option("--min-other-reviews", corpus_args.filter.min_other_reviews)
      ->capture_default_str();
  corpus->add_option("--token-min", corpus_args.filter.token_min)->capture_default_str();
  corpus->add_option("--token-max", corpus_args.filter.token_max)->capture_default_str();
  corpus->add_option("--n", corpus_args.n, "History length")->capture_default_str();
  corpus->add_option("--sample", corpus_args.sample, "Users to sample (0 = all)")
      ->capture_default_str();
  corpus->add_option("--seed", corpus_args.seed)->capture_default_str();
  corpus->add_flag("--stats", corpus_args.stats, "Print dataset statistics to stderr");
  corpus->add_option("--sidecar", corpus_args.sidecar, "Scoring sidecar URL for --stats");

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Print the conversation for one instance");
  render->add_option("--instances", render_args.instances, "Instances JSONL")->required();
  render->add_option("--id", render_args.id, "Instance id")->required();
  render->add_option("--method", render_args.method, "Baseline, SCP, CCP(B), CCP(R)-, ...")
      ->capture_default_str();
  render->add_option("--turns", render_args.turns, "Conversational turns (default n-1)");
  render->add_option("--negatives", render_args.negatives, "Negatives (default turns)");
  render->add_option("--corpus", render_args.corpus, "Corpus for other users' reviews");
  render->add_option("--templates", render_args.templates, "Template directory");
  render->add_option("--description-limit", render_args.description_limit,
                     "Truncate item descriptions to this many bytes");
  render->add_option("--sidecar", render_args.sidecar, "Scoring sidecar URL for CCP(B)");

  std::string config_path;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
  run_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  run_cmd->add_flag("--quiet", quiet, "Suppress progress output");

  std::string report_dir;
  bool csv = false;
  auto* report_cmd = app.add_subcommand("report", "Aggregate a run directory");
  report_cmd->add_option("run_dir", report_dir)->required();
  report_cmd->add_flag("--csv", csv, "Delimited output");

  std::string cost_dir;
  bool cost_csv = false;
  auto* cost_cmd = app.add_subcommand("cost", "API fee per model and method");
  cost_cmd->add_option("run_dir", cost_dir)->required();
  cost_cmd->add_flag("--csv", cost_csv, "Delimited output");

  SyntheticOptions synth_options;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  synth->add_option("--out", synth_out, "Output JSONL")->required();
  synth->add_option("--users", synth_options.users)->capture_default_str();
  synth->add_option("--items", synth_options.items)->capture_default_str();
  synth->add_option("--reviews-per-user", synth_options.reviews_per_user)
      ->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*corpus) return cmd_corpus(corpus_args);
    if (*render) return cmd_render(render_args);
    if (*run_cmd) return cmd_run(config_path, quiet);
    if (*report_cmd) {
      const MetricReport rep = report(report_dir);
      std::cout << (csv ? render_csv(rep) : render_markdown(rep));
      return 0;
    }
    if (*cost_cmd) {
      const auto rows = cost_report(cost_dir);
      std::cout << (cost_csv ? render_cost_csv(rows) : render_cost_markdown(rows));
      return 0;
    }
    if (*synth) {
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw ConfigError("cannot write " + synth_out);
      write_corpus_jsonl(synthetic_corpus(synth_options), out);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
