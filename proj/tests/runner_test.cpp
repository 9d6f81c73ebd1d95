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

#include <gtest/gtest.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "convprompt/errors.hpp"
#include "fixtures.hpp"
#include "run_fixtures.hpp"

namespace convprompt {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::dir_contents;
using testing::mock_run_config;
using testing::slurp;
using testing::temp_dir;

class RunnerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = temp_dir("runner");
    corpus_ = testing::write_synthetic_corpus(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  fs::path corpus_;
};

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

TEST(RunConfigParse, DefaultsAndLabels) {
  const json j = {{"corpus", "data/c.jsonl"},
                  {"models", {"gpt-4.1-mini"}},
                  {"methods", {"Baseline", "SCP", "CCP(B)", "SCP+SR",
                               {{"name", "CCP(G)"}, {"turns", 4}, {"negatives", 1}}}}};
  const RunConfig c = parse_run_config(j, "/base");
  EXPECT_EQ(c.corpus, fs::path("/base/data/c.jsonl"));
  EXPECT_EQ(c.dataset, "c");
  EXPECT_EQ(c.output_dir, fs::path("/base/runs/latest"));
  EXPECT_TRUE(c.cache_dir.empty());
  EXPECT_EQ(c.n, 5u);
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.bootstrap_resamples, 1000u);
  ASSERT_EQ(c.methods.size(), 5u);
  EXPECT_EQ(c.methods[1].plan.turns, 4u);
  EXPECT_EQ(c.methods[2].plan.negatives, 4u);
  EXPECT_EQ(c.methods[2].label, "CCP(B)");
  EXPECT_EQ(c.methods[3].label, "SCP+SR");
  EXPECT_EQ(c.methods[4].label, "CCP(G)[l=4,m=1]");
  EXPECT_EQ(base_label(c.methods[3], 5), "SCP");
  EXPECT_EQ(c.models[0].temperature, 0.1);
  EXPECT_EQ(c.models[0].price_in, 0.4);
}

TEST(RunConfigParse, InlineModelsAndOverrides) {
  const json j = {{"corpus", "/abs/c.jsonl"},
                  {"n", 3},
                  {"models",
                   {{{"name", "m1"}, {"provider", "mock"}, {"policy", "echo"}, {"seed", 3}},
                    {{"name", "gpt-4.1"}, {"temperature", 0.0}}}},
                  {"methods", {"SCP"}},
                  {"sidecar", "http://localhost:9"},
                  {"significance", {{"better_than", "Baseline"}}}};
  const RunConfig c = parse_run_config(j, "/base");
  EXPECT_EQ(c.corpus, fs::path("/abs/c.jsonl"));
  EXPECT_EQ(c.methods[0].plan.turns, 2u);
  EXPECT_EQ(c.models[0].mock_policy, MockPolicy::echo);
  EXPECT_EQ(c.models[0].mock_seed, 3u);
  EXPECT_EQ(c.models[1].temperature, 0.0);
  EXPECT_EQ(c.models[1].price_out, 8.0);
  EXPECT_EQ(c.sidecar.endpoint, "http://localhost:9");
  EXPECT_EQ(c.sentiment_sidecar.endpoint, "http://localhost:9");
  EXPECT_EQ(c.better_than, "Baseline");
}

TEST(RunConfigParse, Errors) {
  const json ok = {{"corpus", "c.jsonl"}, {"models", {"gpt-4.1"}}, {"methods", {"SCP"}}};
  EXPECT_NO_THROW(parse_run_config(ok, "."));
  auto with = [&](const char* key, json value) {
    json j = ok;
    j[key] = std::move(value);
    return j;
  };
  EXPECT_THROW(parse_run_config(with("colour", "red"), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("models", {"gpt-9"}), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("methods", json::array()), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("methods", {"SCP", "SCP"}), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("methods", {"CCP(Z)"}), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("methods", {{{"name", "SCP"}, {"turns", 5}}}), "."),
               ConfigError);
  EXPECT_THROW(parse_run_config(
                   with("methods", {{{"name", "CCP(B)"}, {"turns", 2}, {"negatives", 3}}}), "."),
               ConfigError);
  EXPECT_THROW(parse_run_config(with("parallelism", 0), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("alpha", 1.5), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("n", "five"), "."), ConfigError);
  EXPECT_THROW(parse_run_config(with("scorer", "bert"), "."), ConfigError);
  json no_corpus = ok;
  no_corpus.erase("corpus");
  EXPECT_THROW(parse_run_config(no_corpus, "."), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/run.json"), ConfigError);
}

TEST(RunConfigParse, ShippedExampleLoads) {
  const RunConfig c =
      load_run_config(std::string(CONVPROMPT_SOURCE_DIR) + "/config/run.example.json");
  EXPECT_FALSE(c.methods.empty());
  EXPECT_TRUE(c.models.front().is_mock());
  EXPECT_TRUE(c.templates_dir.has_value());
  EXPECT_NO_THROW(c.snapshot());
}

TEST(RunConfigParse, SnapshotIgnoresLocations) {
  const json j = {{"corpus", "c.jsonl"}, {"models", {"gpt-4.1"}}, {"methods", {"SCP"}}};
  RunConfig a = parse_run_config(j, "/one");
  RunConfig b = parse_run_config(j, "/two");
  b.cache_dir = "/elsewhere";
  EXPECT_EQ(a.snapshot().dump(), b.snapshot().dump());
  b.seed = 1;
  EXPECT_NE(a.snapshot().dump(), b.snapshot().dump());
}

TEST_F(RunnerTest, OneCallPerMethodWithoutGeneratedNegatives) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"Baseline", "SCP", "CCP(B)"});
  const RunSummary s = run(config);
  EXPECT_EQ(s.instances, 10u);
  EXPECT_EQ(s.completed, 10u);
  EXPECT_EQ(s.records, 30u);
  EXPECT_EQ(s.backend_calls, 30u);
  EXPECT_EQ(line_count(s.dir / "records.jsonl"), 30u);
  EXPECT_EQ(line_count(s.dir / "generations.jsonl"), 30u);
  EXPECT_EQ(line_count(s.dir / "failures.jsonl"), 0u);
  for (const char* f : {"config.json", "instances.jsonl", "report.md", "report.csv", "cost.csv"}) {
    EXPECT_TRUE(fs::exists(s.dir / f)) << f;
  }

  auto with_g = mock_run_config(corpus_, dir_ / "run_g", {"Baseline", "SCP", "CCP(B)", "CCP(G)"});
  const RunSummary g = run(with_g);
  EXPECT_EQ(g.backend_calls, 30u + 50u);
  EXPECT_EQ(g.records, 40u);
}

TEST_F(RunnerTest, SharedRequestsAreCalledOnceAndChargedToEachMethod) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"SCP", "SCP+SR"}, 3);
  MethodSpec copy = testing::method("SCP");
  copy.label = "SCP-again";
  config.methods.push_back(copy);
  const RunSummary s = run(config);
  // SCP once, plus critique and rewrite.
  EXPECT_EQ(s.backend_calls, 3u * 3u);
  std::map<std::string, std::size_t> calls;
  for (const auto& row : cost_report(s.dir)) calls[row.category] = row.calls;
  EXPECT_EQ(calls["SCP"], 3u);
  EXPECT_EQ(calls["SR[SCP]"], 6u);
  EXPECT_EQ(calls["SCP-again"], 3u);
  const MetricReport rep = report(s.dir);
  EXPECT_EQ(rep.rows[0].cost_usd, rep.rows[2].cost_usd);
  EXPECT_EQ(rep.rows[0].rouge.point, rep.rows[2].rouge.point);
}

TEST_F(RunnerTest, RecordsCarryScoresAndNegatives) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"CCP(B)"}, 2);
  const RunSummary s = run(config);
  std::ifstream in(s.dir / "records.jsonl");
  std::string line;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    const auto r = json::parse(line);
    EXPECT_EQ(r.at("messages"), 1 + 2 * 4 + 2 * 4);
    EXPECT_EQ(r.at("negatives").size(), 4u);
    EXPECT_EQ(r.at("semantic").at("kind"), "lexical_fallback");
    const double f = r.at("rouge_l").at("f");
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_GE(r.at("ranking").at("rank").get<int>(), 1);
    ++seen;
  }
  EXPECT_EQ(seen, 2u);
}

TEST_F(RunnerTest, WarmCacheMakesNoCalls) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"Baseline", "SCP", "CCP(G)"});
  config.cache_dir = dir_ / "cache";
  const RunSummary cold = run(config);
  EXPECT_GT(cold.backend_calls, 0u);
  const std::string cold_report = slurp(cold.dir / "report.md");
  const std::string cold_cost = slurp(cold.dir / "cost.csv");
  const RunSummary warm = run(config);
  EXPECT_EQ(warm.backend_calls, 0u);
  EXPECT_EQ(slurp(warm.dir / "report.md"), cold_report);
  EXPECT_EQ(slurp(warm.dir / "report.csv"), slurp(cold.dir / "report.csv"));
  EXPECT_EQ(slurp(warm.dir / "cost.csv"), cold_cost);
}

TEST_F(RunnerTest, FreshRunsAreByteIdentical) {
  auto a = mock_run_config(corpus_, dir_ / "a", {"Baseline", "SCP", "CCP(B)", "CCP(G)"});
  auto b = a;
  b.output_dir = dir_ / "b";
  b.parallelism = 3;
  run(a);
  run(b);
  const auto left = dir_contents(dir_ / "a");
  const auto right = dir_contents(dir_ / "b");
  ASSERT_EQ(left.size(), right.size());
  for (const auto& [name, contents] : left) EXPECT_EQ(contents, right.at(name)) << name;
}

// Fails every call that arrives while `armed` is set.
class Tripwire final : public ChatBackend {
 public:
  Tripwire(const ModelConfig& model, std::function<void(std::size_t)> on_call)
      : inner_(MockOptions{model.mock_policy, model.mock_seed}), on_call_(std::move(on_call)) {}
  Completion complete(const Conversation& c, const ModelConfig& m, unsigned s) override {
    on_call_(calls_++);
    return inner_.complete(c, m, s);
  }

 private:
  MockBackend inner_;
  std::function<void(std::size_t)> on_call_;
  std::size_t calls_ = 0;
};

TEST_F(RunnerTest, FailedInstancesAreExcludedEverywhere) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"Baseline", "SCP", "CCP(B)"});
  config.parallelism = 1;
  RunHooks hooks;
  hooks.make_backend = [](const ModelConfig& m) {
    return std::make_unique<Tripwire>(m, [](std::size_t call) {
      if (call == 4) throw AuthError("revoked key");
    });
  };
  const RunSummary s = run(config, hooks);
  EXPECT_EQ(s.completed, 9u);
  EXPECT_EQ(s.records, 27u);
  EXPECT_EQ(line_count(s.dir / "failures.jsonl"), 1u);
  EXPECT_NE(slurp(s.dir / "failures.jsonl").find("revoked key"), std::string::npos);
  const MetricReport rep = report(s.dir);
  EXPECT_EQ(rep.instances, 9u);
  EXPECT_EQ(rep.excluded, 1u);
  for (const auto& row : rep.rows) EXPECT_EQ(row.instances, 9u);
}

TEST_F(RunnerTest, TransientFailuresAreRetried) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"SCP"}, 3);
  config.parallelism = 1;
  RunHooks hooks;
  hooks.retry.sleep = [](std::chrono::duration<double>) {};
  hooks.make_backend = [](const ModelConfig& m) {
    return std::make_unique<Tripwire>(m, [](std::size_t call) {
      if (call == 1 || call == 2) throw TransientError("busy");
    });
  };
  const RunSummary s = run(config, hooks);
  EXPECT_EQ(s.completed, 3u);
  EXPECT_EQ(s.backend_calls, 5u);
}

TEST_F(RunnerTest, ResumeAfterInterruptionMatchesUninterruptedRun) {
  auto reference = mock_run_config(corpus_, dir_ / "reference", {"Baseline", "SCP", "CCP(G)"});
  reference.parallelism = 1;
  run(reference);

  auto config = reference;
  config.output_dir = dir_ / "resumed";
  config.cache_dir = dir_ / "cache";
  RunHooks crash;
  crash.make_backend = [](const ModelConfig& m) {
    // 4 instances complete (7 calls each) before the process "dies".
    return std::make_unique<Tripwire>(m, [](std::size_t call) {
      if (call == 28) throw std::runtime_error("killed");
    });
  };
  EXPECT_THROW(run(config, crash), std::runtime_error);
  EXPECT_EQ(line_count(config.output_dir / "records.jsonl"), 12u);
  // Partial output is already reportable.
  EXPECT_EQ(report(config.output_dir).instances, 4u);

  const RunSummary resumed = run(config);
  EXPECT_EQ(resumed.backend_calls, 6u * 7u);
  EXPECT_EQ(slurp(config.output_dir / "report.md"), slurp(reference.output_dir / "report.md"));
  EXPECT_EQ(slurp(config.output_dir / "records.jsonl"),
            slurp(reference.output_dir / "records.jsonl"));
}

TEST_F(RunnerTest, ReportListsAllPairedComparisons) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"Baseline", "SCP", "CCP(B)", "CCP(G)"},
                                20);
  const RunSummary s = run(config);
  const MetricReport rep = report(s.dir);
  EXPECT_EQ(rep.instances, 20u);
  EXPECT_EQ(rep.semantic_metric, "lexical_fallback");
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.rouge_p_better.has_value(), row.method != "SCP") << row.method;
    EXPECT_EQ(row.rouge_p_baseline.has_value(), row.method != "Baseline") << row.method;
    EXPECT_EQ(row.semantic_p_better.has_value(), row.method != "SCP") << row.method;
    EXPECT_EQ(row.semantic_p_baseline.has_value(), row.method != "Baseline") << row.method;
    EXPECT_LE(row.hit_at_5.lower, row.hit_at_5.upper);
    EXPECT_GE(row.kl, 0.0);
  }
  const std::string md = render_markdown(rep);
  EXPECT_NE(md.find("| mock-replay | CCP(G) |"), std::string::npos);
  EXPECT_NE(md.find("| - | Random |"), std::string::npos);
  const std::string csv = render_csv(rep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

// Hand-built run directory: one model, `scores[method][i]` as both metrics.
fs::path fixture_run(const fs::path& dir,
                     const std::vector<std::pair<std::string, std::vector<double>>>& scores) {
  fs::create_directories(dir);
  json cfg;
  cfg["n"] = 5;
  cfg["seed"] = 0;
  cfg["models"] = {{{"name", "m"}}};
  cfg["methods"] = json::array();
  for (const auto& [label, _] : scores) {
    const PromptPlan plan = PromptPlan::parse(label, 5);
    cfg["methods"].push_back(
        {{"label", label}, {"name", plan.name()}, {"turns", plan.turns},
         {"negatives", plan.negatives}});
  }
  std::ofstream(dir / "config.json") << cfg.dump();
  const std::size_t n = scores.front().second.size();
  std::ofstream instances(dir / "instances.jsonl");
  for (std::size_t i = 0; i < n; ++i) instances << json{{"id", "U" + std::to_string(i)}}.dump() << '\n';
  std::ofstream records(dir / "records.jsonl");
  for (const auto& [label, xs] : scores) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      json r;
      r["instance_id"] = "U" + std::to_string(i);
      r["model"] = "m";
      r["method"] = label;
      r["rouge_l"] = {{"f", xs[i]}};
      r["semantic"] = {{"f", xs[i]}, {"kind", "lexical_fallback"}};
      r["ranking"] = {{"rank", 1 + i % 7}, {"pool_size", 9},
                      {"reciprocal_rank", 1.0 / (1 + i % 7)}, {"hit_at_5", 1 + i % 7 <= 5}};
      r["sentiment"] = {{"generated", i % 2 ? "positive" : "negative"},
                        {"truth", i % 3 ? "positive" : "negative"}};
      records << r.dump() << '\n';
    }
  }
  return dir;
}

TEST(Report, SingleMethodHasNoMarkers) {
  const auto dir = temp_dir("report");
  fixture_run(dir, {{"SCP", {0.1, 0.2, 0.3, 0.4}}});
  const MetricReport rep = report(dir);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_TRUE(rep.rows[0].rouge_marker.empty());
  EXPECT_TRUE(rep.rows[0].semantic_marker.empty());
  EXPECT_FALSE(rep.rows[0].rouge_p_better);
  EXPECT_FALSE(rep.rows[0].rouge_p_baseline);
  EXPECT_NEAR(rep.rows[0].rouge.point, 0.25, 1e-12);
  fs::remove_all(dir);
}

TEST(Report, IdenticalScoresAreNotBetter) {
  const auto dir = temp_dir("report");
  const std::vector<double> xs{0.1, 0.5, 0.3, 0.4, 0.2};
  fixture_run(dir, {{"Baseline", xs}, {"SCP", xs}});
  const MetricReport rep = report(dir);
  EXPECT_EQ(rep.rows[1].rouge_marker, "⋄");
  EXPECT_EQ(rep.rows[1].semantic_marker, "⋄");
  EXPECT_EQ(*rep.rows[1].rouge_p_baseline, 1.0);
  // Baseline is itself compared against SCP for the * marker.
  EXPECT_EQ(*rep.rows[0].rouge_p_better, 1.0);
  EXPECT_TRUE(rep.rows[0].rouge_marker.empty());
  fs::remove_all(dir);
}

TEST(Report, ConsistentWinsAreSignificant) {
  const auto dir = temp_dir("report");
  std::vector<double> base, scp, ccp;
  for (int i = 0; i < 20; ++i) {
    base.push_back(0.10 + 0.01 * i);
    scp.push_back(0.12 + 0.01 * i + 0.001 * i);
    ccp.push_back(0.30 + 0.01 * i);
  }
  fixture_run(dir, {{"Baseline", base}, {"SCP", scp}, {"CCP(B)", ccp}});
  const MetricReport rep = report(dir);
  const MethodRow& row = rep.rows[2];
  EXPECT_LT(*row.rouge_p_better, 0.01);
  EXPECT_LT(*row.rouge_p_baseline, 0.01);
  EXPECT_EQ(row.rouge_marker, "*");
  EXPECT_EQ(rep.rows[1].rouge_marker, "");
  const std::string md = render_markdown(rep);
  EXPECT_NE(md.find("*"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Report, PairsOnlyInstancesSharedByAllMethods) {
  const auto dir = temp_dir("report");
  fixture_run(dir, {{"Baseline", {0.1, 0.2, 0.3}}, {"SCP", {0.2, 0.3, 0.4}}});
  // Drop U1 from SCP.
  std::string kept;
  std::ifstream in(dir / "records.jsonl");
  for (std::string line; std::getline(in, line);) {
    if (line.find("\"U1\"") != std::string::npos && line.find("\"SCP\"") != std::string::npos) {
      continue;
    }
    kept += line + "\n";
  }
  in.close();
  std::ofstream(dir / "records.jsonl") << kept << "{\"instance_id\":";  // torn tail
  const MetricReport rep = report(dir);
  EXPECT_EQ(rep.instances, 2u);
  EXPECT_EQ(rep.excluded, 1u);
  EXPECT_NEAR(rep.rows[0].rouge.point, 0.2, 1e-12);
  fs::remove_all(dir);
}

TEST(Report, EmptyRunIsAnError) {
  const auto dir = temp_dir("report");
  EXPECT_THROW(report(dir), ConfigError);
  fixture_run(dir, {{"SCP", {0.1}}});
  std::ofstream(dir / "records.jsonl", std::ios::trunc);
  EXPECT_THROW(report(dir), ConfigError);
  fs::remove_all(dir);
}

TEST(CostReport, HandArithmetic) {
  std::vector<GenerationRecord> g;
  auto add = [&](const char* model, const char* cat, std::int64_t in, std::int64_t out,
                 double usd) {
    GenerationRecord r;
    r.model_name = model;
    r.cost_category = cat;
    r.usage = {in, out};
    r.cost_usd = usd;
    g.push_back(r);
  };
  add("a", "SCP", 1000, 100, 0.01);
  add("a", "SCP", 3000, 300, 0.02);
  add("a", "SR[SCP]", 50, 5, 0.005);
  add("b", "SCP", 10, 1, 0.5);
  const auto rows = cost_report(g);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].calls, 2u);
  EXPECT_EQ(rows[0].usage, (Usage{4000, 400}));
  EXPECT_NEAR(rows[0].cost_usd, 0.03, 1e-15);
  EXPECT_EQ(rows[1].category, "SR[SCP]");
  EXPECT_EQ(rows[2].model, "b");
  const std::string csv = render_cost_csv(rows);
  EXPECT_NE(csv.find("a,SCP,2,4000,400,0.03\n"), std::string::npos);
  EXPECT_TRUE(cost_report(std::vector<GenerationRecord>{}).empty());
}

// Every call reports the same usage, so cost tracks call counts.
class FlatUsage final : public ChatBackend {
 public:
  Completion complete(const Conversation& c, const ModelConfig&, unsigned s) override {
    return {"flat reply " + conversation_hash(c).substr(0, 8) + std::to_string(s),
            {1000, 100}, 0, false};
  }
};

TEST_F(RunnerTest, GeneratedNegativesCostFiveTimesSimpleConversation) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"SCP", "CCP(G)", "SCP+SR"}, 4);
  RunHooks hooks;
  hooks.make_backend = [](const ModelConfig&) { return std::make_unique<FlatUsage>(); };
  const RunSummary s = run(config, hooks);
  const auto rows = cost_report(s.dir);
  double scp = 0, ccpg = 0, sr = 0;
  for (const auto& r : rows) {
    if (r.category == "SCP") scp = r.cost_usd;
    if (r.category == "CCP(G)") ccpg = r.cost_usd;
    if (r.category == "SR[SCP]") sr = r.cost_usd;
  }
  EXPECT_NEAR(scp, 4 * (1000 * 0.4 + 100 * 1.6) / 1e6, 1e-12);
  EXPECT_NEAR(ccpg / scp, 5.0, 1e-9);
  EXPECT_NEAR(sr / scp, 2.0, 1e-9);
  const MetricReport rep = report(s.dir);
  EXPECT_NEAR(rep.rows[2].cost_usd, sr, 1e-12);
}

TEST_F(RunnerTest, ZeroPriceRunCostsNothing) {
  auto config = mock_run_config(corpus_, dir_ / "run", {"SCP"}, 3);
  config.models[0].price_in = 0.0;
  config.models[0].price_out = 0.0;
  const RunSummary s = run(config);
  for (const auto& r : cost_report(s.dir)) EXPECT_EQ(r.cost_usd, 0.0);
  for (const auto& row : report(s.dir).rows) EXPECT_EQ(row.cost_usd, 0.0);
}

}  // namespace
}  // namespace convprompt
