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

#include "convprompt/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "convprompt/detail/random.hpp"
#include "convprompt/errors.hpp"

namespace convprompt {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw StatsError("confidence level must be in (0, 1)");
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct SignedRanks {
  std::vector<double> ranks;  // |d| ranks, average for ties
  std::vector<bool> positive;
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired samples differ in length");
  if (a.empty()) throw StatsError("paired samples are empty");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw DegenerateSampleError("all paired differences are zero");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(d[x]) < std::abs(d[y]);
  });
  SignedRanks out;
  out.ranks.assign(d.size(), 0.0);
  out.positive.resize(d.size());
  for (std::size_t i = 0; i < d.size();) {
    std::size_t j = i;
    while (j + 1 < d.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    out.tie_term += t * t * t - t;
    i = j + 1;
  }
  for (std::size_t i = 0; i < d.size(); ++i) out.positive[i] = d[i] > 0;
  return out;
}

double positive_rank_sum(const SignedRanks& sr) {
  double w = 0.0;
  for (std::size_t i = 0; i < sr.ranks.size(); ++i) {
    if (sr.positive[i]) w += sr.ranks[i];
  }
  return w;
}

}  // namespace

double mean(std::span<const double> samples) {
  if (samples.empty()) throw StatsError("mean of an empty sample");
  return std::accumulate(samples.begin(), samples.end(), 0.0) /
         static_cast<double>(samples.size());
}

double sample_sd(std::span<const double> samples) {
  if (samples.size() < 2) throw StatsError("standard deviation needs two samples");
  const double m = mean(samples);
  double ss = 0.0;
  for (double x : samples) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

ConfidenceInterval mean_ci_t(std::span<const double> samples, double level) {
  check_level(level);
  if (samples.size() < 2) throw StatsError("t interval needs at least two samples");
  const double n = static_cast<double>(samples.size());
  const boost::math::students_t dist(n - 1.0);
  const double t_star = boost::math::quantile(dist, 0.5 + level / 2.0);
  const double m = mean(samples);
  const double half = t_star * sample_sd(samples) / std::sqrt(n);
  return {m, m - half, m + half, level, CiMethod::t_dist};
}

ConfidenceInterval bootstrap_ci(std::span<const double> samples, const Statistic& statistic,
                                std::size_t resamples, double level, std::uint64_t seed) {
  check_level(level);
  if (samples.empty()) throw StatsError("bootstrap of an empty sample");
  if (resamples == 0) throw StatsError("bootstrap needs at least one resample");
  std::mt19937_64 rng(seed);
  std::vector<double> draw(samples.size());
  std::vector<double> stats;
  stats.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    for (auto& x : draw) x = samples[detail::draw_below(rng, samples.size())];
    stats.push_back(statistic(draw));
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - level;
  return {statistic(samples), quantile_sorted(stats, alpha / 2.0),
          quantile_sorted(stats, 1.0 - alpha / 2.0), level, CiMethod::bootstrap};
}

WilcoxonResult wilcoxon_exact(std::span<const double> a, std::span<const double> b) {
  const SignedRanks sr = signed_ranks(a, b);
  const std::size_t n = sr.ranks.size();
  if (n > 20) throw StatsError("exact Wilcoxon enumeration limited to 20 differences");
  const double observed = positive_rank_sum(sr);
  std::uint64_t at_least = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) w += sr.ranks[i];
    }
    if (w >= observed - 1e-9) ++at_least;
  }
  return {static_cast<double>(at_least) / static_cast<double>(total), observed, n,
          WilcoxonMethod::exact};
}

WilcoxonResult wilcoxon_normal(std::span<const double> a, std::span<const double> b) {
  const SignedRanks sr = signed_ranks(a, b);
  const double n = static_cast<double>(sr.ranks.size());
  const double observed = positive_rank_sum(sr);
  const double mu = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - sr.tie_term / 48.0;
  double p = observed > mu ? 0.0 : 1.0;
  if (var > 0.0) {
    const double z = (observed - mu - 0.5) / std::sqrt(var);
    p = 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  return {p, observed, sr.ranks.size(), WilcoxonMethod::normal};
}

WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired samples differ in length");
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < a.size(); ++i) nonzero += a[i] != b[i];
  return nonzero <= kWilcoxonExactLimit ? wilcoxon_exact(a, b) : wilcoxon_normal(a, b);
}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::positive: return "positive";
    case Sentiment::neutral: return "neutral";
    case Sentiment::negative: return "negative";
  }
  return "unknown";
}

Sentiment parse_sentiment(std::string_view text) {
  if (text == "positive") return Sentiment::positive;
  if (text == "neutral") return Sentiment::neutral;
  if (text == "negative") return Sentiment::negative;
  throw StatsError("unknown sentiment label: " + std::string(text));
}

LabelHistogram LabelHistogram::from_labels(std::span<const Sentiment> labels) {
  LabelHistogram h;
  for (auto s : labels) ++h[s];
  return h;
}

double kl_divergence(const LabelHistogram& p_true, const LabelHistogram& q_gen,
                     double epsilon) {
  if (epsilon < 0.0) throw StatsError("smoothing epsilon must be non-negative");
  const double p_total = static_cast<double>(p_true.total()) + 3.0 * epsilon;
  const double q_total = static_cast<double>(q_gen.total()) + 3.0 * epsilon;
  if (p_true.total() <= 0 || q_gen.total() <= 0) {
    throw StatsError("KL divergence needs non-empty histograms");
  }
  double kl = 0.0;
  for (auto s : kSentiments) {
    const double p = (static_cast<double>(p_true[s]) + epsilon) / p_total;
    const double q = (static_cast<double>(q_gen[s]) + epsilon) / q_total;
    if (p == 0.0) continue;
    if (q == 0.0) {
      throw StatsError("generated histogram has no " + std::string(to_string(s)) +
                       " labels but the true histogram does");
    }
    kl += p * std::log(p / q);
  }
  return kl;
}

}  // namespace convprompt
