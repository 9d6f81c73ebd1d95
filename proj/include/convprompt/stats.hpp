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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>

namespace convprompt {

enum class CiMethod { t_dist, bootstrap };

struct ConfidenceInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::t_dist;

  double half_width() const { return 0.5 * (upper - lower); }
};

double mean(std::span<const double> samples);

/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> samples);

/// mean +- t*(level, n-1) * sd / sqrt(n). Needs at least two samples.
ConfidenceInterval mean_ci_t(std::span<const double> samples, double level = 0.95);

using Statistic = std::function<double(std::span<const double>)>;

/// Percentile bootstrap. Quantiles of the resampled statistics use linear
/// interpolation between order statistics. Deterministic for a fixed seed.
/// The percentile interval is not forced to contain `point`.
ConfidenceInterval bootstrap_ci(std::span<const double> samples, const Statistic& statistic,
                                std::size_t resamples = 1000, double level = 0.95,
                                std::uint64_t seed = 0);

enum class WilcoxonMethod { exact, normal };

struct WilcoxonResult {
  double p_value = 1.0;
  double statistic = 0.0;  // W+, sum of ranks of positive differences
  std::size_t nonzero = 0;
  WilcoxonMethod method = WilcoxonMethod::exact;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;

/// One-sided signed-rank test of "a tends to exceed b" on paired samples.
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Exact enumeration up to kWilcoxonExactLimit nonzero differences, normal
/// approximation with tie and continuity correction above. Throws StatsError
/// on length mismatch or empty input and DegenerateSampleError when every
/// difference is zero.
WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b);

/// The two branches, exposed so they can be checked against each other.
WilcoxonResult wilcoxon_exact(std::span<const double> a, std::span<const double> b);
WilcoxonResult wilcoxon_normal(std::span<const double> a, std::span<const double> b);

enum class Sentiment { positive = 0, neutral = 1, negative = 2 };

inline constexpr std::array<Sentiment, 3> kSentiments = {
    Sentiment::positive, Sentiment::neutral, Sentiment::negative};

std::string_view to_string(Sentiment s);
Sentiment parse_sentiment(std::string_view text);

struct LabelHistogram {
  std::array<std::int64_t, 3> counts{};  // indexed by Sentiment

  static LabelHistogram from_labels(std::span<const Sentiment> labels);
  std::int64_t total() const { return counts[0] + counts[1] + counts[2]; }
  std::int64_t& operator[](Sentiment s) { return counts[static_cast<std::size_t>(s)]; }
  std::int64_t operator[](Sentiment s) const { return counts[static_cast<std::size_t>(s)]; }
};

/// D(p_true || q_gen) = sum p ln(p / q) over the three labels, natural log.
/// With epsilon > 0 both histograms get epsilon added to every bin first.
/// Throws StatsError for empty histograms or a zero q bin under positive p.
double kl_divergence(const LabelHistogram& p_true, const LabelHistogram& q_gen,
                     double epsilon = 0.0);

}  // namespace convprompt
