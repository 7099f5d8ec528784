#include "mfgat/dataset.hpp"

#include "mfgat/errors.hpp"
#include "mfgat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace mfgat {

Scenario scenario_of(TargetClass c) {
  switch (c) {
    case TargetClass::None: return Scenario::None;
    case TargetClass::TypeA: return Scenario::TargetA;
    case TargetClass::TypeB: return Scenario::TargetB;
  }
  return Scenario::None;
}

double Trajectory::attenuation_at(double t) const {
  const double ratio = reference_range_m / range_at(t);
  return ratio * ratio;
}

double mean_attenuation_power(const Trajectory& trajectory, double duration_s) {
  const double r0 = trajectory.initial_range_m;
  const double ref4 = std::pow(trajectory.reference_range_m, 4);
  if (r0 <= 0.0) throw std::invalid_argument("trajectory: initial range must be positive");
  const double travel = trajectory.speed_mps * duration_s;
  if (duration_s <= 0.0 || travel == 0.0) return ref4 / std::pow(r0, 4);
  const double r1 = r0 + travel;
  if (r1 <= 0.0) throw std::invalid_argument("trajectory: range crosses zero");
  // integral of R^-4 dR from r0 to r1, divided by the travelled distance
  return ref4 * (std::pow(r0, -3) - std::pow(r1, -3)) / (3.0 * travel);
}

double calibrate_reference_range(std::span<const double> initial_ranges_m, double speed_mps, double duration_s,
                                 double offset_db) {
  if (initial_ranges_m.empty()) throw std::invalid_argument("calibrate_reference_range: no ranges");
  double mean_unit = 0.0;
  for (double r0 : initial_ranges_m) {
    mean_unit += mean_attenuation_power(Trajectory{r0, speed_mps, 1.0}, duration_s);
  }
  mean_unit /= static_cast<double>(initial_ranges_m.size());
  return std::pow(std::pow(10.0, offset_db / 10.0) / mean_unit, 0.25);
}

double initial_range_for(const TargetProfile& target, const RadarConfig& radar) {
  const auto& p = radar.position_m;
  return target.initial_range_m + std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

double nominal_power(const TargetProfile& target, double micro_scale) {
  double power = target.base_rcs * target.base_rcs;
  for (double a : target.micro_amplitudes) power += 0.5 * (a * micro_scale) * (a * micro_scale);
  const double rough = target.roughness * target.base_rcs;
  return power + rough * rough;
}

RcsSeries simulate_rcs(const TargetProfile& target, const RadarConfig& radar, double duration_s, std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("simulate_rcs: duration must be positive");
  if (!(radar.pulse_interval_s > 0.0) || !(radar.carrier_hz > 0.0)) {
    throw std::invalid_argument("simulate_rcs: radar carrier and pulse interval must be positive");
  }
  if (target.micro_freqs_hz.size() != target.micro_amplitudes.size()) {
    throw std::invalid_argument("simulate_rcs: micro frequencies and amplitudes differ in length");
  }
  for (double f : target.micro_freqs_hz) {
    if (!(f >= 0.0) || f >= radar.nyquist_hz()) {
      throw std::invalid_argument("simulate_rcs: micro frequency " + std::to_string(f) + " Hz is not below Nyquist (" +
                                  std::to_string(radar.nyquist_hz()) + " Hz)");
    }
  }
  const double fs = radar.sample_rate_hz();
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  if (n < 1) throw std::invalid_argument("simulate_rcs: duration shorter than one pulse interval");

  RcsSeries series;
  series.samples.assign(n, 0.0);
  series.sample_rate_hz = fs;
  series.radar_id = radar.id;
  series.scenario = scenario_of(target.target_class);
  series.micro_scale = radar.micro_scale();
  if (series.scenario == Scenario::None) return series;

  Rng rng(seed);
  std::vector<double> phases(target.micro_freqs_hz.size());
  for (double& phi : phases) phi = 2.0 * std::numbers::pi * uniform01(rng);
  const double rough = target.roughness * target.base_rcs;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double g = target.base_rcs;
    for (std::size_t k = 0; k < phases.size(); ++k) {
      g += target.micro_amplitudes[k] * series.micro_scale *
           std::sin(2.0 * std::numbers::pi * target.micro_freqs_hz[k] * t + phases[k]);
    }
    series.samples[i] = g + rough * standard_normal(rng);
  }
  return series;
}

RcsSeries apply_channel(const RcsSeries& rcs, const TargetProfile& target, const Trajectory& trajectory, double tsnr_db,
                        std::uint64_t seed) {
  if (rcs.samples.empty()) throw std::invalid_argument("apply_channel: empty series");
  const double n = static_cast<double>(rcs.samples.size());
  const double signal_power =
      std::inner_product(rcs.samples.begin(), rcs.samples.end(), rcs.samples.begin(), 0.0) / n;
  const bool noise_only = rcs.scenario == Scenario::None;
  if (!noise_only && !(signal_power > 0.0)) {
    throw std::invalid_argument("apply_channel: target series carries no power to reference the TSNR to");
  }
  const double reference_power = noise_only ? nominal_power(target, rcs.micro_scale) : signal_power;
  const double variance = reference_power / std::pow(10.0, tsnr_db / 10.0);
  const double sigma = std::sqrt(variance);

  RcsSeries out = rcs;
  out.tsnr_db = tsnr_db;
  out.noise_variance = variance;
  Rng rng(seed);
  double mean_alpha_sq = 0.0;
  for (std::size_t i = 0; i < rcs.samples.size(); ++i) {
    const double alpha = trajectory.attenuation_at(static_cast<double>(i) / rcs.sample_rate_hz);
    mean_alpha_sq += alpha * alpha;
    out.samples[i] = alpha * rcs.samples[i] + sigma * standard_normal(rng);
  }
  mean_alpha_sq /= n;
  if (noise_only) {
    out.rsnr_db.reset();
  } else {
    out.rsnr_db = tsnr_db + 10.0 * std::log10(mean_alpha_sq);
  }
  return out;
}

std::size_t window_count(std::size_t length, int window, int stride) {
  if (window < 1 || stride < 1) throw std::invalid_argument("slide_window: window and stride must be positive");
  if (static_cast<std::size_t>(window) > length) return 0;
  return (length - static_cast<std::size_t>(window)) / static_cast<std::size_t>(stride) + 1;
}

std::vector<std::vector<double>> slide_window(std::span<const double> series, int window, int stride) {
  const std::size_t count = window_count(series.size(), window, stride);
  if (count == 0) {
    throw std::length_error("slide_window: window " + std::to_string(window) + " exceeds series length " +
                            std::to_string(series.size()));
  }
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto begin = series.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(stride));
    out.emplace_back(begin, begin + window);
  }
  return out;
}

std::vector<GraphSample> assemble_samples(const std::vector<std::vector<std::vector<double>>>& per_radar_windows,
                                          std::span<const int> labels, std::optional<int> required_radars) {
  const int radars = static_cast<int>(per_radar_windows.size());
  if (required_radars && radars != *required_radars) {
    throw ConfigError("radars", "expected " + std::to_string(*required_radars) + " radars, got " +
                                    std::to_string(radars));
  }
  if (radars == 0) throw std::invalid_argument("assemble_samples: no radars");
  const std::size_t times = per_radar_windows.front().size();
  for (const auto& w : per_radar_windows) {
    if (w.size() != times) throw std::invalid_argument("assemble_samples: radars contribute unequal window counts");
  }
  if (labels.size() != times) throw std::invalid_argument("assemble_samples: one label per time index required");
  const std::size_t len = times == 0 ? 0 : per_radar_windows.front().front().size();

  const Adjacency adjacency = Adjacency::fully_connected(radars);
  std::vector<GraphSample> samples;
  samples.reserve(times);
  for (std::size_t t = 0; t < times; ++t) {
    GraphSample s;
    s.node_features.resize(radars, static_cast<Eigen::Index>(len));
    for (int r = 0; r < radars; ++r) {
      const auto& w = per_radar_windows[static_cast<std::size_t>(r)][t];
      if (w.size() != len) throw std::invalid_argument("assemble_samples: window lengths differ");
      for (std::size_t c = 0; c < len; ++c) s.node_features(r, static_cast<Eigen::Index>(c)) = w[c];
    }
    s.label = labels[t];
    s.adjacency = adjacency;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<std::string> class_names(int class_count) {
  if (class_count == 3) return {"none", "target_a", "target_b"};
  if (class_count == 2) return {"target_a", "target_b"};
  throw ConfigError("dataset.class_count", "must be 2 or 3");
}

int label_of(Scenario scenario, int class_count) {
  if (class_count == 3) return static_cast<int>(scenario);
  if (class_count == 2 && scenario != Scenario::None) return static_cast<int>(scenario) - 1;
  throw ConfigError("dataset.class_count", "scenario has no label under this class count");
}

std::vector<GraphSample> generate_samples(const DatasetRecipe& recipe, std::span<const RadarConfig> radars,
                                          std::span<const TargetProfile> targets, double tsnr_db,
                                          std::uint64_t seed, std::optional<int> required_radars) {
  if (recipe.samples < 1) throw ConfigError("dataset.samples", "must be positive");
  if (radars.empty()) throw ConfigError("radars", "at least one radar required");
  const auto find = [&](TargetClass c) -> const TargetProfile& {
    for (const TargetProfile& t : targets)
      if (t.target_class == c) return t;
    throw ConfigError("targets", "missing a target profile for each of TypeA and TypeB");
  };
  const TargetProfile& target_a = find(TargetClass::TypeA);
  const TargetProfile& target_b = find(TargetClass::TypeB);

  const double fs = radars.front().sample_rate_hz();
  for (const RadarConfig& r : radars) {
    if (std::abs(r.sample_rate_hz() - fs) > 1e-9 * fs) {
      throw ConfigError("radars", "all radars must share one pulse interval so windows align in time");
    }
  }
  const std::size_t per_segment = window_count(static_cast<std::size_t>(recipe.segment_samples), recipe.window,
                                               recipe.stride);
  if (per_segment == 0) throw ConfigError("dataset.segment_samples", "shorter than one window");
  const double duration = static_cast<double>(recipe.segment_samples) / fs;

  // One reference range per experiment, calibrated over every (target, radar) pair.
  std::vector<double> ranges;
  for (const TargetProfile* t : {&target_a, &target_b})
    for (const RadarConfig& r : radars) ranges.push_back(initial_range_for(*t, r));
  const double speed = target_a.speed_mps;
  const double reference_range = calibrate_reference_range(ranges, speed, duration, recipe.rsnr_offset_db);

  std::vector<Scenario> scenarios;
  if (recipe.class_count == 3) scenarios.push_back(Scenario::None);
  else if (recipe.class_count != 2) throw ConfigError("dataset.class_count", "must be 2 or 3");
  scenarios.push_back(Scenario::TargetA);
  scenarios.push_back(Scenario::TargetB);

  const int classes = static_cast<int>(scenarios.size());
  std::vector<GraphSample> samples;
  samples.reserve(static_cast<std::size_t>(recipe.samples));
  std::uint64_t segment_index = 0;
  for (int c = 0; c < classes; ++c) {
    const Scenario scenario = scenarios[static_cast<std::size_t>(c)];
    const std::size_t wanted = static_cast<std::size_t>(recipe.samples / classes + (c < recipe.samples % classes ? 1 : 0));
    TargetProfile profile = scenario == Scenario::TargetB ? target_b : target_a;
    const TargetProfile reference = profile;
    if (scenario == Scenario::None) {
      profile.target_class = TargetClass::None;
    }
    const int label = label_of(scenario, recipe.class_count);
    std::size_t produced = 0;
    while (produced < wanted) {
      const std::uint64_t segment_seed = derive_seed(seed, "segment", segment_index++);
      std::vector<std::vector<std::vector<double>>> windows;
      for (const RadarConfig& radar : radars) {
        const std::uint64_t radar_index = static_cast<std::uint64_t>(radar.id);
        const RcsSeries clean = simulate_rcs(profile, radar, duration, derive_seed(segment_seed, "rcs", radar_index));
        const Trajectory trajectory{initial_range_for(reference, radar), reference.speed_mps, reference_range};
        const RcsSeries received =
            apply_channel(clean, reference, trajectory, tsnr_db, derive_seed(segment_seed, "noise", radar_index));
        windows.push_back(slide_window(received.samples, recipe.window, recipe.stride));
      }
      const std::size_t take = std::min(per_segment, wanted - produced);
      for (auto& w : windows) w.resize(take);
      const std::vector<int> labels(take, label);
      auto assembled = assemble_samples(windows, labels, required_radars);
      for (auto& s : assembled) samples.push_back(std::move(s));
      produced += take;
    }
  }
  return samples;
}

}  // namespace mfgat
