#pragma once

#include "mfgat/graph.hpp"
#include "mfgat/nn/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfgat {

using nn::Matrix;

// Carrier of the type-2 radars; micro-motion amplitudes seen by a radar are
// scaled by carrier_hz / kReferenceCarrierHz (type-1: 3.25/2.52).
inline constexpr double kReferenceCarrierHz = 2.52e9;

enum class RadarType { Type1, Type2 };

struct RadarConfig {
  int id = 0;
  RadarType radar_type = RadarType::Type1;
  double carrier_hz = 3.25e9;
  double bandwidth_hz = 10e6;
  double pulse_interval_s = 0.05;
  std::array<double, 3> position_m{0.0, 0.0, 0.0};

  double sample_rate_hz() const { return 1.0 / pulse_interval_s; }
  double nyquist_hz() const { return 0.5 * sample_rate_hz(); }
  double micro_scale() const { return carrier_hz / kReferenceCarrierHz; }
};

enum class TargetClass { None, TypeA, TypeB };

struct TargetProfile {
  int id = 0;
  TargetClass target_class = TargetClass::TypeA;
  std::vector<double> micro_freqs_hz;
  std::vector<double> micro_amplitudes;
  double base_rcs = 1.0;
  double speed_mps = 5000.0;
  double initial_range_m = 500e3;
  double roughness = 0.05;  // std of the white roughness term, relative to base_rcs
};

enum class Scenario { None, TargetA, TargetB };

Scenario scenario_of(TargetClass c);

struct RcsSeries {
  std::vector<double> samples;
  double sample_rate_hz = 20.0;
  int radar_id = 0;
  Scenario scenario = Scenario::None;
  double micro_scale = 1.0;  // amplitude factor applied for this radar's carrier
  double tsnr_db = 0.0;
  std::optional<double> rsnr_db;  // undefined for noise-only series
  double noise_variance = 0.0;
};

/// Radial constant-speed track seen by one radar. The attenuation factor is
/// alpha(t) = (reference_range / R(t))^2 with R(t) = initial_range + speed * t.
struct Trajectory {
  double initial_range_m = 500e3;
  double speed_mps = 0.0;
  double reference_range_m = 500e3;

  double range_at(double t) const { return initial_range_m + speed_mps * t; }
  double attenuation_at(double t) const;
};

// Time average of alpha(t)^2 over [0, duration], closed form:
// ref^4 (R0^-3 - R1^-3) / (3 v D), or (ref/R0)^4 for a stationary target.
double mean_attenuation_power(const Trajectory& trajectory, double duration_s);

/// Reference range that makes the radar-averaged mean of alpha^2 equal
/// 10^(offset_db / 10) for targets starting at `initial_ranges_m`.
double calibrate_reference_range(std::span<const double> initial_ranges_m, double speed_mps, double duration_s,
                                 double offset_db);

// Range at t = 0 of `target` as seen from `radar`: the target's initial range
// plus the radar's distance from the network origin.
double initial_range_for(const TargetProfile& target, const RadarConfig& radar);

// E{|g|^2} of the noiseless model at `micro_scale`.
double nominal_power(const TargetProfile& target, double micro_scale);

/// Noiseless scattering series at the radar's pulse rate:
/// g(t) = base + sum_k A_k s sin(2 pi f_k t + phi_k) + roughness * base * eps(t)
/// with s = radar.micro_scale(). A TargetClass::None profile yields zeros.
RcsSeries simulate_rcs(const TargetProfile& target, const RadarConfig& radar, double duration_s, std::uint64_t seed);

/// x(t) = alpha(t) g(t) + n(t). Noise variance is E{|g|^2} / 10^(tsnr/10) with
/// E{|g|^2} measured on the series; for a noise-only series the nominal power
/// of `target` at the series' micro scale is used instead and rsnr_db stays empty.
RcsSeries apply_channel(const RcsSeries& rcs, const TargetProfile& target, const Trajectory& trajectory, double tsnr_db,
                        std::uint64_t seed);

// Contiguous windows starting at 0, stride, 2*stride, ...
std::vector<std::vector<double>> slide_window(std::span<const double> series, int window, int stride);
std::size_t window_count(std::size_t length, int window, int stride);

struct GraphSample {
  Matrix node_features;  // [radars x window]
  int label = 0;
  Adjacency adjacency;
};

/// One GraphSample per time index from per_radar_windows[radar][time].
/// When `required_radars` is set, any other radar count is a ConfigError.
std::vector<GraphSample> assemble_samples(const std::vector<std::vector<std::vector<double>>>& per_radar_windows,
                                          std::span<const int> labels, std::optional<int> required_radars = 9);

struct SplitRatios {
  int train = 7;
  int val = 2;
  int test = 1;
};

struct DatasetSplit {
  std::vector<GraphSample> train, val, test;
  Matrix norm_mean;  // [radars x window], fitted on train
  Matrix norm_std;   // floored at kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

/// Seeded shuffle, split by ratio, then per-position z-score with statistics
/// fitted on the training part only.
DatasetSplit split_and_normalize(std::vector<GraphSample> samples, SplitRatios ratios, std::uint64_t seed);

struct DatasetRecipe {
  int samples = 600;
  int window = 200;
  int stride = 50;
  int segment_samples = 1000;  // length of one simulated target pass
  int class_count = 3;         // 3: none/A/B, 2: A/B only
  double rsnr_offset_db = -7.5;
};

std::vector<std::string> class_names(int class_count);
int label_of(Scenario scenario, int class_count);

/// Balanced synthesis of `recipe.samples` graph samples at `tsnr_db`. Each
/// segment (one scenario, one pass) draws its randomness from its own child
/// seed of `seed`, so output is identical whatever order segments are built in.
std::vector<GraphSample> generate_samples(const DatasetRecipe& recipe, std::span<const RadarConfig> radars,
                                          std::span<const TargetProfile> targets, double tsnr_db,
                                          std::uint64_t seed, std::optional<int> required_radars = std::nullopt);

}  // namespace mfgat
