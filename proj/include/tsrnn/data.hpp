#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsrnn/ndcore.hpp"

namespace tsrnn {

// One pixel's series: timesteps * channels 8-bit-derived values in [0,255],
// flattened timestep-major (t01_vv, t01_vh, t02_vv, ...). Labels are 1-based
// class ids.
struct TimeSeriesSample {
  std::string id;
  int label = 0;
  Vec features;
};

struct Dataset {
  int timesteps = 0;
  int channels = 0;
  std::vector<std::string> channel_names;  // lowercase, as used in the CSV header
  std::vector<TimeSeriesSample> samples;

  int feature_dim() const { return timesteps * channels; }
  std::size_t size() const { return samples.size(); }
};

// CSV format: header `id,label,t01_vv,t01_vh,...`; timestep and channel
// structure is read back from the header. Malformed rows are rejected with
// their line number.
Dataset load_csv(const std::string& path, int num_classes = 5);
void save_csv(const Dataset& ds, const std::string& path);

// Per-class mean curve (dB) per channel plus the dB-domain noise level.
struct ClassProfile {
  int class_id = 0;
  std::string name;
  std::vector<Vec> curves;  // [channel][timestep], dB
  double noise_sigma = 0.0;
};

struct ProfileSet {
  int timesteps = 0;
  std::vector<std::string> channels;
  double db_low = 0.0;   // dB value mapped to 0
  double db_high = 0.0;  // dB value mapped to 255
  std::vector<ClassProfile> classes;
};

// Built-in 5-class benchmark: one class separated from all others at every
// timestep, one class whose curve crosses every other curve while its pooled
// value distribution blends into its neighbours'.
ProfileSet default_profiles();
int default_separated_class();
int default_crossing_class();

ProfileSet profiles_from_json(const std::string& text);
std::string profiles_to_json(const ProfileSet& ps);

// curve + i.i.d. Gaussian dB noise per timestep/channel, then the affine
// 0-255 quantization shared with the preprocessing chain
Dataset synth_generate(const ProfileSet& ps, const std::map<int, int>& counts,
                       std::uint64_t seed);

std::map<int, int> summarize(const Dataset& ds);

// Brute-force analysis oracles used by tests and the synth summary.
// Pooled-value histogram intersection per class pair (min over channels).
std::vector<std::vector<double>> class_overlap_matrix(const Dataset& ds, int num_classes);
// Sign changes of curve_a - curve_b over the timesteps (max over channels).
int curve_crossings(const ProfileSet& ps, int class_a, int class_b);
// Minimum over timesteps/other classes of the curve gap (max over channels),
// in units of the larger noise sigma.
double min_separation_sigmas(const ProfileSet& ps, int class_id);

}  // namespace tsrnn
