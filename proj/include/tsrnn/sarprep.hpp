#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsrnn/data.hpp"

namespace tsrnn {

// Co-registered intensity stack, plane order (date, channel, row, col).
// Linear power on ingest (values >= 0, NaN marks a missing observation);
// the same container carries dB values after conversion.
struct RasterStack {
  int width = 0;
  int height = 0;
  std::vector<std::string> dates;     // ISO-8601, ascending
  std::vector<std::string> channels;  // e.g. "vv", "vh"
  std::vector<double> values;

  std::size_t pixels() const { return std::size_t(width) * std::size_t(height); }
  std::size_t plane(int date, int channel) const {
    return (std::size_t(date) * channels.size() + std::size_t(channel)) * pixels();
  }
  double at(int date, int channel, int row, int col) const {
    return values[plane(date, channel) + std::size_t(row) * width + std::size_t(col)];
  }
  double& at(int date, int channel, int row, int col) {
    return values[plane(date, channel) + std::size_t(row) * width + std::size_t(col)];
  }
};

struct QuantizedStack {
  int width = 0;
  int height = 0;
  std::vector<std::string> dates;
  std::vector<std::string> channels;
  std::vector<std::uint8_t> values;  // (date, channel, row, col)
  std::vector<std::uint8_t> valid;   // per pixel; 0 if any observation was missing

  std::size_t pixels() const { return std::size_t(width) * std::size_t(height); }
  std::uint8_t at(int date, int channel, int row, int col) const {
    return values[(std::size_t(date) * channels.size() + std::size_t(channel)) * pixels() +
                  std::size_t(row) * width + std::size_t(col)];
  }
};

// Per-pixel class labels; 0 = nodata, 1..k = classes.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;
};

struct FilterResult {
  RasterStack stack;
  std::vector<long long> passthrough;  // per channel: pixels left unfiltered
};

// Multitemporal filter: J_k(x) = (mean_k(x)/M) * sum_i I_i(x)/mean_i(x),
// where mean_i is the window-local spatial mean of date i (window clipped at
// the edges). Pixels where any local mean is zero pass through unchanged.
FilterResult temporal_filter(const RasterStack& in, int window);

// 10*log10(I), floored so zero intensity cannot produce -inf.
RasterStack to_db(const RasterStack& linear, double floor_db = -30.0);

struct QuantizeResult {
  QuantizedStack stack;
  std::vector<double> p_low, p_high;  // per channel, pooled over all dates
  std::vector<bool> degenerate;       // p_low == p_high
};

// Per-channel percentile stretch of the pooled dB stack onto [0,255] with
// clamping and round-half-up.
QuantizeResult quantize(const RasterStack& db, double low_pct = 2.0, double high_pct = 98.0);

// shared affine map: [lo, hi] -> [0, 255], clamp outside, round half-up
double quantize_affine(double v, double lo, double hi);

struct ExtractResult {
  Dataset dataset;
  long long excluded_missing = 0;
};

// One sample per labeled pixel, features timestep-major with channels in
// stack order; pixels with any missing observation are excluded and counted.
ExtractResult extract_samples(const QuantizedStack& q, const LabelMap& labels);

// Stack files: <name>.json sidecar + raw little-endian planes in a .raw file
// next to it ("data" field). dtype float32 for intensity stacks, uint8 for
// quantized stacks and label maps.
RasterStack load_stack(const std::string& json_path);
void save_stack(const RasterStack& s, const std::string& json_path);
QuantizedStack load_quantized(const std::string& json_path);
void save_quantized(const QuantizedStack& s, const std::string& json_path);
LabelMap load_labels(const std::string& json_path);
void save_labels(const LabelMap& m, const std::string& json_path);

}  // namespace tsrnn
