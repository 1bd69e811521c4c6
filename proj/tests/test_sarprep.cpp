#include "tsrnn/sarprep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "tsrnn/errors.hpp"
#include "tsrnn/rng.hpp"

using namespace tsrnn;

namespace {

RasterStack make_stack(int width, int height, int dates, int channels) {
  RasterStack s;
  s.width = width;
  s.height = height;
  for (int d = 0; d < dates; ++d) s.dates.push_back("2016-10-" + std::to_string(10 + d));
  for (int c = 0; c < channels; ++c) s.channels.push_back(c == 0 ? "vv" : "vh");
  s.values.assign(std::size_t(dates) * std::size_t(channels) * s.pixels(), 0.0);
  return s;
}

}  // namespace

TEST_CASE("temporal filter is exact on constant images") {
  // dyadic constants keep every windowed mean exact in floating point
  RasterStack s = make_stack(5, 4, 3, 2);
  const double level[3][2] = {{1.5, 0.5}, {2.0, 4.25}, {3.0, 0.25}};
  for (int d = 0; d < 3; ++d)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 5; ++col) s.at(d, c, r, col) = level[d][c];

  FilterResult out = temporal_filter(s, 3);
  for (int d = 0; d < 3; ++d)
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 5; ++col) CHECK(out.stack.at(d, c, r, col) == level[d][c]);
  CHECK(out.passthrough == std::vector<long long>{0, 0});
}

TEST_CASE("temporal filter whole-image-window hand case") {
  // I1 = (1,3), I2 = (2,2): both means are 2, so J1 = J2 = (1.5, 2.5)
  RasterStack s = make_stack(2, 1, 2, 1);
  s.at(0, 0, 0, 0) = 1.0;
  s.at(0, 0, 0, 1) = 3.0;
  s.at(1, 0, 0, 0) = 2.0;
  s.at(1, 0, 0, 1) = 2.0;
  FilterResult out = temporal_filter(s, 99);  // window covers the whole image
  CHECK(out.stack.at(0, 0, 0, 0) == 1.5);
  CHECK(out.stack.at(0, 0, 0, 1) == 2.5);
  CHECK(out.stack.at(1, 0, 0, 0) == 1.5);
  CHECK(out.stack.at(1, 0, 0, 1) == 2.5);
}

TEST_CASE("temporal filter rejects bad inputs") {
  RasterStack single = make_stack(2, 2, 1, 1);
  CHECK_THROWS_AS(temporal_filter(single, 3), Error);  // M = 1
  RasterStack s = make_stack(2, 2, 2, 1);
  CHECK_THROWS_AS(temporal_filter(s, 4), Error);  // even window
  CHECK_THROWS_AS(temporal_filter(s, 1), Error);  // too small
}

TEST_CASE("temporal filter passes zero-mean pixels through and flags them") {
  RasterStack s = make_stack(1, 1, 2, 1);  // single pixel, whole window is zero
  s.at(0, 0, 0, 0) = 0.0;
  s.at(1, 0, 0, 0) = 0.0;
  FilterResult out = temporal_filter(s, 3);
  CHECK(out.stack.at(0, 0, 0, 0) == 0.0);
  CHECK(out.passthrough == std::vector<long long>{1});
}

TEST_CASE("temporal filter preserves per-date means under a whole-image window") {
  Rng rng(77);
  RasterStack s = make_stack(6, 5, 4, 1);
  for (double& v : s.values) v = rng.uniform(0.05, 3.0);
  FilterResult out = temporal_filter(s, 101);
  for (int d = 0; d < 4; ++d) {
    double before = 0.0, after = 0.0;
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 6; ++c) {
        before += s.at(d, 0, r, c);
        after += out.stack.at(d, 0, r, c);
      }
    CHECK(after == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("temporal filter reduces temporal speckle variance") {
  // constant truth, multiplicative gamma noise (mean 1), 5 looks
  Rng rng(4242);
  const int W = 24, H = 24, M = 8;
  RasterStack s = make_stack(W, H, M, 1);
  auto gamma5 = [&rng]() {
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double u = 1.0 - rng.uniform01();
      sum += -std::log(u);
    }
    return sum / 5.0;
  };
  for (int d = 0; d < M; ++d)
    for (int r = 0; r < H; ++r)
      for (int c = 0; c < W; ++c) s.at(d, 0, r, c) = 0.8 * gamma5();

  FilterResult out = temporal_filter(s, 7);
  int reduced = 0, total = 0;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      double mean_b = 0.0, mean_a = 0.0;
      for (int d = 0; d < M; ++d) {
        mean_b += s.at(d, 0, r, c);
        mean_a += out.stack.at(d, 0, r, c);
      }
      mean_b /= M;
      mean_a /= M;
      double var_b = 0.0, var_a = 0.0;
      for (int d = 0; d < M; ++d) {
        var_b += (s.at(d, 0, r, c) - mean_b) * (s.at(d, 0, r, c) - mean_b);
        var_a += (out.stack.at(d, 0, r, c) - mean_a) * (out.stack.at(d, 0, r, c) - mean_a);
      }
      ++total;
      if (var_a <= var_b) ++reduced;
    }
  CHECK(double(reduced) / double(total) >= 0.95);
}

TEST_CASE("to_db hand cases") {
  RasterStack s = make_stack(3, 1, 2, 1);
  s.at(0, 0, 0, 0) = 1.0;
  s.at(0, 0, 0, 1) = 100.0;
  s.at(0, 0, 0, 2) = 0.0;
  s.at(1, 0, 0, 0) = 10.0;
  s.at(1, 0, 0, 1) = 0.5;
  s.at(1, 0, 0, 2) = 1e-9;
  RasterStack db = to_db(s, -30.0);
  CHECK(db.at(0, 0, 0, 0) == 0.0);
  CHECK(db.at(0, 0, 0, 1) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(db.at(0, 0, 0, 2) == -30.0);  // floored
  CHECK(db.at(1, 0, 0, 0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(db.at(1, 0, 0, 2) == -30.0);  // below the floor threshold
}

TEST_CASE("quantize endpoints, midpoint and clamping") {
  // values spanning [0,10] with a full-range stretch
  RasterStack s = make_stack(11, 1, 2, 1);
  for (int d = 0; d < 2; ++d)
    for (int c = 0; c < 11; ++c) s.at(d, 0, 0, c) = double(c);
  QuantizeResult q = quantize(s, 0.0, 100.0);
  CHECK(q.p_low[0] == 0.0);
  CHECK(q.p_high[0] == 10.0);
  CHECK(q.stack.at(0, 0, 0, 0) == 0);
  CHECK(q.stack.at(0, 0, 0, 10) == 255);
  // midpoint 5 -> 127.5 -> round half-up 128
  CHECK(q.stack.at(0, 0, 0, 5) == 128);
}

TEST_CASE("quantize clamps outside the percentile range and stays monotone") {
  Rng rng(99);
  RasterStack s = make_stack(40, 5, 3, 1);
  for (double& v : s.values) v = rng.uniform(-25.0, -5.0);
  QuantizeResult q = quantize(s, 2.0, 98.0);
  // monotone: sort value/quantized pairs by value
  std::vector<std::pair<double, int>> pairs;
  for (int d = 0; d < 3; ++d)
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 40; ++c) pairs.emplace_back(s.at(d, 0, r, c), q.stack.at(d, 0, r, c));
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].second <= pairs[i].second);
  // extremes clamp to the byte range
  CHECK(pairs.front().second == 0);
  CHECK(pairs.back().second == 255);
}

TEST_CASE("degenerate percentile range maps everything to zero") {
  RasterStack s = make_stack(3, 3, 2, 1);
  for (double& v : s.values) v = -12.0;
  QuantizeResult q = quantize(s, 2.0, 98.0);
  CHECK(q.degenerate[0]);
  for (std::uint8_t v : q.stack.values) CHECK(v == 0);
}

TEST_CASE("extract_samples shapes, labels and missing handling") {
  RasterStack s = make_stack(2, 2, 13, 2);
  Rng rng(5);
  for (double& v : s.values) v = rng.uniform(0.1, 2.0);
  s.at(3, 1, 1, 0) = std::nan("");  // pixel (1,0) missing one observation

  RasterStack db = to_db(s, -30.0);
  QuantizeResult q = quantize(db, 2.0, 98.0);

  LabelMap labels;
  labels.width = 2;
  labels.height = 2;
  labels.labels = {1, 0, 3, 5};  // (0,0)=1, (0,1)=nodata, (1,0)=3, (1,1)=5

  ExtractResult res = extract_samples(q.stack, labels);
  CHECK(res.dataset.timesteps == 13);
  CHECK(res.dataset.channels == 2);
  REQUIRE(res.dataset.size() == 2);  // the missing pixel is excluded
  CHECK(res.excluded_missing == 1);
  CHECK(res.dataset.samples[0].id == "r0c0");
  CHECK(res.dataset.samples[0].label == 1);
  CHECK(res.dataset.samples[0].features.size() == 26);
  CHECK(res.dataset.samples[1].id == "r1c1");
  CHECK(res.dataset.samples[1].label == 5);

  // feature order: timestep-major, channels within each timestep
  CHECK(res.dataset.samples[0].features[0] == double(q.stack.at(0, 0, 0, 0)));
  CHECK(res.dataset.samples[0].features[1] == double(q.stack.at(0, 1, 0, 0)));
  CHECK(res.dataset.samples[0].features[2] == double(q.stack.at(1, 0, 0, 0)));
}

TEST_CASE("extract_samples on an all-nodata map yields an empty dataset") {
  RasterStack s = make_stack(2, 2, 3, 1);
  for (double& v : s.values) v = 1.0;
  QuantizeResult q = quantize(to_db(s, -30.0), 0.0, 100.0);
  LabelMap labels{2, 2, {0, 0, 0, 0}};
  ExtractResult res = extract_samples(q.stack, labels);
  CHECK(res.dataset.size() == 0);
  CHECK(res.excluded_missing == 0);
}

TEST_CASE("stack files round trip through json + raw planes") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tsrnn_stack_rt";
  fs::remove_all(dir);
  fs::create_directories(dir);

  RasterStack s = make_stack(3, 2, 2, 2);
  Rng rng(8);
  for (double& v : s.values) v = std::floor(rng.uniform(0.0, 4.0) * 16.0) / 16.0;
  save_stack(s, (dir / "stack.json").string());
  RasterStack back = load_stack((dir / "stack.json").string());
  CHECK(back.width == 3);
  CHECK(back.dates == s.dates);
  CHECK(back.channels == s.channels);
  CHECK(back.values == s.values);  // dyadic values survive the float32 trip

  LabelMap m{3, 2, {0, 1, 2, 3, 4, 5}};
  save_labels(m, (dir / "labels.json").string());
  LabelMap mb = load_labels((dir / "labels.json").string());
  CHECK(mb.labels == m.labels);

  QuantizeResult q = quantize(to_db(s, -30.0), 0.0, 100.0);
  save_quantized(q.stack, (dir / "quant.json").string());
  QuantizedStack qb = load_quantized((dir / "quant.json").string());
  CHECK(qb.values == q.stack.values);
  CHECK(qb.valid == q.stack.valid);

  fs::remove_all(dir);
}

TEST_CASE("pipeline determinism: identical stacks give identical bytes") {
  Rng rng(123);
  RasterStack s = make_stack(8, 8, 4, 2);
  for (double& v : s.values) v = rng.uniform(0.01, 5.0);
  QuantizeResult a = quantize(to_db(temporal_filter(s, 5).stack, -30.0), 2.0, 98.0);
  QuantizeResult b = quantize(to_db(temporal_filter(s, 5).stack, -30.0), 2.0, 98.0);
  CHECK(a.stack.values == b.stack.values);
  CHECK(a.stack.valid == b.stack.valid);
}
