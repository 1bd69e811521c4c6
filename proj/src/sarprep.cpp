#include "tsrnn/sarprep.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"

namespace tsrnn {

namespace {

namespace fs = std::filesystem;

void validate_geometry(int width, int height, std::size_t dates, std::size_t channels,
                       std::size_t values) {
  if (width < 1 || height < 1) throw_invalid("stack: width and height must be >= 1");
  if (dates == 0) throw_invalid("stack: at least one date required");
  if (channels == 0) throw_invalid("stack: at least one channel required");
  const std::size_t want =
      dates * channels * std::size_t(width) * std::size_t(height);
  if (values != want) {
    std::ostringstream os;
    os << "stack: expected " << want << " values, got " << values;
    throw_invalid(os.str());
  }
}

// Integral image over one plane; NaN counts as missing (0 in the sum, 0 in
// the valid count). Row-major accumulation, deterministic.
struct PlaneSums {
  int width = 0, height = 0;
  std::vector<double> sum;    // (height+1) x (width+1)
  std::vector<double> count;

  void build(const double* plane, int w, int h) {
    width = w;
    height = h;
    sum.assign(std::size_t(h + 1) * std::size_t(w + 1), 0.0);
    count.assign(std::size_t(h + 1) * std::size_t(w + 1), 0.0);
    for (int r = 0; r < h; ++r) {
      double row_sum = 0.0, row_cnt = 0.0;
      for (int c = 0; c < w; ++c) {
        const double v = plane[std::size_t(r) * w + c];
        if (!std::isnan(v)) {
          row_sum += v;
          row_cnt += 1.0;
        }
        const std::size_t up = std::size_t(r) * (w + 1) + std::size_t(c + 1);
        const std::size_t here = std::size_t(r + 1) * (w + 1) + std::size_t(c + 1);
        sum[here] = sum[up] + row_sum;
        count[here] = count[up] + row_cnt;
      }
    }
  }

  // window-local mean around (r, c), window clipped at the edges; NaN when
  // the window holds no valid pixel
  double local_mean(int r, int c, int half) const {
    const int r0 = std::max(0, r - half), r1 = std::min(height - 1, r + half);
    const int c0 = std::max(0, c - half), c1 = std::min(width - 1, c + half);
    auto rect = [&](const std::vector<double>& m) {
      const std::size_t w1 = std::size_t(width + 1);
      return m[std::size_t(r1 + 1) * w1 + std::size_t(c1 + 1)] -
             m[std::size_t(r0) * w1 + std::size_t(c1 + 1)] -
             m[std::size_t(r1 + 1) * w1 + std::size_t(c0)] +
             m[std::size_t(r0) * w1 + std::size_t(c0)];
    };
    const double n = rect(count);
    if (n <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return rect(sum) / n;
  }
};

nlohmann::json read_sidecar(const std::string& json_path, const char* want_format) {
  std::ifstream in(json_path);
  if (!in) throw_io("cannot open " + json_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_io(json_path + ": " + e.what());
  }
  if (j.value("format", "") != want_format)
    throw_io(json_path + ": expected format " + want_format);
  return j;
}

std::string sibling_path(const std::string& json_path, const std::string& name) {
  return (fs::path(json_path).parent_path() / name).string();
}

std::vector<char> read_raw(const std::string& path, std::size_t want_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path);
  std::vector<char> buf(want_bytes);
  in.read(buf.data(), std::streamsize(want_bytes));
  if (std::size_t(in.gcount()) != want_bytes) throw_io(path + ": truncated raw data");
  char extra;
  if (in.read(&extra, 1)) throw_io(path + ": trailing bytes in raw data");
  return buf;
}

void write_raw(const std::string& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write " + path);
  out.write(static_cast<const char*>(data), std::streamsize(bytes));
  out.close();
  if (!out) throw_io("failed writing " + path);
}

void write_sidecar(const std::string& json_path, const nlohmann::ordered_json& j) {
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw_io("cannot write " + json_path);
  out << j.dump(2) << "\n";
  out.close();
  if (!out) throw_io("failed writing " + json_path);
}

// pooled percentile with linear interpolation between order statistics
double percentile(const std::vector<double>& sorted, double pct) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double rank = pct / 100.0 * double(n - 1);
  const std::size_t lo = std::size_t(std::min(double(n - 2), std::floor(rank)));
  const double frac = rank - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

FilterResult temporal_filter(const RasterStack& in, int window) {
  validate_geometry(in.width, in.height, in.dates.size(), in.channels.size(), in.values.size());
  const int M = int(in.dates.size());
  if (M < 2) throw_invalid("temporal_filter: at least 2 dates required");
  if (window < 3 || window % 2 == 0)
    throw_invalid("temporal_filter: window must be odd and >= 3");
  for (double v : in.values)
    if (!std::isnan(v) && v < 0.0) throw_invalid("temporal_filter: negative intensity");

  const int half = window / 2;
  FilterResult out;
  out.stack = in;
  out.passthrough.assign(in.channels.size(), 0);

  std::vector<PlaneSums> sums(static_cast<std::size_t>(M));
  for (std::size_t ch = 0; ch < in.channels.size(); ++ch) {
    for (int d = 0; d < M; ++d)
      sums[std::size_t(d)].build(in.values.data() + in.plane(d, int(ch)), in.width, in.height);

    for (int r = 0; r < in.height; ++r) {
      for (int c = 0; c < in.width; ++c) {
        bool missing = false;
        bool zero_mean = false;
        double ratio_sum = 0.0;
        for (int d = 0; d < M && !missing; ++d) {
          const double v = in.at(d, int(ch), r, c);
          if (std::isnan(v)) {
            missing = true;
            break;
          }
          const double mean = sums[std::size_t(d)].local_mean(r, c, half);
          if (std::isnan(mean) || mean == 0.0) {
            zero_mean = true;
            break;
          }
          ratio_sum += v / mean;
        }
        if (missing) {
          for (int d = 0; d < M; ++d)
            out.stack.at(d, int(ch), r, c) = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        if (zero_mean) {
          ++out.passthrough[ch];
          continue;  // values already copied
        }
        const double scaled = ratio_sum / double(M);
        for (int d = 0; d < M; ++d)
          out.stack.at(d, int(ch), r, c) =
              sums[std::size_t(d)].local_mean(r, c, half) * scaled;
      }
    }
  }
  return out;
}

RasterStack to_db(const RasterStack& linear, double floor_db) {
  validate_geometry(linear.width, linear.height, linear.dates.size(), linear.channels.size(),
                    linear.values.size());
  if (!std::isfinite(floor_db)) throw_invalid("to_db: floor_db must be finite");
  RasterStack out = linear;
  const double floor_linear = std::pow(10.0, floor_db / 10.0);
  for (double& v : out.values) {
    if (std::isnan(v)) continue;
    if (v < 0.0) throw_invalid("to_db: negative intensity");
    v = (v <= floor_linear) ? floor_db : 10.0 * std::log10(v);
  }
  return out;
}

double quantize_affine(double v, double lo, double hi) {
  const double x = (v - lo) / (hi - lo) * 255.0;
  const double r = std::floor(x + 0.5);  // round half-up
  return std::clamp(r, 0.0, 255.0);
}

QuantizeResult quantize(const RasterStack& db, double low_pct, double high_pct) {
  validate_geometry(db.width, db.height, db.dates.size(), db.channels.size(), db.values.size());
  if (!(low_pct >= 0.0 && low_pct < high_pct && high_pct <= 100.0))
    throw_invalid("quantize: need 0 <= low_pct < high_pct <= 100");

  QuantizeResult res;
  res.stack.width = db.width;
  res.stack.height = db.height;
  res.stack.dates = db.dates;
  res.stack.channels = db.channels;
  res.stack.values.assign(db.values.size(), 0);
  res.stack.valid.assign(db.pixels(), 1);
  res.p_low.assign(db.channels.size(), 0.0);
  res.p_high.assign(db.channels.size(), 0.0);
  res.degenerate.assign(db.channels.size(), false);

  const int M = int(db.dates.size());
  for (std::size_t ch = 0; ch < db.channels.size(); ++ch) {
    std::vector<double> pool;
    pool.reserve(std::size_t(M) * db.pixels());
    for (int d = 0; d < M; ++d) {
      const double* plane = db.values.data() + db.plane(d, int(ch));
      for (std::size_t i = 0; i < db.pixels(); ++i)
        if (!std::isnan(plane[i])) pool.push_back(plane[i]);
    }
    if (pool.empty()) {
      res.degenerate[ch] = true;
      continue;
    }
    std::sort(pool.begin(), pool.end());
    const double lo = percentile(pool, low_pct);
    const double hi = percentile(pool, high_pct);
    res.p_low[ch] = lo;
    res.p_high[ch] = hi;
    if (lo == hi) {
      res.degenerate[ch] = true;  // all pixels map to 0
      continue;
    }
    for (int d = 0; d < M; ++d) {
      const double* plane = db.values.data() + db.plane(d, int(ch));
      std::uint8_t* out =
          res.stack.values.data() + (std::size_t(d) * db.channels.size() + ch) * db.pixels();
      for (std::size_t i = 0; i < db.pixels(); ++i) {
        if (std::isnan(plane[i])) continue;  // stays 0, pixel marked below
        out[i] = std::uint8_t(quantize_affine(plane[i], lo, hi));
      }
    }
  }

  // a pixel is valid only if every (date, channel) observation is present
  for (std::size_t ch = 0; ch < db.channels.size(); ++ch)
    for (int d = 0; d < M; ++d) {
      const double* plane = db.values.data() + db.plane(d, int(ch));
      for (std::size_t i = 0; i < db.pixels(); ++i)
        if (std::isnan(plane[i])) res.stack.valid[i] = 0;
    }
  return res;
}

ExtractResult extract_samples(const QuantizedStack& q, const LabelMap& labels) {
  if (labels.width != q.width || labels.height != q.height)
    throw_invalid("extract_samples: label map geometry does not match the stack");
  if (labels.labels.size() != q.pixels())
    throw_invalid("extract_samples: label map size does not match its geometry");

  ExtractResult res;
  res.dataset.timesteps = int(q.dates.size());
  res.dataset.channels = int(q.channels.size());
  res.dataset.channel_names = q.channels;

  for (int r = 0; r < q.height; ++r)
    for (int c = 0; c < q.width; ++c) {
      const std::size_t pix = std::size_t(r) * q.width + std::size_t(c);
      const int label = labels.labels[pix];
      if (label == 0) continue;
      if (label > 5) {
        std::ostringstream os;
        os << "extract_samples: label " << label << " at pixel (" << r << "," << c
           << ") outside 1..5";
        throw_invalid(os.str());
      }
      if (!q.valid[pix]) {
        ++res.excluded_missing;
        continue;
      }
      TimeSeriesSample s;
      s.id = "r" + std::to_string(r) + "c" + std::to_string(c);
      s.label = label;
      s.features.reserve(q.dates.size() * q.channels.size());
      for (int d = 0; d < int(q.dates.size()); ++d)
        for (int ch = 0; ch < int(q.channels.size()); ++ch)
          s.features.push_back(double(q.at(d, ch, r, c)));
      res.dataset.samples.push_back(std::move(s));
    }
  return res;
}

RasterStack load_stack(const std::string& json_path) {
  nlohmann::json j = read_sidecar(json_path, "tsrnn-stack-v1");
  RasterStack s;
  try {
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const auto& d : j.at("dates")) s.dates.push_back(d.get<std::string>());
    for (const auto& c : j.at("channels")) s.channels.push_back(c.get<std::string>());
    if (j.at("dtype").get<std::string>() != "float32")
      throw_io(json_path + ": dtype must be float32");
    const std::string raw = sibling_path(json_path, j.at("data").get<std::string>());
    const std::size_t n =
        s.dates.size() * s.channels.size() * std::size_t(s.width) * std::size_t(s.height);
    std::vector<char> bytes = read_raw(raw, n * 4);
    s.values.resize(n);
    const float* f = reinterpret_cast<const float*>(bytes.data());
    for (std::size_t i = 0; i < n; ++i) s.values[i] = double(f[i]);
  } catch (const nlohmann::json::exception& e) {
    throw_io(json_path + ": " + e.what());
  }
  validate_geometry(s.width, s.height, s.dates.size(), s.channels.size(), s.values.size());
  for (std::size_t i = 1; i < s.dates.size(); ++i)
    if (!(s.dates[i - 1] < s.dates[i])) throw_invalid(json_path + ": dates must be ascending");
  for (double v : s.values)
    if (!std::isnan(v) && v < 0.0) throw_invalid(json_path + ": negative intensity");
  return s;
}

void save_stack(const RasterStack& s, const std::string& json_path) {
  validate_geometry(s.width, s.height, s.dates.size(), s.channels.size(), s.values.size());
  const std::string raw_name = fs::path(json_path).stem().string() + ".raw";
  nlohmann::ordered_json j;
  j["format"] = "tsrnn-stack-v1";
  j["width"] = s.width;
  j["height"] = s.height;
  j["dates"] = s.dates;
  j["channels"] = s.channels;
  j["dtype"] = "float32";
  j["data"] = raw_name;
  write_sidecar(json_path, j);
  std::vector<float> f(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) f[i] = float(s.values[i]);
  write_raw(sibling_path(json_path, raw_name), f.data(), f.size() * 4);
}

QuantizedStack load_quantized(const std::string& json_path) {
  nlohmann::json j = read_sidecar(json_path, "tsrnn-quantized-v1");
  QuantizedStack s;
  try {
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    for (const auto& d : j.at("dates")) s.dates.push_back(d.get<std::string>());
    for (const auto& c : j.at("channels")) s.channels.push_back(c.get<std::string>());
    if (j.at("dtype").get<std::string>() != "uint8")
      throw_io(json_path + ": dtype must be uint8");
    const std::size_t n =
        s.dates.size() * s.channels.size() * std::size_t(s.width) * std::size_t(s.height);
    std::vector<char> bytes = read_raw(sibling_path(json_path, j.at("data").get<std::string>()),
                                       n);
    s.values.assign(bytes.begin(), bytes.end());
    std::vector<char> vbytes = read_raw(
        sibling_path(json_path, j.at("valid_data").get<std::string>()), s.pixels());
    s.valid.assign(vbytes.begin(), vbytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw_io(json_path + ": " + e.what());
  }
  return s;
}

void save_quantized(const QuantizedStack& s, const std::string& json_path) {
  const std::string stem = fs::path(json_path).stem().string();
  nlohmann::ordered_json j;
  j["format"] = "tsrnn-quantized-v1";
  j["width"] = s.width;
  j["height"] = s.height;
  j["dates"] = s.dates;
  j["channels"] = s.channels;
  j["dtype"] = "uint8";
  j["data"] = stem + ".raw";
  j["valid_data"] = stem + ".valid.raw";
  write_sidecar(json_path, j);
  write_raw(sibling_path(json_path, stem + ".raw"), s.values.data(), s.values.size());
  write_raw(sibling_path(json_path, stem + ".valid.raw"), s.valid.data(), s.valid.size());
}

LabelMap load_labels(const std::string& json_path) {
  nlohmann::json j = read_sidecar(json_path, "tsrnn-labels-v1");
  LabelMap m;
  try {
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    if (j.at("dtype").get<std::string>() != "uint8")
      throw_io(json_path + ": dtype must be uint8");
    std::vector<char> bytes =
        read_raw(sibling_path(json_path, j.at("data").get<std::string>()),
                 std::size_t(m.width) * std::size_t(m.height));
    m.labels.assign(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw_io(json_path + ": " + e.what());
  }
  return m;
}

void save_labels(const LabelMap& m, const std::string& json_path) {
  nlohmann::ordered_json j;
  j["format"] = "tsrnn-labels-v1";
  j["width"] = m.width;
  j["height"] = m.height;
  j["dtype"] = "uint8";
  j["data"] = fs::path(json_path).stem().string() + ".raw";
  write_sidecar(json_path, j);
  write_raw(sibling_path(json_path, fs::path(json_path).stem().string() + ".raw"),
            m.labels.data(), m.labels.size());
}

}  // namespace tsrnn
