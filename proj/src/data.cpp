#include "tsrnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tsrnn/errors.hpp"
#include "tsrnn/rng.hpp"
#include "tsrnn/sarprep.hpp"

namespace tsrnn {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, int line_no, const std::string& col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
    std::ostringstream os;
    os << "line " << line_no << ": non-numeric cell '" << s << "' in column " << col;
    throw_io(os.str());
  }
  return v;
}

std::string feature_column(int t, const std::string& channel) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "t%02d_", t);
  return std::string(buf) + channel;
}

void format_value(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

Dataset load_csv(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open dataset csv: " + path);

  std::string line;
  if (!std::getline(in, line)) throw_io(path + ": missing header");
  std::vector<std::string> head = split_csv_line(line);
  if (head.size() < 2 || head[0] != "id" || head[1] != "label")
    throw_io(path + ": header must start with id,label");

  // feature columns: t<digits>_<channel>, timestep-major, channel-minor
  std::vector<std::pair<int, std::string>> cols;
  for (std::size_t i = 2; i < head.size(); ++i) {
    const std::string& h = head[i];
    if (h.size() < 4 || h[0] != 't') throw_io(path + ": bad feature column '" + h + "'");
    std::size_t us = h.find('_');
    if (us == std::string::npos || us < 2) throw_io(path + ": bad feature column '" + h + "'");
    int t = 0;
    auto res = std::from_chars(h.data() + 1, h.data() + us, t);
    if (res.ec != std::errc() || res.ptr != h.data() + us || t < 1)
      throw_io(path + ": bad feature column '" + h + "'");
    cols.emplace_back(t, h.substr(us + 1));
  }
  if (cols.empty()) throw_io(path + ": no feature columns");

  Dataset ds;
  for (const auto& [t, ch] : cols) {
    if (t != 1) break;
    ds.channel_names.push_back(ch);
  }
  ds.channels = int(ds.channel_names.size());
  if (ds.channels == 0 || cols.size() % ds.channel_names.size() != 0)
    throw_io(path + ": feature columns are not timestep-major");
  ds.timesteps = int(cols.size()) / ds.channels;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const int want_t = int(i) / ds.channels + 1;
    const std::string& want_ch = ds.channel_names[i % std::size_t(ds.channels)];
    if (cols[i].first != want_t || cols[i].second != want_ch)
      throw_io(path + ": feature column " + head[i + 2] + " out of order (expected " +
               feature_column(want_t, want_ch) + ")");
  }

  const std::size_t want_cells = 2 + cols.size();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != want_cells) {
      std::ostringstream os;
      os << "line " << line_no << ": expected " << want_cells << " cells, got " << cells.size();
      throw_io(os.str());
    }
    TimeSeriesSample s;
    s.id = cells[0];
    const double label = parse_number(cells[1], line_no, "label");
    s.label = int(label);
    if (double(s.label) != label || s.label < 1 || s.label > num_classes) {
      std::ostringstream os;
      os << "line " << line_no << ": label " << cells[1] << " outside class set 1.."
         << num_classes;
      throw_io(os.str());
    }
    s.features.reserve(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i)
      s.features.push_back(parse_number(cells[i + 2], line_no, head[i + 2]));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // keep \n endings everywhere
  if (!out) throw_io("cannot write dataset csv: " + path);
  std::string line = "id,label";
  for (int t = 1; t <= ds.timesteps; ++t)
    for (const std::string& ch : ds.channel_names) line += "," + feature_column(t, ch);
  line += "\n";
  out << line;
  for (const TimeSeriesSample& s : ds.samples) {
    line.clear();
    line += s.id;
    line += ',';
    line += std::to_string(s.label);
    for (double v : s.features) {
      line += ',';
      format_value(line, v);
    }
    line += '\n';
    out << line;
  }
  out.close();
  if (!out) throw_io("failed writing dataset csv: " + path);
}

ProfileSet default_profiles() {
  // Synthetic benchmark curves (dB). Structure, not survey values:
  //  - class 4 sits away from every other curve at every timestep;
  //  - class 2 oscillates across the class 1/5 ramps while classes 3 and 4
  //    dip through its band, so its curve crosses every other class yet its
  //    pooled value histogram blends into its neighbours'.
  ProfileSet ps;
  ps.timesteps = 13;
  ps.channels = {"vv", "vh"};
  ps.db_low = -28.0;
  ps.db_high = -4.0;

  auto ramp = [](double from, double to) {
    Vec v(13);
    for (int t = 0; t < 13; ++t) v[std::size_t(t)] = from + (to - from) * t / 12.0;
    return v;
  };
  auto triangle = [](double mid, double amp, int phase) {
    // period-4 pattern mid, mid+amp, mid, mid-amp
    static const double shape[4] = {0.0, 1.0, 0.0, -1.0};
    Vec v(13);
    for (int t = 0; t < 13; ++t) v[std::size_t(t)] = mid + amp * shape[(t + phase) % 4];
    return v;
  };
  auto flat_with_dips = [](double level, double dip, int t_a, int t_b) {
    Vec v(13, level);
    v[std::size_t(t_a)] = dip;
    v[std::size_t(t_b)] = dip;
    return v;
  };

  const double sigma = 1.4;
  ps.classes = {
      {1, "very_low", {ramp(-14.9, -16.5), ramp(-21.6, -23.4)}, sigma},
      {2, "low", {triangle(-15.7, 0.8, 0), triangle(-22.5, 0.8, 1)}, sigma},
      {3, "average", {flat_with_dips(-12.0, -17.5, 3, 9), flat_with_dips(-18.5, -24.0, 3, 9)},
       sigma},
      {4, "high", {flat_with_dips(-7.5, -21.0, 2, 8), flat_with_dips(-13.5, -26.5, 2, 8)},
       sigma},
      {5, "bare_soil", {ramp(-16.5, -14.9), ramp(-23.4, -21.6)}, sigma},
  };
  return ps;
}

int default_separated_class() { return 4; }
int default_crossing_class() { return 2; }

ProfileSet profiles_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw_io(std::string("profiles json: ") + e.what());
  }
  ProfileSet ps;
  try {
    ps.timesteps = j.at("timesteps").get<int>();
    for (const auto& c : j.at("channels")) ps.channels.push_back(c.get<std::string>());
    ps.db_low = j.at("db_low").get<double>();
    ps.db_high = j.at("db_high").get<double>();
    for (const auto& jc : j.at("classes")) {
      ClassProfile cp;
      cp.class_id = jc.at("id").get<int>();
      cp.name = jc.value("name", "class" + std::to_string(cp.class_id));
      cp.noise_sigma = jc.at("noise_sigma").get<double>();
      const auto& curves = jc.at("curves");
      for (const std::string& ch : ps.channels) {
        Vec curve;
        for (const auto& x : curves.at(ch)) curve.push_back(x.get<double>());
        cp.curves.push_back(std::move(curve));
      }
      ps.classes.push_back(std::move(cp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw_io(std::string("profiles json: ") + e.what());
  }

  if (ps.timesteps < 1) throw_invalid("profiles json: timesteps must be >= 1");
  if (ps.channels.empty()) throw_invalid("profiles json: channels must be non-empty");
  if (!(ps.db_low < ps.db_high)) throw_invalid("profiles json: db_low must be < db_high");
  std::set<int> seen;
  for (const ClassProfile& cp : ps.classes) {
    if (cp.class_id < 1) throw_invalid("profiles json: class ids must be >= 1");
    if (!seen.insert(cp.class_id).second)
      throw_invalid("profiles json: duplicate class id " + std::to_string(cp.class_id));
    if (cp.noise_sigma < 0.0) throw_invalid("profiles json: noise_sigma must be >= 0");
    for (std::size_t ch = 0; ch < cp.curves.size(); ++ch) {
      if (int(cp.curves[ch].size()) != ps.timesteps) {
        std::ostringstream os;
        os << "profiles json: class " << cp.class_id << " channel " << ps.channels[ch]
           << " curve has " << cp.curves[ch].size() << " points, expected " << ps.timesteps;
        throw_invalid(os.str());
      }
    }
  }
  return ps;
}

std::string profiles_to_json(const ProfileSet& ps) {
  nlohmann::ordered_json j;
  j["timesteps"] = ps.timesteps;
  j["channels"] = ps.channels;
  j["db_low"] = ps.db_low;
  j["db_high"] = ps.db_high;
  j["classes"] = nlohmann::ordered_json::array();
  for (const ClassProfile& cp : ps.classes) {
    nlohmann::ordered_json jc;
    jc["id"] = cp.class_id;
    jc["name"] = cp.name;
    jc["noise_sigma"] = cp.noise_sigma;
    for (std::size_t ch = 0; ch < ps.channels.size(); ++ch)
      jc["curves"][ps.channels[ch]] = cp.curves[ch];
    j["classes"].push_back(jc);
  }
  return j.dump(2) + "\n";
}

Dataset synth_generate(const ProfileSet& ps, const std::map<int, int>& counts,
                       std::uint64_t seed) {
  std::map<int, const ClassProfile*> by_id;
  for (const ClassProfile& cp : ps.classes) by_id[cp.class_id] = &cp;
  for (const auto& [cls, n] : counts) {
    if (!by_id.count(cls))
      throw_invalid("synth: counts refer to unknown class " + std::to_string(cls));
    if (n < 0) throw_invalid("synth: negative count for class " + std::to_string(cls));
  }

  Dataset ds;
  ds.timesteps = ps.timesteps;
  ds.channels = int(ps.channels.size());
  ds.channel_names = ps.channels;

  Rng rng(seed);
  long long next_id = 1;
  for (const auto& [cls, n] : counts) {  // std::map iterates ascending class id
    const ClassProfile& cp = *by_id.at(cls);
    for (int s = 0; s < n; ++s) {
      TimeSeriesSample sample;
      sample.id = "s" + std::to_string(next_id++);
      sample.label = cls;
      sample.features.reserve(std::size_t(ds.feature_dim()));
      for (int t = 0; t < ps.timesteps; ++t)
        for (int ch = 0; ch < ds.channels; ++ch) {
          const double db = cp.curves[std::size_t(ch)][std::size_t(t)] +
                            cp.noise_sigma * rng.normal();
          sample.features.push_back(quantize_affine(db, ps.db_low, ps.db_high));
        }
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

std::map<int, int> summarize(const Dataset& ds) {
  std::map<int, int> counts;
  for (const TimeSeriesSample& s : ds.samples) ++counts[s.label];
  return counts;
}

std::vector<std::vector<double>> class_overlap_matrix(const Dataset& ds, int num_classes) {
  const int C = ds.channels;
  // pooled per-channel value histograms, 256 bins
  std::vector<std::vector<std::vector<double>>> hist(
      std::size_t(num_classes),
      std::vector<std::vector<double>>(std::size_t(C), std::vector<double>(256, 0.0)));
  std::vector<std::vector<double>> totals(std::size_t(num_classes),
                                          std::vector<double>(std::size_t(C), 0.0));
  for (const TimeSeriesSample& s : ds.samples) {
    if (s.label < 1 || s.label > num_classes) continue;
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      const int ch = int(i % std::size_t(C));
      int bin = int(std::lround(s.features[i]));
      bin = std::clamp(bin, 0, 255);
      hist[std::size_t(s.label - 1)][std::size_t(ch)][std::size_t(bin)] += 1.0;
      totals[std::size_t(s.label - 1)][std::size_t(ch)] += 1.0;
    }
  }
  std::vector<std::vector<double>> overlap(std::size_t(num_classes),
                                           std::vector<double>(std::size_t(num_classes), 0.0));
  for (int a = 0; a < num_classes; ++a)
    for (int b = 0; b < num_classes; ++b) {
      if (a == b) {
        overlap[std::size_t(a)][std::size_t(b)] = 1.0;
        continue;
      }
      double min_over_channels = 1.0;
      for (int ch = 0; ch < C; ++ch) {
        if (totals[std::size_t(a)][std::size_t(ch)] == 0.0 ||
            totals[std::size_t(b)][std::size_t(ch)] == 0.0) {
          min_over_channels = 0.0;
          break;
        }
        double inter = 0.0;
        for (int v = 0; v < 256; ++v)
          inter += std::min(
              hist[std::size_t(a)][std::size_t(ch)][std::size_t(v)] /
                  totals[std::size_t(a)][std::size_t(ch)],
              hist[std::size_t(b)][std::size_t(ch)][std::size_t(v)] /
                  totals[std::size_t(b)][std::size_t(ch)]);
        min_over_channels = std::min(min_over_channels, inter);
      }
      overlap[std::size_t(a)][std::size_t(b)] = min_over_channels;
    }
  return overlap;
}

namespace {
const ClassProfile& find_class(const ProfileSet& ps, int class_id) {
  for (const ClassProfile& cp : ps.classes)
    if (cp.class_id == class_id) return cp;
  throw_invalid("unknown class id " + std::to_string(class_id));
}
}  // namespace

int curve_crossings(const ProfileSet& ps, int class_a, int class_b) {
  const ClassProfile& a = find_class(ps, class_a);
  const ClassProfile& b = find_class(ps, class_b);
  int best = 0;
  for (std::size_t ch = 0; ch < ps.channels.size(); ++ch) {
    int crossings = 0;
    int prev_sign = 0;
    for (int t = 0; t < ps.timesteps; ++t) {
      const double d = a.curves[ch][std::size_t(t)] - b.curves[ch][std::size_t(t)];
      const int sign = (d > 0.0) - (d < 0.0);
      if (sign == 0)
        ++crossings;  // exact touch
      else {
        if (prev_sign != 0 && sign != prev_sign) ++crossings;
        prev_sign = sign;
      }
    }
    best = std::max(best, crossings);
  }
  return best;
}

double min_separation_sigmas(const ProfileSet& ps, int class_id) {
  const ClassProfile& a = find_class(ps, class_id);
  double worst = std::numeric_limits<double>::infinity();
  for (const ClassProfile& other : ps.classes) {
    if (other.class_id == class_id) continue;
    const double sigma = std::max(a.noise_sigma, other.noise_sigma);
    for (int t = 0; t < ps.timesteps; ++t) {
      double gap = 0.0;  // best channel at this timestep
      for (std::size_t ch = 0; ch < ps.channels.size(); ++ch)
        gap = std::max(gap,
                       std::abs(a.curves[ch][std::size_t(t)] - other.curves[ch][std::size_t(t)]));
      worst = std::min(worst, sigma > 0.0 ? gap / sigma
                                          : std::numeric_limits<double>::infinity());
    }
  }
  return worst;
}

}  // namespace tsrnn
