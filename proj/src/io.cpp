#include "flowlab/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "flowlab/error.hpp"
#include "json.hpp"

namespace flowlab {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

namespace {

std::string coordinate_header(std::size_t dim) {
  std::string h;
  for (std::size_t j = 0; j < dim; ++j) h += ",x" + std::to_string(j);
  return h;
}

void append_coords(std::string& line, std::span<const double> x) {
  for (double v : x) {
    line += ',';
    line += format_double(v);
  }
}

std::size_t common_dim(std::span<const Vector> rows, std::size_t fallback) {
  if (rows.empty()) return fallback;
  std::size_t d = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != d) throw DomainError("rows have inconsistent dimension");
  }
  return d;
}

}  // namespace

void write_samples_csv(const std::filesystem::path& file, std::span<const Vector> samples,
                       std::optional<int> label, std::optional<double> w) {
  std::size_t d = common_dim(samples, 2);
  std::string out = "sample_id" + coordinate_header(d);
  if (label) out += ",label";
  if (w) out += ",w";
  out += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(i);
    append_coords(out, samples[i]);
    if (label) out += ',' + std::to_string(*label);
    if (w) out += ',' + format_double(*w);
    out += '\n';
  }
  write_text_file(file, out);
}

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj) {
  std::size_t d = common_dim(traj.states, 1);
  std::string out = "step,t" + coordinate_header(d) + '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out += std::to_string(k) + ',' + format_double(traj.times[k]);
    append_coords(out, traj.states[k]);
    out += '\n';
  }
  write_text_file(file, out);
}

void write_loss_history_csv(const std::filesystem::path& file, std::span<const LossRecord> history) {
  std::string out = "step,loss\n";
  for (const auto& r : history) out += std::to_string(r.step) + ',' + format_double(r.loss) + '\n';
  write_text_file(file, out);
}

void write_dataset_csv(const std::filesystem::path& file, const Dataset& data) {
  std::string out = "point_id" + coordinate_header(data.dim);
  if (data.labeled()) out += ",label";
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(i);
    append_coords(out, data.points[i]);
    if (data.labeled()) out += ',' + std::to_string(data.labels[i]);
    out += '\n';
  }
  write_text_file(file, out);
}

void write_histogram_csv(const std::filesystem::path& file, const Histogram2D& hist) {
  const auto& b = hist.bounds;
  double dx = (b.x_max - b.x_min) / static_cast<double>(hist.nx);
  double dy = (b.y_max - b.y_min) / static_cast<double>(hist.ny);
  std::string out = "ix,iy,x_lo,x_hi,y_lo,y_hi,count\n";
  for (std::size_t iy = 0; iy < hist.ny; ++iy) {
    for (std::size_t ix = 0; ix < hist.nx; ++ix) {
      double x_lo = b.x_min + static_cast<double>(ix) * dx;
      double x_hi = ix + 1 == hist.nx ? b.x_max : b.x_min + static_cast<double>(ix + 1) * dx;
      double y_lo = b.y_min + static_cast<double>(iy) * dy;
      double y_hi = iy + 1 == hist.ny ? b.y_max : b.y_min + static_cast<double>(iy + 1) * dy;
      out += std::to_string(ix) + ',' + std::to_string(iy) + ',' + format_double(x_lo) + ',' +
             format_double(x_hi) + ',' + format_double(y_lo) + ',' + format_double(y_hi) + ',' +
             std::to_string(hist.at(ix, iy)) + '\n';
    }
  }
  write_text_file(file, out);
}

void write_residual_report_csv(const std::filesystem::path& file, const ResidualReport& report) {
  std::size_t d = report.grid.empty() ? 1 : report.grid.front().x.size();
  std::string out = "probe,t" + coordinate_header(d) + ",residual\n";
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(report.grid[i].t);
    append_coords(out, report.grid[i].x);
    out += ',' + format_double(report.residuals[i]) + '\n';
  }
  write_text_file(file, out);
}

namespace {

struct Rgb {
  unsigned char r, g, b;
};

constexpr std::array<Rgb, 8> kPalette = {{{31, 119, 180},
                                          {255, 127, 14},
                                          {44, 160, 44},
                                          {214, 39, 40},
                                          {148, 103, 189},
                                          {140, 86, 75},
                                          {227, 119, 194},
                                          {127, 127, 127}}};

class Raster {
 public:
  Raster() : pixels_(static_cast<std::size_t>(kImageSize) * kImageSize * 3, 255) {}

  void set(int col, int row, Rgb c) {
    if (col < 0 || row < 0 || col >= kImageSize || row >= kImageSize) return;
    std::size_t i = (static_cast<std::size_t>(row) * kImageSize + static_cast<std::size_t>(col)) * 3;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  void save(const std::filesystem::path& file) const {
    std::string header = "P6\n" + std::to_string(kImageSize) + ' ' + std::to_string(kImageSize) +
                         "\n255\n";
    std::string out = header;
    out.append(reinterpret_cast<const char*>(pixels_.data()), pixels_.size());
    write_text_file(file, out);
  }

 private:
  std::vector<unsigned char> pixels_;
};

// Pixel containing a coordinate; rows count downward from y_max.
int to_col(double x, const HistogramBounds& b) {
  double u = (x - b.x_min) / (b.x_max - b.x_min);
  return static_cast<int>(std::floor(u * kImageSize));
}
int to_row(double y, const HistogramBounds& b) {
  double v = (b.y_max - y) / (b.y_max - b.y_min);
  return static_cast<int>(std::floor(v * kImageSize));
}

void check_bounds(const HistogramBounds& b) {
  if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min)) throw DomainError("empty image bounds");
}

}  // namespace

void write_scatter_ppm(const std::filesystem::path& file, std::span<const Vector> samples,
                       const HistogramBounds& bounds, std::span<const int> labels) {
  check_bounds(bounds);
  if (!labels.empty() && labels.size() != samples.size()) {
    throw DomainError("labels and samples differ in length");
  }
  Raster img;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() < 2) throw DomainError("scatter images need 2D samples");
    double x = samples[i][0], y = samples[i][1];
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (x < bounds.x_min || x > bounds.x_max || y < bounds.y_min || y > bounds.y_max) continue;
    int c = std::min(to_col(x, bounds), kImageSize - 1);
    int r = std::min(to_row(y, bounds), kImageSize - 1);
    Rgb color{0, 0, 0};
    if (!labels.empty() && labels[i] >= 0) {
      color = kPalette[static_cast<std::size_t>(labels[i]) % kPalette.size()];
    }
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) img.set(c + dc, r + dr, color);
    }
  }
  img.save(file);
}

void write_heatmap_ppm(const std::filesystem::path& file, const Histogram2D& hist) {
  check_bounds(hist.bounds);
  std::size_t peak = 0;
  for (std::size_t c : hist.counts) peak = std::max(peak, c);
  Raster img;
  if (peak > 0) {
    for (int row = 0; row < kImageSize; ++row) {
      std::size_t iy = hist.ny - 1 -
                       static_cast<std::size_t>(row) * hist.ny / static_cast<std::size_t>(kImageSize);
      for (int col = 0; col < kImageSize; ++col) {
        std::size_t ix = static_cast<std::size_t>(col) * hist.nx / static_cast<std::size_t>(kImageSize);
        std::size_t count = hist.at(ix, iy);
        if (count == 0) continue;
        double level = static_cast<double>(count) / static_cast<double>(peak);
        auto v = static_cast<unsigned char>(std::lround(255.0 * (1.0 - level)));
        img.set(col, row, {v, v, v});
      }
    }
  }
  img.save(file);
}

// ---- checkpoint -------------------------------------------------------------

namespace {

void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  out += ']';
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ck) {
  const MlpSpec& spec = ck.params.spec;
  auto layout = parameter_layout(spec);
  if (ck.params.values.size() != spec.parameter_count()) {
    throw DomainError("parameter vector does not match the network spec");
  }
  std::string out = "{\n";
  out += "  \"format_version\": " + std::to_string(ck.format_version) + ",\n";
  out += "  \"spec\": {\"dim\": " + std::to_string(spec.dim) + ", \"hidden\": [";
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    if (l) out += ", ";
    out += std::to_string(spec.hidden[l]);
  }
  out += "], \"n_time_features\": " + std::to_string(spec.n_time_features) +
         ", \"n_classes\": " + std::to_string(spec.n_classes) +
         ", \"embed_dim\": " + std::to_string(spec.embed_dim) +
         ", \"activation\": " + json_string(to_string(spec.activation)) + "},\n";
  out += "  \"schedule\": " + json_string(to_string(ck.schedule)) + ",\n";
  out += "  \"loss\": " + json_string(to_string(ck.loss_kind)) + ",\n";
  out += "  \"label_drop_eta\": " + format_double(ck.label_drop_eta) + ",\n";
  out += "  \"t_clamp\": {\"eps_low\": " + format_double(ck.t_clamp.eps_low) +
         ", \"eps_high\": " + format_double(ck.t_clamp.eps_high) + "},\n";
  out += "  \"training\": {\"seed\": " + std::to_string(ck.seed) +
         ", \"steps\": " + std::to_string(ck.steps) + "},\n";
  out += "  \"parameters\": {";
  for (std::size_t s = 0; s < layout.size(); ++s) {
    const auto& slot = layout[s];
    out += s ? ",\n    " : "\n    ";
    out += json_string(slot.name) + ": {\"shape\": [" + std::to_string(slot.rows) + ", " +
           std::to_string(slot.cols) + "], \"values\": ";
    append_array(out, std::span<const double>(ck.params.values).subspan(slot.offset, slot.size()));
    out += '}';
  }
  out += "\n  }\n}\n";
  return out;
}

namespace {

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return node_.contains(std::string(key)); }

  const json& at(std::string_view key) const {
    auto it = node_.find(std::string(key));
    if (it == node_.end()) throw ConfigError(field(key), "missing");
    return *it;
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
        throw ConfigError(field(it.key()), "unknown key");
      }
    }
  }

  double number(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }

  template <class Int>
  Int integer(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
      if (v.get<std::int64_t>() < 0) throw ConfigError(field(key), "must be non-negative");
      return static_cast<Int>(v.get<std::int64_t>());
    } else {
      return static_cast<Int>(v.get<std::int64_t>());
    }
  }

  std::string string(std::string_view key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  template <class T>
  void read(std::string_view key, T& target) const {
    if (!has(key)) return;
    if constexpr (std::is_floating_point_v<T>) {
      target = number(key);
    } else if constexpr (std::is_integral_v<T>) {
      target = integer<T>(key);
    } else if constexpr (std::is_same_v<T, std::string>) {
      target = string(key);
    }
  }

  template <class Parse, class T>
  void read_enum(std::string_view key, T& target, Parse parse) const {
    if (!has(key)) return;
    std::string s = string(key);
    try {
      target = parse(s);
    } catch (const std::exception&) {
      throw ConfigError(field(key), "unrecognized value '" + s + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
};

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(what, std::string("malformed JSON: ") + e.what());
  }
}

template <class Fn>
void validated(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

MlpSpec read_spec(const Section& s) {
  s.allow_only({"dim", "hidden", "n_time_features", "n_classes", "embed_dim", "activation"});
  MlpSpec spec;
  s.read("dim", spec.dim);
  if (s.has("hidden")) {
    const json& h = s.at("hidden");
    if (!h.is_array()) throw ConfigError(s.field("hidden"), "expected an array of widths");
    spec.hidden.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
        throw ConfigError(s.field("hidden"), "widths must be positive integers");
      }
      spec.hidden.push_back(static_cast<std::size_t>(v.get<std::int64_t>()));
    }
  }
  s.read("n_time_features", spec.n_time_features);
  s.read("n_classes", spec.n_classes);
  s.read("embed_dim", spec.embed_dim);
  s.read_enum("activation", spec.activation, activation_from_string);
  return spec;
}

void read_clamp(const Section& s, TimeClamp& clamp) {
  s.allow_only({"eps_low", "eps_high"});
  s.read("eps_low", clamp.eps_low);
  s.read("eps_high", clamp.eps_high);
}

}  // namespace

Checkpoint checkpoint_from_json(std::string_view text) {
  json root = parse_json(text, "checkpoint");
  Section s(root, "");
  s.allow_only({"format_version", "spec", "schedule", "loss", "label_drop_eta", "t_clamp",
                "training", "parameters"});
  Checkpoint ck;
  ck.format_version = s.integer<int>("format_version");
  if (ck.format_version != kCheckpointFormatVersion) {
    throw ConfigError("format_version", "unsupported version " + std::to_string(ck.format_version));
  }
  MlpSpec spec = read_spec(Section(s.at("spec"), "spec"));
  validated("spec", [&] { spec.validate(); });
  s.read_enum("schedule", ck.schedule, schedule_kind_from_string);
  s.read_enum("loss", ck.loss_kind, loss_kind_from_string);
  s.read("label_drop_eta", ck.label_drop_eta);
  if (s.has("t_clamp")) read_clamp(Section(s.at("t_clamp"), "t_clamp"), ck.t_clamp);
  {
    Section t(s.at("training"), "training");
    t.allow_only({"seed", "steps"});
    ck.seed = t.integer<std::uint64_t>("seed");
    ck.steps = t.integer<std::size_t>("steps");
  }
  auto layout = parameter_layout(spec);
  ck.params.spec = spec;
  ck.params.values.assign(spec.parameter_count(), 0.0);
  Section p(s.at("parameters"), "parameters");
  const json& pj = s.at("parameters");
  for (auto it = pj.begin(); it != pj.end(); ++it) {
    bool known = std::any_of(layout.begin(), layout.end(),
                             [&](const TensorSlot& slot) { return slot.name == it.key(); });
    if (!known) throw ConfigError(p.field(it.key()), "unknown tensor");
  }
  for (const auto& slot : layout) {
    Section tensor(p.at(slot.name), p.field(slot.name));
    tensor.allow_only({"shape", "values"});
    const json& shape = tensor.at("shape");
    if (!shape.is_array() || shape.size() != 2 || shape[0] != slot.rows || shape[1] != slot.cols) {
      throw ConfigError(tensor.field("shape"), "does not match the network spec");
    }
    const json& values = tensor.at("values");
    if (!values.is_array() || values.size() != slot.size()) {
      throw ConfigError(tensor.field("values"), "expected " + std::to_string(slot.size()) + " numbers");
    }
    for (std::size_t i = 0; i < slot.size(); ++i) {
      if (!values[i].is_number()) throw ConfigError(tensor.field("values"), "expected numbers");
      ck.params.values[slot.offset + i] = values[i].get<double>();
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ck) {
  write_text_file(file, checkpoint_to_json(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::string text;
  try {
    text = read_text_file(file);
  } catch (const std::exception& e) {
    throw ConfigError("checkpoint", e.what());
  }
  return checkpoint_from_json(text);
}

// ---- run config --------------------------------------------------------------

RunConfig parse_run_config(std::string_view json_text) {
  json root = parse_json(json_text, "config");
  Section s(root, "");
  s.allow_only({"dataset", "model", "train", "guidance", "export", "out"});
  RunConfig cfg;

  if (s.has("dataset")) {
    Section d(s.at("dataset"), "dataset");
    d.allow_only({"kind", "n_points", "seed", "n_components", "radius", "component_std", "noise_std"});
    d.read_enum("kind", cfg.dataset.kind, dataset_kind_from_string);
    d.read("n_points", cfg.dataset.n_points);
    d.read("seed", cfg.dataset.seed);
    d.read("n_components", cfg.dataset.n_components);
    d.read("radius", cfg.dataset.radius);
    d.read("component_std", cfg.dataset.component_std);
    d.read("noise_std", cfg.dataset.noise_std);
    validated("dataset", [&] { cfg.dataset.validate(); });
  }

  if (s.has("model")) cfg.model = read_spec(Section(s.at("model"), "model"));
  if (cfg.model.dim != 2) throw ConfigError("model.dim", "toy datasets are two-dimensional");
  validated("model", [&] { cfg.model.validate(); });

  if (s.has("train")) {
    Section t(s.at("train"), "train");
    t.allow_only({"loss", "schedule", "batch_size", "n_steps", "learning_rate", "adam_beta1",
                  "adam_beta2", "adam_eps", "label_drop_eta", "t_clamp", "seed"});
    auto& tc = cfg.train;
    t.read_enum("loss", tc.loss_kind, loss_kind_from_string);
    t.read_enum("schedule", tc.schedule, schedule_kind_from_string);
    t.read("batch_size", tc.batch_size);
    t.read("n_steps", tc.n_steps);
    t.read("learning_rate", tc.learning_rate);
    t.read("adam_beta1", tc.adam_beta1);
    t.read("adam_beta2", tc.adam_beta2);
    t.read("adam_eps", tc.adam_eps);
    t.read("label_drop_eta", tc.label_drop_eta);
    if (t.has("t_clamp")) read_clamp(Section(t.at("t_clamp"), "train.t_clamp"), tc.t_clamp);
    t.read("seed", tc.seed);
    if (tc.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
    if (!(tc.learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be > 0");
    if (!(tc.label_drop_eta >= 0.0 && tc.label_drop_eta <= 1.0)) {
      throw ConfigError("train.label_drop_eta", "must lie in [0, 1]");
    }
    validated("train", [&] { tc.validate(); });
  }

  if (s.has("guidance")) {
    Section g(s.at("guidance"), "guidance");
    g.allow_only({"w", "sigma", "n_steps", "n_samples", "seed"});
    auto& gc = cfg.guidance;
    g.read("w", gc.w);
    g.read("sigma", gc.sigma);
    g.read("n_steps", gc.n_steps);
    g.read("n_samples", gc.n_samples);
    g.read("seed", gc.seed);
    if (!std::isfinite(gc.w)) throw ConfigError("guidance.w", "must be finite");
    if (!(gc.sigma >= 0.0)) throw ConfigError("guidance.sigma", "must be >= 0");
    if (gc.n_steps < 1) throw ConfigError("guidance.n_steps", "must be >= 1");
  }

  if (s.has("export")) {
    Section e(s.at("export"), "export");
    e.allow_only({"times", "n_samples", "bins", "bounds"});
    auto& ec = cfg.export_path;
    if (e.has("times")) {
      const json& ts = e.at("times");
      if (!ts.is_array()) throw ConfigError("export.times", "expected an array");
      ec.times.clear();
      for (const auto& v : ts) {
        if (!v.is_number()) throw ConfigError("export.times", "expected numbers");
        double t = v.get<double>();
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("export.times", "times must lie in [0, 1]");
        ec.times.push_back(t);
      }
    }
    e.read("n_samples", ec.n_samples);
    e.read("bins", ec.bins);
    if (ec.bins < 1) throw ConfigError("export.bins", "must be >= 1");
    if (e.has("bounds")) {
      const json& b = e.at("bounds");
      if (!b.is_array() || b.size() != 4 ||
          !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); })) {
        throw ConfigError("export.bounds", "expected [x_min, x_max, y_min, y_max]");
      }
      ec.bounds = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      if (!(ec.bounds.x_max > ec.bounds.x_min) || !(ec.bounds.y_max > ec.bounds.y_min)) {
        throw ConfigError("export.bounds", "empty box");
      }
    }
  }

  s.read("out", cfg.out_dir);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::string text;
  try {
    text = read_text_file(file);
  } catch (const std::exception& e) {
    throw ConfigError("config", e.what());
  }
  return parse_run_config(text);
}

}  // namespace flowlab
