#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "doctest.h"
#include "flowlab/error.hpp"
#include "flowlab/io.hpp"

using namespace flowlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "flowlab_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string field_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("format_double round-trips") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("csv headers") {
  auto f = scratch("samples.csv");
  write_samples_csv(f, std::vector<Vector>{}, std::nullopt, std::nullopt);
  CHECK(read_text_file(f) == "sample_id,x0,x1\n");
  write_samples_csv(f, std::vector<Vector>{{0.5, -1.0}}, 2, 3.0);
  CHECK(read_text_file(f) == "sample_id,x0,x1,label,w\n0,0.5,-1,2,3\n");

  write_loss_history_csv(f, std::vector<LossRecord>{{0, 1.5}, {50, 0.25}});
  CHECK(read_text_file(f) == "step,loss\n0,1.5\n50,0.25\n");

  Trajectory tr{{0.0, 0.5}, {{1.0}, {2.0}}};
  write_trajectory_csv(f, tr);
  CHECK(read_text_file(f) == "step,t,x0\n0,0,1\n1,0.5,2\n");

  auto h = histogram2d(std::vector<Vector>{{0.1, 0.1}}, {0, 1, 0, 1}, 2, 1);
  write_histogram_csv(f, h);
  CHECK(read_text_file(f) == "ix,iy,x_lo,x_hi,y_lo,y_hi,count\n0,0,0,0.5,0,1,1\n1,0,0.5,1,0,1,0\n");
}

TEST_CASE("ppm images") {
  auto f = scratch("img.ppm");
  write_scatter_ppm(f, std::vector<Vector>{{0.0, 0.0}, {10.0, 0.0}}, {-3, 3, -3, 3});
  auto text = read_text_file(f);
  const std::string header = "P6\n512 512\n255\n";
  REQUIRE(text.size() == header.size() + 512 * 512 * 3);
  CHECK(text.substr(0, header.size()) == header);
  auto pixel = [&](int row, int col) {
    return static_cast<unsigned char>(text[header.size() + (row * 512 + col) * 3]);
  };
  CHECK(pixel(256, 256) == 0);
  CHECK(pixel(255, 255) == 0);
  CHECK(pixel(258, 258) == 255);
  CHECK(pixel(0, 0) == 255);

  auto h = histogram2d(std::vector<Vector>{{0.1, 0.1}}, {0, 1, 0, 1}, 2, 2);
  write_heatmap_ppm(f, h);
  text = read_text_file(f);
  CHECK(pixel(511, 0) == 0);
  CHECK(pixel(0, 511) == 255);
}

TEST_CASE("checkpoint round trip is bit exact") {
  MlpSpec spec;
  spec.hidden = {7, 5};
  spec.n_classes = 3;
  spec.embed_dim = 2;
  spec.activation = Activation::kTanh;
  Checkpoint ck;
  ck.params = mlp_init(spec, 12);
  ck.params.values[0] = 1.0 / 3.0;
  ck.params.values[1] = -5e-310;
  ck.schedule = ScheduleKind::kTrig;
  ck.loss_kind = LossKind::kDdpmEps;
  ck.label_drop_eta = 0.15;
  ck.t_clamp = {1e-3, 2e-2};
  ck.seed = 18446744073709551615ull;
  ck.steps = 42;
  auto text = checkpoint_to_json(ck);
  auto back = checkpoint_from_json(text);
  CHECK(back.params.spec == spec);
  CHECK(back.params.values == ck.params.values);
  CHECK(back.schedule == ck.schedule);
  CHECK(back.loss_kind == ck.loss_kind);
  CHECK(back.label_drop_eta == ck.label_drop_eta);
  CHECK(back.t_clamp.eps_high == ck.t_clamp.eps_high);
  CHECK(back.seed == ck.seed);
  CHECK(back.steps == 42);
  CHECK(checkpoint_to_json(back) == text);

  auto f = scratch("ck.json");
  save_checkpoint(f, ck);
  CHECK(load_checkpoint(f).params.values == ck.params.values);

  auto broken = text;
  broken.replace(broken.find("\"layer0.bias\""), 13, "\"layer9.bias\"");
  CHECK_THROWS_AS(checkpoint_from_json(broken), ConfigError);
}

TEST_CASE("run config parsing") {
  auto cfg = parse_run_config(R"({
    "dataset": {"kind": "gmm", "n_points": 100, "seed": 3},
    "model": {"hidden": [32, 32], "n_classes": 2, "activation": "tanh"},
    "train": {"loss": "csm", "schedule": "trig", "n_steps": 10, "t_clamp": {"eps_high": 0.01}},
    "guidance": {"w": 2.5, "sigma": 0.5},
    "export": {"times": [0, 0.5, 1], "bins": 8, "bounds": [-1, 1, -2, 2]},
    "out": "runs/a"
  })");
  CHECK(cfg.dataset.kind == DatasetKind::kGmm);
  CHECK(cfg.dataset.n_points == 100);
  CHECK(cfg.model.hidden == std::vector<std::size_t>{32, 32});
  CHECK(cfg.model.activation == Activation::kTanh);
  CHECK(cfg.train.loss_kind == LossKind::kCsm);
  CHECK(cfg.train.schedule == ScheduleKind::kTrig);
  CHECK(cfg.train.t_clamp.eps_high == 0.01);
  CHECK(cfg.train.t_clamp.eps_low == 1e-4);
  CHECK(cfg.guidance.w == 2.5);
  CHECK(cfg.export_path.times.size() == 3);
  CHECK(cfg.export_path.bounds.y_max == 2.0);
  CHECK(cfg.out_dir == "runs/a");

  auto defaults = parse_run_config("{}");
  CHECK(defaults.train.n_steps == 5000);
  CHECK(defaults.model.hidden == std::vector<std::size_t>{64, 64, 64});

  CHECK(field_of(R"({"trian": {}})") == "trian");
  CHECK(field_of(R"({"train": {"batchsize": 3}})") == "train.batchsize");
  CHECK(field_of(R"({"train": {"batch_size": 0}})") == "train.batch_size");
  CHECK(field_of(R"({"train": {"batch_size": -4}})") == "train.batch_size");
  CHECK(field_of(R"({"train": {"learning_rate": "fast"}})") == "train.learning_rate");
  CHECK(field_of(R"({"train": {"loss": "l2"}})") == "train.loss");
  CHECK(field_of(R"({"train": {"t_clamp": {"eps_hi": 0.1}}})") == "train.t_clamp.eps_hi");
  CHECK(field_of(R"({"dataset": {"kind": "spiral"}})") == "dataset.kind");
  CHECK(field_of(R"({"model": {"hidden": [0]}})") == "model.hidden");
  CHECK(field_of(R"({"export": {"times": [1.5]}})") == "export.times");
  CHECK(field_of(R"({"guidance": {"sigma": -1}})") == "guidance.sigma");
  CHECK(field_of("{not json") == "config");
}
