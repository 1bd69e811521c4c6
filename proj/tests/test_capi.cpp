#include "tsrnn.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(tsrnn_version()).find('.') != std::string::npos);
  CHECK(std::string(tsrnn_status_name(TSRNN_OK)) == "ok");
  CHECK(std::string(tsrnn_status_name(TSRNN_ERR_IO)) == "io");
}

TEST_CASE("dataset synth, summary, save and load through the C surface") {
  TempDir dir("tsrnn_capi_ds");

  tsrnn_dataset* ds = nullptr;
  REQUIRE(tsrnn_dataset_synth(nullptr, "{\"1\": 30, \"2\": 30}", 42, &ds) == TSRNN_OK);
  REQUIRE(ds != nullptr);
  CHECK(tsrnn_dataset_size(ds) == 60);
  CHECK(tsrnn_dataset_timesteps(ds) == 13);
  CHECK(tsrnn_dataset_channels(ds) == 2);

  char* summary = nullptr;
  REQUIRE(tsrnn_dataset_summary_json(ds, &summary) == TSRNN_OK);
  CHECK(std::string(summary).find("\"1\": 30") != std::string::npos);
  tsrnn_string_free(summary);

  REQUIRE(tsrnn_dataset_save_csv(ds, dir.file("ds.csv").c_str()) == TSRNN_OK);
  tsrnn_dataset* back = nullptr;
  REQUIRE(tsrnn_dataset_load_csv(dir.file("ds.csv").c_str(), 5, &back) == TSRNN_OK);
  CHECK(tsrnn_dataset_size(back) == 60);
  tsrnn_dataset_free(back);
  tsrnn_dataset_free(ds);
}

TEST_CASE("error paths surface codes and messages") {
  tsrnn_dataset* ds = nullptr;
  CHECK(tsrnn_dataset_load_csv("/nonexistent/nope.csv", 5, &ds) == TSRNN_ERR_IO);
  CHECK(std::strlen(tsrnn_last_error()) > 0);

  CHECK(tsrnn_dataset_load_csv(nullptr, 5, &ds) == TSRNN_ERR_INVALID);
  CHECK(tsrnn_dataset_synth("{not json", nullptr, 1, &ds) == TSRNN_ERR_IO);

  // unknown class in counts
  CHECK(tsrnn_dataset_synth(nullptr, "{\"9\": 5}", 1, &ds) == TSRNN_ERR_INVALID);
}

TEST_CASE("model train, save, load, predict round trip") {
  TempDir dir("tsrnn_capi_model");
  tsrnn_dataset* ds = nullptr;
  REQUIRE(tsrnn_dataset_synth(nullptr, "{\"1\": 40, \"2\": 40, \"3\": 40, \"4\": 40, \"5\": 40}",
                              7, &ds) == TSRNN_OK);

  const char* cfg = R"({"profile": "desk", "model": "gru", "train": {"epochs": 3}})";
  tsrnn_model* model = nullptr;
  REQUIRE(tsrnn_model_train(ds, cfg, &model) == TSRNN_OK);
  CHECK(tsrnn_model_num_classes(model) == 5);

  REQUIRE(tsrnn_model_save(model, dir.file("net").c_str()) == TSRNN_OK);
  tsrnn_model* loaded = nullptr;
  REQUIRE(tsrnn_model_load(dir.file("net").c_str(), &loaded) == TSRNN_OK);

  // the loaded model must agree with the original on a probe series
  std::vector<double> features(26, 128.0);
  double probs_a[5], probs_b[5];
  int label_a = 0, label_b = 0;
  REQUIRE(tsrnn_model_predict(model, features.data(), features.size(), probs_a, &label_a) ==
          TSRNN_OK);
  REQUIRE(tsrnn_model_predict(loaded, features.data(), features.size(), probs_b, &label_b) ==
          TSRNN_OK);
  CHECK(label_a == label_b);
  for (int c = 0; c < 5; ++c) CHECK(probs_a[c] == probs_b[c]);
  CHECK(label_a >= 1);
  CHECK(label_a <= 5);
  double sum = 0.0;
  for (int c = 0; c < 5; ++c) sum += probs_a[c];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  // forests travel through the same surface
  tsrnn_model* rf = nullptr;
  const char* rf_cfg = R"({"model": "rf", "forest": {"num_trees": 8, "max_depth": 4}})";
  REQUIRE(tsrnn_model_train(ds, rf_cfg, &rf) == TSRNN_OK);
  REQUIRE(tsrnn_model_save(rf, dir.file("rf").c_str()) == TSRNN_OK);
  tsrnn_model* rf_loaded = nullptr;
  REQUIRE(tsrnn_model_load(dir.file("rf").c_str(), &rf_loaded) == TSRNN_OK);
  int rf_label = 0;
  REQUIRE(tsrnn_model_predict(rf_loaded, features.data(), features.size(), nullptr, &rf_label) ==
          TSRNN_OK);
  CHECK(rf_label >= 1);

  tsrnn_model_free(model);
  tsrnn_model_free(loaded);
  tsrnn_model_free(rf);
  tsrnn_model_free(rf_loaded);
  tsrnn_dataset_free(ds);

  tsrnn_model* missing = nullptr;
  CHECK(tsrnn_model_load(dir.file("absent").c_str(), &missing) == TSRNN_ERR_IO);
}

TEST_CASE("pipeline commands through the C surface") {
  TempDir dir("tsrnn_capi_pipe");

  char* summary = nullptr;
  const char* synth_cfg =
      R"({"seed": 11, "synth": {"counts": {"1": 15, "2": 15, "3": 15, "4": 15, "5": 15}}})";
  REQUIRE(tsrnn_run_synth(dir.file("d.csv").c_str(), synth_cfg, &summary) == TSRNN_OK);
  CHECK(std::string(summary).find("total  75") != std::string::npos);
  tsrnn_string_free(summary);

  const char* xval_cfg = R"({"seed": 11, "models": ["logistic"], "logistic": {"epochs": 30}})";
  REQUIRE(tsrnn_run_xval(dir.file("d.csv").c_str(), dir.file("xv").c_str(), xval_cfg) ==
          TSRNN_OK);
  CHECK(fs::exists(dir.path / "xv" / "summary.csv"));

  REQUIRE(tsrnn_run_report((dir.path / "xv" / "predictions_logistic.csv").string().c_str(),
                           dir.file("rep").c_str(), nullptr) == TSRNN_OK);
  CHECK(fs::exists(dir.path / "rep" / "eval_report.json"));

  char* gc_text = nullptr;
  const char* gc_cfg = R"({"gradcheck": {"cell_instances": 2, "net_instances": 1}})";
  REQUIRE(tsrnn_run_gradcheck(gc_cfg, dir.file("gc.json").c_str(), &gc_text) == TSRNN_OK);
  CHECK(std::string(gc_text).find("gradcheck: PASS") != std::string::npos);
  CHECK(fs::exists(dir.path / "gc.json"));
  tsrnn_string_free(gc_text);

  // corrupted-gradient self test surfaces as a numeric failure
  const char* bad_cfg =
      R"({"gradcheck": {"cell_instances": 1, "net_instances": 1, "inject_fault": "W_zh"}})";
  char* bad_text = nullptr;
  CHECK(tsrnn_run_gradcheck(bad_cfg, nullptr, &bad_text) == TSRNN_ERR_NUMERIC);
  CHECK(std::string(bad_text).find("W_zh") != std::string::npos);
  tsrnn_string_free(bad_text);
}
