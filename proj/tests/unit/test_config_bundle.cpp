#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgstress/bundle.hpp"
#include "ecgstress/config.hpp"
#include "ecgstress/error.hpp"
#include "fixtures.hpp"

using namespace ecgstress;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ecgstress_cfg_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig tiny_pipeline() {
  PipelineConfig p;
  p.feature_dim = 8;
  p.cnn1d_train.epochs = p.cnn2d_train.epochs = 2;
  p.svm.epochs = 20;
  p.svm_lambda_grid = {1e-2};
  return p;
}

}  // namespace

TEST(Config, ParsesKeyValuesWithComments) {
  const auto kv = parse_key_values("# header\nseed = 5\n\n  method=cnn1d,fusion_avg  # trailing\n");
  EXPECT_EQ(kv, (KeyValues{{"seed", "5"}, {"method", "cnn1d,fusion_avg"}}));
  try {
    parse_key_values("seed 5\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(Config, OverridesWinOverFile) {
  const auto c = make_run_config({{"seed", "5"}, {"cnn_epochs", "7"}, {"jobs", "3"}},
                                 {{"seed", "9"}, {"cnn2d_epochs", "2"}});
  EXPECT_EQ(c.pipeline.seed, 9u);
  EXPECT_EQ(c.pipeline.cnn1d_train.epochs, 7u);
  EXPECT_EQ(c.pipeline.cnn2d_train.epochs, 2u);
  EXPECT_EQ(c.jobs, 3u);
}

TEST(Config, EveryKeyIsAccepted) {
  RunConfig c;
  for (auto key : config_keys()) {
    // A value that parses for its kind.
    std::string v = "1";
    if (key == "method") v = "cnn2d";
    if (key == "alpha_missing") v = "exclude";
    if (key == "data_dir" || key == "out") v = "somewhere";
    if (key == "cnn_momentum") v = "0.5";
    EXPECT_NO_THROW(apply_setting(c, key, v)) << key;
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(make_run_config({{"colour", "red"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"seed", "-1"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"window_seconds", "nan"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"window_seconds", "0"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"method", "lstm"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"cnn_momentum", "1.5"}}, {}), InputError);
  EXPECT_THROW(make_run_config({{"force", "maybe"}}, {}), InputError);
}

TEST(Config, WindowLengthPerMethod) {
  RunConfig c;
  EXPECT_EQ(c.window_seconds_for(Method::cnn1d), 1.0);
  EXPECT_EQ(c.window_seconds_for(Method::svm_hrv), 4.0);
}

TEST(DatasetDir, LoadsRecordingsAndBuildsWindows) {
  const auto dir = scratch("dir");
  for (const char* id : {"S02", "S01"}) {
    const std::vector<int> levels{0, 2};
    const auto s = synth_subject(id, levels, 20.0, 128.0, 3);
    save_recording(s.recording, dir / (std::string(id) + ".csv"), dir / (std::string(id) + ".json"));
    save_label_track(s.labels, dir / (std::string(id) + ".labels.csv"));
  }
  const auto recs = load_dataset_dir(dir);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].recording.subject_id(), "S01");
  double fs = 0;
  const auto data = build_dataset(recs, 2.0, fs);
  EXPECT_EQ(fs, 128.0);
  EXPECT_EQ(data.windows.size(), 40u);
  EXPECT_EQ(data.subjects.size(), 2u);
  fs::remove(dir / "S01.labels.csv");
  EXPECT_THROW(load_dataset_dir(dir), InputError);
  EXPECT_THROW(load_dataset_dir(dir / "missing"), InputError);
}

class BundleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto data = fixtures::synthetic_dataset(2, 10, 1.0);
    const std::vector<Method> methods{Method::fusion_weighted};
    const auto models = train_stress_models(data.windows, methods, 256.0, tiny_pipeline(), 5);
    bundle_ = new ModelBundle;
    bundle_->model = models.at(Method::fusion_weighted);
    bundle_->seed = 5;
    bundle_->created_by = "test";
    bundle_->subjects = {"S01", "S02"};
    bundle_->config = tiny_pipeline().snapshot();
  }
  static void TearDownTestSuite() { delete bundle_; }
  static ModelBundle* bundle_;
};

ModelBundle* BundleTest::bundle_ = nullptr;

TEST_F(BundleTest, JsonRoundTripIsExact) {
  const std::string text = bundle_to_json(*bundle_);
  EXPECT_EQ(nlohmann::ordered_json::parse(text).begin().key(), "format_version");
  const auto back = bundle_from_json(text);
  EXPECT_EQ(back, *bundle_);
  EXPECT_EQ(bundle_to_json(back), text);
}

TEST_F(BundleTest, SaveRefusesOverwriteWithoutForce) {
  const auto dir = scratch("bundle");
  const auto path = dir / "m.json";
  save_bundle(*bundle_, path, false);
  EXPECT_THROW(save_bundle(*bundle_, path, false), InputError);
  EXPECT_NO_THROW(save_bundle(*bundle_, path, true));
  EXPECT_EQ(load_bundle(path), *bundle_);
}

TEST_F(BundleTest, CorruptedBundlesAreRejected) {
  auto j = nlohmann::json::parse(bundle_to_json(*bundle_));
  auto bad_version = j;
  bad_version["format_version"] = 99;
  EXPECT_THROW(bundle_from_json(bad_version.dump()), InputError);
  EXPECT_THROW(bundle_from_json("{not json"), InputError);
  EXPECT_THROW(bundle_from_json("{\"format_version\": 1}"), InputError);
  EXPECT_THROW(load_bundle("/nonexistent/bundle.json"), InputError);
}
