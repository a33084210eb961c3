// ecgstress: command-line front end for the ECG stress pipeline.
//
//   ecgstress synth     --out DIR                      synthetic labeled recordings
//   ecgstress ingest    --signal X.csv --meta X.json   validate / export a recording
//   ecgstress label     R1.csv R2.csv ... --out C.csv  consensus labels + alpha
//   ecgstress train     --data_dir DIR --out B.json    deployment model bundle
//   ecgstress evaluate  --data_dir DIR --out R.json    LOSO evaluation + report
//   ecgstress predict   --bundle B.json --signal ...   per-window stress stream
//   ecgstress report    R.json ...                     Markdown tables
//
// Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecgstress/agreement.hpp"
#include "ecgstress/bundle.hpp"
#include "ecgstress/config.hpp"
#include "ecgstress/dsp.hpp"
#include "ecgstress/error.hpp"
#include "ecgstress/hrv.hpp"
#include "ecgstress/pipeline.hpp"
#include "ecgstress/random.hpp"
#include "ecgstress/report.hpp"
#include "ecgstress/signal.hpp"

namespace fs = std::filesystem;
using namespace ecgstress;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Config-file and per-key flag handling shared by the pipeline subcommands.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool force = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "key=value configuration file");
    for (auto key : config_keys()) {
      const std::string name(key);
      if (name == "force") continue;
      cmd.add_option("--" + name, values[name], "override config key '" + name + "'");
    }
    cmd.add_flag("--force", force, "overwrite existing outputs");
  }

  RunConfig resolve(const CLI::App& cmd) const {
    KeyValues file;
    if (!config_path.empty()) file = load_key_values(config_path);
    KeyValues overrides;
    for (auto key : config_keys()) {
      const std::string name(key);
      if (name == "force") continue;
      if (cmd.count("--" + name) > 0) overrides.emplace_back(name, values.at(name));
    }
    if (force) overrides.emplace_back("force", "true");
    return make_run_config(file, overrides);
  }
};

void write_text(const fs::path& path, const std::string& text, bool force) {
  if (fs::exists(path) && !force) throw InputError("refusing to overwrite " + path.string() + " (use --force)");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void log_note(const std::string& msg) { std::cerr << "note: " << msg << '\n'; }

int cmd_synth(const fs::path& out_dir, std::size_t subjects, double seconds, double fs_hz, std::uint64_t seed,
              bool force) {
  fs::create_directories(out_dir);
  const int levels[] = {0, 1, 2};
  for (std::size_t s = 0; s < subjects; ++s) {
    char id[32];
    std::snprintf(id, sizeof id, "S%02zu", s + 1);
    const auto subject = synth_subject(id, levels, seconds, fs_hz, seed);
    const auto stem = out_dir / id;
    for (const auto* ext : {".csv", ".json", ".labels.csv"})
      if (fs::exists(stem.string() + ext) && !force)
        throw InputError("refusing to overwrite " + stem.string() + ext + " (use --force)");
    save_recording(subject.recording, stem.string() + ".csv", stem.string() + ".json");
    save_label_track(subject.labels, stem.string() + ".labels.csv");
  }
  std::cout << "wrote " << subjects << " synthetic subjects to " << out_dir.string() << '\n';
  return 0;
}

int cmd_ingest(const fs::path& signal, const fs::path& meta, const std::string& labels_path,
               const std::string& spectrogram_csv, std::size_t window_index, const std::string& hrv_csv,
               const RunConfig& cfg) {
  const auto rec = load_recording(signal, meta);
  std::cout << "subject " << rec.subject_id() << ", task " << to_string(rec.task()) << ", " << rec.size()
            << " samples at " << format_number(rec.sample_rate_hz()) << " Hz (" << format_number(rec.duration_s())
            << " s)\n";
  if (!spectrogram_csv.empty()) {
    const auto len = static_cast<std::size_t>(std::llround(cfg.window_seconds * rec.sample_rate_hz()));
    const std::size_t start = window_index * len;
    if (start + len > rec.size()) throw InputError("window " + std::to_string(window_index) + " is past the end");
    const auto spec = stft_spectrogram(rec.samples().subspan(start, len), cfg.pipeline.spectrogram);
    std::ostringstream out;
    for (std::size_t k = 0; k < spec.values.rows(); ++k) {
      for (std::size_t l = 0; l < spec.values.cols(); ++l) out << (l ? "," : "") << format_number(spec.values(k, l));
      out << '\n';
    }
    write_text(spectrogram_csv, out.str(), cfg.force);
    std::cout << "spectrogram " << spec.values.rows() << "x" << spec.values.cols() << " -> " << spectrogram_csv << '\n';
  }
  if (!hrv_csv.empty()) {
    if (labels_path.empty()) throw InputError("--hrv-csv needs --labels");
    const auto track = load_label_track(labels_path, "consensus");
    const auto windows = segment_windows(rec, track, cfg.hrv_window_seconds);
    std::ostringstream out;
    for (auto name : kHrvFeatureNames) out << name << ',';
    out << "subject_id,label\n";
    std::size_t rows = 0;
    for (const auto& w : windows) {
      const auto r = hrv_vector(w, rec.sample_rate_hz());
      if (!r.features) {
        log_note("skipped " + r.skip_reason);
        continue;
      }
      for (double v : r.features->values) out << format_number(v) << ',';
      out << w.subject_id << ',' << w.label << '\n';
      ++rows;
    }
    write_text(hrv_csv, out.str(), cfg.force);
    std::cout << rows << " HRV feature rows -> " << hrv_csv << '\n';
  }
  return 0;
}

int cmd_label(const std::vector<std::string>& rater_files, double segment_s, const RunConfig& cfg) {
  if (rater_files.size() < 2) throw InputError("label needs at least two rater files");
  std::vector<LabelTrack> tracks;
  for (const auto& f : rater_files) tracks.push_back(load_label_track(f, fs::path(f).stem().string()));
  const auto consensus = consensus_labels(tracks, segment_s);
  const double alpha = krippendorff_alpha(tracks, cfg.alpha_missing);
  std::printf("krippendorff_alpha_ordinal = %.4f\n", alpha);
  std::cout << consensus.segments().size() << " of " << tracks.front().segments().size()
            << " segments have full agreement\n";
  if (consensus.segments().empty()) std::cerr << "warning: consensus is empty; no segment has full agreement\n";
  if (!cfg.out.empty()) {
    if (fs::exists(cfg.out) && !cfg.force) throw InputError("refusing to overwrite " + cfg.out.string() + " (use --force)");
    save_label_track(consensus, cfg.out);
  }
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  if (cfg.out.empty()) throw InputError("train needs --out");
  if (fs::exists(cfg.out) && !cfg.force) throw InputError("refusing to overwrite " + cfg.out.string() + " (use --force)");
  const Method method = cfg.methods.front();
  const auto recordings = load_dataset_dir(cfg.data_dir);
  double fs_hz = 0.0;
  const double window_s = cfg.window_seconds_for(method);
  const Dataset data = build_dataset(recordings, window_s, fs_hz);
  PipelineConfig pc = cfg.pipeline;
  pc.log = log_note;
  const Method methods[] = {method};
  auto models = train_stress_models(data.windows, methods, fs_hz, pc, derive_seed(pc.seed, "deploy"));
  ModelBundle bundle;
  bundle.model = std::move(models.at(method));
  bundle.window_seconds = window_s;
  bundle.seed = pc.seed;
  bundle.created_by = "ecgstress 0.1.0";
  bundle.subjects.assign(data.subjects.begin(), data.subjects.end());
  bundle.config = pc.snapshot();
  save_bundle(bundle, cfg.out, cfg.force);
  std::cout << "trained " << to_string(method) << " on " << data.windows.size() << " windows from "
            << data.subjects.size() << " subjects -> " << cfg.out.string() << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& report_path) {
  const auto recordings = load_dataset_dir(cfg.data_dir);
  PipelineConfig pc = cfg.pipeline;
  pc.log = log_note;
  std::vector<Method> cnn_methods, hrv_methods;
  for (Method m : cfg.methods) (uses_hrv(m) ? hrv_methods : cnn_methods).push_back(m);
  std::map<Method, RunResult> by_method;
  for (const auto* group : {&cnn_methods, &hrv_methods}) {
    if (group->empty()) continue;
    double fs_hz = 0.0;
    const Dataset data = build_dataset(recordings, cfg.window_seconds_for(group->front()), fs_hz);
    for (auto& r : evaluate_loso(data, *group, fs_hz, pc, cfg.jobs)) by_method.emplace(r.method, std::move(r));
  }
  std::vector<RunResult> results;
  for (Method m : cfg.methods)
    if (auto it = by_method.find(m); it != by_method.end()) results.push_back(it->second);
  if (!cfg.out.empty()) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) arr.push_back(nlohmann::ordered_json::parse(run_result_to_json(r)));
    write_text(cfg.out, arr.dump(2) + "\n", cfg.force);
  }
  const auto report = render_report(results);
  if (report_path.empty()) {
    std::cout << report;
  } else {
    write_text(report_path, report, cfg.force);
  }
  return 0;
}

int cmd_predict(const fs::path& bundle_path, const fs::path& signal, const fs::path& meta, const RunConfig& cfg) {
  const auto bundle = load_bundle(bundle_path);
  const auto rec = load_recording(signal, meta);
  const auto& model = bundle.model;
  if (rec.sample_rate_hz() != model.sample_rate_hz)
    throw InputError("recording sample rate " + format_number(rec.sample_rate_hz()) + " Hz differs from the bundle's " +
                     format_number(model.sample_rate_hz) + " Hz; resample the recording first");
  const std::size_t len = model.window_samples;
  const std::size_t rows = rec.size() / len;
  if (rows == 0) throw InputError("recording is shorter than one " + format_number(bundle.window_seconds) + " s window");
  std::ostringstream out;
  out << "start_s,level,prob0,prob1,prob2\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const auto p = predict_window(model, rec.samples().subspan(i * len, len), i * len, rec.subject_id());
    out << format_number(static_cast<double>(i * len) / rec.sample_rate_hz()) << ',';
    if (p.level) {
      out << *p.level;
      for (double v : p.probabilities) out << ',' << format_number(v);
    } else {
      out << "-,,,";
    }
    out << '\n';
  }
  if (cfg.out.empty()) {
    std::cout << out.str();
  } else {
    write_text(cfg.out, out.str(), cfg.force);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const RunConfig& cfg) {
  std::vector<RunResult> results;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw InputError("cannot open " + f);
    std::ostringstream text;
    text << in.rdbuf();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text.str());
    } catch (const nlohmann::json::exception& e) {
      throw InputError(f + ": " + e.what());
    }
    if (j.is_array()) {
      for (const auto& item : j) results.push_back(run_result_from_json(item.dump()));
    } else {
      results.push_back(run_result_from_json(text.str()));
    }
  }
  const auto report = render_report(results);
  if (cfg.out.empty()) {
    std::cout << report;
  } else {
    write_text(cfg.out, report, cfg.force);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECG stress assessment: HRV, spectrograms, dual-CNN weighted fusion, LOSO evaluation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write synthetic labeled recordings (levels 0,1,2 per subject)");
  std::string synth_out;
  std::size_t synth_subjects = 4;
  double synth_seconds = 60.0, synth_fs = 256.0;
  std::uint64_t synth_seed = 7;
  bool synth_force = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--subjects", synth_subjects, "number of subjects");
  synth->add_option("--duration", synth_seconds, "seconds per stress level");
  synth->add_option("--fs", synth_fs, "sample rate in Hz");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_flag("--force", synth_force, "overwrite existing files");

  auto* ingest = app.add_subcommand("ingest", "Validate a recording; optional spectrogram / HRV exports");
  ConfigOptions ingest_cfg;
  std::string ingest_signal, ingest_meta, ingest_labels, ingest_spec, ingest_hrv;
  std::size_t ingest_window = 0;
  ingest->add_option("--signal", ingest_signal, "ECG CSV")->required();
  ingest->add_option("--meta", ingest_meta, "JSON metadata sidecar")->required();
  ingest->add_option("--labels", ingest_labels, "label CSV (for --hrv-csv)");
  ingest->add_option("--spectrogram-csv", ingest_spec, "write the spectrogram of one window as CSV");
  ingest->add_option("--window-index", ingest_window, "window exported by --spectrogram-csv");
  ingest->add_option("--hrv-csv", ingest_hrv, "write the HRV feature matrix as CSV");
  ingest_cfg.attach(*ingest);

  auto* label = app.add_subcommand("label", "Consensus labels and Krippendorff's alpha from rater files");
  ConfigOptions label_cfg;
  std::vector<std::string> rater_files;
  double segment_s = 10.0;
  label->add_option("raters", rater_files, "rater label CSVs")->required();
  label->add_option("--segment", segment_s, "grid cell length in seconds");
  label_cfg.attach(*label);

  auto* train_cmd = app.add_subcommand("train", "Train a deployment model on all subjects");
  ConfigOptions train_cfg;
  train_cfg.attach(*train_cmd);

  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-subject-out evaluation");
  ConfigOptions eval_cfg;
  std::string report_path;
  evaluate->add_option("--report", report_path, "write the Markdown report here instead of stdout");
  eval_cfg.attach(*evaluate);

  auto* predict = app.add_subcommand("predict", "Per-window stress levels for an unlabeled recording");
  ConfigOptions predict_cfg;
  std::string bundle_path, predict_signal, predict_meta;
  predict->add_option("--bundle", bundle_path, "model bundle JSON")->required();
  predict->add_option("--signal", predict_signal, "ECG CSV")->required();
  predict->add_option("--meta", predict_meta, "JSON metadata sidecar")->required();
  predict_cfg.attach(*predict);

  auto* report = app.add_subcommand("report", "Render Markdown tables from run results");
  ConfigOptions report_cfg;
  std::vector<std::string> result_files;
  report->add_option("results", result_files, "RunResult JSON files")->required();
  report_cfg.attach(*report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*synth) return cmd_synth(synth_out, synth_subjects, synth_seconds, synth_fs, synth_seed, synth_force);
    if (*ingest)
      return cmd_ingest(ingest_signal, ingest_meta, ingest_labels, ingest_spec, ingest_window, ingest_hrv,
                        ingest_cfg.resolve(*ingest));
    if (*label) return cmd_label(rater_files, segment_s, label_cfg.resolve(*label));
    if (*train_cmd) return cmd_train(train_cfg.resolve(*train_cmd));
    if (*evaluate) return cmd_evaluate(eval_cfg.resolve(*evaluate), report_path);
    if (*predict) return cmd_predict(bundle_path, predict_signal, predict_meta, predict_cfg.resolve(*predict));
    if (*report) return cmd_report(result_files, report_cfg.resolve(*report));
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
