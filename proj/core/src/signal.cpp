#include "ecgstress/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgstress/error.hpp"
#include "ecgstress/random.hpp"
#include "text_util.hpp"

namespace ecgstress {

namespace {

constexpr double kGridTolerance = 1e-6;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::baseline: return "baseline";
    case Task::rollercoaster: return "rollercoaster";
    case Task::stroop: return "stroop";
    case Task::game: return "game";
    case Task::other: return "other";
  }
  return "other";
}

Task parse_task(std::string_view text) {
  for (Task t : {Task::baseline, Task::rollercoaster, Task::stroop, Task::game, Task::other}) {
    if (to_string(t) == text) return t;
  }
  throw InputError("unknown task '" + std::string(text) + "'");
}

Level level_from_class(int cls) {
  if (cls < 0 || cls >= kClassCount) throw InputError("class " + std::to_string(cls) + " out of range");
  return static_cast<Level>(cls);
}

std::string level_to_text(Level level) {
  return level == Level::unlabeled ? "-" : std::to_string(static_cast<int>(level));
}

Level parse_level(std::string_view text) {
  text = detail::trim(text);
  if (text == "-") return Level::unlabeled;
  if (text == "0") return Level::low;
  if (text == "1") return Level::medium;
  if (text == "2") return Level::high;
  throw InputError("invalid level '" + std::string(text) + "' (expected 0, 1, 2 or -)");
}

EcgRecording::EcgRecording(std::string subject_id, double sample_rate_hz,
                           std::vector<double> samples, Task task)
    : subject_id_(std::move(subject_id)),
      sample_rate_hz_(sample_rate_hz),
      samples_(std::move(samples)),
      task_(task) {
  if (subject_id_.empty()) throw InputError("recording has an empty subject_id");
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
    throw InputError("sample_rate_hz must be positive and finite");
  if (samples_.empty()) throw InputError("recording has no samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i]))
      throw InputError("sample " + std::to_string(i) + " is not finite");
  }
}

LabelTrack::LabelTrack(std::string rater_id, std::vector<LabelSegment> segments)
    : rater_id_(std::move(rater_id)), segments_(std::move(segments)) {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s))
      throw InputError("label segment " + std::to_string(i) + " has invalid bounds");
    if (i > 0 && s.start_s < segments_[i - 1].end_s - kGridTolerance)
      throw InputError("label segment " + std::to_string(i) + " overlaps or is out of order");
  }
}

void Dataset::add(std::vector<Window> more) {
  for (auto& w : more) {
    subjects.insert(w.subject_id);
    windows.push_back(std::move(w));
  }
}

void Dataset::validate() const {
  if (class_count < 2) throw InputError("dataset needs at least two classes");
  for (const auto& w : windows) {
    if (!subjects.contains(w.subject_id))
      throw InputError("window subject '" + w.subject_id + "' not registered in dataset");
    if (w.label < 0 || w.label >= class_count)
      throw InputError("window label " + std::to_string(w.label) + " out of range");
  }
}

EcgRecording load_recording(const std::filesystem::path& signal_path,
                            const std::filesystem::path& meta_path) {
  nlohmann::json meta;
  {
    auto in = open_input(meta_path);
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(meta_path.string() + ": invalid JSON: " + e.what());
    }
  }
  for (const char* key : {"subject_id", "sample_rate_hz", "task"}) {
    if (!meta.contains(key)) throw InputError(meta_path.string() + ": missing field '" + key + "'");
  }
  if (!meta["subject_id"].is_string() || !meta["task"].is_string() ||
      !meta["sample_rate_hz"].is_number())
    throw InputError(meta_path.string() + ": wrong field types");
  const double fs = meta["sample_rate_hz"].get<double>();
  if (!(fs > 0.0)) throw InputError(meta_path.string() + ": sample_rate_hz must be positive");

  auto in = open_input(signal_path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "sample_index,value_mv")
    throw InputError(signal_path.string() + ": expected header 'sample_index,value_mv'");
  std::vector<double> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    // Rows count data lines after the header.
    const std::string where = signal_path.string() + " row " + std::to_string(samples.size() + 1) + " (line " +
                              std::to_string(line_no) + ")";
    if (fields.size() != 2)
      throw InputError(where + ": expected 2 fields, got " + std::to_string(fields.size()));
    const auto index = detail::parse_size(fields[0]);
    if (!index || *index != samples.size())
      throw InputError(where + ": sample_index must be " + std::to_string(samples.size()));
    const auto value = detail::parse_double(fields[1]);
    if (!value) throw InputError(where + ": value_mv is not a number");
    if (!std::isfinite(*value)) throw InputError(where + ": value_mv is not finite");
    samples.push_back(*value);
  }
  return EcgRecording(meta["subject_id"].get<std::string>(), fs, std::move(samples),
                      parse_task(meta["task"].get<std::string>()));
}

void save_recording(const EcgRecording& rec, const std::filesystem::path& signal_path,
                    const std::filesystem::path& meta_path) {
  {
    auto out = open_output(signal_path);
    out << "sample_index,value_mv\n";
    const auto samples = rec.samples();
    for (std::size_t i = 0; i < samples.size(); ++i)
      out << i << ',' << detail::format_double(samples[i]) << '\n';
  }
  nlohmann::ordered_json meta;
  meta["subject_id"] = rec.subject_id();
  meta["sample_rate_hz"] = rec.sample_rate_hz();
  meta["task"] = std::string(to_string(rec.task()));
  auto out = open_output(meta_path);
  out << meta.dump(2) << '\n';
}

LabelTrack load_label_track(const std::filesystem::path& path, std::string rater_id) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "start_s,end_s,level")
    throw InputError(path.string() + ": expected header 'start_s,end_s,level'");
  std::vector<LabelSegment> segments;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    const std::string where = path.string() + " row " + std::to_string(row);
    if (fields.size() != 3)
      throw InputError(where + ": expected 3 fields, got " + std::to_string(fields.size()));
    const auto start = detail::parse_double(fields[0]);
    const auto end = detail::parse_double(fields[1]);
    if (!start || !end || !std::isfinite(*start) || !std::isfinite(*end))
      throw InputError(where + ": bad segment bounds");
    try {
      segments.push_back({*start, *end, parse_level(fields[2])});
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  try {
    return LabelTrack(std::move(rater_id), std::move(segments));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_label_track(const LabelTrack& track, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "start_s,end_s,level\n";
  for (const auto& s : track.segments())
    out << detail::format_double(s.start_s) << ',' << detail::format_double(s.end_s) << ','
        << level_to_text(s.level) << '\n';
}

LabelTrack consensus_labels(std::span<const LabelTrack> tracks, double segment_s) {
  if (tracks.size() < 2) throw InputError("consensus needs at least two label tracks");
  if (!(segment_s > 0.0)) throw InputError("segment length must be positive");
  const auto& grid = tracks.front().segments();
  for (const auto& track : tracks) {
    const auto& segs = track.segments();
    if (segs.size() != grid.size())
      throw InputError("alignment error: track '" + track.rater_id() + "' has " +
                       std::to_string(segs.size()) + " segments, expected " +
                       std::to_string(grid.size()));
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const double cells = segs[i].start_s / segment_s;
      const bool on_grid = std::abs(segs[i].start_s - grid[i].start_s) <= kGridTolerance &&
                           std::abs(segs[i].end_s - grid[i].end_s) <= kGridTolerance &&
                           std::abs(segs[i].end_s - segs[i].start_s - segment_s) <= kGridTolerance &&
                           std::abs(cells - std::round(cells)) <= kGridTolerance;
      if (!on_grid)
        throw InputError("alignment error: track '" + track.rater_id() + "' segment " +
                         std::to_string(i) + " is off the " + detail::format_double(segment_s) +
                         " s grid");
    }
  }
  std::vector<LabelSegment> agreed;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Level level = grid[i].level;
    if (level == Level::unlabeled) continue;
    const bool unanimous = std::all_of(tracks.begin(), tracks.end(), [&](const LabelTrack& t) {
      return t.segments()[i].level == level;
    });
    if (unanimous) agreed.push_back(grid[i]);
  }
  return LabelTrack("consensus", std::move(agreed));
}

std::vector<Window> segment_windows(const EcgRecording& rec, const LabelTrack& labels,
                                    double window_seconds) {
  if (!(window_seconds > 0.0)) throw InputError("window_seconds must be positive");
  const double fs = rec.sample_rate_hz();
  const auto length = static_cast<std::size_t>(std::llround(window_seconds * fs));
  if (length == 0) throw InputError("window shorter than one sample");
  const auto samples = rec.samples();
  std::vector<Window> out;
  for (const auto& seg : labels.segments()) {
    if (seg.level == Level::unlabeled) continue;
    const auto begin = static_cast<std::size_t>(std::llround(seg.start_s * fs));
    const auto end = std::min(static_cast<std::size_t>(std::llround(seg.end_s * fs)), samples.size());
    for (std::size_t pos = begin; pos + length <= end; pos += length) {
      out.push_back(Window{rec.subject_id(), pos, length, static_cast<int>(seg.level),
                           std::vector<double>(samples.begin() + static_cast<std::ptrdiff_t>(pos),
                                               samples.begin() + static_cast<std::ptrdiff_t>(pos + length))});
    }
  }
  return out;
}

namespace {

struct BeatShape {
  double mean_bpm;
  double rsa_fraction;     // depth of respiratory beat-rate modulation
  double jitter_fraction;  // uniform beat-to-beat jitter
  double t_amplitude;
};

constexpr BeatShape kShapes[kClassCount] = {
    {60.0, 0.06, 0.02, 0.35},
    {90.0, 0.04, 0.02, 0.25},
    {120.0, 0.02, 0.015, 0.15},
};

struct Wave {
  double offset_s;  // relative to the R peak; P and T scale with sqrt(RR)
  double amplitude;
  double width_s;
  bool scales_with_rr;
};

}  // namespace

namespace {

// `gain_override` replaces the seeded amplitude gain (the draw still happens so
// the rest of the random stream is unchanged).
SyntheticEcg synthesize(int class_level, double duration_s, double fs, std::uint64_t seed,
                        std::string subject_id, std::optional<double> gain_override) {
  if (!(duration_s > 0.0)) throw InputError("synth_ecg: duration must be positive");
  if (!(fs > 0.0)) throw InputError("synth_ecg: sample rate must be positive");
  const BeatShape& shape = kShapes[static_cast<std::size_t>(static_cast<int>(level_from_class(class_level)))];

  Rng rng(seed);
  const double gain = gain_override.value_or(rng.uniform(0.85, 1.15));
  const double rsa_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wander_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wander_hz = rng.uniform(0.15, 0.3);
  // Individual resting rate: 2-6 bpm either side of the level's nominal rate.
  // Also keeps beats from sitting at a fixed phase in every 1 s window.
  const double offset_bpm = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(2.0, 6.0);
  const double mean_rr = 60.0 / (shape.mean_bpm + offset_bpm);

  // Beats are laid out past both ends so waves straddling the edges are complete.
  std::vector<double> beat_times;
  double t = -1.0 + rng.uniform(0.0, mean_rr);
  while (t < duration_s + 1.0) {
    beat_times.push_back(t);
    const double rsa = shape.rsa_fraction * std::sin(2.0 * std::numbers::pi * 0.25 * t + rsa_phase);
    const double jitter = shape.jitter_fraction * rng.uniform(-1.0, 1.0);
    t += mean_rr * (1.0 + rsa + jitter);
  }

  const Wave waves[] = {
      {-0.16, 0.12, 0.025, true},  {-0.03, -0.12, 0.008, false}, {0.0, 1.0, 0.010, false},
      {0.03, -0.22, 0.009, false}, {0.25, shape.t_amplitude, 0.045, true},
  };

  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  if (n == 0) throw InputError("synth_ecg: duration shorter than one sample");
  std::vector<double> samples(n, 0.0);
  std::vector<std::size_t> truth;
  for (std::size_t b = 0; b < beat_times.size(); ++b) {
    const double tb = beat_times[b];
    const double rr = b + 1 < beat_times.size() ? beat_times[b + 1] - tb : mean_rr;
    const double stretch = std::sqrt(rr);
    const double lo = std::max(0.0, std::floor((tb - 0.6) * fs));
    const double hi = std::min(static_cast<double>(n), std::ceil((tb + 0.6) * fs));
    for (auto i = static_cast<std::size_t>(lo); static_cast<double>(i) < hi; ++i) {
      const double ti = static_cast<double>(i) / fs;
      double v = 0.0;
      for (const auto& w : waves) {
        const double centre = tb + (w.scales_with_rr ? w.offset_s * stretch : w.offset_s);
        const double z = (ti - centre) / w.width_s;
        v += w.amplitude * std::exp(-0.5 * z * z);
      }
      samples[i] += gain * v;
    }
    const double idx = std::round(tb * fs);
    if (idx >= 0.0 && idx < static_cast<double>(n)) truth.push_back(static_cast<std::size_t>(idx));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) / fs;
    samples[i] += 0.05 * std::sin(2.0 * std::numbers::pi * wander_hz * ti + wander_phase) +
                  rng.normal(0.0, 0.02);
  }

  EcgRecording rec(subject_id, fs, std::move(samples), Task::other);
  LabelTrack labels("consensus", {{0.0, static_cast<double>(n) / fs, static_cast<Level>(class_level)}});
  return SyntheticEcg{std::move(rec), std::move(labels), std::move(truth)};
}

}  // namespace

SyntheticEcg synth_ecg(int class_level, double duration_s, double fs, std::uint64_t seed,
                       std::string subject_id) {
  return synthesize(class_level, duration_s, fs, seed, std::move(subject_id), std::nullopt);
}

SyntheticSubject synth_subject(const std::string& subject_id, std::span<const int> levels,
                               double seconds_per_level, double fs, std::uint64_t seed) {
  if (levels.empty()) throw InputError("synth_subject: no levels");
  constexpr double kGrid = 10.0;
  // One electrode placement per subject, so amplitude carries no level information.
  Rng subject_rng(derive_seed(seed, subject_id + ":gain"));
  const double gain = subject_rng.uniform(0.85, 1.15);
  std::vector<double> samples;
  std::vector<LabelSegment> segments;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto part = synthesize(levels[i], seconds_per_level, fs,
                           derive_seed(seed, subject_id + ":" + std::to_string(i)), subject_id, gain);
    const double offset = static_cast<double>(samples.size()) / fs;
    const auto s = part.recording.samples();
    samples.insert(samples.end(), s.begin(), s.end());
    const double end = static_cast<double>(samples.size()) / fs;
    for (double t = offset; t + kGrid <= end + kGridTolerance; t += kGrid)
      segments.push_back({t, t + kGrid, static_cast<Level>(levels[i])});
  }
  return {EcgRecording(subject_id, fs, std::move(samples), Task::other),
          LabelTrack("consensus", std::move(segments))};
}

}  // namespace ecgstress
