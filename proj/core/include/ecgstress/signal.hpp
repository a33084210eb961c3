#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgstress {

enum class Task { baseline, rollercoaster, stroop, game, other };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

// Ordinal stress level. Unlabeled marks segments a rater left blank ("-"); it is
// never a trainable class.
enum class Level : int { unlabeled = -1, low = 0, medium = 1, high = 2 };

inline constexpr int kClassCount = 3;

Level level_from_class(int cls);
std::string level_to_text(Level level);
Level parse_level(std::string_view text);

// Single-lead ECG in millivolts. Validated on construction.
class EcgRecording {
 public:
  EcgRecording(std::string subject_id, double sample_rate_hz, std::vector<double> samples,
               Task task = Task::other);

  const std::string& subject_id() const { return subject_id_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  Task task() const { return task_; }
  double duration_s() const { return static_cast<double>(samples_.size()) / sample_rate_hz_; }

 private:
  std::string subject_id_;
  double sample_rate_hz_;
  std::vector<double> samples_;
  Task task_;
};

struct LabelSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  Level level = Level::unlabeled;

  bool operator==(const LabelSegment&) const = default;
};

// Segments are sorted by start and non-overlapping; validated on construction.
class LabelTrack {
 public:
  LabelTrack(std::string rater_id, std::vector<LabelSegment> segments);

  const std::string& rater_id() const { return rater_id_; }
  const std::vector<LabelSegment>& segments() const { return segments_; }

  bool operator==(const LabelTrack&) const = default;

 private:
  std::string rater_id_;
  std::vector<LabelSegment> segments_;
};

struct Window {
  std::string subject_id;
  std::size_t start_sample = 0;
  std::size_t length_samples = 0;
  int label = 0;
  std::vector<double> samples;
};

struct Dataset {
  std::vector<Window> windows;
  std::set<std::string> subjects;
  int class_count = kClassCount;

  // Adds windows and registers their subjects.
  void add(std::vector<Window> more);
  // Throws InputError if a window's subject is unregistered or labels are out of range.
  void validate() const;
};

// ECG CSV (`sample_index,value_mv`) plus JSON sidecar (subject_id, sample_rate_hz, task).
EcgRecording load_recording(const std::filesystem::path& signal_path,
                            const std::filesystem::path& meta_path);
void save_recording(const EcgRecording& rec, const std::filesystem::path& signal_path,
                    const std::filesystem::path& meta_path);

// Label CSV (`start_s,end_s,level`), level in {0,1,2,-}.
LabelTrack load_label_track(const std::filesystem::path& path, std::string rater_id);
void save_label_track(const LabelTrack& track, const std::filesystem::path& path);

// Keeps only grid cells on which every track assigns the same non-unlabeled
// level. Throws InputError when the tracks are not on one shared grid.
LabelTrack consensus_labels(std::span<const LabelTrack> tracks, double segment_s = 10.0);

// Non-overlapping windows fully inside labeled segments; partial windows at
// segment ends are dropped.
std::vector<Window> segment_windows(const EcgRecording& rec, const LabelTrack& labels,
                                    double window_seconds);

struct SyntheticEcg {
  EcgRecording recording;
  LabelTrack labels;
  std::vector<std::size_t> beat_samples;  // ground-truth R-peak positions
};

// Pulse-train ECG surrogate; mean heart rate 60/90/120 bpm for levels 0/1/2,
// shifted by a seeded 2-6 bpm individual offset.
SyntheticEcg synth_ecg(int class_level, double duration_s, double fs, std::uint64_t seed,
                       std::string subject_id = "synthetic");

struct SyntheticSubject {
  EcgRecording recording;
  LabelTrack labels;  // 10 s grid
};

// One synth_ecg segment per entry of `levels`, concatenated in order.
SyntheticSubject synth_subject(const std::string& subject_id, std::span<const int> levels,
                               double seconds_per_level, double fs, std::uint64_t seed);

}  // namespace ecgstress
