#pragma once

// End-to-end glue: clip loading, feature extraction, actor splits,
// evaluation and the scenario-mixing experiment.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/flow.hpp"
#include "freqforest/forest.hpp"
#include "freqforest/io.hpp"
#include "freqforest/pose.hpp"
#include "freqforest/spectral.hpp"

namespace freqforest {

struct ClipData {
  std::vector<FlowField> flows;
  PoseCandidates poses;
  std::vector<BoundingBox> boxes;

  std::size_t frame_count() const noexcept { return flows.size(); }
};

inline ClipData load_clip_data(const io::DatasetManifest& manifest, const io::ActionClip& clip) {
  const fs::path flow_path = manifest.resolve(clip.flow_path);
  const fs::path boxes_path = manifest.resolve(clip.boxes_path);
  ClipData data;
  data.flows = io::read_flow_track(flow_path);
  data.poses = io::read_pose_track(manifest.resolve(clip.pose_path));
  const io::BoxTrack boxes = io::read_boxes(boxes_path);

  const std::size_t frames = data.flows.size();
  if (frames == 0) throw ParseError(flow_path.string(), 1, "flow track has no frames");
  if (boxes.frames.size() != frames || data.poses.frames.size() != frames) {
    throw ParseError(boxes_path.string(), 1,
                     "frame counts disagree for clip '" + clip.clip_id + "': flow " + std::to_string(frames) + ", pose " +
                         std::to_string(data.poses.frames.size()) + ", boxes " + std::to_string(boxes.frames.size()));
  }
  if (std::none_of(boxes.frames.begin(), boxes.frames.end(), [](const auto& b) { return b.has_value(); })) {
    throw ParseError(boxes_path.string(), 1, "no annotated frames for clip '" + clip.clip_id + "'");
  }
  data.boxes = io::complete_boxes(boxes);
  return data;
}

struct ExtractOptions {
  std::size_t components = kDefaultComponents;
  std::size_t smoothing_window = kDefaultSmoothingWindow;
  JointMap joint_map = default_joint_map();
};

// Best-matching pose per frame, converted to 15 joints.
inline PoseTrack match_pose_track(const PoseCandidates& candidates, std::span<const BoundingBox> boxes,
                                  const JointMap& map) {
  if (candidates.frames.size() != boxes.size()) throw ArgumentError("match_pose_track: frame counts differ");
  PoseTrack track;
  track.frames.resize(boxes.size());
  for (std::size_t f = 0; f < boxes.size(); ++f) {
    const auto best = select_best_pose(candidates.frames[f], boxes[f]);
    if (!best) continue;
    if (candidates.joints_per_pose == kJointCount) {
      Pose15 p;
      std::copy(best->joints.begin(), best->joints.end(), p.joints.begin());
      track.frames[f] = p;
    } else {
      RawPose raw;
      std::copy(best->joints.begin(), best->joints.end(), raw.joints.begin());
      raw.score = best->score;
      track.frames[f] = convert_pose(raw, map);
    }
  }
  return track;
}

// All 46 names: the 31 flow features followed by the 15 pose features.
inline std::vector<std::string> feature_names() {
  auto names = flow_feature_names();
  for (auto& n : pose_feature_names()) names.push_back(std::move(n));
  return names;
}

inline Sample extract_features(const ClipData& clip, const ExtractOptions& options = {}) {
  SeriesSet series = flow_feature_series(clip.flows, clip.boxes);
  SeriesSet pose = pose_feature_series(match_pose_track(clip.poses, clip.boxes, options.joint_map), options.smoothing_window);
  for (auto& s : pose) series.push_back(std::move(s));

  Sample sample;
  for (const NamedSeries& s : series) {
    sample.features.emplace(s.name, frequency_feature(s.values, options.components, s.name).components);
  }
  return sample;
}

inline Sample extract_clip(const io::DatasetManifest& manifest, const io::ActionClip& clip,
                           const ExtractOptions& options = {}) {
  Sample s = extract_features(load_clip_data(manifest, clip), options);
  s.clip_id = clip.clip_id;
  s.label = clip.label;
  s.actor = clip.actor;
  s.scenario = clip.scenario;
  return s;
}

inline io::FeatureFile extract_manifest(const io::DatasetManifest& manifest, const ExtractOptions& options = {}) {
  io::FeatureFile file;
  file.components = options.components;
  file.names = feature_names();
  file.samples.reserve(manifest.clips.size());
  for (const auto& clip : manifest.clips) file.samples.push_back(extract_clip(manifest, clip, options));
  return file;
}

// ------------------------------------------------------------------ splits

// "007" and "7" name the same actor.
inline std::string normalize_actor(std::string_view id) {
  if (id.empty() || !std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::string(id);
  }
  const auto first = id.find_first_not_of('0');
  return first == std::string_view::npos ? "0" : std::string(id.substr(first));
}

// Fills in actor/scenario from KTH-style clip ids (person07_boxing_d3)
// when a sample does not carry them.
inline void infer_actor_scenario(Sample& s) {
  static const std::regex kth(R"(person0*(\d+)_[A-Za-z]+_d(\d+).*)");
  std::smatch m;
  if (!std::regex_match(s.clip_id, m, kth)) return;
  if (s.actor.empty()) s.actor = m[1].str();
  if (s.scenario.empty()) s.scenario = "s" + m[2].str();
}

struct SplitConfig {
  std::set<std::string> train_actors;
  std::set<std::string> test_actors;
};

// The standard KTH partition: training and validation actors (16) train,
// the remaining 9 test.
inline SplitConfig kth_split() {
  SplitConfig c;
  for (int a : {11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 23, 24, 25, 1, 4}) c.train_actors.insert(std::to_string(a));
  for (int a : {22, 2, 3, 5, 6, 7, 8, 9, 10}) c.test_actors.insert(std::to_string(a));
  return c;
}

// Partitions records (anything with an `actor` member) by actor membership.
// Records of actors named in neither set are dropped.
template <typename Record>
std::pair<std::vector<Record>, std::vector<Record>> split_by_actor(const std::vector<Record>& records,
                                                                    const SplitConfig& config) {
  if (config.train_actors.empty() || config.test_actors.empty()) {
    throw ArgumentError("split_by_actor: train and test actor sets must both be non-empty");
  }
  std::set<std::string> train, test, present;
  for (const auto& a : config.train_actors) train.insert(normalize_actor(a));
  for (const auto& a : config.test_actors) {
    if (!test.insert(normalize_actor(a)).second) continue;
    if (train.count(normalize_actor(a))) throw ArgumentError("split_by_actor: actor " + a + " is in both sets");
  }
  for (const auto& r : records) present.insert(normalize_actor(r.actor));
  for (const auto* side : {&train, &test}) {
    for (const auto& a : *side) {
      if (!present.count(a)) throw ArgumentError("split_by_actor: actor " + a + " does not appear in the data");
    }
  }
  std::pair<std::vector<Record>, std::vector<Record>> out;
  for (const auto& r : records) {
    const std::string a = normalize_actor(r.actor);
    if (train.count(a)) out.first.push_back(r);
    else if (test.count(a)) out.second.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- evaluation

struct ConfusionMatrix {
  std::vector<std::string> labels;
  // counts[true][predicted]
  std::vector<std::vector<std::size_t>> counts;
  double accuracy = 0.0;

  std::size_t support(std::size_t row) const {
    std::size_t s = 0;
    for (std::size_t c : counts[row]) s += c;
    return s;
  }
  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) s += support(r);
    return s;
  }
  // Row-normalized proportions; nullopt for rows without test samples.
  std::optional<std::vector<double>> row(std::size_t r) const {
    const std::size_t s = support(r);
    if (s == 0) return std::nullopt;
    std::vector<double> out(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) out[c] = static_cast<double>(counts[r][c]) / static_cast<double>(s);
    return out;
  }
};

struct Evaluation {
  ConfusionMatrix matrix;
  std::vector<std::pair<std::string, std::string>> predictions;  // clip_id, predicted label
};

// Orders labels box, clap, wave, jog, run, walk (short or long KTH names),
// with any other labels after them in lexicographic order.
inline std::vector<std::string> action_order(const std::set<std::string>& labels) {
  static const std::array<std::array<std::string_view, 2>, 6> kActions{{{"box", "boxing"},
                                                                         {"clap", "handclapping"},
                                                                         {"wave", "handwaving"},
                                                                         {"jog", "jogging"},
                                                                         {"run", "running"},
                                                                         {"walk", "walking"}}};
  auto rank = [](const std::string& l) {
    for (std::size_t i = 0; i < kActions.size(); ++i) {
      if (l == kActions[i][0] || l == kActions[i][1]) return i;
    }
    return kActions.size();
  };
  std::vector<std::string> out(labels.begin(), labels.end());
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  return out;
}

// Rows and columns follow `vocabulary`, extended by any label seen in the
// forest or test set but missing from it (in action_order).
inline Evaluation evaluate(const FrequencyForest& forest, std::span<const Sample> test,
                           std::vector<std::string> vocabulary = {}) {
  if (test.empty()) throw ArgumentError("evaluate: empty test set");
  std::set<std::string> extra(forest.labels().begin(), forest.labels().end());
  for (const auto& s : test) extra.insert(s.label);
  for (const auto& l : vocabulary) extra.erase(l);
  for (auto& l : action_order(extra)) vocabulary.push_back(std::move(l));

  auto index_of = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(vocabulary.begin(), vocabulary.end(), l) - vocabulary.begin());
  };
  Evaluation ev;
  ev.matrix.labels = vocabulary;
  ev.matrix.counts.assign(vocabulary.size(), std::vector<std::size_t>(vocabulary.size(), 0));
  std::size_t correct = 0;
  for (const Sample& s : test) {
    const Prediction p = forest.predict(s.features);
    ++ev.matrix.counts[index_of(s.label)][index_of(p.label)];
    if (p.label == s.label) ++correct;
    ev.predictions.emplace_back(s.clip_id, p.label);
  }
  ev.matrix.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return ev;
}

// Aligned table: rows are true labels, columns predicted labels.
inline void print_confusion(std::ostream& out, const ConfusionMatrix& m) {
  std::size_t width = 6;
  for (const auto& l : m.labels) width = std::max(width, l.size() + 1);
  out << std::setw(static_cast<int>(width)) << "";
  for (const auto& l : m.labels) out << std::setw(static_cast<int>(width)) << l;
  out << '\n';
  for (std::size_t r = 0; r < m.labels.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(width)) << m.labels[r] << std::right;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.labels.size(); ++c) {
      if (row) out << std::setw(static_cast<int>(width)) << std::fixed << std::setprecision(2) << (*row)[c];
      else out << std::setw(static_cast<int>(width)) << "-";
    }
    if (!row) out << "   (no test samples)";
    out << '\n';
  }
  out << "accuracy " << std::fixed << std::setprecision(4) << m.accuracy << " (" << m.total() << " samples)\n";
  out.unsetf(std::ios::fixed);
}

// --------------------------------------------------------------- experiments

struct ExperimentResult {
  std::set<std::string> train_scenarios;
  std::set<std::string> test_scenarios;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double mean_accuracy = 0.0;
  std::vector<ConfusionMatrix> runs;
};

// Seed for run `run` of an experiment with base seed `seed`.
inline std::uint64_t run_seed(std::uint64_t seed, std::size_t run) { return detail::splitmix64(seed + run); }

// Trains on train-actor samples from `train_scenarios` and tests on
// test-actor samples from `test_scenarios`, `runs` times with derived seeds.
inline ExperimentResult scenario_experiment(const std::vector<Sample>& samples,
                                            const std::set<std::string>& train_scenarios,
                                            const std::set<std::string>& test_scenarios, const SplitConfig& split,
                                            std::size_t runs, const ForestParams& params,
                                            const std::vector<std::string>& vocabulary = {}) {
  if (train_scenarios.empty() || test_scenarios.empty()) {
    throw DomainError("scenario_experiment: scenario sets must be non-empty");
  }
  if (runs == 0) throw ArgumentError("scenario_experiment: runs must be positive");
  const auto [train_all, test_all] = split_by_actor(samples, split);
  ExperimentResult result{train_scenarios, test_scenarios, 0, 0, 0.0, {}};
  std::vector<Sample> train, test;
  for (const auto& s : train_all) if (train_scenarios.count(s.scenario)) train.push_back(s);
  for (const auto& s : test_all) if (test_scenarios.count(s.scenario)) test.push_back(s);
  if (train.empty()) throw DomainError("scenario_experiment: no training samples for the chosen scenarios");
  if (test.empty()) throw DomainError("scenario_experiment: no test samples for the chosen scenarios");
  result.train_count = train.size();
  result.test_count = test.size();

  double sum = 0.0;
  for (std::size_t run = 0; run < runs; ++run) {
    ForestParams p = params;
    p.seed = run_seed(params.seed, run);
    const auto forest = FrequencyForest::train(train, p);
    auto ev = evaluate(forest, test, vocabulary);
    sum += ev.matrix.accuracy;
    result.runs.push_back(std::move(ev.matrix));
  }
  result.mean_accuracy = sum / static_cast<double>(runs);
  return result;
}

// Nested test configurations S1 = {s1}, S2 = {s1,s4}, S3 = {s1,s3,s4},
// S4 = {s1,s2,s3,s4}.
inline std::vector<std::set<std::string>> nested_test_sets() {
  return {{"s1"}, {"s1", "s4"}, {"s1", "s3", "s4"}, {"s1", "s2", "s3", "s4"}};
}

inline std::set<std::string> parse_scenario_set(std::string_view text) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const auto item = text.substr(start, comma - start);
    if (!item.empty()) out.emplace(item);
    start = comma + 1;
  }
  return out;
}

inline std::string format_scenario_set(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? "," : "") + x;
  return out + "}";
}

}  // namespace freqforest
