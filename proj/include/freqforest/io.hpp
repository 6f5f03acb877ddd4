#pragma once

// Readers and writers for the line-oriented track, manifest, joint-map and
// feature files. Every format is whitespace-separated text with '#' comments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/flow.hpp"
#include "freqforest/forest.hpp"
#include "freqforest/pose.hpp"
#include "freqforest/text.hpp"

namespace freqforest {

namespace fs = std::filesystem;

// A detector output as stored in a pose track: 26 raw or 15 converted joints.
struct DetectedPose {
  std::vector<Point> joints;
  double score = 0.0;
};

// Candidates per frame; a frame may have none.
struct PoseCandidates {
  std::size_t joints_per_pose = 0;
  std::vector<std::vector<DetectedPose>> frames;
};

namespace io {

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// ---------------------------------------------------------------- flow track

inline std::vector<FlowField> read_flow_track(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  r.require_next("FLOWTRACK header");
  r.expect_keyword("FLOWTRACK");
  r.expect_size(5, "FLOWTRACK header");
  if (r.tokens()[1] != "1") r.fail("unsupported flow track version");
  const std::size_t frames = r.count(2, "frame count");
  const std::size_t width = r.count(3, "width");
  const std::size_t height = r.count(4, "height");
  if (width == 0 || height == 0) r.fail("flow field must have positive width and height");

  std::vector<FlowField> flows;
  flows.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    r.require_next("FRAME " + std::to_string(f));
    r.expect_keyword("FRAME");
    r.expect_size(2, "FRAME");
    if (r.count(1, "frame index") != f) r.fail("expected FRAME " + std::to_string(f));
    FlowField field(width, height);
    for (std::size_t p = 0; p < width * height; ++p) {
      if (!r.next()) r.fail("frame " + std::to_string(f) + " ends after " + std::to_string(p) + " of " +
                            std::to_string(width * height) + " vectors");
      auto where = [&] { return "frame " + std::to_string(f) + " pixel " + std::to_string(p); };
      if (r.tokens().size() != 2) r.fail("expected 'u v' at " + where());
      const auto u = text::parse_double(r.tokens()[0]);
      const auto v = text::parse_double(r.tokens()[1]);
      if (!u || !v || !std::isfinite(*u) || !std::isfinite(*v)) r.fail("malformed flow vector at " + where());
      field.vectors[p] = {*u, *v};
    }
    flows.push_back(std::move(field));
  }
  if (r.next()) r.fail("trailing content after " + std::to_string(frames) + " frames");
  return flows;
}

inline std::vector<FlowField> read_flow_track(const fs::path& path) {
  auto in = open_input(path);
  return read_flow_track(in, path.string());
}

inline void write_flow_track(std::ostream& out, const std::vector<FlowField>& flows, int precision = 17) {
  if (flows.empty()) throw ArgumentError("write_flow_track: no frames");
  const std::size_t w = flows.front().width, h = flows.front().height;
  out << "FLOWTRACK 1 " << flows.size() << ' ' << w << ' ' << h << '\n';
  char buf[64];
  for (std::size_t f = 0; f < flows.size(); ++f) {
    if (flows[f].width != w || flows[f].height != h) throw ArgumentError("write_flow_track: frame sizes differ");
    out << "FRAME " << f << '\n';
    for (const FlowVector& v : flows[f].vectors) {
      if (precision >= 17) {
        out << text::format_double(v.u) << ' ' << text::format_double(v.v) << '\n';
      } else {
        std::snprintf(buf, sizeof(buf), "%.*f %.*f\n", precision, v.u, precision, v.v);
        out << buf;
      }
    }
  }
}

// ---------------------------------------------------------------- pose track

// Frames may appear in any order; a repeated FRAME index adds another
// candidate and an absent index means no detection. A candidate's score is
// the mean of its per-joint scores.
inline PoseCandidates read_pose_track(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  r.require_next("POSETRACK header");
  r.expect_keyword("POSETRACK");
  r.expect_size(4, "POSETRACK header");
  if (r.tokens()[1] != "1") r.fail("unsupported pose track version");
  const std::size_t frames = r.count(2, "frame count");
  const std::size_t joints = r.count(3, "joint count");
  if (joints != kRawJointCount && joints != kJointCount) r.fail("joint count must be 26 or 15");

  PoseCandidates track;
  track.joints_per_pose = joints;
  track.frames.resize(frames);
  while (r.next()) {
    r.expect_keyword("FRAME");
    r.expect_size(2, "FRAME");
    const std::size_t f = r.count(1, "frame index");
    if (f >= frames) r.fail("frame index " + std::to_string(f) + " out of range");
    DetectedPose pose;
    pose.joints.resize(joints);
    double score_sum = 0.0;
    for (std::size_t j = 0; j < joints; ++j) {
      r.require_next("joint line");
      if (r.tokens().size() != 3) r.fail("expected 'x y score' for joint " + std::to_string(j) + " of frame " + std::to_string(f));
      const double x = r.number(0, "x"), y = r.number(1, "y"), s = r.number(2, "score");
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(s)) r.fail("non-finite joint value in frame " + std::to_string(f));
      pose.joints[j] = {x, y};
      score_sum += s;
    }
    pose.score = score_sum / static_cast<double>(joints);
    track.frames[f].push_back(std::move(pose));
  }
  return track;
}

inline PoseCandidates read_pose_track(const fs::path& path) {
  auto in = open_input(path);
  return read_pose_track(in, path.string());
}

inline void write_pose_track(std::ostream& out, const PoseCandidates& track) {
  out << "POSETRACK 1 " << track.frames.size() << ' ' << track.joints_per_pose << '\n';
  for (std::size_t f = 0; f < track.frames.size(); ++f) {
    for (const DetectedPose& pose : track.frames[f]) {
      if (pose.joints.size() != track.joints_per_pose) throw ArgumentError("write_pose_track: joint count mismatch");
      out << "FRAME " << f << '\n';
      for (const Point& p : pose.joints) {
        out << text::format_double(p.x) << ' ' << text::format_double(p.y) << ' ' << text::format_double(pose.score) << '\n';
      }
    }
  }
}

// --------------------------------------------------------------------- boxes

// Boxes per annotated frame; frames without a box line are absent.
struct BoxTrack {
  std::vector<std::optional<BoundingBox>> frames;
};

inline BoxTrack read_boxes(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  r.require_next("BOXES header");
  r.expect_keyword("BOXES");
  r.expect_size(3, "BOXES header");
  if (r.tokens()[1] != "1") r.fail("unsupported boxes version");
  const std::size_t frames = r.count(2, "frame count");
  BoxTrack track;
  track.frames.resize(frames);
  while (r.next()) {
    r.expect_size(5, "box line 'frame x y w h'");
    const std::size_t f = r.count(0, "frame");
    if (f >= frames) r.fail("frame index " + std::to_string(f) + " out of range");
    if (track.frames[f]) r.fail("duplicate box for frame " + std::to_string(f));
    BoundingBox b{r.number(1, "x"), r.number(2, "y"), r.number(3, "w"), r.number(4, "h"), f};
    if (!(b.w > 0.0) || !(b.h > 0.0)) r.fail("box for frame " + std::to_string(f) + " needs positive w and h");
    track.frames[f] = b;
  }
  return track;
}

inline BoxTrack read_boxes(const fs::path& path) {
  auto in = open_input(path);
  return read_boxes(in, path.string());
}

inline void write_boxes(std::ostream& out, const std::vector<BoundingBox>& boxes) {
  out << "BOXES 1 " << boxes.size() << '\n';
  for (std::size_t f = 0; f < boxes.size(); ++f) {
    const auto& b = boxes[f];
    out << f << ' ' << text::format_double(b.x) << ' ' << text::format_double(b.y) << ' ' << text::format_double(b.w)
        << ' ' << text::format_double(b.h) << '\n';
  }
}

// Fills unannotated frames by interpolating box geometry between annotated
// neighbours (edges copy the nearest annotation).
inline std::vector<BoundingBox> complete_boxes(const BoxTrack& track) {
  const std::size_t n = track.frames.size();
  std::vector<BoundingBox> out(n);
  std::vector<std::optional<double>> samples(n);
  auto fill = [&](auto member) {
    for (std::size_t f = 0; f < n; ++f) samples[f] = track.frames[f] ? std::optional<double>((*track.frames[f]).*member) : std::nullopt;
    const TimeSeries s = interpolate_gaps(samples);
    for (std::size_t f = 0; f < n; ++f) out[f].*member = s[f];
  };
  fill(&BoundingBox::x);
  fill(&BoundingBox::y);
  fill(&BoundingBox::w);
  fill(&BoundingBox::h);
  for (std::size_t f = 0; f < n; ++f) out[f].frame = f;
  return out;
}

// ----------------------------------------------------------------- joint map

inline JointMap read_joint_map(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  JointMap map;
  std::set<std::string> seen;
  while (r.next()) {
    const std::string target(r.tokens()[0]);
    const auto joint = joint_from_name(target);
    if (!joint) r.fail("unknown target joint '" + target + "'");
    if (!seen.insert(target).second) r.fail("duplicate target joint '" + target + "'");
    if (r.tokens().size() < 2) r.fail("target '" + target + "' lists no source indices");
    auto& sources = map.sources[static_cast<std::size_t>(*joint)];
    for (std::size_t i = 1; i < r.tokens().size(); ++i) {
      const std::size_t s = r.count(i, "source index");
      if (s >= kRawJointCount) r.fail("source index " + std::to_string(s) + " out of range 0..25");
      sources.push_back(s);
    }
  }
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (map.sources[j].empty()) throw ParseError(source, r.line(), "missing target joint '" + std::string(kJointNames[j]) + "'");
  }
  return map;
}

inline JointMap read_joint_map(const fs::path& path) {
  auto in = open_input(path);
  return read_joint_map(in, path.string());
}

inline void write_joint_map(std::ostream& out, const JointMap& map) {
  for (std::size_t j = 0; j < kJointCount; ++j) {
    out << kJointNames[j];
    for (std::size_t s : map.sources[j]) out << ' ' << s;
    out << '\n';
  }
}

// ------------------------------------------------------------------ manifest

struct ActionClip {
  std::string clip_id;
  std::string actor;
  std::string scenario;
  std::string label;
  fs::path flow_path;
  fs::path pose_path;
  fs::path boxes_path;

  friend bool operator==(const ActionClip&, const ActionClip&) = default;
};

struct DatasetManifest {
  std::vector<std::string> labels;
  std::vector<std::string> scenarios;
  double frame_rate = 25.0;
  std::vector<ActionClip> clips;
  // Relative file refs resolve against this directory.
  fs::path base_dir;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
  std::vector<std::string> actors() const {
    std::set<std::string> s;
    for (const auto& c : clips) s.insert(c.actor);
    return {s.begin(), s.end()};
  }
};

// Header lines LABELS/SCENARIOS (required) and FPS (optional) precede the
// records `clip_id actor scenario label flow_path pose_path boxes_path`.
inline DatasetManifest read_manifest(std::istream& in, const std::string& source, const fs::path& base_dir,
                                     bool check_files = true) {
  text::LineReader r(in, source);
  DatasetManifest m;
  m.base_dir = base_dir;
  std::set<std::string> ids;
  while (r.next()) {
    const auto& tok = r.tokens();
    if (tok[0] == "LABELS" || tok[0] == "SCENARIOS") {
      if (!m.clips.empty()) r.fail(std::string(tok[0]) + " must precede clip records");
      auto& vocab = tok[0] == "LABELS" ? m.labels : m.scenarios;
      if (!vocab.empty()) r.fail("duplicate " + std::string(tok[0]) + " line");
      if (tok.size() < 2) r.fail(std::string(tok[0]) + " needs at least one entry");
      for (std::size_t i = 1; i < tok.size(); ++i) vocab.emplace_back(tok[i]);
      continue;
    }
    if (tok[0] == "FPS") {
      r.expect_size(2, "FPS");
      m.frame_rate = r.number(1, "frame rate");
      if (!(m.frame_rate > 0.0)) r.fail("frame rate must be positive");
      continue;
    }
    if (m.labels.empty() || m.scenarios.empty()) r.fail("LABELS and SCENARIOS must precede clip records");
    r.expect_size(7, "clip record");
    ActionClip c{std::string(tok[0]), std::string(tok[1]), std::string(tok[2]), std::string(tok[3]),
                 fs::path(std::string(tok[4])), fs::path(std::string(tok[5])), fs::path(std::string(tok[6]))};
    if (!ids.insert(c.clip_id).second) r.fail("duplicate clip_id '" + c.clip_id + "'");
    if (std::find(m.scenarios.begin(), m.scenarios.end(), c.scenario) == m.scenarios.end()) {
      r.fail("unknown scenario '" + c.scenario + "' for clip '" + c.clip_id + "'");
    }
    if (std::find(m.labels.begin(), m.labels.end(), c.label) == m.labels.end()) {
      r.fail("unknown label '" + c.label + "' for clip '" + c.clip_id + "'");
    }
    if (check_files) {
      for (const fs::path* p : {&c.flow_path, &c.pose_path, &c.boxes_path}) {
        if (!fs::exists(m.resolve(*p))) r.fail("missing file '" + m.resolve(*p).string() + "' for clip '" + c.clip_id + "'");
      }
    }
    m.clips.push_back(std::move(c));
  }
  if (m.labels.empty() || m.scenarios.empty()) {
    throw ParseError(source, r.line(), "manifest needs LABELS and SCENARIOS header lines");
  }
  return m;
}

inline DatasetManifest read_manifest(const fs::path& path, bool check_files = true) {
  auto in = open_input(path);
  return read_manifest(in, path.string(), path.parent_path(), check_files);
}

inline void write_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "LABELS";
  for (const auto& l : m.labels) out << ' ' << l;
  out << "\nSCENARIOS";
  for (const auto& s : m.scenarios) out << ' ' << s;
  out << "\nFPS " << text::format_double(m.frame_rate) << '\n';
  for (const auto& c : m.clips) {
    out << c.clip_id << ' ' << c.actor << ' ' << c.scenario << ' ' << c.label << ' ' << c.flow_path.generic_string()
        << ' ' << c.pose_path.generic_string() << ' ' << c.boxes_path.generic_string() << '\n';
  }
}

// -------------------------------------------------------------- feature file

struct FeatureFile {
  std::size_t components = 0;
  std::vector<std::string> names;
  std::vector<Sample> samples;
};

// Sample header `clip_id label [actor scenario]`, followed by one
// `name v1 .. vN` line per feature. Actor and scenario are optional; when
// absent, KTH-style ids (personNN_action_dK) supply them.
inline FeatureFile read_features(std::istream& in, const std::string& source) {
  text::LineReader r(in, source);
  r.require_next("FEATURES header");
  r.expect_keyword("FEATURES");
  if (r.tokens().size() < 4) r.fail("FEATURES header needs version, component count and names");
  if (r.tokens()[1] != "1") r.fail("unsupported feature file version");
  FeatureFile file;
  file.components = r.count(2, "component count");
  if (file.components == 0) r.fail("component count must be positive");
  std::set<std::string> name_set;
  for (std::size_t i = 3; i < r.tokens().size(); ++i) {
    file.names.emplace_back(r.tokens()[i]);
    if (!name_set.insert(file.names.back()).second) r.fail("duplicate feature name '" + file.names.back() + "'");
  }

  std::set<std::string> ids;
  while (r.next()) {
    const auto& tok = r.tokens();
    if (tok.size() != 2 && tok.size() != 4) r.fail("expected sample header 'clip_id label [actor scenario]'");
    Sample s;
    s.clip_id = std::string(tok[0]);
    s.label = std::string(tok[1]);
    if (tok.size() == 4) {
      s.actor = std::string(tok[2]);
      s.scenario = std::string(tok[3]);
    }
    if (!ids.insert(s.clip_id).second) r.fail("duplicate clip_id '" + s.clip_id + "'");
    for (std::size_t f = 0; f < file.names.size(); ++f) {
      r.require_next("feature line for clip '" + s.clip_id + "'");
      const std::string name(r.tokens()[0]);
      if (!name_set.count(name)) r.fail("unknown feature '" + name + "' for clip '" + s.clip_id + "'");
      if (s.features.count(name)) r.fail("duplicate feature '" + name + "' for clip '" + s.clip_id + "'");
      r.expect_size(1 + file.components, "feature line '" + name + "'");
      std::vector<double> v(file.components);
      for (std::size_t i = 0; i < file.components; ++i) v[i] = r.number(1 + i, "component");
      s.features.emplace(name, std::move(v));
    }
    file.samples.push_back(std::move(s));
  }
  return file;
}

inline FeatureFile read_features(const fs::path& path) {
  auto in = open_input(path);
  return read_features(in, path.string());
}

inline void write_features(std::ostream& out, const FeatureFile& file) {
  out << "FEATURES 1 " << file.components;
  for (const auto& n : file.names) out << ' ' << n;
  out << '\n';
  for (const Sample& s : file.samples) {
    out << s.clip_id << ' ' << s.label;
    if (!s.actor.empty() || !s.scenario.empty()) out << ' ' << s.actor << ' ' << s.scenario;
    out << '\n';
    for (const auto& n : file.names) {
      auto it = s.features.find(n);
      if (it == s.features.end()) throw ArgumentError("write_features: clip '" + s.clip_id + "' lacks feature '" + n + "'");
      out << n;
      for (double v : it->second) out << ' ' << text::format_double(v);
      out << '\n';
    }
  }
}

template <typename Writer, typename Value>
void write_file(const fs::path& path, Writer&& writer, const Value& value) {
  auto out = open_output(path);
  writer(out, value);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace io
}  // namespace freqforest
