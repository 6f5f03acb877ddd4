#pragma once

// Desk-scale synthetic action dataset. Each class moves periodically at its
// own base frequency (cycles per clip); actors perturb phase and rate,
// scenarios add noise, amplitude jitter, box scale changes and pose dropouts.
// Output is the same flow/pose/box/manifest files the pipeline ingests.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/forest.hpp"
#include "freqforest/io.hpp"
#include "freqforest/pose.hpp"

namespace freqforest {

struct ScenarioNoise {
  std::string name;
  double flow_sigma = 0.0;        // additive flow noise, pixels/frame
  double pose_sigma = 0.0;        // additive joint noise, fraction of box height
  double amplitude_jitter = 0.0;  // motion amplitude drawn from [1 - j, 1 + j]
  double scale_jitter = 0.0;      // box scale drawn from [1 - j, 1]
  double pose_dropout = 0.0;      // probability a frame has no detection
};

struct SynthClass {
  std::string label;
  double frequency = 1.0;  // cycles per clip
  double amplitude = 1.0;  // peak flow magnitude, pixels/frame
  bool arm_motion = true;  // arms dominate the motion, otherwise legs
};

struct SynthConfig {
  std::vector<SynthClass> classes;
  std::vector<ScenarioNoise> scenarios;
  std::size_t actors = 5;
  std::size_t clips_per_actor = 1;  // per class and scenario
  std::size_t frames = 60;
  std::size_t field_width = 16;
  std::size_t field_height = 24;
  double rate_jitter = 0.03;  // per-actor relative frequency jitter
  std::uint64_t seed = 1;

  void validate() const {
    if (classes.empty()) throw ArgumentError("synth: need at least one class");
    if (scenarios.empty()) throw ArgumentError("synth: need at least one scenario");
    if (actors == 0 || clips_per_actor == 0 || frames == 0) throw ArgumentError("synth: counts must be >= 1");
    if (field_width < 8 || field_height < 10) throw ArgumentError("synth: flow field too small");
    std::set<double> freqs;
    std::set<std::string> labels;
    for (const auto& c : classes) {
      if (!(c.frequency > 0.0)) throw ArgumentError("synth: class frequencies must be positive");
      if (!freqs.insert(c.frequency).second) throw ArgumentError("synth: duplicate class frequency for '" + c.label + "'");
      if (!text::is_token(c.label) || !labels.insert(c.label).second) throw ArgumentError("synth: bad or duplicate label");
    }
  }
};

// Six KTH-like classes at 2..7 cycles per clip over four scenarios, s1
// cleanest and s2 (scale variation) noisiest.
inline SynthConfig default_synth_config() {
  SynthConfig c;
  c.classes = {{"box", 2.0, 1.2, true},  {"clap", 3.0, 1.0, true}, {"wave", 4.0, 1.4, true},
               {"jog", 5.0, 1.6, false}, {"run", 6.0, 2.2, false}, {"walk", 7.0, 1.0, false}};
  c.scenarios = {{"s1", 0.05, 0.005, 0.05, 0.0, 0.02},
                 {"s2", 0.30, 0.020, 0.25, 0.35, 0.10},
                 {"s3", 0.20, 0.012, 0.15, 0.05, 0.06},
                 {"s4", 0.12, 0.008, 0.10, 0.0, 0.04}};
  return c;
}

namespace detail {

// Portable generator so the same seed gives the same bytes everywhere.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return state_ = splitmix64(state_); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

struct ClipMotion {
  double frequency;  // cycles per clip after actor jitter
  double phase;
  double amplitude;
  double scale;
};

inline Point along(const Point& origin, double length, double angle) {
  // angle measured from straight down, positive towards image-left
  return {origin.x - length * std::sin(angle), origin.y + length * std::cos(angle)};
}

// 15-joint skeleton in box-relative units (box height = 1) at cycle phase theta.
inline Pose15 skeleton(const SynthClass& cls, double theta, double width_ratio) {
  using J = Joint;
  Pose15 p;
  const double cx = 0.5 * width_ratio;
  const double arm = cls.arm_motion ? 0.9 : 0.35;
  const double leg = cls.arm_motion ? 0.08 : 0.45;
  p[J::Head] = {cx, 0.08};
  p[J::Neck] = {cx, 0.18};
  p[J::Torso] = {cx, 0.40};
  p[J::LeftShoulder] = {cx - 0.14 * width_ratio, 0.21};
  p[J::RightShoulder] = {cx + 0.14 * width_ratio, 0.21};
  p[J::LeftHip] = {cx - 0.08 * width_ratio, 0.60};
  p[J::RightHip] = {cx + 0.08 * width_ratio, 0.60};

  const double s = std::sin(theta);
  const double l_upper = 0.35 + arm * s;
  const double r_upper = -0.35 - arm * (cls.arm_motion ? s : -s);
  p[J::LeftElbow] = along(p[J::LeftShoulder], 0.17, l_upper);
  p[J::RightElbow] = along(p[J::RightShoulder], 0.17, r_upper);
  const double bend = 0.5 + 0.4 * std::sin(theta + 0.6);
  p[J::LeftHand] = along(p[J::LeftElbow], 0.15, l_upper + bend);
  p[J::RightHand] = along(p[J::RightElbow], 0.15, r_upper - bend);

  const double l_thigh = leg * s;
  const double r_thigh = -leg * s;
  p[J::LeftKnee] = along(p[J::LeftHip], 0.2, l_thigh);
  p[J::RightKnee] = along(p[J::RightHip], 0.2, r_thigh);
  const double knee = 0.3 * leg * (1.0 + std::sin(theta - 0.8));
  p[J::LeftFoot] = along(p[J::LeftKnee], 0.19, l_thigh - knee);
  p[J::RightFoot] = along(p[J::RightKnee], 0.19, r_thigh - knee);
  return p;
}

// Expands a 15-joint pose into the 26-joint layout of default_joint_map():
// mapped joints take the target position (the four torso sources average to
// it), the rest sit midway along their limb.
inline std::vector<Point> to_raw_joints(const Pose15& p, double spread) {
  using J = Joint;
  auto mid = [](const Point& a, const Point& b) { return Point{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; };
  const Point t = p[J::Torso];
  return {p[J::Head],       p[J::Neck],      p[J::LeftShoulder], mid(p[J::LeftShoulder], p[J::LeftElbow]),
          p[J::LeftElbow],  mid(p[J::LeftElbow], p[J::LeftHand]), p[J::LeftHand],
          {t.x - spread, t.y - spread}, {t.x - spread, t.y + spread}, p[J::LeftHip],
          mid(p[J::LeftHip], p[J::LeftKnee]), p[J::LeftKnee], mid(p[J::LeftKnee], p[J::LeftFoot]), p[J::LeftFoot],
          p[J::RightShoulder], mid(p[J::RightShoulder], p[J::RightElbow]), p[J::RightElbow],
          mid(p[J::RightElbow], p[J::RightHand]), p[J::RightHand], {t.x + spread, t.y - spread},
          {t.x + spread, t.y + spread}, p[J::RightHip], mid(p[J::RightHip], p[J::RightKnee]), p[J::RightKnee],
          mid(p[J::RightKnee], p[J::RightFoot]), p[J::RightFoot]};
}

struct GeneratedClip {
  std::vector<FlowField> flows;
  PoseCandidates poses;
  std::vector<BoundingBox> boxes;
};

inline GeneratedClip generate_clip(const SynthConfig& cfg, const SynthClass& cls, const ScenarioNoise& scen,
                                   const ClipMotion& motion, SynthRng& rng) {
  GeneratedClip clip;
  const auto W = static_cast<double>(cfg.field_width);
  const auto H = static_cast<double>(cfg.field_height);
  const double box_h = (H - 4.0) * motion.scale;
  const double box_w = (W - 4.0) * motion.scale;
  const BoundingBox box{(W - box_w) / 2.0, (H - box_h) / 2.0, box_w, box_h, 0};
  const SubregionLayout layout = partition_bbox(box);

  // Region gains: head, left/right torso-arm, left/right leg.
  const std::array<double, kSubregionCount> gain =
      cls.arm_motion ? std::array<double, kSubregionCount>{0.15, 1.0, 1.0, 0.1, 0.1}
                     : std::array<double, kSubregionCount>{0.3, 0.5, 0.5, 1.0, 1.0};
  const std::array<double, kSubregionCount> offset = {0.0, 0.0, std::numbers::pi, 0.0, std::numbers::pi};
  const std::array<double, kSubregionCount> heading = {90.0, 150.0, 30.0, 210.0, 330.0};

  clip.poses.joints_per_pose = kRawJointCount;
  clip.poses.frames.resize(cfg.frames);
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    const double theta =
        2.0 * std::numbers::pi * motion.frequency * static_cast<double>(t) / static_cast<double>(cfg.frames) + motion.phase;

    FlowField field(cfg.field_width, cfg.field_height);
    for (std::size_t r = 0; r < kSubregionCount; ++r) {
      const double s = std::sin(theta + offset[r]);
      const double mag = motion.amplitude * cls.amplitude * gain[r] * (1.0 + 0.6 * s);
      const double angle = (heading[r] + 70.0 * s) * std::numbers::pi / 180.0;
      const PixelSpan span = pixel_span(layout.rects[r], cfg.field_width, cfg.field_height);
      for (std::size_t py = span.y0; py < span.y1; ++py) {
        for (std::size_t px = span.x0; px < span.x1; ++px) {
          field.at(px, py) = {mag * std::cos(angle), -mag * std::sin(angle)};
        }
      }
    }
    for (FlowVector& v : field.vectors) {
      v.u += scen.flow_sigma * rng.normal();
      v.v += scen.flow_sigma * rng.normal();
    }
    clip.flows.push_back(std::move(field));

    BoundingBox b = box;
    b.frame = t;
    clip.boxes.push_back(b);

    if (rng.uniform() >= scen.pose_dropout) {
      Pose15 rel = skeleton(cls, theta, box_w / box_h);
      DetectedPose det;
      for (const Point& q : to_raw_joints(rel, 0.04)) {
        det.joints.push_back({box.x + box_h * (q.x + scen.pose_sigma * rng.normal()),
                              box.y + box_h * (q.y + scen.pose_sigma * rng.normal())});
      }
      det.score = rng.uniform(0.5, 0.9);
      // A confident detection elsewhere in the frame that must not be chosen.
      if (rng.uniform() < 0.3) {
        DetectedPose distractor = det;
        for (Point& q : distractor.joints) q.x += 3.0 * W;
        distractor.score = 0.97;
        clip.poses.frames[t].push_back(std::move(distractor));
      }
      clip.poses.frames[t].push_back(std::move(det));
    }
  }
  return clip;
}

}  // namespace detail

// Writes clips/<clip_id>.{flow,pose,boxes} plus manifest.txt under out_dir
// and returns the manifest.
inline io::DatasetManifest synth_generate(const SynthConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "clips", ec);
  if (ec) throw IoError("synth: cannot create '" + (out_dir / "clips").string() + "': " + ec.message());

  io::DatasetManifest manifest;
  manifest.base_dir = out_dir;
  for (const auto& c : cfg.classes) manifest.labels.push_back(c.label);
  for (const auto& s : cfg.scenarios) manifest.scenarios.push_back(s.name);

  detail::SynthRng actor_rng(detail::splitmix64(cfg.seed));
  struct ActorTraits {
    double rate;
    double phase;
  };
  std::vector<ActorTraits> actors(cfg.actors);
  for (auto& a : actors) {
    a.rate = 1.0 + actor_rng.uniform(-cfg.rate_jitter, cfg.rate_jitter);
    a.phase = actor_rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  for (std::size_t a = 0; a < cfg.actors; ++a) {
    for (const auto& scen : cfg.scenarios) {
      for (const auto& cls : cfg.classes) {
        for (std::size_t rep = 0; rep < cfg.clips_per_actor; ++rep) {
          const std::string id = "person" + std::to_string(a + 1) + "_" + cls.label + "_" + scen.name + "_" + std::to_string(rep + 1);
          detail::SynthRng rng(detail::splitmix64(cfg.seed ^ detail::fnv1a(id)));
          const detail::ClipMotion motion{cls.frequency * actors[a].rate * rng.uniform(0.99, 1.01),
                                          actors[a].phase + rng.uniform(0.0, 0.5),
                                          rng.uniform(1.0 - scen.amplitude_jitter, 1.0 + scen.amplitude_jitter),
                                          rng.uniform(1.0 - scen.scale_jitter, 1.0)};
          const auto clip = detail::generate_clip(cfg, cls, scen, motion, rng);

          const fs::path flow = fs::path("clips") / (id + ".flow");
          const fs::path pose = fs::path("clips") / (id + ".pose");
          const fs::path boxes = fs::path("clips") / (id + ".boxes");
          io::write_file(out_dir / flow, [](std::ostream& o, const auto& f) { io::write_flow_track(o, f, 3); }, clip.flows);
          io::write_file(out_dir / pose, io::write_pose_track, clip.poses);
          io::write_file(out_dir / boxes, io::write_boxes, clip.boxes);
          manifest.clips.push_back({id, std::to_string(a + 1), scen.name, cls.label, flow, pose, boxes});
        }
      }
    }
  }
  io::write_file(out_dir / "manifest.txt", io::write_manifest, manifest);
  return manifest;
}

}  // namespace freqforest
