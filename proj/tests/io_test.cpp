#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "freqforest/io.hpp"
#include "freqforest/pipeline.hpp"

namespace ff = freqforest;
namespace io = freqforest::io;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("freqforest_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& content) const {
    std::ofstream(path_ / name) << content;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string flow_text(std::size_t frames, std::size_t w, std::size_t h) {
  std::ostringstream out;
  out << "FLOWTRACK 1 " << frames << ' ' << w << ' ' << h << '\n';
  for (std::size_t f = 0; f < frames; ++f) {
    out << "FRAME " << f << '\n';
    for (std::size_t p = 0; p < w * h; ++p) out << "1 0\n";
  }
  return out.str();
}

std::string boxes_text(std::size_t frames) {
  std::ostringstream out;
  out << "BOXES 1 " << frames << '\n';
  for (std::size_t f = 0; f < frames; ++f) out << f << " 0 0 4 5\n";
  return out.str();
}

std::string pose_text(std::size_t frames) {
  std::ostringstream out;
  out << "POSETRACK 1 " << frames << " 15\n";
  for (std::size_t f = 0; f < frames; ++f) {
    out << "FRAME " << f << '\n';
    for (int j = 0; j < 15; ++j) out << 0.2 * (j % 4) << ' ' << 0.3 * (j % 5) << " 0.9\n";
  }
  return out.str();
}

const char* kManifestHeader = "LABELS box clap\nSCENARIOS s1 s2 s3 s4\n";

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(Manifest, WellFormedThreeClips) {
  TempDir dir;
  for (const char* id : {"a", "b", "c"}) {
    dir.write(std::string(id) + ".flow", "");
    dir.write(std::string(id) + ".pose", "");
    dir.write(std::string(id) + ".boxes", "");
  }
  const auto path = dir.write("manifest.txt", std::string("# three clips\n") + kManifestHeader +
                                                  "a 1 s1 box a.flow a.pose a.boxes\n"
                                                  "b 2 s2 clap b.flow b.pose b.boxes  # trailing comment\n"
                                                  "\n"
                                                  "c 03 s4 box c.flow c.pose c.boxes\n");
  const auto m = io::read_manifest(path);
  ASSERT_EQ(m.clips.size(), 3u);
  EXPECT_EQ(m.clips[1].clip_id, "b");
  EXPECT_EQ(m.clips[1].label, "clap");
  EXPECT_EQ(m.clips[2].actor, "03");
  EXPECT_EQ(m.resolve(m.clips[0].flow_path), dir.path() / "a.flow");
  EXPECT_EQ(m.labels, (std::vector<std::string>{"box", "clap"}));
}

TEST(Manifest, UnknownScenarioNamesLine) {
  std::istringstream in(std::string(kManifestHeader) + "a 1 s1 box f p b\nb 1 s5 box f p b\n");
  const auto msg = error_of([&] { io::read_manifest(in, "m.txt", ".", false); });
  EXPECT_NE(msg.find("m.txt:4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("s5"), std::string::npos) << msg;
}

TEST(Manifest, RejectsDuplicatesUnknownLabelsAndMissingFiles) {
  std::istringstream dup(std::string(kManifestHeader) + "a 1 s1 box f p b\na 2 s1 box f p b\n");
  EXPECT_NE(error_of([&] { io::read_manifest(dup, "m", ".", false); }).find("duplicate clip_id"), std::string::npos);
  std::istringstream label(std::string(kManifestHeader) + "a 1 s1 jump f p b\n");
  EXPECT_THROW(io::read_manifest(label, "m", ".", false), ff::ParseError);
  std::istringstream no_header("a 1 s1 box f p b\n");
  EXPECT_THROW(io::read_manifest(no_header, "m", ".", false), ff::ParseError);
  std::istringstream short_line(std::string(kManifestHeader) + "a 1 s1 box f p\n");
  EXPECT_THROW(io::read_manifest(short_line, "m", ".", false), ff::ParseError);

  TempDir dir;
  const auto path = dir.write("manifest.txt", std::string(kManifestHeader) + "a 1 s1 box nope.flow nope.pose nope.boxes\n");
  const auto msg = error_of([&] { io::read_manifest(path); });
  EXPECT_NE(msg.find("missing file"), std::string::npos) << msg;
  EXPECT_NE(msg.find(":3"), std::string::npos) << msg;
}

TEST(Manifest, RoundTrip) {
  io::DatasetManifest m;
  m.labels = {"box", "clap"};
  m.scenarios = {"s1", "s2"};
  m.frame_rate = 12.5;
  m.clips = {{"x1", "4", "s2", "clap", "clips/x1.flow", "clips/x1.pose", "clips/x1.boxes"},
             {"x2", "5", "s1", "box", "clips/x2.flow", "clips/x2.pose", "clips/x2.boxes"}};
  std::ostringstream out;
  io::write_manifest(out, m);
  std::istringstream in(out.str());
  const auto back = io::read_manifest(in, "m", ".", false);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.scenarios, m.scenarios);
  EXPECT_EQ(back.frame_rate, m.frame_rate);
  EXPECT_EQ(back.clips, m.clips);
}

TEST(ClipData, AlignedFramesLoad) {
  TempDir dir;
  dir.write("c.flow", flow_text(40, 4, 5));
  dir.write("c.pose", pose_text(40));
  dir.write("c.boxes", boxes_text(40));
  const auto path = dir.write("manifest.txt", std::string(kManifestHeader) + "c 1 s1 box c.flow c.pose c.boxes\n");
  const auto m = io::read_manifest(path);
  const auto data = ff::load_clip_data(m, m.clips[0]);
  EXPECT_EQ(data.flows.size(), 40u);
  EXPECT_EQ(data.boxes.size(), 40u);
  EXPECT_EQ(data.poses.frames.size(), 40u);
  EXPECT_EQ(data.poses.joints_per_pose, 15u);
}

TEST(ClipData, FrameCountMismatch) {
  TempDir dir;
  dir.write("c.flow", flow_text(40, 4, 5));
  dir.write("c.pose", pose_text(40));
  dir.write("c.boxes", boxes_text(39));
  const auto path = dir.write("manifest.txt", std::string(kManifestHeader) + "c 1 s1 box c.flow c.pose c.boxes\n");
  const auto m = io::read_manifest(path);
  const auto msg = error_of([&] { ff::load_clip_data(m, m.clips[0]); });
  EXPECT_NE(msg.find("flow 40"), std::string::npos) << msg;
  EXPECT_NE(msg.find("boxes 39"), std::string::npos) << msg;
}

TEST(FlowTrack, NonNumericTokenReportsFrameAndPixel) {
  std::string text = flow_text(3, 2, 2);
  // Frame 1 pixel 2 sits on line 1 + 5 + 1 + 3 = 10.
  std::istringstream probe(text);
  std::string line, rebuilt;
  for (int n = 1; std::getline(probe, line); ++n) rebuilt += (n == 10 ? std::string("1 abc") : line) + "\n";
  std::istringstream in(rebuilt);
  const auto msg = error_of([&] { io::read_flow_track(in, "c.flow"); });
  EXPECT_NE(msg.find("c.flow:10"), std::string::npos) << msg;
  EXPECT_NE(msg.find("frame 1 pixel 2"), std::string::npos) << msg;
}

TEST(FlowTrack, RoundTripAndTruncation) {
  std::vector<ff::FlowField> flows(2, ff::FlowField(3, 2));
  flows[1].vectors[4] = {0.1, -2.5e-7};
  std::ostringstream out;
  io::write_flow_track(out, flows);
  std::istringstream in(out.str());
  const auto back = io::read_flow_track(in, "x");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].vectors[4].u, 0.1);
  EXPECT_EQ(back[1].vectors[4].v, -2.5e-7);

  std::istringstream truncated(flow_text(2, 2, 2).substr(0, 40));
  EXPECT_THROW(io::read_flow_track(truncated, "x"), ff::ParseError);
}

TEST(PoseTrack, CandidatesAndMissingFrames) {
  std::ostringstream text;
  text << "POSETRACK 1 3 15\n";
  for (int f : {0, 2, 2}) {
    text << "FRAME " << f << '\n';
    for (int j = 0; j < 15; ++j) text << j << ' ' << f << ' ' << (j % 2 ? 0.4 : 0.6) << '\n';
  }
  std::istringstream in(text.str());
  const auto track = io::read_pose_track(in, "p");
  ASSERT_EQ(track.frames.size(), 3u);
  EXPECT_EQ(track.frames[0].size(), 1u);
  EXPECT_TRUE(track.frames[1].empty());
  EXPECT_EQ(track.frames[2].size(), 2u);
  EXPECT_NEAR(track.frames[0][0].score, (8 * 0.6 + 7 * 0.4) / 15.0, 1e-15);

  std::istringstream bad("POSETRACK 1 3 14\n");
  EXPECT_THROW(io::read_pose_track(bad, "p"), ff::ParseError);
}

TEST(Boxes, MissingFramesInterpolated) {
  std::istringstream in("BOXES 1 4\n0 0 0 10 20\n3 3 0 13 20\n");
  const auto boxes = io::complete_boxes(io::read_boxes(in, "b"));
  ASSERT_EQ(boxes.size(), 4u);
  EXPECT_DOUBLE_EQ(boxes[1].x, 1.0);
  EXPECT_DOUBLE_EQ(boxes[2].w, 12.0);
  EXPECT_EQ(boxes[2].frame, 2u);
  std::istringstream zero("BOXES 1 1\n0 0 0 0 5\n");
  EXPECT_THROW(io::read_boxes(zero, "b"), ff::ParseError);
}

TEST(JointMapFile, DataFileMatchesBuiltinDefault) {
  const auto map = io::read_joint_map(fs::path(FREQFOREST_DATA_DIR) / "joint_map_26to15.txt");
  EXPECT_EQ(map.sources, ff::default_joint_map().sources);
  std::ostringstream out;
  io::write_joint_map(out, map);
  std::istringstream in(out.str());
  EXPECT_EQ(io::read_joint_map(in, "m").sources, map.sources);
}

TEST(JointMapFile, Errors) {
  std::istringstream unknown("nose 0\n");
  EXPECT_THROW(io::read_joint_map(unknown, "m"), ff::ParseError);
  std::istringstream partial("head 0\n");
  EXPECT_THROW(io::read_joint_map(partial, "m"), ff::ParseError);
  std::istringstream range("head 26\n");
  EXPECT_THROW(io::read_joint_map(range, "m"), ff::ParseError);
}

TEST(FeatureFileFormat, RoundTripAndActorInference) {
  io::FeatureFile file;
  file.components = 3;
  file.names = {"a", "b"};
  file.samples.push_back({"person07_boxing_d3", "boxing", {{"a", {1, 2, 3}}, {"b", {0.5, 0, 1e-300}}}, "", ""});
  file.samples.push_back({"x", "walking", {{"a", {0, 0, 0}}, {"b", {1, 1, 1}}}, "12", "s2"});
  std::ostringstream out;
  io::write_features(out, file);
  std::istringstream in(out.str());
  auto back = io::read_features(in, "f");
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.samples[0].features, file.samples[0].features);
  EXPECT_EQ(back.samples[1].actor, "12");
  EXPECT_EQ(back.samples[1].scenario, "s2");
  ff::infer_actor_scenario(back.samples[0]);
  EXPECT_EQ(back.samples[0].actor, "7");
  EXPECT_EQ(back.samples[0].scenario, "s3");
}

TEST(FeatureFileFormat, Errors) {
  std::istringstream width("FEATURES 1 2 a\nc l\na 1 2 3\n");
  EXPECT_THROW(io::read_features(width, "f"), ff::ParseError);
  std::istringstream unknown("FEATURES 1 1 a\nc l\nb 1\n");
  EXPECT_THROW(io::read_features(unknown, "f"), ff::ParseError);
  std::istringstream missing("FEATURES 1 1 a b\nc l\na 1\n");
  EXPECT_THROW(io::read_features(missing, "f"), ff::ParseError);
  std::istringstream dup("FEATURES 1 1 a\nc l\na 1\nc l\na 2\n");
  EXPECT_THROW(io::read_features(dup, "f"), ff::ParseError);
}
