// freqforest: synthetic data, feature extraction, training, prediction,
// evaluation and scenario experiments from the command line.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "freqforest/freqforest.hpp"

namespace ff = freqforest;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ForestFlags {
  std::size_t k = 5;
  double entropy_threshold = 1.79;
  std::size_t capacity = 32;
  std::size_t max_leaf = 256;
  std::size_t bins = 10;
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--k", k, "Neighbours returned per tree")->capture_default_str();
    app->add_option("--entropy-threshold", entropy_threshold, "Split when distance entropy (bits) is at or below this")
        ->capture_default_str();
    app->add_option("--capacity", capacity, "Minimum leaf size eligible for splitting")->capture_default_str();
    app->add_option("--max-leaf", max_leaf, "Leaf size that forces a split")->capture_default_str();
    app->add_option("--bins", bins, "Histogram bins for the distance entropy")->capture_default_str();
    app->add_option("--seed", seed, "Pivot RNG seed")->capture_default_str();
  }

  ff::ForestParams params() const {
    ff::ForestParams p;
    p.k = k;
    p.entropy_threshold = entropy_threshold;
    p.capacity = capacity;
    p.max_leaf = max_leaf;
    p.histogram_bins = bins;
    p.seed = seed;
    p.validate();
    return p;
  }
};

struct ExtractFlags {
  std::size_t components = ff::kDefaultComponents;
  std::size_t smoothing_window = ff::kDefaultSmoothingWindow;
  std::string joint_map;

  void add_to(CLI::App* app) {
    app->add_option("--n-components", components, "Spectrum components per frequency feature")->capture_default_str();
    app->add_option("--smoothing-window", smoothing_window, "Joint trajectory smoothing window (odd)")
        ->capture_default_str();
    app->add_option("--joint-map", joint_map, "26->15 joint map file (default: built-in map)");
  }

  ff::ExtractOptions options() const {
    ff::ExtractOptions o;
    o.components = components;
    o.smoothing_window = smoothing_window;
    if (!joint_map.empty()) o.joint_map = ff::io::read_joint_map(fs::path(joint_map));
    return o;
  }
};

json confusion_json(const ff::ConfusionMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.labels.size(); ++r) {
    json row = {{"label", m.labels[r]}, {"support", m.support(r)}, {"counts", m.counts[r]}};
    if (auto p = m.row(r)) row["proportions"] = *p;
    else row["flagged"] = "no test samples";
    rows.push_back(std::move(row));
  }
  return {{"labels", m.labels}, {"accuracy", m.accuracy}, {"rows", rows}};
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw ff::IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

std::vector<ff::Sample> load_samples(const std::string& path) {
  auto file = ff::io::read_features(fs::path(path));
  for (auto& s : file.samples) ff::infer_actor_scenario(s);
  return std::move(file.samples);
}

std::set<std::string> parse_list(const std::string& text) { return ff::parse_scenario_set(text); }

// Sums run matrices and re-derives accuracy from the pooled counts.
ff::ConfusionMatrix pool_runs(const std::vector<ff::ConfusionMatrix>& runs) {
  ff::ConfusionMatrix pooled = runs.front();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    for (std::size_t r = 0; r < pooled.labels.size(); ++r) {
      for (std::size_t c = 0; c < pooled.labels.size(); ++c) pooled.counts[r][c] += runs[i].counts[r][c];
    }
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < pooled.labels.size(); ++r) correct += pooled.counts[r][r];
  pooled.accuracy = static_cast<double>(correct) / static_cast<double>(pooled.total());
  return pooled;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-domain action recognition with a frequency forest"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (tracks + manifest)");
  std::string synth_out;
  ff::SynthConfig synth_cfg = ff::default_synth_config();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
  synth->add_option("--actors", synth_cfg.actors, "Number of actors")->capture_default_str();
  synth->add_option("--clips-per-actor", synth_cfg.clips_per_actor, "Clips per actor, class and scenario")
      ->capture_default_str();
  synth->add_option("--frames", synth_cfg.frames, "Frames per clip")->capture_default_str();

  // extract
  auto* extract = app.add_subcommand("extract", "Manifest -> feature file");
  std::string extract_manifest, extract_out;
  ExtractFlags extract_flags;
  extract->add_option("--manifest", extract_manifest, "Dataset manifest")->required();
  extract->add_option("--out", extract_out, "Feature file to write")->required();
  extract_flags.add_to(extract);

  // train
  auto* train = app.add_subcommand("train", "Feature file -> model file");
  std::string train_features, train_model;
  ForestFlags train_flags;
  train->add_option("--features", train_features, "Training feature file")->required();
  train->add_option("--model", train_model, "Model file to write")->required();
  train_flags.add_to(train);

  // predict
  auto* predict = app.add_subcommand("predict", "Model + features -> predicted labels");
  std::string predict_model, predict_features;
  bool predict_verbose = false;
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--features", predict_features, "Feature file")->required();
  predict->add_flag("--votes", predict_verbose, "Print per-tree votes");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Model + features -> confusion matrix");
  std::string eval_model, eval_features, eval_json;
  evaluate->add_option("--model", eval_model, "Model file")->required();
  evaluate->add_option("--features", eval_features, "Labeled feature file")->required();
  evaluate->add_option("--json", eval_json, "Also write the matrix as JSON");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Actor-split scenario-mixing experiment");
  std::string exp_manifest, exp_features, exp_json, exp_train_actors, exp_test_actors;
  std::vector<std::string> exp_train_sets, exp_test_sets;
  std::size_t exp_runs = 3;
  bool exp_confusion = false;
  ForestFlags exp_flags;
  ExtractFlags exp_extract;
  auto* src = experiment->add_option_group("source");
  src->add_option("--manifest", exp_manifest, "Dataset manifest (features are extracted first)");
  src->add_option("--features", exp_features, "Precomputed feature file");
  src->require_option(1);
  experiment->add_option("--train", exp_train_sets, "Training scenario set, e.g. s1,s4 (repeatable; default all)");
  experiment->add_option("--test", exp_test_sets,
                         "Test scenario set (repeatable; default {s1} {s1,s4} {s1,s3,s4} {s1,s2,s3,s4})");
  experiment->add_option("--train-actors", exp_train_actors, "Comma-separated training actors (default: KTH 16)");
  experiment->add_option("--test-actors", exp_test_actors, "Comma-separated test actors (default: KTH 9)");
  experiment->add_option("--runs", exp_runs, "Independent runs averaged per cell")->capture_default_str();
  experiment->add_flag("--confusion", exp_confusion, "Print the pooled confusion matrix of every cell");
  experiment->add_option("--json", exp_json, "Also write results as JSON");
  exp_flags.add_to(experiment);
  exp_extract.add_to(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      const auto manifest = ff::synth_generate(synth_cfg, fs::path(synth_out));
      std::cout << "wrote " << manifest.clips.size() << " clips and " << (fs::path(synth_out) / "manifest.txt").string()
                << '\n';
    } else if (*extract) {
      const auto manifest = ff::io::read_manifest(fs::path(extract_manifest));
      const auto features = ff::extract_manifest(manifest, extract_flags.options());
      ff::io::write_file(fs::path(extract_out), ff::io::write_features, features);
      std::cout << "extracted " << features.samples.size() << " samples x " << features.names.size() << " features -> "
                << extract_out << '\n';
    } else if (*train) {
      const auto samples = load_samples(train_features);
      const auto forest = ff::FrequencyForest::train(samples, train_flags.params());
      ff::io::write_file(fs::path(train_model), [](std::ostream& o, const ff::FrequencyForest& f) { f.save(o); }, forest);
      std::cout << "trained " << forest.trees().size() << " trees on " << samples.size() << " samples -> " << train_model
                << '\n';
    } else if (*predict) {
      auto in = ff::io::open_input(fs::path(predict_model));
      const auto forest = ff::FrequencyForest::load(in, predict_model);
      for (const auto& s : load_samples(predict_features)) {
        const auto p = forest.predict(s.features);
        std::cout << s.clip_id << ' ' << p.label << (p.fallback ? " fallback" : "") << '\n';
        if (!predict_verbose) continue;
        for (const auto& tv : p.trees) std::cout << "  " << tv.feature << ' ' << tv.vote.value_or("-") << '\n';
      }
    } else if (*evaluate) {
      auto in = ff::io::open_input(fs::path(eval_model));
      const auto forest = ff::FrequencyForest::load(in, eval_model);
      const auto samples = load_samples(eval_features);
      const auto ev = ff::evaluate(forest, samples, ff::action_order({forest.labels().begin(), forest.labels().end()}));
      ff::print_confusion(std::cout, ev.matrix);
      write_json(eval_json, confusion_json(ev.matrix));
    } else if (*experiment) {
      std::vector<ff::Sample> samples;
      std::vector<std::string> vocabulary;
      if (!exp_manifest.empty()) {
        const auto manifest = ff::io::read_manifest(fs::path(exp_manifest));
        samples = ff::extract_manifest(manifest, exp_extract.options()).samples;
        vocabulary = manifest.labels;
      } else {
        samples = load_samples(exp_features);
      }

      ff::SplitConfig split = ff::kth_split();
      if (!exp_train_actors.empty() || !exp_test_actors.empty()) {
        split.train_actors = parse_list(exp_train_actors);
        split.test_actors = parse_list(exp_test_actors);
      }
      std::vector<std::set<std::string>> train_sets, test_sets;
      for (const auto& t : exp_train_sets) train_sets.push_back(parse_list(t));
      for (const auto& t : exp_test_sets) test_sets.push_back(parse_list(t));
      if (train_sets.empty()) {
        std::set<std::string> all;
        for (const auto& s : samples) all.insert(s.scenario);
        train_sets.push_back(all);
      }
      if (test_sets.empty()) test_sets = ff::nested_test_sets();

      const auto params = exp_flags.params();
      json out = json::array();
      std::cout << std::left << std::setw(22) << "train \\ test";
      for (const auto& t : test_sets) std::cout << std::setw(18) << ff::format_scenario_set(t);
      std::cout << '\n';
      std::vector<std::pair<std::string, ff::ConfusionMatrix>> pooled;
      for (const auto& tr : train_sets) {
        std::cout << std::setw(22) << ff::format_scenario_set(tr);
        for (const auto& te : test_sets) {
          const auto r = ff::scenario_experiment(samples, tr, te, split, exp_runs, params, vocabulary);
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(1) << 100.0 * r.mean_accuracy;
          std::cout << std::setw(18) << cell.str();
          std::vector<double> accs;
          for (const auto& m : r.runs) accs.push_back(m.accuracy);
          out.push_back({{"train", r.train_scenarios},
                         {"test", r.test_scenarios},
                         {"train_count", r.train_count},
                         {"test_count", r.test_count},
                         {"mean_accuracy", r.mean_accuracy},
                         {"run_accuracies", accs},
                         {"confusion", confusion_json(pool_runs(r.runs))}});
          pooled.emplace_back(ff::format_scenario_set(tr) + " -> " + ff::format_scenario_set(te), pool_runs(r.runs));
        }
        std::cout << '\n';
      }
      std::cout << std::right;
      if (exp_confusion) {
        for (const auto& [name, m] : pooled) {
          std::cout << '\n' << name << '\n';
          ff::print_confusion(std::cout, m);
        }
      }
      write_json(exp_json, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
