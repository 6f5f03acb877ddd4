#pragma once

// Frequency forest: one incrementally built pivot-split metric tree per
// frequency feature. Leaves split once the binned distribution of distances
// to a random pivot has low enough entropy. Queries descend a single path,
// each tree votes when its neighbours share a dominant label, and the forest
// returns the plurality of the votes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "freqforest/errors.hpp"
#include "freqforest/text.hpp"

namespace freqforest {

struct ForestParams {
  std::size_t k = 5;
  double entropy_threshold = 1.79;  // bits
  std::size_t capacity = 32;        // leaves smaller than this never split
  std::size_t max_leaf = 256;       // leaves this large split regardless of entropy
  std::size_t histogram_bins = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw ArgumentError("forest params: k must be >= 1");
    if (capacity < 2) throw ArgumentError("forest params: capacity must be >= 2");
    if (max_leaf < capacity) throw ArgumentError("forest params: max_leaf must be >= capacity");
    if (histogram_bins < 2) throw ArgumentError("forest params: histogram_bins must be >= 2");
    if (!std::isfinite(entropy_threshold)) throw ArgumentError("forest params: entropy threshold must be finite");
  }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// A labeled clip: feature name -> frequency feature components. Actor and
// scenario are carried along for experiment bookkeeping and may be empty.
struct Sample {
  std::string clip_id;
  std::string label;
  std::map<std::string, std::vector<double>> features;
  std::string actor;
  std::string scenario;
};

struct Neighbor {
  std::string clip_id;
  std::string label;
  double distance = 0.0;
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Shannon entropy (bits) of the distances histogrammed into `bins`
// equal-width bins over [min, max]. Identical distances give 0.
inline double entropy_bits(std::span<const double> distances, std::size_t bins = 10) {
  if (distances.empty()) throw ArgumentError("entropy_bits: no distances");
  if (bins < 2) throw ArgumentError("entropy_bits: need at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(distances.begin(), distances.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  const double width = hi - lo;
  for (double d : distances) {
    auto b = static_cast<std::size_t>((d - lo) / width * static_cast<double>(bins));
    ++counts[std::min(b, bins - 1)];
  }
  const auto total = static_cast<double>(distances.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Dominance vote over a tree's neighbours (nearest first). A full list of k
// needs a strict majority (3 of 5 by default); a short list of m < k needs a
// strict majority and m >= 3.
inline std::optional<std::string> tree_vote(std::span<const Neighbor> neighbors, std::size_t k) {
  const std::size_t m = neighbors.size();
  if (m == 0) return std::nullopt;
  if (m < k && m < 3) return std::nullopt;
  std::map<std::string, std::size_t> counts;
  for (const auto& n : neighbors) ++counts[n.label];
  const std::size_t needed = m / 2 + 1;
  std::optional<std::string> winner;
  for (const auto& [label, count] : counts) {
    if (count < needed) continue;
    if (winner) return std::nullopt;
    winner = label;
  }
  return winner;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Per-tree RNG seed, stable across platforms.
inline std::uint64_t tree_seed(std::uint64_t forest_seed, std::string_view feature_name) {
  return detail::splitmix64(forest_seed ^ detail::fnv1a(feature_name));
}

class FrequencyTree {
 public:
  struct Item {
    std::string clip_id;
    std::string label;
    std::vector<double> vector;
  };

  // Leaves keep item indices in insertion order. Split nodes route an item
  // left iff its distance to the pivot is <= tau.
  struct Node {
    bool leaf = true;
    std::vector<std::size_t> items;
    std::vector<double> pivot;
    double tau = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  FrequencyTree(std::size_t dimension, ForestParams params, std::uint64_t seed)
      : dimension_(dimension), params_(params), rng_(seed) {
    params_.validate();
    if (dimension_ == 0) throw ArgumentError("FrequencyTree: dimension must be positive");
    nodes_.emplace_back();
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const ForestParams& params() const noexcept { return params_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Item>& items() const noexcept { return items_; }
  std::uint64_t rng_draws() const noexcept { return draws_; }

  void insert(std::span<const double> feature, std::string label, std::string clip_id) {
    check_dimension(feature, "insert");
    const std::size_t leaf = descend(feature);
    items_.push_back({std::move(clip_id), std::move(label), {feature.begin(), feature.end()}});
    nodes_[leaf].items.push_back(items_.size() - 1);
    maybe_split(leaf);
  }

  // Index of the leaf a defeatist descent reaches.
  std::size_t descend(std::span<const double> feature) const {
    std::size_t node = 0;
    while (!nodes_[node].leaf) {
      const Node& n = nodes_[node];
      node = euclidean_distance(feature, n.pivot) <= n.tau ? n.left : n.right;
    }
    return node;
  }

  // Exact k nearest items of the single reached leaf, nearest first; equal
  // distances keep insertion order.
  std::vector<Neighbor> query(std::span<const double> q, std::size_t k) const {
    if (items_.empty()) throw DomainError("query: tree is empty");
    check_dimension(q, "query");
    const Node& leaf = nodes_[descend(q)];
    std::vector<Neighbor> all;
    all.reserve(leaf.items.size());
    for (std::size_t idx : leaf.items) {
      const Item& it = items_[idx];
      all.push_back({it.clip_id, it.label, euclidean_distance(q, it.vector)});
    }
    std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    all.resize(std::min(k, all.size()));
    return all;
  }

  void write(std::ostream& out, std::string_view name) const {
    out << "TREE " << name << ' ' << dimension_ << ' ' << draws_ << ' ' << nodes_.size() << ' ' << items_.size() << '\n';
    write_node(out, 0);
  }

  // Rebuilds a tree written by write(). The RNG is replayed to the same
  // position so further inserts behave as in the original.
  static FrequencyTree read(text::LineReader& in, ForestParams params, std::uint64_t seed, std::string& name) {
    in.require_next("TREE");
    in.expect_keyword("TREE");
    in.expect_size(6, "TREE header");
    name = std::string(in.tokens()[1]);
    const std::size_t dim = in.count(2, "dimension");
    const std::size_t draws = in.count(3, "rng draws");
    const std::size_t node_count = in.count(4, "node count");
    const std::size_t item_count = in.count(5, "item count");
    FrequencyTree tree(dim, params, seed);
    tree.rng_.discard(draws);
    tree.draws_ = draws;
    tree.nodes_.clear();
    tree.read_node(in);
    if (tree.nodes_.size() != node_count) in.fail("tree '" + name + "' node count does not match header");
    if (tree.items_.size() != item_count) in.fail("tree '" + name + "' item count does not match header");
    return tree;
  }

 private:
  void check_dimension(std::span<const double> v, const char* op) const {
    if (v.size() != dimension_) {
      throw ArgumentError(std::string(op) + ": feature has " + std::to_string(v.size()) + " components, tree expects " +
                          std::to_string(dimension_));
    }
  }

  std::size_t draw_index(std::size_t n) {
    ++draws_;
    return static_cast<std::size_t>(rng_() % n);
  }

  void maybe_split(std::size_t leaf_index) {
    const std::size_t size = nodes_[leaf_index].items.size();
    if (size < params_.capacity) return;

    const std::vector<std::size_t> members = nodes_[leaf_index].items;
    const std::vector<double> pivot = items_[members[draw_index(size)]].vector;
    std::vector<double> dist(size);
    for (std::size_t i = 0; i < size; ++i) dist[i] = euclidean_distance(items_[members[i]].vector, pivot);

    const bool forced = size >= params_.max_leaf;
    if (!forced && entropy_bits(dist, params_.histogram_bins) > params_.entropy_threshold) return;

    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    double tau = sorted[(size - 1) / 2];
    // Nothing beyond the lower median: fall back to the midrange.
    if (!(sorted.back() > tau)) {
      if (!(sorted.back() > sorted.front())) return;
      tau = 0.5 * (sorted.front() + sorted.back());
    }

    Node left, right;
    for (std::size_t i = 0; i < size; ++i) (dist[i] <= tau ? left : right).items.push_back(members[i]);
    if (left.items.empty() || right.items.empty()) return;

    const std::size_t left_index = nodes_.size();
    nodes_.push_back(std::move(left));
    nodes_.push_back(std::move(right));
    Node& split = nodes_[leaf_index];
    split.leaf = false;
    split.items.clear();
    split.items.shrink_to_fit();
    split.pivot = pivot;
    split.tau = tau;
    split.left = left_index;
    split.right = left_index + 1;
  }

  void write_vector(std::ostream& out, std::span<const double> v) const {
    for (double x : v) out << ' ' << text::format_double(x);
  }

  void write_node(std::ostream& out, std::size_t index) const {
    const Node& n = nodes_[index];
    if (n.leaf) {
      out << "LEAF " << n.items.size() << '\n';
      for (std::size_t idx : n.items) {
        const Item& it = items_[idx];
        out << "ITEM " << it.clip_id << ' ' << it.label;
        write_vector(out, it.vector);
        out << '\n';
      }
      return;
    }
    out << "SPLIT " << text::format_double(n.tau);
    write_vector(out, n.pivot);
    out << '\n';
    write_node(out, n.left);
    write_node(out, n.right);
  }

  std::vector<double> read_vector(const text::LineReader& in, std::size_t first) const {
    std::vector<double> v(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) v[i] = in.number(first + i, "vector component");
    return v;
  }

  std::size_t read_node(text::LineReader& in) {
    in.require_next("LEAF or SPLIT");
    const std::size_t index = nodes_.size();
    nodes_.emplace_back();
    if (in.tokens()[0] == "LEAF") {
      in.expect_size(2, "LEAF");
      const std::size_t count = in.count(1, "leaf size");
      for (std::size_t i = 0; i < count; ++i) {
        in.require_next("ITEM");
        in.expect_keyword("ITEM");
        in.expect_size(3 + dimension_, "ITEM");
        items_.push_back({std::string(in.tokens()[1]), std::string(in.tokens()[2]), read_vector(in, 3)});
        nodes_[index].items.push_back(items_.size() - 1);
      }
      return index;
    }
    in.expect_keyword("SPLIT");
    in.expect_size(2 + dimension_, "SPLIT");
    Node split;
    split.leaf = false;
    split.tau = in.number(1, "tau");
    split.pivot = read_vector(in, 2);
    split.left = read_node(in);
    split.right = read_node(in);
    nodes_[index] = std::move(split);
    return index;
  }

  std::size_t dimension_;
  ForestParams params_;
  std::mt19937_64 rng_;
  std::uint64_t draws_ = 0;
  std::vector<Node> nodes_;
  std::vector<Item> items_;
};

struct TreeVote {
  std::string feature;
  std::vector<Neighbor> neighbors;
  std::optional<std::string> vote;
};

struct Prediction {
  std::string label;
  // True when every tree abstained and the label comes from the
  // nearest-neighbour fallback.
  bool fallback = false;
  std::vector<TreeVote> trees;
};

class FrequencyForest {
 public:
  static FrequencyForest train(std::span<const Sample> samples, const ForestParams& params) {
    params.validate();
    if (samples.empty()) throw ArgumentError("forest_train: no training samples");
    FrequencyForest forest;
    forest.params_ = params;
    for (const auto& [name, vec] : samples.front().features) {
      if (vec.empty()) throw ArgumentError("forest_train: feature '" + name + "' is empty");
      forest.names_.push_back(name);
      forest.trees_.emplace_back(vec.size(), params, tree_seed(params.seed, name));
    }
    if (forest.names_.empty()) throw ArgumentError("forest_train: samples carry no features");
    std::map<std::string, bool> labels;
    for (const Sample& s : samples) {
      if (!text::is_token(s.clip_id) || !text::is_token(s.label)) {
        throw ArgumentError("forest_train: clip ids and labels must be non-empty and whitespace-free");
      }
      if (s.features.size() != forest.names_.size()) {
        throw ArgumentError("forest_train: sample '" + s.clip_id + "' has an inconsistent feature set");
      }
      labels[s.label] = true;
      for (std::size_t t = 0; t < forest.names_.size(); ++t) {
        auto it = s.features.find(forest.names_[t]);
        if (it == s.features.end()) {
          throw ArgumentError("forest_train: sample '" + s.clip_id + "' lacks feature '" + forest.names_[t] + "'");
        }
        forest.trees_[t].insert(it->second, s.label, s.clip_id);
      }
    }
    for (const auto& [label, _] : labels) forest.labels_.push_back(label);
    return forest;
  }

  const ForestParams& params() const noexcept { return params_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<FrequencyTree>& trees() const noexcept { return trees_; }

  const FrequencyTree& tree(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return trees_[i];
    }
    throw ArgumentError("forest: no tree for feature '" + std::string(name) + "'");
  }

  Prediction predict(const std::map<std::string, std::vector<double>>& features) const {
    Prediction result;
    result.trees.reserve(trees_.size());
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      auto it = features.find(names_[t]);
      if (it == features.end()) throw ArgumentError("forest_predict: missing feature '" + names_[t] + "'");
      TreeVote tv{names_[t], trees_[t].query(it->second, params_.k), std::nullopt};
      tv.vote = tree_vote(tv.neighbors, params_.k);
      result.trees.push_back(std::move(tv));
    }
    result.label = combine_votes(result.trees, result.fallback);
    return result;
  }

  void save(std::ostream& out) const {
    out << "FREQFOREST 1\n";
    out << "PARAMS " << params_.k << ' ' << text::format_double(params_.entropy_threshold) << ' ' << params_.capacity << ' '
        << params_.max_leaf << ' ' << params_.histogram_bins << ' ' << params_.seed << '\n';
    out << "LABELS " << labels_.size();
    for (const auto& l : labels_) out << ' ' << l;
    out << "\nFEATURES " << names_.size();
    for (const auto& n : names_) out << ' ' << n;
    out << '\n';
    for (std::size_t t = 0; t < trees_.size(); ++t) trees_[t].write(out, names_[t]);
    out << "END\n";
  }

  std::string serialize() const {
    std::ostringstream out;
    save(out);
    return out.str();
  }

  static FrequencyForest load(std::istream& in, const std::string& source = "<model>") {
    text::LineReader reader(in, source);
    FrequencyForest forest;
    reader.require_next("FREQFOREST header");
    reader.expect_keyword("FREQFOREST");
    reader.expect_size(2, "FREQFOREST header");
    if (reader.tokens()[1] != "1") reader.fail("unsupported model version '" + std::string(reader.tokens()[1]) + "'");

    reader.require_next("PARAMS");
    reader.expect_keyword("PARAMS");
    reader.expect_size(7, "PARAMS");
    ForestParams& p = forest.params_;
    p.k = reader.count(1, "k");
    p.entropy_threshold = reader.number(2, "entropy threshold");
    p.capacity = reader.count(3, "capacity");
    p.max_leaf = reader.count(4, "max_leaf");
    p.histogram_bins = reader.count(5, "histogram bins");
    p.seed = reader.count(6, "seed");
    try {
      p.validate();
    } catch (const ArgumentError& e) {
      reader.fail(e.what());
    }

    forest.labels_ = read_name_list(reader, "LABELS");
    forest.names_ = read_name_list(reader, "FEATURES");
    for (const auto& expected : forest.names_) {
      std::string name;
      forest.trees_.push_back(FrequencyTree::read(reader, p, tree_seed(p.seed, expected), name));
      if (name != expected) reader.fail("expected tree '" + expected + "', found '" + name + "'");
    }
    reader.require_next("END");
    reader.expect_keyword("END");
    return forest;
  }

 private:
  static std::vector<std::string> read_name_list(text::LineReader& reader, std::string_view keyword) {
    reader.require_next(std::string(keyword));
    reader.expect_keyword(keyword);
    if (reader.tokens().size() < 2) reader.fail("missing count after " + std::string(keyword));
    const std::size_t n = reader.count(1, "count");
    reader.expect_size(2 + n, std::string(keyword));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(reader.tokens()[2 + i]);
    return out;
  }

 public:
  // Plurality over voting trees. Ties go to the label whose supporting trees
  // saw it closest (mean distance of that label's neighbours), then to the
  // lexicographically smaller label. With no votes at all, fall back to the
  // plurality of each tree's single nearest label.
  static std::string combine_votes(std::span<const TreeVote> trees, bool& fallback) {
    struct Tally {
      std::size_t votes = 0;
      double closeness = 0.0;  // summed per-tree mean distance, or min distance in fallback
    };
    std::map<std::string, Tally> tally;
    for (const auto& tv : trees) {
      if (!tv.vote) continue;
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& nb : tv.neighbors) {
        if (nb.label != *tv.vote) continue;
        sum += nb.distance;
        ++n;
      }
      Tally& t = tally[*tv.vote];
      ++t.votes;
      t.closeness += sum / static_cast<double>(n);
    }

    fallback = tally.empty();
    if (!fallback) {
      for (auto& [_, t] : tally) t.closeness /= static_cast<double>(t.votes);
    } else {
      for (const auto& tv : trees) {
        if (tv.neighbors.empty()) continue;
        const Neighbor& nn = tv.neighbors.front();
        auto [it, inserted] = tally.try_emplace(nn.label, Tally{0, nn.distance});
        ++it->second.votes;
        it->second.closeness = std::min(it->second.closeness, nn.distance);
      }
    }

    const std::string* best = nullptr;
    const Tally* best_tally = nullptr;
    for (const auto& [label, t] : tally) {
      if (best == nullptr || t.votes > best_tally->votes ||
          (t.votes == best_tally->votes && t.closeness < best_tally->closeness)) {
        best = &label;
        best_tally = &t;
      }
    }
    return best ? *best : std::string{};
  }

 private:

  ForestParams params_;
  std::vector<std::string> names_;
  std::vector<std::string> labels_;
  std::vector<FrequencyTree> trees_;
};

}  // namespace freqforest
