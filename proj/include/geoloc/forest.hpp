#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "geoloc/classifier.hpp"
#include "geoloc/dataset.hpp"
#include "geoloc/parallel.hpp"
#include "geoloc/random.hpp"

namespace geoloc {

// Random forest over binary presence/absence features. Each tree is grown on
// a weighted bootstrap resample (draw probability proportional to sample
// weight); splits test presence of a feature, scored by Gini impurity over
// ceil(sqrt(p)) candidate features; leaves store class frequencies.
class ForestClassifier final : public Classifier {
public:
    struct Node {
        std::int32_t feature = -1;   // -1: leaf
        std::uint32_t absent = 0;    // child when feature absent
        std::uint32_t present = 0;   // child when feature present
        std::uint32_t leaf = 0;      // index into leaf distribution block
    };

    struct Tree {
        std::vector<Node> nodes;
    };

    ForestClassifier(std::vector<Tree> trees, std::vector<float> leaf_probs, std::size_t n_classes)
        : trees_(std::move(trees)), leaf_probs_(std::move(leaf_probs)), n_classes_(n_classes) {}

    std::size_t class_count() const override { return n_classes_; }
    std::string kind() const override { return "forest"; }
    std::size_t tree_count() const { return trees_.size(); }

    std::vector<double> predict_proba(const SparseVec& x) const override {
        std::vector<double> proba(n_classes_, 0.0);
        for (const Tree& t : trees_) {
            std::uint32_t node = 0;
            while (t.nodes[node].feature >= 0) {
                const bool present = std::binary_search(x.begin(), x.end(),
                                                        static_cast<std::uint32_t>(t.nodes[node].feature));
                node = present ? t.nodes[node].present : t.nodes[node].absent;
            }
            const float* leaf = &leaf_probs_[t.nodes[node].leaf];
            for (std::size_t c = 0; c < n_classes_; ++c) proba[c] += leaf[c];
        }
        const double inv = 1.0 / static_cast<double>(trees_.size());
        for (double& v : proba) v *= inv;
        return proba;
    }

    void save(BinaryWriter& w) const override {
        w.u32(static_cast<std::uint32_t>(n_classes_));
        w.u32(static_cast<std::uint32_t>(trees_.size()));
        for (const Tree& t : trees_) w.vec(t.nodes);
        w.vec(leaf_probs_);
    }

    static std::unique_ptr<ForestClassifier> load(BinaryReader& r) {
        const std::size_t n_classes = r.u32();
        std::vector<Tree> trees(r.u32());
        for (Tree& t : trees) t.nodes = r.vec<Node>();
        auto leaf_probs = r.vec<float>();
        return std::make_unique<ForestClassifier>(std::move(trees), std::move(leaf_probs), n_classes);
    }

private:
    std::vector<Tree> trees_;
    std::vector<float> leaf_probs_;  // tree leaves concatenated, n_classes each
    std::size_t n_classes_;
};

namespace forest_detail {

struct Builder {
    const FeatureMatrix& data;
    const std::vector<std::uint32_t>& labels;
    std::size_t n_classes;
    std::uint32_t candidates;
    Rng rng;
    ForestClassifier::Tree tree;
    std::vector<float>& leaf_probs;
    std::vector<std::uint32_t> indices;  // bootstrap sample, reordered in place

    static double gini(const std::vector<double>& counts, double total) {
        if (total <= 0) return 0.0;
        double g = 1.0;
        for (double c : counts) {
            const double f = c / total;
            g -= f * f;
        }
        return g;
    }

    std::uint32_t make_leaf(const std::vector<double>& counts, double total) {
        const std::uint32_t at = static_cast<std::uint32_t>(leaf_probs.size());
        for (double c : counts) leaf_probs.push_back(static_cast<float>(c / total));
        ForestClassifier::Node node;
        node.feature = -1;
        node.leaf = at;
        tree.nodes.push_back(node);
        return static_cast<std::uint32_t>(tree.nodes.size() - 1);
    }

    // Builds the subtree over indices[lo, hi); returns its root node index.
    std::uint32_t build(std::size_t lo, std::size_t hi) {
        std::vector<double> counts(n_classes, 0.0);
        for (std::size_t i = lo; i < hi; ++i) counts[labels[indices[i]]] += 1.0;
        const double total = static_cast<double>(hi - lo);
        const double parent_gini = gini(counts, total);
        if (parent_gini == 0.0 || hi - lo < 2) return make_leaf(counts, total);

        double best_gain = 0.0;
        std::int64_t best_feature = -1;
        std::vector<double> right_counts(n_classes);
        std::vector<std::uint32_t> cand(candidates);
        sample_candidates(cand);
        std::sort(cand.begin(), cand.end());
        for (std::uint32_t f : cand) {
            std::fill(right_counts.begin(), right_counts.end(), 0.0);
            double right_total = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const SparseVec& row = data.rows[indices[i]];
                if (std::binary_search(row.begin(), row.end(), f)) {
                    right_counts[labels[indices[i]]] += 1.0;
                    right_total += 1.0;
                }
            }
            const double left_total = total - right_total;
            if (right_total == 0.0 || left_total == 0.0) continue;
            double left_gini = 1.0, right_gini = 1.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double rf = right_counts[c] / right_total;
                const double lf = (counts[c] - right_counts[c]) / left_total;
                right_gini -= rf * rf;
                left_gini -= lf * lf;
            }
            const double gain = parent_gini - (left_total * left_gini + right_total * right_gini) / total;
            if (gain > best_gain) {  // strict: ties keep the lowest feature index
                best_gain = gain;
                best_feature = f;
            }
        }
        if (best_feature < 0) return make_leaf(counts, total);

        const auto mid = std::partition(indices.begin() + static_cast<std::ptrdiff_t>(lo),
                                        indices.begin() + static_cast<std::ptrdiff_t>(hi),
                                        [&](std::uint32_t idx) {
                                            const SparseVec& row = data.rows[idx];
                                            return !std::binary_search(row.begin(), row.end(),
                                                                       static_cast<std::uint32_t>(best_feature));
                                        });
        const std::size_t split = static_cast<std::size_t>(mid - indices.begin());
        // stabilize child order so the tree does not depend on partition internals
        std::sort(indices.begin() + static_cast<std::ptrdiff_t>(lo), mid);
        std::sort(mid, indices.begin() + static_cast<std::ptrdiff_t>(hi));

        ForestClassifier::Node node;
        node.feature = static_cast<std::int32_t>(best_feature);
        tree.nodes.push_back(node);
        const std::uint32_t at = static_cast<std::uint32_t>(tree.nodes.size() - 1);
        const std::uint32_t left = build(lo, split);
        const std::uint32_t right = build(split, hi);
        tree.nodes[at].absent = left;
        tree.nodes[at].present = right;
        return at;
    }

    void sample_candidates(std::vector<std::uint32_t>& cand) {
        // distinct features by rejection; candidate count << p in practice
        for (std::size_t i = 0; i < cand.size(); ++i) {
            for (;;) {
                const auto f = static_cast<std::uint32_t>(rng.next_below(data.p));
                bool dup = false;
                for (std::size_t j = 0; j < i; ++j) dup = dup || cand[j] == f;
                if (!dup) {
                    cand[i] = f;
                    break;
                }
            }
        }
    }
};

}  // namespace forest_detail

inline std::unique_ptr<ForestClassifier> fit_forest(int n_trees, const std::shared_ptr<const FeatureMatrix>& data,
                                                    const std::vector<std::uint32_t>& labels,
                                                    const std::vector<double>& weights, std::size_t n_classes,
                                                    std::uint64_t seed) {
    const std::size_t n = data->rows.size();
    if (n < 2) throw std::invalid_argument("fit_forest: need at least 2 training samples");
    const auto candidates =
        static_cast<std::uint32_t>(std::max<double>(1.0, std::ceil(std::sqrt(static_cast<double>(data->p)))));

    // cumulative weights for the weighted bootstrap
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    if (!(acc > 0)) throw std::invalid_argument("fit_forest: nonpositive total weight");

    std::vector<ForestClassifier::Tree> trees(static_cast<std::size_t>(n_trees));
    std::vector<std::vector<float>> leaf_blocks(trees.size());
    parallel_for(trees.size(), [&](std::size_t t) {
        forest_detail::Builder b{*data, labels, n_classes, candidates,
                                 Rng(derive_seed(seed, 0x666f7265ULL, t)), {}, leaf_blocks[t], {}};
        b.indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = b.rng.next_double() * acc;
            b.indices[i] =
                static_cast<std::uint32_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        }
        std::sort(b.indices.begin(), b.indices.end());
        b.build(0, n);
        trees[t] = std::move(b.tree);
    });

    // concatenate leaf blocks, fixing up per-tree offsets
    std::vector<float> leaf_probs;
    for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto offset = static_cast<std::uint32_t>(leaf_probs.size());
        for (auto& node : trees[t].nodes)
            if (node.feature < 0) node.leaf += offset;
        leaf_probs.insert(leaf_probs.end(), leaf_blocks[t].begin(), leaf_blocks[t].end());
    }
    return std::make_unique<ForestClassifier>(std::move(trees), std::move(leaf_probs), n_classes);
}

}  // namespace geoloc
