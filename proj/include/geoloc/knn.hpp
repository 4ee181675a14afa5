#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

#include "geoloc/classifier.hpp"
#include "geoloc/dataset.hpp"

namespace geoloc {

/// 1 - |a n b| / |a u b| on sorted index sets; two empty sets have distance 0.
inline double jaccard_distance(const SparseVec& a, const SparseVec& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

// K-nearest-neighbor classifier with the Jaccard distance. Prediction is the
// weight-normalized label histogram of the k nearest training samples;
// distance ties break toward the lower sample index.
class KnnClassifier final : public Classifier {
public:
    KnnClassifier(int k, std::shared_ptr<const FeatureMatrix> data, std::vector<std::uint32_t> labels,
                  std::vector<double> weights, std::size_t n_classes)
        : k_(k), data_(std::move(data)), labels_(std::move(labels)), weights_(std::move(weights)),
          n_classes_(n_classes) {}

    std::size_t class_count() const override { return n_classes_; }
    std::string kind() const override { return "knn"; }
    int neighbors() const { return k_; }
    const FeatureMatrix& training_data() const { return *data_; }
    const std::shared_ptr<const FeatureMatrix>& data_ptr() const { return data_; }

    std::vector<double> predict_proba(const SparseVec& x) const override {
        const std::size_t n = data_->rows.size();
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
        std::vector<std::pair<double, std::uint32_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = {jaccard_distance(x, data_->rows[i]), static_cast<std::uint32_t>(i)};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<double> proba(n_classes_, 0.0);
        for (std::size_t i = 0; i < k; ++i) proba[labels_[dist[i].second]] += weights_[dist[i].second];
        double total = 0.0;
        for (double v : proba) total += v;
        for (double& v : proba) v /= total;
        return proba;
    }

    void save(BinaryWriter& w) const override {
        w.u32(static_cast<std::uint32_t>(k_));
        w.u32(static_cast<std::uint32_t>(n_classes_));
        w.vec(labels_);
        w.vec(weights_);
        // the feature matrix is shared across members; the container stores it once
    }

    static std::unique_ptr<KnnClassifier> load(BinaryReader& r, std::shared_ptr<const FeatureMatrix> data) {
        const int k = static_cast<int>(r.u32());
        const std::size_t n_classes = r.u32();
        auto labels = r.vec<std::uint32_t>();
        auto weights = r.vec<double>();
        return std::make_unique<KnnClassifier>(k, std::move(data), std::move(labels), std::move(weights), n_classes);
    }

private:
    int k_;
    std::shared_ptr<const FeatureMatrix> data_;
    std::vector<std::uint32_t> labels_;
    std::vector<double> weights_;
    std::size_t n_classes_;
};

inline std::unique_ptr<KnnClassifier> fit_knn(int k, std::shared_ptr<const FeatureMatrix> data,
                                              std::vector<std::uint32_t> labels, std::vector<double> weights,
                                              std::size_t n_classes) {
    if (data->rows.empty()) throw std::invalid_argument("fit_knn: empty training set");
    return std::make_unique<KnnClassifier>(k, std::move(data), std::move(labels), std::move(weights), n_classes);
}

}  // namespace geoloc
