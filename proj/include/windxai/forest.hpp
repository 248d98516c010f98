#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "windxai/core.hpp"
#include "windxai/predictor.hpp"
#include "windxai/util.hpp"

namespace windxai {

struct RfConfig {
    std::vector<Feature> features{Feature::WindSpeed, Feature::AirDensity, Feature::TurbulenceIntensity};
    int n_estimators = 100;
    int min_samples_split = 3;
    int min_samples_leaf = 30;
};

// Binary regression tree stored as a flat node array. Leaves keep the mean
// training target; interior nodes route on feature <= threshold.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

using Tree = std::vector<TreeNode>;

namespace rfdetail {

struct Builder {
    const std::vector<std::vector<double>>& x;  // x[f][row]
    const std::vector<double>& y;
    const RfConfig& cfg;
    Tree nodes;

    // CART: exhaustive variance-reduction split over all features. A split
    // must leave min_samples_leaf rows on both sides; nodes smaller than
    // min_samples_split (or with no admissible gain) become leaves.
    int build(std::vector<int>& rows, int lo, int hi) {
        const int n = hi - lo;
        double sum = 0.0;
        for (int i = lo; i < hi; ++i) sum += y[rows[i]];
        const double mean = sum / n;

        const int node_id = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{-1, 0.0, -1, -1, mean});
        if (n < cfg.min_samples_split || n < 2 * cfg.min_samples_leaf) return node_id;

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-12;  // strictly positive improvement required
        std::vector<int> sorted(rows.begin() + lo, rows.begin() + hi);
        std::vector<int> best_sorted;
        for (std::size_t f = 0; f < x.size(); ++f) {
            const auto& xf = x[f];
            std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
                return xf[a] < xf[b] || (xf[a] == xf[b] && a < b);
            });
            double left_sum = 0.0;
            for (int i = 0; i + 1 < n; ++i) {
                left_sum += y[sorted[i]];
                const int nl = i + 1;
                const int nr = n - nl;
                if (nl < cfg.min_samples_leaf) continue;
                if (nr < cfg.min_samples_leaf) break;
                if (xf[sorted[i]] == xf[sorted[i + 1]]) continue;  // no threshold between equal values
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (xf[sorted[i]] + xf[sorted[i + 1]]);
                    best_sorted = sorted;
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::copy(best_sorted.begin(), best_sorted.end(), rows.begin() + lo);
        const auto& xf = x[best_feature];
        int mid = lo;
        while (mid < hi && xf[rows[mid]] <= best_threshold) ++mid;

        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        const int left_id = build(rows, lo, mid);
        nodes[node_id].left = left_id;
        const int right_id = build(rows, mid, hi);
        nodes[node_id].right = right_id;
        return node_id;
    }
};

inline double tree_predict(const Tree& tree, std::span<const double> x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        node = x[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
    }
    return tree[node].value;
}

}  // namespace rfdetail

class ForestModel final : public Predictor {
  public:
    ForestModel() = default;
    ForestModel(FeatureSchema schema, std::vector<Tree> trees, RfConfig cfg)
        : schema_(std::move(schema)), trees_(std::move(trees)), config_(std::move(cfg)) {}

    const FeatureSchema& schema() const override { return schema_; }
    std::string kind() const override { return "forest"; }

    double predict(std::span<const double> features) const override {
        if (features.size() != schema_.size()) throw UsageError("forest predict: feature count mismatch");
        double sum = 0.0;
        for (const auto& t : trees_) sum += rfdetail::tree_predict(t, features);
        return sum / static_cast<double>(trees_.size());
    }

    const std::vector<Tree>& trees() const { return trees_; }
    const RfConfig& config() const { return config_; }

  private:
    FeatureSchema schema_;
    std::vector<Tree> trees_;
    RfConfig config_;
};

// Bootstrap-aggregated CART forest. Each tree draws its own resample (with
// replacement, original size) from a stream keyed by (seed, tree index), so
// the forest is identical no matter how tree training is scheduled.
inline ForestModel rf_train(const RfConfig& config, const Records& train, std::uint64_t seed) {
    if (static_cast<int>(train.size()) < config.min_samples_split)
        throw DataError("rf_train: fewer rows than min_samples_split");
    if (config.n_estimators < 1) throw UsageError("rf_train: need at least one tree");

    FeatureSchema schema{config.features, {}, {}};
    const std::size_t n = train.size();
    std::vector<std::vector<double>> x(schema.size(), std::vector<double>(n));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < schema.size(); ++f) x[f][i] = train[i].feature(schema.features[f]);
        y[i] = train[i].power;
    }

    std::vector<Tree> trees(static_cast<std::size_t>(config.n_estimators));
    parallel_for(trees.size(), [&](std::size_t t) {
        Rng rng(seed, /*stream=*/0xf03e57, t);
        std::vector<int> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(rng.below(n));
        rfdetail::Builder builder{x, y, config, {}};
        builder.nodes.reserve(2 * n / std::max(config.min_samples_leaf, 1) + 1);
        builder.build(rows, 0, static_cast<int>(n));
        trees[t] = std::move(builder.nodes);
    });
    return ForestModel(std::move(schema), std::move(trees), config);
}

inline double rf_predict(const ForestModel& model, std::span<const double> features) {
    return model.predict(features);
}

}  // namespace windxai
