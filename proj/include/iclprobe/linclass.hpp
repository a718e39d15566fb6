#pragma once

#include "iclprobe/task_corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iclprobe::linclass {

using Point = std::vector<std::int64_t>;

inline constexpr std::int64_t kCoordMin = 1;
inline constexpr std::int64_t kCoordMax = 1000;

/// Hidden decision rule w . x > t, stored exactly: the real weights are
/// `weights[i] / denominator` and the real threshold is
/// `threshold / denominator`.
struct Hyperplane {
    std::vector<std::int64_t> weights;
    std::int64_t threshold = 0;
    std::int64_t denominator = 1;

    std::size_t dimension() const noexcept { return weights.size(); }
    std::vector<double> real_weights() const;
    double real_threshold() const;
};

enum class Side { below, on, above };

std::string_view to_string(Side side);

/// Weights uniform over {-1000, ..., 1000} / 1000 (all-zero rejected);
/// threshold = w . (500.5, ..., 500.5), the centre of the sampling box.
Hyperplane gen_hyperplane(std::size_t dimension, std::uint64_t seed);

/// Exact sign of w . x - t.
Side classify_oracle(const Hyperplane& h, std::span<const std::int64_t> point);

struct LabeledPoint {
    Point point;
    Side side = Side::below;
};

struct Dataset {
    Hyperplane hyperplane;
    std::vector<Point> positives;
    std::vector<Point> negatives;
    std::vector<LabeledPoint> eval_points;

    std::size_t dimension() const noexcept { return hyperplane.dimension(); }
    std::size_t k() const noexcept { return positives.size(); }
};

/// Rejection-samples uniform integer points of [1, 1000]^N until each
/// side holds its quota. Points on the hyperplane are discarded; eval
/// points are distinct from exemplars and from each other.
Dataset gen_dataset(const Hyperplane& h, std::size_t k, std::size_t n_eval, std::uint64_t seed);

/// "648, 626, 543"
std::string serialize_point(std::span<const std::int64_t> point);
Point parse_point(std::string_view text);

/// Binary task view: class 0 = below ("Foo"), class 1 = above ("Bar").
/// Train holds the exemplars, validation the eval points.
TaskCorpus to_task_corpus(const Dataset& dataset, std::string name = "linclass");

struct BaselineModel {
    std::vector<double> learned_weights;
    double learned_bias = 0.0;
    std::size_t training_epochs = 0;

    bool predicts_above(std::span<const std::int64_t> point) const;
};

inline constexpr std::size_t kBaselineEpochs = 100;

/// Averaged perceptron over the 2k exemplars, coordinates rescaled to
/// [0, 1], visiting examples in a seeded order each epoch.
BaselineModel train_baseline(const Dataset& dataset, std::uint64_t seed,
                             std::size_t epochs = kBaselineEpochs);

/// Same learner on explicit (point, above?) pairs.
BaselineModel train_baseline(std::span<const LabeledPoint> examples, std::uint64_t seed,
                             std::size_t epochs = kBaselineEpochs);

double evaluate_baseline(const BaselineModel& model, std::span<const LabeledPoint> points);

}  // namespace iclprobe::linclass
