#include "iclprobe/linclass.hpp"

#include "iclprobe/error.hpp"
#include "iclprobe/random.hpp"
#include "iclprobe/text.hpp"

#include <charconv>
#include <set>

namespace iclprobe::linclass {

namespace {

constexpr std::int64_t kWeightScale = 1000;

double rescale(std::int64_t coord) {
    return static_cast<double>(coord - kCoordMin) / static_cast<double>(kCoordMax - kCoordMin);
}

Point random_point(Rng& rng, std::size_t dimension) {
    Point p(dimension);
    for (auto& c : p) c = rng.between(kCoordMin, kCoordMax);
    return p;
}

}  // namespace

std::vector<double> Hyperplane::real_weights() const {
    std::vector<double> out;
    out.reserve(weights.size());
    for (auto w : weights) out.push_back(static_cast<double>(w) / static_cast<double>(denominator));
    return out;
}

double Hyperplane::real_threshold() const {
    return static_cast<double>(threshold) / static_cast<double>(denominator);
}

std::string_view to_string(Side side) {
    switch (side) {
    case Side::below: return "below";
    case Side::on: return "on";
    case Side::above: return "above";
    }
    return "?";
}

Hyperplane gen_hyperplane(std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) {
        throw PreconditionError("hyperplane dimension must be at least 1");
    }
    Rng rng(seed);
    std::vector<std::int64_t> raw(dimension);
    bool nonzero = false;
    while (!nonzero) {
        for (auto& w : raw) {
            w = rng.between(-kWeightScale, kWeightScale);
            nonzero = nonzero || w != 0;
        }
    }
    // Real weight a/1000 and threshold sum(a) * 500.5 / 1000 share the
    // denominator 2000: numerators 2a and 1001 * sum(a).
    Hyperplane h;
    h.denominator = 2 * kWeightScale;
    std::int64_t sum = 0;
    for (auto w : raw) {
        h.weights.push_back(2 * w);
        sum += w;
    }
    h.threshold = (kCoordMin + kCoordMax) * sum;
    return h;
}

Side classify_oracle(const Hyperplane& h, std::span<const std::int64_t> point) {
    if (point.size() != h.dimension()) {
        throw PreconditionError("point has dimension " + std::to_string(point.size()) +
                                ", hyperplane has " + std::to_string(h.dimension()));
    }
    std::int64_t dot = 0;
    for (std::size_t i = 0; i < point.size(); ++i) dot += h.weights[i] * point[i];
    if (dot > h.threshold) return Side::above;
    if (dot < h.threshold) return Side::below;
    return Side::on;
}

Dataset gen_dataset(const Hyperplane& h, std::size_t k, std::size_t n_eval, std::uint64_t seed) {
    if (k == 0) {
        throw PreconditionError("linear classification needs k >= 1");
    }
    if (n_eval % 2 != 0) {
        throw PreconditionError("n_eval must be even for a class-balanced evaluation set");
    }
    Rng rng(seed);
    const std::size_t wanted = 2 * k + n_eval;
    const std::size_t budget = 1000 * wanted + 100000;
    std::size_t draws = 0;
    std::size_t accepted = 0;
    std::set<Point> taken;

    auto fill = [&](std::size_t quota, auto&& keep) {
        std::size_t above = 0;
        std::size_t below = 0;
        while (above < quota || below < quota) {
            if (draws == budget) {
                throw Error("linear classification sampling budget exhausted after " +
                            std::to_string(draws) + " draws (acceptance rate " +
                            std::to_string(static_cast<double>(accepted) /
                                           static_cast<double>(draws)) +
                            ")");
            }
            ++draws;
            auto p = random_point(rng, h.dimension());
            const auto side = classify_oracle(h, p);
            if (side == Side::on || taken.contains(p)) continue;
            auto& count = side == Side::above ? above : below;
            if (count == quota) continue;
            ++count;
            ++accepted;
            taken.insert(p);
            keep(std::move(p), side);
        }
    };

    Dataset out;
    out.hyperplane = h;
    fill(k, [&](Point p, Side side) {
        (side == Side::above ? out.positives : out.negatives).push_back(std::move(p));
    });
    fill(n_eval / 2, [&](Point p, Side side) { out.eval_points.push_back({std::move(p), side}); });
    return out;
}

std::string serialize_point(std::span<const std::int64_t> point) {
    std::string out;
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(point[i]);
    }
    return out;
}

Point parse_point(std::string_view text_in) {
    Point out;
    for (const auto& field : text::split(text_in, ',')) {
        const auto digits = text::trim(field);
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size()) {
            throw InputError("malformed point coordinate '" + std::string(field) + "'");
        }
        out.push_back(v);
    }
    return out;
}

TaskCorpus to_task_corpus(const Dataset& dataset, std::string name) {
    TaskSpec spec{std::move(name), {"Foo", "Bar"}, {{"below", "negative"}, {"above", "positive"}},
                  "synthetic linear classification"};
    std::vector<Example> train;
    std::size_t index = 0;
    for (const auto& p : dataset.positives) {
        train.push_back({RecordId{spec.name, index++}, serialize_point(p), 1});
    }
    for (const auto& p : dataset.negatives) {
        train.push_back({RecordId{spec.name, index++}, serialize_point(p), 0});
    }
    std::vector<Example> validation;
    for (const auto& lp : dataset.eval_points) {
        validation.push_back({RecordId{spec.name, index++}, serialize_point(lp.point),
                              lp.side == Side::above ? std::size_t{1} : std::size_t{0}});
    }
    return TaskCorpus(std::move(spec), std::move(train), std::move(validation));
}

bool BaselineModel::predicts_above(std::span<const std::int64_t> point) const {
    if (point.size() != learned_weights.size()) {
        throw PreconditionError("point has dimension " + std::to_string(point.size()) +
                                ", model expects " + std::to_string(learned_weights.size()));
    }
    double score = learned_bias;
    for (std::size_t i = 0; i < point.size(); ++i) {
        score += learned_weights[i] * rescale(point[i]);
    }
    return score > 0.0;
}

BaselineModel train_baseline(const Dataset& dataset, std::uint64_t seed, std::size_t epochs) {
    std::vector<LabeledPoint> examples;
    for (const auto& p : dataset.positives) examples.push_back({p, Side::above});
    for (const auto& p : dataset.negatives) examples.push_back({p, Side::below});
    return train_baseline(examples, seed, epochs);
}

BaselineModel train_baseline(std::span<const LabeledPoint> examples, std::uint64_t seed,
                             std::size_t epochs) {
    const std::size_t dim = examples.empty() ? 0 : examples.front().point.size();
    std::vector<std::vector<double>> features;
    std::vector<double> targets;
    for (const auto& ex : examples) {
        if (ex.point.size() != dim) {
            throw PreconditionError("baseline training points disagree in dimension");
        }
        std::vector<double> f;
        for (auto c : ex.point) f.push_back(rescale(c));
        features.push_back(std::move(f));
        targets.push_back(ex.side == Side::above ? 1.0 : -1.0);
    }

    std::vector<double> w(dim, 0.0), w_sum(dim, 0.0);
    double b = 0.0, b_sum = 0.0;
    std::size_t steps = 0;
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (auto i : order) {
            double score = b;
            for (std::size_t d = 0; d < dim; ++d) score += w[d] * features[i][d];
            if (targets[i] * score <= 0.0) {
                for (std::size_t d = 0; d < dim; ++d) w[d] += targets[i] * features[i][d];
                b += targets[i];
            }
            for (std::size_t d = 0; d < dim; ++d) w_sum[d] += w[d];
            b_sum += b;
            ++steps;
        }
    }
    BaselineModel model;
    model.training_epochs = epochs;
    model.learned_weights.assign(dim, 0.0);
    if (steps > 0) {
        for (std::size_t d = 0; d < dim; ++d) {
            model.learned_weights[d] = w_sum[d] / static_cast<double>(steps);
        }
        model.learned_bias = b_sum / static_cast<double>(steps);
    }
    return model;
}

double evaluate_baseline(const BaselineModel& model, std::span<const LabeledPoint> points) {
    if (points.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& lp : points) {
        if (model.predicts_above(lp.point) == (lp.side == Side::above)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(points.size());
}

}  // namespace iclprobe::linclass
