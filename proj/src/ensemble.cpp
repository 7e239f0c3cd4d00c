#include "genreforge/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

int vote_track(const std::vector<std::pair<int, std::vector<double>>>& segment_predictions) {
    if (segment_predictions.empty()) {
        throw std::invalid_argument("vote_track: no segment predictions");
    }
    int num_classes = 0;
    for (const auto& [cls, probs] : segment_predictions) {
        if (cls < 0) throw std::out_of_range("vote_track: negative class index");
        num_classes = std::max(num_classes, cls + 1);
        num_classes = std::max(num_classes, static_cast<int>(probs.size()));
    }
    std::vector<int> counts(num_classes, 0);
    std::vector<double> prob_sums(num_classes, 0.0);
    for (const auto& [cls, probs] : segment_predictions) {
        ++counts[cls];
        for (std::size_t c = 0; c < probs.size(); ++c) prob_sums[c] += probs[c];
    }
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
        if (counts[c] > counts[best]) {
            best = c;
        } else if (counts[c] == counts[best] && prob_sums[c] > prob_sums[best]) {
            best = c;
        }
    }
    return best;
}

std::vector<double> average_features(const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw std::invalid_argument("average_features: empty input");
    const std::size_t dim = features.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& f : features) {
        if (f.size() != dim) {
            throw ShapeError("average_features: inconsistent feature length");
        }
        for (std::size_t i = 0; i < dim; ++i) mean[i] += f[i];
    }
    const double inv = 1.0 / static_cast<double>(features.size());
    for (double& v : mean) v *= inv;
    return mean;
}

namespace {

std::vector<double> standardize(const SvmModel& model, const std::vector<double>& feature) {
    if (static_cast<int>(feature.size()) != model.dim) {
        throw ShapeError("svm: feature length does not match model dimension");
    }
    std::vector<double> z(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
        z[i] = (feature[i] - model.feat_mean[i]) / model.feat_std[i];
    }
    return z;
}

}  // namespace

SvmModel svm_train(const std::vector<TrackFeatures>& features, double C, int epochs,
                   std::uint64_t seed) {
    if (features.empty()) throw std::invalid_argument("svm_train: empty training set");
    if (C <= 0.0) throw std::invalid_argument("svm_train: C must be positive");
    if (epochs <= 0) throw std::invalid_argument("svm_train: epochs must be positive");

    const int dim = static_cast<int>(features.front().mean_feature.size());
    int num_classes = 0;
    for (const auto& f : features) {
        if (static_cast<int>(f.mean_feature.size()) != dim) {
            throw ShapeError("svm_train: inconsistent feature length");
        }
        if (f.label < 0) throw std::out_of_range("svm_train: negative label");
        num_classes = std::max(num_classes, f.label + 1);
    }
    {
        std::vector<bool> seen(num_classes, false);
        for (const auto& f : features) seen[f.label] = true;
        int present = 0;
        for (bool s : seen) present += s ? 1 : 0;
        if (present < 2) {
            throw std::invalid_argument("svm_train: need at least two classes present");
        }
    }

    SvmModel model;
    model.num_classes = num_classes;
    model.dim = dim;
    model.feat_mean.assign(dim, 0.0);
    model.feat_std.assign(dim, 0.0);

    const std::size_t n = features.size();
    for (const auto& f : features) {
        for (int i = 0; i < dim; ++i) model.feat_mean[i] += f.mean_feature[i];
    }
    for (int i = 0; i < dim; ++i) model.feat_mean[i] /= static_cast<double>(n);
    for (const auto& f : features) {
        for (int i = 0; i < dim; ++i) {
            const double d = f.mean_feature[i] - model.feat_mean[i];
            model.feat_std[i] += d * d;
        }
    }
    for (int i = 0; i < dim; ++i) {
        model.feat_std[i] = std::sqrt(model.feat_std[i] / static_cast<double>(n));
        if (model.feat_std[i] == 0.0) model.feat_std[i] = 1.0;
    }

    std::vector<std::vector<double>> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = standardize(model, features[i].mean_feature);

    model.weights.assign(num_classes, std::vector<double>(dim, 0.0));
    model.biases.assign(num_classes, 0.0);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    const long total_steps = static_cast<long>(epochs) * static_cast<long>(n);
    const long average_from = total_steps / 2;  // averaged iterates over the second half

    for (int cls = 0; cls < num_classes; ++cls) {
        std::vector<double> w(dim, 0.0);
        double b = 0.0;
        std::vector<double> w_sum(dim, 0.0);
        double b_sum = 0.0;
        long averaged = 0;
        long step = 0;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t idx : order) {
                const double eta =
                    C / static_cast<double>(step + 2 * static_cast<long>(n));
                const double y = features[idx].label == cls ? 1.0 : -1.0;
                const std::vector<double>& x = z[idx];
                double margin = b;
                for (int i = 0; i < dim; ++i) margin += w[i] * x[i];
                margin *= y;
                const double shrink = 1.0 - eta / C;
                for (int i = 0; i < dim; ++i) w[i] *= shrink;
                if (margin < 1.0) {
                    for (int i = 0; i < dim; ++i) w[i] += eta * y * x[i];
                    b += eta * y;
                }
                ++step;
                if (step > average_from) {
                    for (int i = 0; i < dim; ++i) w_sum[i] += w[i];
                    b_sum += b;
                    ++averaged;
                }
            }
        }
        if (averaged > 0) {
            for (int i = 0; i < dim; ++i) w[i] = w_sum[i] / static_cast<double>(averaged);
            b = b_sum / static_cast<double>(averaged);
        }
        model.weights[cls] = std::move(w);
        model.biases[cls] = b;
    }
    return model;
}

std::vector<double> svm_scores(const SvmModel& model, const std::vector<double>& feature) {
    const std::vector<double> z = standardize(model, feature);
    std::vector<double> scores(model.num_classes, 0.0);
    for (int cls = 0; cls < model.num_classes; ++cls) {
        double s = model.biases[cls];
        const std::vector<double>& w = model.weights[cls];
        for (int i = 0; i < model.dim; ++i) s += w[i] * z[i];
        scores[cls] = s;
    }
    return scores;
}

int svm_predict(const SvmModel& model, const std::vector<double>& feature) {
    const std::vector<double> scores = svm_scores(model, feature);
    int best = 0;
    for (int c = 1; c < model.num_classes; ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return best;
}

double svm_objective(const SvmModel& model, const std::vector<TrackFeatures>& features,
                     int cls, double C) {
    if (cls < 0 || cls >= model.num_classes) {
        throw std::out_of_range("svm_objective: class index out of range");
    }
    const std::vector<double>& w = model.weights[cls];
    double reg = 0.0;
    for (double v : w) reg += v * v;
    reg /= 2.0 * C;
    double hinge = 0.0;
    for (const auto& f : features) {
        const std::vector<double> z = standardize(model, f.mean_feature);
        double margin = model.biases[cls];
        for (int i = 0; i < model.dim; ++i) margin += w[i] * z[i];
        const double y = f.label == cls ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * margin);
    }
    hinge /= static_cast<double>(features.size());
    return reg + hinge;
}

double track_accuracy(const std::vector<TrackPrediction>& predictions) {
    if (predictions.empty()) throw std::invalid_argument("track_accuracy: no predictions");
    std::size_t correct = 0;
    for (const auto& p : predictions) {
        if (p.predicted == p.truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace genreforge
