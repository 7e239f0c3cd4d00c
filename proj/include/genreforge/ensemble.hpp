#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace genreforge {

struct TrackFeatures {
    std::string track_id;
    std::vector<double> mean_feature;
    int label = 0;
};

// One-vs-rest linear classifiers over standardized features.
struct SvmModel {
    int num_classes = 0;
    int dim = 0;
    std::vector<std::vector<double>> weights;  // [num_classes][dim]
    std::vector<double> biases;
    std::vector<double> feat_mean;  // standardization fitted on the training set
    std::vector<double> feat_std;   // zero-variance dims get std = 1
};

// Modal class over segments; ties broken by the largest summed softmax
// probability over the tied classes, then by the lowest class index.
int vote_track(const std::vector<std::pair<int, std::vector<double>>>& segment_predictions);

// Elementwise arithmetic mean of per-segment feature vectors.
std::vector<double> average_features(const std::vector<std::vector<double>>& features);

// Stochastic subgradient descent on the L2-regularized mean hinge loss,
// objective per class (1/2C)||w||^2 + mean hinge. Deterministic per seed.
SvmModel svm_train(const std::vector<TrackFeatures>& features, double C, int epochs,
                   std::uint64_t seed);

// Per-class decision values w.x + b after standardization.
std::vector<double> svm_scores(const SvmModel& model, const std::vector<double>& feature);

// Argmax of svm_scores; ties to the lowest class index.
int svm_predict(const SvmModel& model, const std::vector<double>& feature);

// Full objective of one one-vs-rest classifier (used by convergence checks).
double svm_objective(const SvmModel& model, const std::vector<TrackFeatures>& features,
                     int cls, double C);

struct TrackPrediction {
    std::string track_id;
    int predicted = 0;
    int truth = 0;
};

double track_accuracy(const std::vector<TrackPrediction>& predictions);

}  // namespace genreforge
