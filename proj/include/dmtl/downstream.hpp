#pragma once

#include "dmtl/embedding.hpp"
#include "dmtl/nn/layers.hpp"
#include "dmtl/nn/parameter.hpp"
#include "dmtl/rng.hpp"
#include "dmtl/session.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmtl {

double squared_distance(std::span<const double> a, std::span<const double> b);

// ---- label binarization -------------------------------------------------

struct BinarizedSession {
    std::size_t index;  // into the input session list
    int label;          // 0 = bottom, 1 = top
    double rating;
};

struct ExtremesResult {
    std::vector<BinarizedSession> retained;  // bottom block then top block
    std::optional<std::string> warning;
};

// Sorts by (rating, session id); the first floor(fraction N) sessions get
// label 0 and the last floor(fraction N) get label 1. Requires 0 < fraction
// <= 0.5 and every session to carry a rating for `behavior`.
ExtremesResult select_extremes(std::span<const LabeledSession> sessions, const std::string& behavior,
                               double fraction = 0.2);

// ---- cross-validation ---------------------------------------------------

struct CvSplit {
    std::size_t fold;
    std::string heldout_group;
    std::vector<std::size_t> train;  // item indices, ascending
    std::vector<std::size_t> test;
};

// One fold per distinct group, in group-id order.
std::vector<CvSplit> make_cv_splits(std::span<const std::string> item_groups);

// Throws Error unless the test sets partition [0, n) and no held-out group
// reaches a training set.
void check_cv_partition(std::span<const CvSplit> splits, std::span<const std::string> item_groups);

// ---- k-means ------------------------------------------------------------

struct KMeansModel {
    std::vector<Embedding> centroids;
    std::vector<int> labels;  // per centroid; -1 until labeled
    double wcss = 0.0;
    std::size_t iterations = 0;
    std::vector<double> wcss_trace;  // after each assignment step of the winning restart
};

// Lloyd iterations until the assignment repeats or max_iterations, from
// `restarts` random-point initializations; keeps the lowest WCSS. An empty
// cluster is moved to the point farthest from its centroid. Throws
// UsageError when there are fewer than k distinct points.
KMeansModel kmeans_fit(std::span<const Embedding> points, std::size_t k, std::uint64_t seed,
                       std::size_t restarts = 10, std::size_t max_iterations = 300);

// Nearest centroid, ties to the lower index.
std::size_t nearest_centroid(const KMeansModel& model, std::span<const double> point);

// Centroid that most of the embeddings are nearest to, ties to the lower index.
std::size_t majority_centroid(const KMeansModel& model, std::span<const Embedding> session);

struct SeedSession {
    std::span<const Embedding> embeddings;
    int label;
};

// Each seed labels its majority centroid; every other centroid takes the
// label of the nearest labeled centroid. Returns false, leaving the model
// untouched, when two seeds claim the same centroid.
bool kmeans_label_from_seeds(KMeansModel& model, std::span<const SeedSession> seeds);

// Draws one seed session per class from `candidates` and labels the model,
// re-drawing on conflict up to `max_attempts` times before throwing Error.
void kmeans_label_clusters(KMeansModel& model, std::span<const SeedSession> candidates, Rng& rng,
                           std::size_t max_attempts = 10);

int kmeans_predict_session(const KMeansModel& model, std::span<const Embedding> session);

// ---- k-NN ---------------------------------------------------------------

// Indices of the k nearest training points ordered by (distance, index).
std::vector<std::size_t> k_nearest(std::span<const Embedding> train, std::span<const double> query, std::size_t k);

// Unweighted majority vote; ties go to the smallest label.
int majority_label(std::span<const int> votes);

int knn_predict_point(std::span<const Embedding> train, std::span<const int> labels, std::span<const double> query,
                      std::size_t k);
int knn_predict_session(std::span<const Embedding> train, std::span<const int> labels,
                        std::span<const Embedding> session, std::size_t k);

// ---- rating estimation --------------------------------------------------

struct Windows {
    std::vector<std::vector<Embedding>> windows;
    bool padded = false;  // T < size: one window, tail repeated
};

Windows sliding_windows(std::span<const Embedding> embeddings, std::size_t size = 3);

double normalize_rating(double rating);  // (r - 1) / 8
double median(std::vector<double> values);

struct LinearSvr {
    double slope = 0.0;
    double intercept = 0.0;
    double operator()(double x) const { return slope * x + intercept; }
};

// Minimizes w^2 / (2 C) + mean max(0, |y - w x - b| - eps) by subgradient
// descent from w = b = 0 with steps step0 / sqrt(t + 1), step0 = 1 / max(1, max |x|);
// the iterate with the lowest objective is returned. Duplicating the data
// leaves the objective unchanged.
LinearSvr svr_fit_1d(std::span<const double> x, std::span<const double> y, double epsilon, double c,
                     std::size_t iterations = 20000);

struct RatingEstimatorConfig {
    std::size_t hidden = 50;
    std::size_t window = 3;
    std::size_t epochs = 30;
    double learning_rate = 0.05;  // Adagrad
    double svr_epsilon = 0.1;
    double svr_c = 10.0;
    std::uint64_t seed = 1;
};

struct RatingSample {
    std::span<const Embedding> embeddings;
    double rating;
    std::string group;
};

// LSTM over each window, sigmoid head on the last state regressing the
// normalized rating; best epoch by validation loss on one randomly chosen
// group (training loss when only one group exists); then a 1-D SVR from
// per-session median window prediction to rating.
class RatingEstimator {
public:
    RatingEstimator(std::size_t input_dim, const RatingEstimatorConfig& config);

    double window_prediction(std::span<const Embedding> window) const;  // in (0, 1)
    std::vector<double> window_predictions(std::span<const Embedding> session) const;
    double median_prediction(std::span<const Embedding> session) const;
    // Median window prediction mapped by the SVR and clamped to [1, 9].
    double predict_rating(std::span<const Embedding> session) const;

    nn::ParameterSet& params() { return *params_; }
    const RatingEstimatorConfig& config() const { return config_; }
    LinearSvr svr;
    std::optional<std::string> validation_group;
    std::size_t best_epoch = 0;

private:
    friend RatingEstimator train_rating_estimator(std::span<const RatingSample>, const RatingEstimatorConfig&);
    nn::Expr window_output(nn::Graph& g, std::span<const Embedding> window) const;

    RatingEstimatorConfig config_;
    std::unique_ptr<nn::ParameterSet> params_;
    std::unique_ptr<nn::LstmCell> cell_;
    nn::Parameter* out_w_ = nullptr;
    nn::Parameter* out_b_ = nullptr;
};

RatingEstimator train_rating_estimator(std::span<const RatingSample> samples, const RatingEstimatorConfig& config);

// ---- emotion recognition ------------------------------------------------

struct EmotionDnnConfig {
    std::vector<std::size_t> hidden{32, 32, 32, 32};
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double learning_rate = 0.05;  // Adagrad
    double validation_fraction = 0.1;
    std::uint64_t seed = 1;
};

class EmotionClassifier {
public:
    EmotionClassifier(std::size_t input_dim, std::size_t classes, const EmotionDnnConfig& config);

    std::vector<double> probabilities(std::span<const double> embedding) const;
    int predict(std::span<const double> embedding) const;
    // Argmax of the mean class distribution over the session's sentences.
    int predict_session(std::span<const Embedding> session) const;

    std::size_t classes() const { return classes_; }
    nn::ParameterSet& params() { return *params_; }
    const nn::Mlp& mlp() const { return *mlp_; }
    std::size_t best_epoch = 0;

private:
    std::size_t classes_;
    std::unique_ptr<nn::ParameterSet> params_;
    std::unique_ptr<nn::Mlp> mlp_;
};

// ReLU MLP with a softmax output trained by Adagrad on cross-entropy; a
// seeded ~validation_fraction share of the data picks the best epoch.
EmotionClassifier train_emotion_dnn(std::span<const Embedding> embeddings, std::span<const int> labels,
                                    std::size_t classes, const EmotionDnnConfig& config = {});

// ---- metrics ------------------------------------------------------------

struct Metrics {
    double accuracy = 0.0;
    double weighted_accuracy = 0.0;  // mean recall over classes present in the truth
    std::vector<std::size_t> class_total;
    std::vector<std::size_t> class_correct;
};

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truths, std::size_t classes);

}  // namespace dmtl
