#pragma once

#include "dmtl/downstream.hpp"
#include "dmtl/embedding.hpp"
#include "dmtl/session.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dmtl {

enum class EvalMethod : std::uint8_t { KMeans, Knn, Rating, Emotion };

std::string_view to_string(EvalMethod method);
EvalMethod parse_eval_method(std::string_view text);

struct EvalOptions {
    std::size_t clusters = 2;
    std::size_t kmeans_restarts = 10;
    std::size_t neighbors = 5;
    double fraction = 0.2;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    RatingEstimatorConfig rating;
    EmotionDnnConfig emotion;
};

struct SessionPrediction {
    std::string session_id;
    int truth = 0;
    int predicted = 0;
    std::optional<double> rating;
    std::optional<double> predicted_rating;
};

struct FoldResult {
    std::size_t fold = 0;
    std::string heldout_group;
    std::string behavior;
    std::string method;
    double accuracy = 0.0;
    double weighted_accuracy = 0.0;
    std::optional<double> mean_absolute_error;  // rating method only
    std::vector<SessionPrediction> predictions;
};

struct EvalRun {
    std::vector<FoldResult> folds;
    std::vector<std::string> class_names;
    std::vector<std::string> warnings;
};

// Leave-one-group-out evaluation. Behavior methods binarize `behavior` with
// select_extremes and fold over the retained sessions; the rating method
// trains on every rated session outside the held-out group and thresholds
// predicted ratings at the training median. The emotion method uses every
// session and ignores `behavior`. `embeddings` is parallel to `sessions`.
// Folds are independent and run on up to `jobs` threads.
EvalRun evaluate(EvalMethod method, std::span<const LabeledSession> sessions,
                 std::span<const SessionEmbeddings> embeddings, const std::string& behavior, const EvalOptions& options);

struct Aggregate {
    std::size_t folds = 0;
    double mean_accuracy = 0.0;
    double se_accuracy = 0.0;  // sample standard deviation / sqrt(folds)
    double mean_weighted_accuracy = 0.0;
    double se_weighted_accuracy = 0.0;
};

Aggregate aggregate(std::span<const FoldResult> folds);

// Mean and standard error of arbitrary values (0 error for fewer than two).
std::pair<double, double> mean_and_standard_error(std::span<const double> values);

nlohmann::json to_json(const FoldResult& fold);

}  // namespace dmtl
