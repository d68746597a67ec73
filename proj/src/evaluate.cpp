#include "dmtl/evaluate.hpp"

#include "dmtl/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <thread>

namespace dmtl {

std::string_view to_string(EvalMethod method) {
    switch (method) {
        case EvalMethod::KMeans: return "kmeans";
        case EvalMethod::Knn: return "knn";
        case EvalMethod::Rating: return "rating";
        case EvalMethod::Emotion: return "emotion";
    }
    return "?";
}

EvalMethod parse_eval_method(std::string_view text) {
    for (auto m : {EvalMethod::KMeans, EvalMethod::Knn, EvalMethod::Rating, EvalMethod::Emotion}) {
        if (text == to_string(m)) return m;
    }
    throw UsageError("unknown method '" + std::string(text) + "' (expected kmeans, knn, rating or emotion)");
}

std::pair<double, double> mean_and_standard_error(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

Aggregate aggregate(std::span<const FoldResult> folds) {
    std::vector<double> acc, wa;
    for (const auto& f : folds) {
        acc.push_back(f.accuracy);
        wa.push_back(f.weighted_accuracy);
    }
    Aggregate a;
    a.folds = folds.size();
    std::tie(a.mean_accuracy, a.se_accuracy) = mean_and_standard_error(acc);
    std::tie(a.mean_weighted_accuracy, a.se_weighted_accuracy) = mean_and_standard_error(wa);
    return a;
}

nlohmann::json to_json(const FoldResult& f) {
    auto preds = nlohmann::json::array();
    for (const auto& p : f.predictions) {
        nlohmann::json j{{"session_id", p.session_id}, {"truth", p.truth}, {"predicted", p.predicted}};
        if (p.rating) j["rating"] = *p.rating;
        if (p.predicted_rating) j["predicted_rating"] = *p.predicted_rating;
        preds.push_back(std::move(j));
    }
    nlohmann::json j{{"fold", f.fold},
                     {"heldout_group", f.heldout_group},
                     {"behavior", f.behavior},
                     {"method", f.method},
                     {"accuracy", f.accuracy},
                     {"wa", f.weighted_accuracy},
                     {"predictions", preds}};
    if (f.mean_absolute_error) j["mae"] = *f.mean_absolute_error;
    return j;
}

namespace {

// Sessions taking part in the folds, with their class labels.
struct Task {
    std::vector<std::size_t> members;  // indices into sessions
    std::vector<int> labels;           // parallel to members
    std::vector<std::string> groups;   // parallel to members
    std::size_t classes = 2;
};

std::vector<Embedding> flatten(std::span<const SessionEmbeddings> embeddings, std::span<const std::size_t> which,
                               std::span<const int> labels, std::vector<int>& flat_labels) {
    std::vector<Embedding> out;
    flat_labels.clear();
    for (std::size_t k = 0; k < which.size(); ++k) {
        for (const auto& e : embeddings[which[k]]) {
            out.push_back(e);
            flat_labels.push_back(labels[k]);
        }
    }
    return out;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (fold + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

FoldResult run_fold(EvalMethod method, const CvSplit& split, const Task& task, std::span<const LabeledSession> sessions,
                    std::span<const SessionEmbeddings> embeddings, const std::string& behavior,
                    const EvalOptions& options) {
    FoldResult result;
    result.fold = split.fold;
    result.heldout_group = split.heldout_group;
    result.behavior = behavior;
    result.method = std::string(to_string(method));
    const std::uint64_t seed = fold_seed(options.seed, split.fold);

    std::vector<std::size_t> train_sessions;
    std::vector<int> train_labels;
    for (std::size_t k : split.train) {
        train_sessions.push_back(task.members[k]);
        train_labels.push_back(task.labels[k]);
    }

    std::vector<int> predictions, truths;
    auto record = [&](std::size_t k, int predicted) {
        const std::size_t s = task.members[k];
        SessionPrediction p{sessions[s].session_id, task.labels[k], predicted, std::nullopt, std::nullopt};
        if (method != EvalMethod::Emotion) p.rating = sessions[s].ratings.at(behavior);
        result.predictions.push_back(std::move(p));
        predictions.push_back(predicted);
        truths.push_back(task.labels[k]);
    };

    switch (method) {
        case EvalMethod::Knn: {
            std::vector<int> flat_labels;
            const auto train = flatten(embeddings, train_sessions, train_labels, flat_labels);
            for (std::size_t k : split.test) {
                record(k, knn_predict_session(train, flat_labels, embeddings[task.members[k]], options.neighbors));
            }
            break;
        }
        case EvalMethod::KMeans: {
            std::vector<int> flat_labels;
            const auto train = flatten(embeddings, train_sessions, train_labels, flat_labels);
            KMeansModel model = kmeans_fit(train, options.clusters, seed, options.kmeans_restarts);
            std::vector<SeedSession> candidates;
            for (std::size_t k = 0; k < train_sessions.size(); ++k) {
                candidates.push_back({embeddings[train_sessions[k]], train_labels[k]});
            }
            Rng rng(seed);
            kmeans_label_clusters(model, candidates, rng);
            for (std::size_t k : split.test) record(k, kmeans_predict_session(model, embeddings[task.members[k]]));
            break;
        }
        case EvalMethod::Rating: {
            std::vector<RatingSample> samples;
            std::vector<double> train_ratings;
            for (std::size_t s = 0; s < sessions.size(); ++s) {
                if (sessions[s].group_id == split.heldout_group) continue;
                const double r = sessions[s].ratings.at(behavior);
                samples.push_back({embeddings[s], r, sessions[s].group_id});
                train_ratings.push_back(r);
            }
            RatingEstimatorConfig cfg = options.rating;
            cfg.seed = seed;
            const RatingEstimator est = train_rating_estimator(samples, cfg);
            const double threshold = median(train_ratings);
            double abs_error = 0.0;
            for (std::size_t k : split.test) {
                const double predicted = est.predict_rating(embeddings[task.members[k]]);
                record(k, predicted > threshold ? 1 : 0);
                result.predictions.back().predicted_rating = predicted;
                abs_error += std::abs(predicted - *result.predictions.back().rating);
            }
            result.mean_absolute_error = abs_error / static_cast<double>(split.test.size());
            break;
        }
        case EvalMethod::Emotion: {
            std::vector<int> flat_labels;
            const auto train = flatten(embeddings, train_sessions, train_labels, flat_labels);
            EmotionDnnConfig cfg = options.emotion;
            cfg.seed = seed;
            const EmotionClassifier clf = train_emotion_dnn(train, flat_labels, task.classes, cfg);
            for (std::size_t k : split.test) record(k, clf.predict_session(embeddings[task.members[k]]));
            break;
        }
    }
    const Metrics m = compute_metrics(predictions, truths, task.classes);
    result.accuracy = m.accuracy;
    result.weighted_accuracy = m.weighted_accuracy;
    return result;
}

}  // namespace

EvalRun evaluate(EvalMethod method, std::span<const LabeledSession> sessions,
                 std::span<const SessionEmbeddings> embeddings, const std::string& behavior, const EvalOptions& options) {
    if (sessions.size() != embeddings.size()) throw UsageError("one embedding list per session required");
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        if (embeddings[s].empty()) throw UsageError("session " + sessions[s].session_id + " has no embeddings");
    }
    EvalRun run;
    Task task;
    if (method == EvalMethod::Emotion) {
        std::set<std::string> names;
        for (const auto& s : sessions) {
            if (!s.emotion) throw Error("session " + s.session_id + " has no emotion label");
            names.insert(*s.emotion);
        }
        run.class_names.assign(names.begin(), names.end());
        task.classes = std::max<std::size_t>(2, names.size());
        for (std::size_t s = 0; s < sessions.size(); ++s) {
            task.members.push_back(s);
            task.labels.push_back(static_cast<int>(
                std::lower_bound(run.class_names.begin(), run.class_names.end(), *sessions[s].emotion) -
                run.class_names.begin()));
        }
    } else {
        auto extremes = select_extremes(sessions, behavior, options.fraction);
        if (extremes.warning) run.warnings.push_back(*extremes.warning);
        std::sort(extremes.retained.begin(), extremes.retained.end(),
                  [](const auto& a, const auto& b) { return a.index < b.index; });
        for (const auto& b : extremes.retained) {
            task.members.push_back(b.index);
            task.labels.push_back(b.label);
        }
        run.class_names = {"low", "high"};
    }
    if (task.members.empty()) throw Error("no sessions to evaluate");
    for (std::size_t s : task.members) task.groups.push_back(sessions[s].group_id);

    const auto splits = make_cv_splits(task.groups);
    if (splits.size() < 2) throw Error("leave-one-group-out needs at least two groups");
    run.folds.resize(splits.size());
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, splits.size());
    std::vector<std::exception_ptr> errors(jobs);
    auto worker = [&](std::size_t w) {
        try {
            for (std::size_t f = w; f < splits.size(); f += jobs) {
                run.folds[f] = run_fold(method, splits[f], task, sessions, embeddings, behavior, options);
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
        for (auto& t : threads) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return run;
}

}  // namespace dmtl
