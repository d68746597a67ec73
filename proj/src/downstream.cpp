#include "dmtl/downstream.hpp"

#include "dmtl/error.hpp"
#include "dmtl/nn/graph.hpp"
#include "dmtl/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace dmtl {

using nn::Expr;
using nn::Graph;
using nn::Tensor;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw UsageError("embedding dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// ---- label binarization -------------------------------------------------

ExtremesResult select_extremes(std::span<const LabeledSession> sessions, const std::string& behavior,
                               double fraction) {
    if (!(fraction > 0.0 && fraction <= 0.5)) throw UsageError("extreme fraction must lie in (0, 0.5]");
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto it = sessions[i].ratings.find(behavior);
        if (it == sessions[i].ratings.end()) {
            throw Error("session " + sessions[i].session_id + " has no rating for " + behavior);
        }
        order.emplace_back(it->second, i);
    }
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return sessions[a.second].session_id < sessions[b.second].session_id;
    });
    const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(sessions.size()) + 1e-9));
    ExtremesResult result;
    for (std::size_t r = 0; r < n; ++r) result.retained.push_back({order[r].second, 0, order[r].first});
    for (std::size_t r = order.size() - n; r < order.size(); ++r) {
        result.retained.push_back({order[r].second, 1, order[r].first});
    }
    if (!order.empty() && order.front().first == order.back().first) {
        result.warning = "all ratings for " + behavior + " are equal; the split follows session ids";
    }
    return result;
}

// ---- cross-validation ---------------------------------------------------

std::vector<CvSplit> make_cv_splits(std::span<const std::string> item_groups) {
    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < item_groups.size(); ++i) by_group[item_groups[i]].push_back(i);
    std::vector<CvSplit> splits;
    for (const auto& [group, members] : by_group) {
        CvSplit split{splits.size(), group, {}, members};
        for (std::size_t i = 0; i < item_groups.size(); ++i) {
            if (item_groups[i] != group) split.train.push_back(i);
        }
        splits.push_back(std::move(split));
    }
    check_cv_partition(splits, item_groups);
    return splits;
}

void check_cv_partition(std::span<const CvSplit> splits, std::span<const std::string> item_groups) {
    std::vector<int> seen(item_groups.size(), 0);
    for (const auto& split : splits) {
        for (std::size_t i : split.test) {
            if (i >= item_groups.size() || item_groups[i] != split.heldout_group) {
                throw Error("fold " + std::to_string(split.fold) + " tests an item outside its held-out group");
            }
            ++seen[i];
        }
        for (std::size_t i : split.train) {
            if (i >= item_groups.size() || item_groups[i] == split.heldout_group) {
                throw Error("fold " + std::to_string(split.fold) + " leaks group " + split.heldout_group +
                            " into training");
            }
        }
        if (split.train.size() + split.test.size() != item_groups.size()) {
            throw Error("fold " + std::to_string(split.fold) + " does not cover every item");
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] != 1) throw Error("item " + std::to_string(i) + " is tested " + std::to_string(seen[i]) + " times");
    }
}

// ---- k-means ------------------------------------------------------------

std::size_t nearest_centroid(const KMeansModel& model, std::span<const double> point) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
        const double d = squared_distance(model.centroids[c], point);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

struct LloydRun {
    std::vector<Embedding> centroids;
    std::vector<double> trace;
    std::size_t iterations = 0;
    double wcss = 0.0;
};

LloydRun lloyd(std::span<const Embedding> points, std::vector<Embedding> centroids, std::size_t max_iterations) {
    const std::size_t n = points.size();
    const std::size_t k = centroids.size();
    const std::size_t dim = points.front().size();
    LloydRun run;
    KMeansModel view;
    std::vector<std::size_t> assignment(n, k);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        view.centroids = centroids;
        std::vector<std::size_t> next(n);
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = nearest_centroid(view, points[i]);
            wcss += squared_distance(points[i], centroids[next[i]]);
        }
        run.trace.push_back(wcss);
        run.iterations = iter + 1;
        if (next == assignment) break;
        assignment = std::move(next);

        std::vector<Embedding> sums(k, Embedding(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
            ++counts[assignment[i]];
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                continue;
            }
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = squared_distance(points[i], centroids[assignment[i]]);
                if (!taken[i] && d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            taken[far] = true;
            centroids[c] = points[far];
        }
    }
    view.centroids = centroids;
    for (const auto& p : points) run.wcss += squared_distance(p, centroids[nearest_centroid(view, p)]);
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace

KMeansModel kmeans_fit(std::span<const Embedding> points, std::size_t k, std::uint64_t seed, std::size_t restarts,
                       std::size_t max_iterations) {
    if (k == 0) throw UsageError("k-means needs k >= 1");
    if (restarts == 0 || max_iterations == 0) throw UsageError("k-means needs restarts and iterations");
    std::vector<Embedding> distinct(points.begin(), points.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < k) {
        throw UsageError("k-means needs at least " + std::to_string(k) + " distinct points, got " +
                         std::to_string(distinct.size()));
    }
    for (const auto& p : points) {
        if (p.size() != points.front().size()) throw UsageError("embedding dimensions differ");
    }

    Rng rng(seed);
    KMeansModel best;
    bool have_best = false;
    for (std::size_t r = 0; r < restarts; ++r) {
        std::vector<Embedding> init;
        while (init.size() < k) {
            const Embedding& candidate = points[rng.below(points.size())];
            if (std::find(init.begin(), init.end(), candidate) == init.end()) init.push_back(candidate);
        }
        LloydRun run = lloyd(points, std::move(init), max_iterations);
        if (!have_best || run.wcss < best.wcss) {
            best.centroids = std::move(run.centroids);
            best.wcss = run.wcss;
            best.iterations = run.iterations;
            best.wcss_trace = std::move(run.trace);
            have_best = true;
        }
    }
    best.labels.assign(k, -1);
    return best;
}

std::size_t majority_centroid(const KMeansModel& model, std::span<const Embedding> session) {
    if (session.empty()) throw UsageError("empty session");
    std::vector<std::size_t> counts(model.centroids.size(), 0);
    for (const auto& e : session) ++counts[nearest_centroid(model, e)];
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

bool kmeans_label_from_seeds(KMeansModel& model, std::span<const SeedSession> seeds) {
    std::vector<int> labels(model.centroids.size(), -1);
    for (const auto& seed : seeds) {
        const std::size_t c = majority_centroid(model, seed.embeddings);
        if (labels[c] != -1) return false;
        labels[c] = seed.label;
    }
    std::vector<std::size_t> labeled;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c] != -1) labeled.push_back(c);
    }
    if (labeled.empty()) throw UsageError("no seed sessions");
    std::vector<int> out = labels;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c] != -1) continue;
        std::size_t nearest = labeled.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t l : labeled) {
            const double d = squared_distance(model.centroids[c], model.centroids[l]);
            if (d < best_d) {
                best_d = d;
                nearest = l;
            }
        }
        out[c] = labels[nearest];
    }
    model.labels = std::move(out);
    return true;
}

void kmeans_label_clusters(KMeansModel& model, std::span<const SeedSession> candidates, Rng& rng,
                           std::size_t max_attempts) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < candidates.size(); ++i) by_class[candidates[i].label].push_back(i);
    if (by_class.empty()) throw UsageError("no candidate seed sessions");
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<SeedSession> seeds;
        for (const auto& [label, members] : by_class) seeds.push_back(candidates[members[rng.below(members.size())]]);
        if (kmeans_label_from_seeds(model, seeds)) return;
    }
    throw Error("k-means seeding: seed sessions kept sharing a majority centroid after " +
                std::to_string(max_attempts) + " draws");
}

int kmeans_predict_session(const KMeansModel& model, std::span<const Embedding> session) {
    const int label = model.labels.at(majority_centroid(model, session));
    if (label < 0) throw UsageError("k-means model is not labeled");
    return label;
}

// ---- k-NN ---------------------------------------------------------------

std::vector<std::size_t> k_nearest(std::span<const Embedding> train, std::span<const double> query, std::size_t k) {
    if (k == 0) throw UsageError("k-NN needs k >= 1");
    if (k > train.size()) {
        throw UsageError("k = " + std::to_string(k) + " exceeds the " + std::to_string(train.size()) +
                         " training embeddings");
    }
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) dist[i] = {squared_distance(train[i], query), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

int majority_label(std::span<const int> votes) {
    if (votes.empty()) throw UsageError("no votes");
    std::map<int, std::size_t> counts;
    for (int v : votes) ++counts[v];
    int best = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

int knn_predict_point(std::span<const Embedding> train, std::span<const int> labels, std::span<const double> query,
                      std::size_t k) {
    if (labels.size() != train.size()) throw UsageError("one label per training embedding required");
    std::vector<int> votes;
    for (std::size_t i : k_nearest(train, query, k)) votes.push_back(labels[i]);
    return majority_label(votes);
}

int knn_predict_session(std::span<const Embedding> train, std::span<const int> labels,
                        std::span<const Embedding> session, std::size_t k) {
    if (session.empty()) throw UsageError("empty session");
    std::vector<int> votes;
    for (const auto& e : session) votes.push_back(knn_predict_point(train, labels, e, k));
    return majority_label(votes);
}

// ---- rating estimation --------------------------------------------------

Windows sliding_windows(std::span<const Embedding> embeddings, std::size_t size) {
    if (size == 0) throw UsageError("window size must be positive");
    if (embeddings.empty()) throw UsageError("cannot window an empty session");
    Windows out;
    if (embeddings.size() < size) {
        std::vector<Embedding> w(embeddings.begin(), embeddings.end());
        while (w.size() < size) w.push_back(embeddings.back());
        out.windows.push_back(std::move(w));
        out.padded = true;
        return out;
    }
    for (std::size_t i = 0; i + size <= embeddings.size(); ++i) {
        out.windows.emplace_back(embeddings.begin() + static_cast<std::ptrdiff_t>(i),
                                 embeddings.begin() + static_cast<std::ptrdiff_t>(i + size));
    }
    return out;
}

double normalize_rating(double rating) { return (rating - 1.0) / 8.0; }

double median(std::vector<double> values) {
    if (values.empty()) throw UsageError("median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

LinearSvr svr_fit_1d(std::span<const double> x, std::span<const double> y, double epsilon, double c,
                     std::size_t iterations) {
    if (x.size() != y.size()) throw UsageError("SVR needs paired samples");
    if (x.empty()) throw UsageError("SVR needs at least one sample");
    if (!(epsilon >= 0.0) || !(c > 0.0)) throw UsageError("SVR needs epsilon >= 0 and C > 0");
    const double n = static_cast<double>(x.size());
    double max_abs_x = 0.0;
    for (double v : x) max_abs_x = std::max(max_abs_x, std::abs(v));
    const double step0 = 1.0 / std::max(1.0, max_abs_x);

    auto objective = [&](double w, double b) {
        double hinge = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) hinge += std::max(0.0, std::abs(y[i] - w * x[i] - b) - epsilon);
        return w * w / (2.0 * c) + hinge / n;
    };
    LinearSvr current, best;
    double best_obj = objective(0.0, 0.0);
    for (std::size_t t = 0; t < iterations; ++t) {
        double gw = current.slope / c;
        double gb = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - current(x[i]);
            if (std::abs(r) <= epsilon) continue;
            const double s = r > 0 ? 1.0 : -1.0;
            gw -= s * x[i] / n;
            gb -= s / n;
        }
        const double step = step0 / std::sqrt(static_cast<double>(t) + 1.0);
        current.slope -= step * gw;
        current.intercept -= step * gb;
        const double obj = objective(current.slope, current.intercept);
        if (obj < best_obj) {
            best_obj = obj;
            best = current;
        }
    }
    return best;
}

RatingEstimator::RatingEstimator(std::size_t input_dim, const RatingEstimatorConfig& config)
    : config_(config), params_(std::make_unique<nn::ParameterSet>()) {
    if (config.hidden == 0 || config.window == 0) throw UsageError("rating estimator needs hidden and window sizes");
    cell_ = std::make_unique<nn::LstmCell>(*params_, "rate.lstm", input_dim, config.hidden);
    out_w_ = &params_->add("rate.out.w", 1, config.hidden, nn::InitScheme::fan_in(config.hidden));
    out_b_ = &params_->add("rate.out.b", 1, 1, nn::InitScheme::constant(0.0));
    params_->initialize(config.seed);
}

Expr RatingEstimator::window_output(Graph& g, std::span<const Embedding> window) const {
    Expr h = g.input(Tensor(config_.hidden, 1));
    Expr c = g.input(Tensor(config_.hidden, 1));
    for (const auto& e : window) std::tie(h, c) = cell_->step(g, g.input(Tensor::column(e)), h, c);
    return nn::sigmoid(nn::matvec(g.param(*out_w_), h) + g.param(*out_b_));
}

double RatingEstimator::window_prediction(std::span<const Embedding> window) const {
    Graph g;
    return window_output(g, window).value()[0];
}

std::vector<double> RatingEstimator::window_predictions(std::span<const Embedding> session) const {
    std::vector<double> out;
    for (const auto& w : sliding_windows(session, config_.window).windows) out.push_back(window_prediction(w));
    return out;
}

double RatingEstimator::median_prediction(std::span<const Embedding> session) const {
    return median(window_predictions(session));
}

double RatingEstimator::predict_rating(std::span<const Embedding> session) const {
    return std::clamp(svr(median_prediction(session)), 1.0, 9.0);
}

namespace {

std::vector<Tensor> snapshot(const nn::ParameterSet& params) {
    std::vector<Tensor> out;
    for (const auto& p : params) out.push_back(p->value);
    return out;
}

void restore(nn::ParameterSet& params, const std::vector<Tensor>& values) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k].value = values[k];
}

}  // namespace

RatingEstimator train_rating_estimator(std::span<const RatingSample> samples, const RatingEstimatorConfig& config) {
    if (samples.empty()) throw UsageError("rating estimator needs training sessions");
    const std::size_t dim = samples.front().embeddings.front().size();
    RatingEstimator est(dim, config);
    Rng rng(config.seed ^ 0x2545f4914f6cdd1dULL);

    std::set<std::string> groups;
    for (const auto& s : samples) groups.insert(s.group);
    if (groups.size() >= 2) {
        const std::vector<std::string> ordered(groups.begin(), groups.end());
        est.validation_group = ordered[rng.below(ordered.size())];
    }

    struct Item {
        std::vector<Embedding> window;
        double target;
    };
    std::vector<Item> train_items, val_items;
    for (const auto& s : samples) {
        const double target = normalize_rating(s.rating);
        auto& dest = est.validation_group && s.group == *est.validation_group ? val_items : train_items;
        for (auto& w : sliding_windows(s.embeddings, config.window).windows) dest.push_back({std::move(w), target});
    }
    const auto& monitor = val_items.empty() ? train_items : val_items;
    auto monitor_loss = [&] {
        double loss = 0.0;
        for (const auto& item : monitor) {
            const double d = est.window_prediction(item.window) - item.target;
            loss += d * d;
        }
        return loss / static_cast<double>(monitor.size());
    };

    auto opt = nn::OptimizerState::create(est.params(), nn::OptimizerKind::Adagrad, config.learning_rate);
    std::vector<std::size_t> order(train_items.size());
    std::iota(order.begin(), order.end(), 0);
    double best_loss = monitor_loss();
    auto best = snapshot(est.params());
    constexpr std::size_t kBatch = 16;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += kBatch) {
            const std::size_t end = std::min(order.size(), start + kBatch);
            est.params().zero_grad();
            for (std::size_t k = start; k < end; ++k) {
                const Item& item = train_items[order[k]];
                Graph g;
                const Expr diff = est.window_output(g, item.window) - g.input(Tensor::scalar(item.target));
                g.backward(nn::scale(nn::cmul(diff, diff), 1.0 / static_cast<double>(end - start)));
            }
            nn::adagrad_step(est.params(), opt);
        }
        const double loss = monitor_loss();
        if (loss < best_loss) {
            best_loss = loss;
            best = snapshot(est.params());
            est.best_epoch = epoch + 1;
        }
    }
    restore(est.params(), best);

    std::vector<double> xs, ys;
    for (const auto& s : samples) {
        xs.push_back(est.median_prediction(s.embeddings));
        ys.push_back(s.rating);
    }
    est.svr = svr_fit_1d(xs, ys, config.svr_epsilon, config.svr_c);
    return est;
}

// ---- emotion recognition ------------------------------------------------

EmotionClassifier::EmotionClassifier(std::size_t input_dim, std::size_t classes, const EmotionDnnConfig& config)
    : classes_(classes), params_(std::make_unique<nn::ParameterSet>()) {
    if (classes < 2) throw UsageError("emotion classifier needs at least two classes");
    mlp_ = std::make_unique<nn::Mlp>(*params_, "emo", input_dim, config.hidden, classes);
    params_->initialize(config.seed);
}

std::vector<double> EmotionClassifier::probabilities(std::span<const double> embedding) const {
    return nn::mlp_forward(std::vector<double>(embedding.begin(), embedding.end()), *mlp_);
}

int EmotionClassifier::predict(std::span<const double> embedding) const {
    const auto p = probabilities(embedding);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

int EmotionClassifier::predict_session(std::span<const Embedding> session) const {
    if (session.empty()) throw UsageError("empty session");
    std::vector<double> mean(classes_, 0.0);
    for (const auto& e : session) {
        const auto p = probabilities(e);
        for (std::size_t c = 0; c < classes_; ++c) mean[c] += p[c];
    }
    return static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

EmotionClassifier train_emotion_dnn(std::span<const Embedding> embeddings, std::span<const int> labels,
                                    std::size_t classes, const EmotionDnnConfig& config) {
    if (embeddings.empty()) throw UsageError("emotion classifier needs training data");
    if (labels.size() != embeddings.size()) throw UsageError("one label per embedding required");
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= classes) throw UsageError("emotion label out of range");
    }
    EmotionClassifier clf(embeddings.front().size(), classes, config);
    Rng rng(config.seed ^ 0x853c49e6748fea9bULL);
    std::vector<std::size_t> order(embeddings.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_val = static_cast<std::size_t>(std::round(config.validation_fraction * static_cast<double>(order.size())));
    std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(std::min(n_val, order.size() - 1)), order.end());
    order.resize(order.size() - val.size());
    const auto& monitor = val.empty() ? order : val;

    auto item_loss = [&](Graph& g, std::size_t i) {
        const Expr logits = clf.mlp().logits(g, g.input(Tensor::column(embeddings[i])));
        return nn::pick_neg_log_softmax(logits, static_cast<std::size_t>(labels[i]));
    };
    auto monitor_loss = [&] {
        double loss = 0.0;
        for (std::size_t i : monitor) {
            Graph g;
            loss += item_loss(g, i).value()[0];
        }
        return loss / static_cast<double>(monitor.size());
    };

    auto opt = nn::OptimizerState::create(clf.params(), nn::OptimizerKind::Adagrad, config.learning_rate);
    double best_loss = monitor_loss();
    auto best = snapshot(clf.params());
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            clf.params().zero_grad();
            for (std::size_t k = start; k < end; ++k) {
                Graph g;
                g.backward(nn::scale(item_loss(g, order[k]), 1.0 / static_cast<double>(end - start)));
            }
            nn::adagrad_step(clf.params(), opt);
        }
        const double loss = monitor_loss();
        if (loss < best_loss) {
            best_loss = loss;
            best = snapshot(clf.params());
            clf.best_epoch = epoch + 1;
        }
    }
    restore(clf.params(), best);
    return clf;
}

// ---- metrics ------------------------------------------------------------

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truths, std::size_t classes) {
    if (predictions.size() != truths.size()) throw UsageError("predictions and truths differ in length");
    if (truths.empty()) throw UsageError("no predictions to score");
    Metrics m;
    m.class_total.assign(classes, 0);
    m.class_correct.assign(classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i];
        if (t < 0 || static_cast<std::size_t>(t) >= classes) throw UsageError("label out of range");
        ++m.class_total[static_cast<std::size_t>(t)];
        if (predictions[i] == t) {
            ++correct;
            ++m.class_correct[static_cast<std::size_t>(t)];
        }
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (m.class_total[c] == 0) continue;
        recall_sum += static_cast<double>(m.class_correct[c]) / static_cast<double>(m.class_total[c]);
        ++present;
    }
    m.weighted_accuracy = recall_sum / static_cast<double>(present);
    return m;
}

}  // namespace dmtl
