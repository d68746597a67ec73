#include "dmtl/model.hpp"

#include "dmtl/error.hpp"
#include "dmtl/nn/loss.hpp"
#include "dmtl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dmtl {

using nn::Expr;
using nn::Graph;

std::string_view to_string(Preset preset) { return preset == Preset::Paper ? "paper" : "desk"; }

Preset parse_preset(std::string_view text) {
    if (text == "paper") return Preset::Paper;
    if (text == "desk") return Preset::Desk;
    throw UsageError("unknown preset '" + std::string(text) + "' (expected paper or desk)");
}

ModelConfig ModelConfig::paper() {
    ModelConfig c;
    c.preset = Preset::Paper;
    c.layers = 2;
    c.hidden = 100;
    return c;
}

ModelConfig ModelConfig::desk() {
    ModelConfig c;
    c.preset = Preset::Desk;
    c.layers = 2;
    c.hidden = 8;
    c.optimizer = nn::OptimizerKind::Adagrad;
    c.learning_rate = 0.1;
    c.decay = 1.0;
    c.epochs = 30;
    c.head_widths = {64, 64, 32, 16};  // an 8-wide last layer often dies entirely
    c.checkpoint_every = 0;
    c.patience = 3;
    c.heldout_fraction = 0.1;
    return c;
}

ModelConfig ModelConfig::for_preset(Preset preset) { return preset == Preset::Paper ? paper() : desk(); }

double ModelConfig::epoch_learning_rate(std::size_t epoch) const {
    return learning_rate / std::pow(decay, static_cast<double>(epoch));
}

void ModelConfig::validate() const {
    if (preset == Preset::Paper) {
        if (layers != 2 && layers != 3) throw UsageError("paper preset needs 2 or 3 layers");
        if (hidden != 100 && hidden != 300) throw UsageError("paper preset needs hidden size 100 or 300");
    }
    if (layers == 0) throw UsageError("layers must be positive");
    if (hidden == 0) throw UsageError("hidden size must be positive");
    if (vocab_size <= Vocabulary::kReserved) throw UsageError("vocabulary must extend past the reserved symbols");
    if (max_len < 3) throw UsageError("max_len must be at least 3");
    nn::check_lambda(lambda);
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
    if (!(decay >= 1.0)) throw UsageError("decay must be at least 1");
    if (epochs == 0) throw UsageError("epochs must be positive");
    if (batch_size == 0) throw UsageError("batch size must be positive");
    if (!(clip_norm > 0.0)) throw UsageError("clip norm must be positive");
    for (std::size_t w : head_widths) {
        if (w == 0) throw UsageError("head widths must be positive");
    }
    if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) throw UsageError("heldout_fraction must lie in [0, 1)");
}

nlohmann::json to_json(const ModelConfig& c) {
    return {
        {"preset", to_string(c.preset)},
        {"vocab_size", c.vocab_size},
        {"layers", c.layers},
        {"hidden", c.hidden},
        {"word_dim", c.word_dim},
        {"max_len", c.max_len},
        {"lambda", c.lambda},
        {"optimizer", nn::to_string(c.optimizer)},
        {"learning_rate", c.learning_rate},
        {"momentum", c.momentum},
        {"decay", c.decay},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"clip_norm", c.clip_norm},
        {"head_widths", c.head_widths},
        {"checkpoint_every", c.checkpoint_every},
        {"patience", c.patience},
        {"heldout_fraction", c.heldout_fraction},
        {"seed", c.seed},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("model config must be a JSON object");
    ModelConfig c = ModelConfig::for_preset(parse_preset(j.value("preset", std::string("desk"))));
    try {
        c.vocab_size = j.value("vocab_size", c.vocab_size);
        c.layers = j.value("layers", c.layers);
        c.hidden = j.value("hidden", c.hidden);
        c.word_dim = j.value("word_dim", c.word_dim);
        c.max_len = j.value("max_len", c.max_len);
        c.lambda = j.value("lambda", c.lambda);
        c.optimizer = nn::parse_optimizer_kind(j.value("optimizer", std::string(nn::to_string(c.optimizer))));
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.momentum = j.value("momentum", c.momentum);
        c.decay = j.value("decay", c.decay);
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.clip_norm = j.value("clip_norm", c.clip_norm);
        c.head_widths = j.value("head_widths", c.head_widths);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.patience = j.value("patience", c.patience);
        c.heldout_fraction = j.value("heldout_fraction", c.heldout_fraction);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad model config: ") + e.what());
    }
    return c;
}

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config)
    : config_((config.validate(), config)),
      // Word vectors of unit expected norm; smaller ones leave sentence embeddings too alike for the head.
      words_(&params_.add("words", config.vocab_size, config.input_dim(),
                          nn::InitScheme::fan_in(config.input_dim(), std::sqrt(3.0)))),
      encoder_(params_, "enc", config.input_dim(), config.hidden, config.layers),
      decoder_(params_, "dec", config.input_dim(), 2 * config.hidden, config.layers, config.vocab_size),
      head_(params_, "head", config.embedding_dim(), config.head_widths, 2) {
    params_.initialize(config.seed);
}

Seq2SeqModel::Encoded Seq2SeqModel::encode(Graph& g, std::span<const TokenId> source) const {
    if (source.empty()) throw UsageError("cannot encode an empty sentence");
    std::vector<Expr> inputs;
    inputs.reserve(source.size());
    for (TokenId id : source) {
        if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) throw UsageError("token id out of range");
        inputs.push_back(g.lookup(*words_, static_cast<std::size_t>(id)));
    }
    const auto layers = encoder_.run(g, inputs);
    Encoded out;
    for (const auto& layer : layers) out.finals.push_back(nn::concat({layer.forward_final, layer.backward_final}));
    out.embedding = nn::concat(out.finals);
    out.memory = nn::columns(layers.back().outputs);
    return out;
}

std::vector<Expr> Seq2SeqModel::decode(Graph& g, const Encoded& encoded, std::span<const TokenId> target) const {
    return decoder_.forward(g, *words_, target, encoded.finals, encoded.memory);
}

Expr Seq2SeqModel::head_logits(Graph& g, Expr embedding) const { return head_.logits(g, embedding); }

bool Seq2SeqModel::is_decoder_parameter(std::string_view name) { return name.starts_with("dec."); }
bool Seq2SeqModel::is_head_parameter(std::string_view name) { return name.starts_with("head."); }

std::vector<TrainingExample> make_examples(std::span<const DialoguePair> pairs, const Vocabulary& vocab,
                                           std::size_t max_len, const AffectLexicon* lexicon) {
    std::vector<TrainingExample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.x.empty() || p.y.empty()) throw Error("dialogue pair with an empty side");
        TrainingExample ex;
        ex.source = encode(p.x, vocab, max_len);
        const auto framed = encode(p.y, vocab, max_len);
        ex.target.assign(framed.begin() + 1, framed.end());
        if (p.b) {
            ex.label = *p.b;
        } else if (lexicon) {
            ex.label = label_sentence(p.x, *lexicon);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

nlohmann::json to_json(const LossRecord& r) {
    return {{"epoch", r.epoch},
            {"step", r.step},
            {"learning_rate", r.learning_rate},
            {"loss", r.loss},
            {"l1", r.l1},
            {"l2", r.l2},
            {"heldout_l1", r.heldout_l1 ? nlohmann::json(*r.heldout_l1) : nlohmann::json(nullptr)}};
}

LossRecord loss_record_from_json(const nlohmann::json& j) {
    LossRecord r;
    r.epoch = j.at("epoch").get<std::size_t>();
    r.step = j.at("step").get<std::uint64_t>();
    r.learning_rate = j.at("learning_rate").get<double>();
    r.loss = j.at("loss").get<double>();
    r.l1 = j.at("l1").get<double>();
    r.l2 = j.at("l2").get<double>();
    if (!j.at("heldout_l1").is_null()) r.heldout_l1 = j.at("heldout_l1").get<double>();
    return r;
}

namespace {

Expr sequence_nll_sum(const std::vector<Expr>& logits, std::span<const TokenId> target) {
    std::vector<Expr> terms;
    terms.reserve(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
        terms.push_back(nn::pick_neg_log_softmax(logits[t], static_cast<std::size_t>(target[t])));
    }
    return nn::sum(terms);
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

LossTotals evaluate_losses(const Seq2SeqModel& model, std::span<const TrainingExample> examples) {
    LossTotals totals;
    for (const auto& ex : examples) {
        Graph g;
        const auto encoded = model.encode(g, ex.source);
        totals.nll += sequence_nll_sum(model.decode(g, encoded, ex.target), ex.target).value()[0];
        totals.tokens += ex.target.size();
        if (const auto cls = affect_class_index(ex.label)) {
            totals.cross_entropy +=
                nn::pick_neg_log_softmax(model.head_logits(g, encoded.embedding), static_cast<std::size_t>(*cls))
                    .value()[0];
            ++totals.labeled;
        }
    }
    return totals;
}

LossTotals accumulate_batch_gradients(Seq2SeqModel& model, std::span<const TrainingExample> examples,
                                      std::span<const std::size_t> batch) {
    const double lambda = model.config().lambda;
    const bool use_decoder = lambda > 0.0;
    const bool use_head = lambda < 1.0;

    std::size_t batch_tokens = 0;
    std::size_t batch_labeled = 0;
    for (std::size_t i : batch) {
        batch_tokens += examples[i].target.size();
        batch_labeled += affect_class_index(examples[i].label).has_value();
    }

    LossTotals totals;
    for (std::size_t i : batch) {
        const TrainingExample& ex = examples[i];
        Graph g;
        const auto encoded = model.encode(g, ex.source);
        std::vector<Expr> terms;
        if (use_decoder) {
            const Expr nll = sequence_nll_sum(model.decode(g, encoded, ex.target), ex.target);
            totals.nll += nll.value()[0];
            totals.tokens += ex.target.size();
            terms.push_back(nn::scale(nll, lambda / static_cast<double>(batch_tokens)));
        }
        const auto cls = affect_class_index(ex.label);
        if (use_head && cls) {
            const Expr ce =
                nn::pick_neg_log_softmax(model.head_logits(g, encoded.embedding), static_cast<std::size_t>(*cls));
            totals.cross_entropy += ce.value()[0];
            ++totals.labeled;
            terms.push_back(nn::scale(ce, (1.0 - lambda) / static_cast<double>(batch_labeled)));
        }
        if (terms.empty()) continue;
        g.backward(nn::sum(terms));
    }
    return totals;
}

double head_accuracy(const Seq2SeqModel& model, std::span<const TrainingExample> examples) {
    std::size_t labeled = 0, correct = 0;
    for (const auto& ex : examples) {
        const auto cls = affect_class_index(ex.label);
        if (!cls) continue;
        Graph g;
        const auto encoded = model.encode(g, ex.source);
        correct += argmax(model.head_logits(g, encoded.embedding).value().data()) == static_cast<std::size_t>(*cls);
        ++labeled;
    }
    return labeled == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(labeled);
}

TrainResult train(Seq2SeqModel& model, std::span<const TrainingExample> examples, const SnapshotCallback& on_snapshot) {
    const ModelConfig& cfg = model.config();
    if (examples.empty()) throw UsageError("no training examples");

    Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> train_idx(examples.size());
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<TrainingExample> heldout;
    if (cfg.heldout_fraction > 0.0 && examples.size() >= 2) {
        order_rng.shuffle(std::span<std::size_t>(train_idx));
        const auto n_held = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(cfg.heldout_fraction * static_cast<double>(examples.size()))));
        for (std::size_t k = train_idx.size() - n_held; k < train_idx.size(); ++k) heldout.push_back(examples[train_idx[k]]);
        train_idx.resize(train_idx.size() - n_held);
        std::sort(train_idx.begin(), train_idx.end());
    }
    std::vector<TrainingExample> train_set;
    train_set.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_set.push_back(examples[i]);

    auto opt = nn::OptimizerState::create(model.params(), cfg.optimizer, cfg.learning_rate);
    TrainResult result;

    auto heldout_l1 = [&]() -> std::optional<double> {
        if (heldout.empty()) return std::nullopt;
        return evaluate_losses(model, heldout).l1();
    };
    {
        const LossTotals initial = evaluate_losses(model, train_set);
        result.trace.push_back({0, 0, cfg.learning_rate, initial.combined(cfg.lambda), initial.l1(), initial.l2(),
                                heldout_l1()});
    }

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    double best_heldout = result.trace.back().heldout_l1.value_or(0.0);
    std::size_t stale = 0;
    std::uint64_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.learning_rate = cfg.epoch_learning_rate(epoch);
        order_rng.shuffle(std::span<std::size_t>(order));
        LossTotals epoch_totals;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            model.params().zero_grad();
            const LossTotals batch =
                accumulate_batch_gradients(model, train_set, std::span(order).subspan(start, end - start));
            if (!std::isfinite(batch.nll) || !std::isfinite(batch.cross_entropy)) {
                throw Error("non-finite loss at step " + std::to_string(step + 1));
            }
            nn::clip_global_norm(model.params(), cfg.clip_norm);
            if (cfg.optimizer == nn::OptimizerKind::Adagrad) {
                nn::adagrad_step(model.params(), opt);
            } else {
                nn::sgd_momentum_step(model.params(), opt, cfg.momentum);
            }
            ++step;
            epoch_totals.nll += batch.nll;
            epoch_totals.tokens += batch.tokens;
            epoch_totals.cross_entropy += batch.cross_entropy;
            epoch_totals.labeled += batch.labeled;
            if (on_snapshot && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
                on_snapshot({model, opt, epoch, step, false, result.trace});
            }
        }
        const auto held = heldout_l1();
        result.trace.push_back({epoch + 1, step, opt.learning_rate, epoch_totals.combined(cfg.lambda),
                                epoch_totals.l1(), epoch_totals.l2(), held});
        result.epochs_run = epoch + 1;
        if (held) {
            if (*held < best_heldout) {
                best_heldout = *held;
                result.best_epoch = epoch + 1;
                stale = 0;
            } else {
                ++stale;
            }
        } else {
            result.best_epoch = epoch + 1;
        }
        if (on_snapshot) on_snapshot({model, opt, epoch + 1, step, true, result.trace});
        if (held && cfg.patience > 0 && stale >= cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace dmtl
