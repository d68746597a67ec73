#pragma once

#include "dmtl/affect.hpp"
#include "dmtl/corpus.hpp"
#include "dmtl/nn/graph.hpp"
#include "dmtl/nn/layers.hpp"
#include "dmtl/nn/optim.hpp"
#include "dmtl/nn/parameter.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dmtl {

enum class Preset : std::uint8_t { Paper, Desk };

std::string_view to_string(Preset preset);
Preset parse_preset(std::string_view text);

struct ModelConfig {
    Preset preset = Preset::Desk;
    std::size_t vocab_size = 0;
    std::size_t layers = 2;
    std::size_t hidden = 8;     // per direction
    std::size_t word_dim = 0;   // 0 means `hidden`
    std::size_t max_len = 30;   // including the start and end symbols
    double lambda = 0.5;
    nn::OptimizerKind optimizer = nn::OptimizerKind::SgdMomentum;
    double learning_rate = 0.05;
    double momentum = 0.9;  // momentum SGD only
    double decay = 10.0;        // lr of epoch e is learning_rate / decay^e
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    double clip_norm = 5.0;
    std::vector<std::size_t> head_widths{512, 512, 256, 128};
    std::size_t checkpoint_every = 500;  // optimizer steps; 0 disables
    std::size_t patience = 0;            // held-out evaluations without improvement; 0 disables
    double heldout_fraction = 0.0;
    std::uint64_t seed = 1;

    static ModelConfig paper();
    static ModelConfig desk();
    static ModelConfig for_preset(Preset preset);

    std::size_t embedding_dim() const { return 2 * layers * hidden; }
    std::size_t input_dim() const { return word_dim == 0 ? hidden : word_dim; }
    double epoch_learning_rate(std::size_t epoch) const;

    // Throws UsageError on out-of-range values. The paper preset restricts
    // layers to {2, 3} and hidden to {100, 300}.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep the preset defaults named by "preset".
ModelConfig model_config_from_json(const nlohmann::json& j);

// Word table shared by encoder and decoder, bidirectional GRU encoder,
// attention decoder and the two-way multitask head over the sentence embedding.
class Seq2SeqModel {
public:
    explicit Seq2SeqModel(const ModelConfig& config);
    Seq2SeqModel(const Seq2SeqModel&) = delete;
    Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;

    struct Encoded {
        std::vector<nn::Expr> finals;  // [fwd; bwd] final state per layer
        nn::Expr embedding;            // finals concatenated, 2 L d
        nn::Expr memory;               // top-layer outputs as columns
    };

    Encoded encode(nn::Graph& g, std::span<const TokenId> source) const;
    // Logits per target position under teacher forcing.
    std::vector<nn::Expr> decode(nn::Graph& g, const Encoded& encoded, std::span<const TokenId> target) const;
    nn::Expr head_logits(nn::Graph& g, nn::Expr embedding) const;

    const ModelConfig& config() const { return config_; }
    nn::ParameterSet& params() { return params_; }
    const nn::ParameterSet& params() const { return params_; }

    static bool is_decoder_parameter(std::string_view name);
    static bool is_head_parameter(std::string_view name);

private:
    ModelConfig config_;
    nn::ParameterSet params_;
    nn::Parameter* words_;
    nn::BiGruStack encoder_;
    nn::AttentionDecoder decoder_;
    nn::Mlp head_;
};

struct TrainingExample {
    std::vector<TokenId> source;  // framed by start and end symbols
    std::vector<TokenId> target;  // reply words then the end symbol
    AffectLabel label = AffectLabel::Unlabeled;
};

// Pairs without b are labeled on the fly from `lexicon` when one is given.
std::vector<TrainingExample> make_examples(std::span<const DialoguePair> pairs, const Vocabulary& vocab,
                                           std::size_t max_len, const AffectLexicon* lexicon = nullptr);

struct LossRecord {
    std::size_t epoch = 0;  // 0 is the state before any update
    std::uint64_t step = 0;
    double learning_rate = 0.0;
    double loss = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    std::optional<double> heldout_l1;

    bool operator==(const LossRecord&) const = default;
};

nlohmann::json to_json(const LossRecord& record);
LossRecord loss_record_from_json(const nlohmann::json& j);

// Corpus-level losses: L1 is the token mean, L2 the mean over labeled items.
struct LossTotals {
    double nll = 0.0;
    std::size_t tokens = 0;
    double cross_entropy = 0.0;
    std::size_t labeled = 0;

    double l1() const { return tokens == 0 ? 0.0 : nll / static_cast<double>(tokens); }
    double l2() const { return labeled == 0 ? 0.0 : cross_entropy / static_cast<double>(labeled); }
    double combined(double lambda) const { return lambda * l1() + (1.0 - lambda) * l2(); }
};

LossTotals evaluate_losses(const Seq2SeqModel& model, std::span<const TrainingExample> examples);

// Forward/backward for one batch under J = lambda L1 + (1 - lambda) L2 with
// batch-mean L1 and masked-mean L2. Gradients are added to Parameter::grad
// in batch order. The decoder is skipped when lambda = 0 and the head when
// lambda = 1.
LossTotals accumulate_batch_gradients(Seq2SeqModel& model, std::span<const TrainingExample> examples,
                                      std::span<const std::size_t> batch);

// Share of labeled examples whose head argmax matches the label.
double head_accuracy(const Seq2SeqModel& model, std::span<const TrainingExample> examples);

struct TrainingSnapshot {
    const Seq2SeqModel& model;
    const nn::OptimizerState& optimizer;
    std::size_t epoch;  // epochs completed
    std::uint64_t step;
    bool end_of_epoch;
    const std::vector<LossRecord>& trace;
};

struct TrainResult {
    std::vector<LossRecord> trace;
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;  // by held-out L1 when a held-out split exists
    bool stopped_early = false;
};

using SnapshotCallback = std::function<void(const TrainingSnapshot&)>;

// Momentum SGD or Adagrad (per config) with the per-epoch schedule and
// global-norm clipping. The callback fires after every epoch and every
// `checkpoint_every` steps.
// Throws Error naming the step when a loss turns non-finite.
TrainResult train(Seq2SeqModel& model, std::span<const TrainingExample> examples, const SnapshotCallback& on_snapshot = {});

}  // namespace dmtl
