#include "dmtl/cli.hpp"

#include "dmtl/affect.hpp"
#include "dmtl/checkpoint.hpp"
#include "dmtl/corpus.hpp"
#include "dmtl/embed.hpp"
#include "dmtl/error.hpp"
#include "dmtl/evaluate.hpp"
#include "dmtl/model.hpp"
#include "dmtl/run_config.hpp"
#include "dmtl/session.hpp"
#include "dmtl/synthetic.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dmtl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    return in;
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string numbered(const char* stem, std::uint64_t n, int width) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s-%0*llu.ckpt", stem, width, static_cast<unsigned long long>(n));
    return buf;
}

// Flags shared by every command, filled by CLI11 before the command body runs.
struct Common {
    std::string config_path;
    std::size_t jobs = 1;

    json config_file() const { return config_path.empty() ? json() : load_config_file(config_path); }
};

// ---- prepare ------------------------------------------------------------

struct PrepareFlags {
    std::optional<std::string> in, out, vocab, misspellings, contractions, common_words;
    std::optional<std::size_t> max_vocab;
    std::optional<std::uint64_t> min_count;
};

void cmd_prepare(const Common& common, const PrepareFlags& f, std::ostream& out) {
    RunConfig rc("prepare", common.config_file());
    const auto in_path = rc.resolve<std::string>("in", f.in, "");
    const auto out_path = rc.resolve<std::string>("out", f.out, "");
    const auto vocab_path = rc.resolve<std::string>("vocab", f.vocab, "");
    const auto max_vocab = rc.resolve<std::size_t>("max_vocab", f.max_vocab, 20000);
    const auto min_count = rc.resolve<std::uint64_t>("min_count", f.min_count, 1);
    const auto misspellings = rc.resolve<std::string>("misspellings", f.misspellings, "");
    const auto contractions = rc.resolve<std::string>("contractions", f.contractions, "");
    const auto common_words = rc.resolve<std::string>("common_words", f.common_words, "");
    rc.check_section_keys();
    if (in_path.empty() || out_path.empty() || vocab_path.empty()) throw UsageError("prepare needs --in, --out and --vocab");

    const NormalizationRules rules = load_rules(misspellings, contractions, common_words);
    auto in = open_input(in_path);
    const auto documents = read_documents(in, rules);
    const auto pairs = pair_consecutive(documents);
    const Vocabulary vocab = build_vocab(documents, max_vocab, min_count);

    const json doc = rc.document();
    std::ostringstream pair_text, vocab_text;
    write_pairs(pair_text, pairs);
    write_vocab(vocab_text, vocab);
    write_file(out_path, pair_text.str());
    write_sidecar(out_path, doc);
    write_file(vocab_path, vocab_text.str());
    write_sidecar(vocab_path, doc);
    out << "prepared " << pairs.size() << " pairs from " << documents.size() << " documents; vocabulary "
        << vocab.size() << " entries\n";
}

// ---- synth --------------------------------------------------------------

struct SynthFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> pairs, groups, sessions_per_group, emotion_groups, emotion_utterances;
    std::optional<std::string> out, sessions, emotion_sessions;
    std::optional<double> pos_fraction, lexicon_overlap, rating_noise;
    bool echo = false;
};

void cmd_synth(const Common& common, const SynthFlags& f, std::ostream& out) {
    RunConfig rc("synth", common.config_file());
    const auto seed = rc.resolve<std::uint64_t>("seed", f.seed, 1);
    const auto n_pairs = rc.resolve<std::size_t>("pairs", f.pairs, 2000);
    const auto out_path = rc.resolve<std::string>("out", f.out, "");
    const auto echo = rc.resolve<bool>("echo", f.echo ? std::optional<bool>(true) : std::nullopt, false);
    SyntheticConfig sc;
    sc.pos_fraction = rc.resolve<double>("pos_fraction", f.pos_fraction, sc.pos_fraction);
    sc.lexicon_overlap = rc.resolve<double>("lexicon_overlap", f.lexicon_overlap, sc.lexicon_overlap);
    sc.validate();
    const auto sessions_path = rc.resolve<std::string>("sessions", f.sessions, "");
    SessionConfig sess;
    sess.groups = rc.resolve<std::size_t>("groups", f.groups, sess.groups);
    sess.sessions_per_group = rc.resolve<std::size_t>("sessions_per_group", f.sessions_per_group, sess.sessions_per_group);
    sess.rating_noise = rc.resolve<double>("rating_noise", f.rating_noise, sess.rating_noise);
    sess.sentences.lexicon_overlap = sc.lexicon_overlap;
    sess.validate();
    const auto emotion_path = rc.resolve<std::string>("emotion_sessions", f.emotion_sessions, "");
    EmotionConfig emo;
    emo.groups = rc.resolve<std::size_t>("emotion_groups", f.emotion_groups, emo.groups);
    emo.utterances_per_group = rc.resolve<std::size_t>("emotion_utterances", f.emotion_utterances, emo.utterances_per_group);
    emo.validate();
    // Independent streams so adding sessions never perturbs the pairs.
    rc.set("session_seed", seed + 1);
    rc.set("emotion_seed", seed + 2);
    rc.check_section_keys();
    if (out_path.empty()) throw UsageError("synth needs --out");

    const json doc = rc.document();
    const auto pairs = echo ? generate_echo_corpus(seed, n_pairs, sc) : generate_synthetic_corpus(seed, n_pairs, sc).pairs;
    std::ostringstream text;
    write_pairs(text, pairs);
    write_file(out_path, text.str());
    write_sidecar(out_path, doc);
    out << "wrote " << pairs.size() << (echo ? " echo" : "") << " pairs to " << out_path << "\n";

    if (!sessions_path.empty()) {
        const auto sessions = generate_synthetic_sessions(seed + 1, sess).sessions;
        std::ostringstream s;
        write_sessions(s, sessions);
        write_file(sessions_path, s.str());
        write_sidecar(sessions_path, doc);
        out << "wrote " << sessions.size() << " sessions to " << sessions_path << "\n";
    }
    if (!emotion_path.empty()) {
        const auto sessions = generate_emotion_sessions(seed + 2, emo);
        std::ostringstream s;
        write_sessions(s, sessions);
        write_file(emotion_path, s.str());
        write_sidecar(emotion_path, doc);
        out << "wrote " << sessions.size() << " emotion sessions to " << emotion_path << "\n";
    }
}

// ---- label --------------------------------------------------------------

struct LabelFlags {
    std::optional<std::string> in, out, lexicon;
    bool stats = false;
};

AffectLexicon lexicon_from(const std::string& path) { return path.empty() ? AffectLexicon::bundled() : load_lexicon(path); }

void cmd_label(const Common& common, const LabelFlags& f, std::ostream& out) {
    RunConfig rc("label", common.config_file());
    const auto in_path = rc.resolve<std::string>("in", f.in, "");
    const auto out_path = rc.resolve<std::string>("out", f.out, "");
    const auto lexicon_path = rc.resolve<std::string>("lexicon", f.lexicon, "");
    rc.check_section_keys();
    if (in_path.empty() || out_path.empty()) throw UsageError("label needs --in and --out");

    const AffectLexicon lexicon = lexicon_from(lexicon_path);
    auto in = open_input(in_path);
    const auto labeled = augment_dataset(read_pairs(in), lexicon);
    const json doc = rc.document();
    std::ostringstream text;
    write_pairs(text, labeled);
    write_file(out_path, text.str());
    write_sidecar(out_path, doc);

    const LabelStats stats = label_stats(labeled);
    if (f.stats) {
        const json j = {{"positive", stats.positive},
                        {"negative", stats.negative},
                        {"unlabeled", stats.unlabeled},
                        {"total", stats.total()},
                        {"run", doc}};
        out << j.dump(2) << "\n";
    } else {
        out << "labeled " << stats.total() << " pairs: " << stats.positive << " positive, " << stats.negative
            << " negative, " << stats.unlabeled << " unlabeled\n";
    }
}

// ---- train --------------------------------------------------------------

struct TrainFlags {
    std::optional<std::string> pairs, vocab, out, preset, optimizer, lexicon;
    std::optional<double> lambda, lr, momentum, decay, clip_norm, heldout;
    std::optional<std::size_t> layers, dim, word_dim, max_len, epochs, batch_size, checkpoint_every, patience,
        max_vocab;
    std::optional<std::uint64_t> seed, min_count;
    std::vector<std::size_t> head_widths, grid_layers, grid_dims;
    bool no_online_labels = false;
};

std::optional<std::vector<std::size_t>> given(const std::vector<std::size_t>& v) {
    return v.empty() ? std::nullopt : std::optional(v);
}

std::string loss_csv(const std::vector<LossRecord>& trace) {
    std::string text = "epoch,step,learning_rate,loss,l1,l2,heldout_l1\n";
    for (const auto& r : trace) {
        text += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + format_double(r.learning_rate) + "," +
                format_double(r.loss) + "," + format_double(r.l1) + "," + format_double(r.l2) + "," +
                (r.heldout_l1 ? format_double(*r.heldout_l1) : "") + "\n";
    }
    return text;
}

void train_cell(const ModelConfig& cfg, const Vocabulary& vocab, std::span<const TrainingExample> examples,
                const fs::path& dir, json doc, std::ostream& out) {
    doc["model"] = to_json(cfg);
    Seq2SeqModel model(cfg);
    std::vector<std::string> files;
    auto save = [&](const std::string& name, const Checkpoint& ckpt) {
        save_checkpoint(ckpt, dir / name);
        files.push_back(name);
    };
    {
        const auto fresh = nn::OptimizerState::create(model.params(), cfg.optimizer, cfg.learning_rate);
        save(numbered("epoch", 0, 3), make_checkpoint(model, fresh, vocab, 0, 0, {}, doc));
    }
    const TrainResult result = train(model, examples, [&](const TrainingSnapshot& s) {
        const std::string name = s.end_of_epoch ? numbered("epoch", s.epoch, 3) : numbered("step", s.step, 7);
        save(name, make_checkpoint(s.model, s.optimizer, vocab, s.epoch, s.step, s.trace, doc));
        if (s.end_of_epoch) {
            const LossRecord& r = s.trace.back();
            out << "epoch " << s.epoch << " step " << s.step << " loss " << fixed4(r.loss) << " l1 " << fixed4(r.l1)
                << " l2 " << fixed4(r.l2);
            if (r.heldout_l1) out << " heldout_l1 " << fixed4(*r.heldout_l1);
            out << "\n";
        }
    });
    fs::copy_file(dir / numbered("epoch", result.best_epoch, 3), dir / "best.ckpt", fs::copy_options::overwrite_existing);
    files.push_back("best.ckpt");

    write_file(dir / "loss.csv", loss_csv(result.trace));
    write_sidecar(dir / "loss.csv", doc);
    const json summary = {{"epochs_run", result.epochs_run},
                          {"best_epoch", result.best_epoch},
                          {"stopped_early", result.stopped_early},
                          {"checkpoints", files},
                          {"run", doc}};
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    out << "trained " << result.epochs_run << " epochs" << (result.stopped_early ? " (stopped early)" : "")
        << "; best epoch " << result.best_epoch << " -> " << (dir / "best.ckpt").string() << "\n";
}

void cmd_train(const Common& common, const TrainFlags& f, std::ostream& out) {
    RunConfig rc("train", common.config_file());
    const auto pairs_path = rc.resolve<std::string>("pairs", f.pairs, "");
    const auto vocab_path = rc.resolve<std::string>("vocab", f.vocab, "");
    const auto out_dir = rc.resolve<std::string>("out", f.out, "");
    const auto max_vocab = rc.resolve<std::size_t>("max_vocab", f.max_vocab, 20000);
    const auto min_count = rc.resolve<std::uint64_t>("min_count", f.min_count, 1);
    const auto lexicon_path = rc.resolve<std::string>("lexicon", f.lexicon, "");
    const auto online_labels = rc.resolve<bool>(
        "online_labels", f.no_online_labels ? std::optional<bool>(false) : std::nullopt, true);

    const Preset preset = parse_preset(rc.resolve<std::string>("preset", f.preset, "desk"));
    const ModelConfig base = preset == Preset::Paper ? ModelConfig::paper() : ModelConfig::desk();
    ModelConfig cfg = base;
    cfg.lambda = rc.resolve<double>("lambda", f.lambda, base.lambda);
    cfg.layers = rc.resolve<std::size_t>("layers", f.layers, base.layers);
    cfg.hidden = rc.resolve<std::size_t>("dim", f.dim, base.hidden);
    cfg.word_dim = rc.resolve<std::size_t>("word_dim", f.word_dim, base.word_dim);
    cfg.max_len = rc.resolve<std::size_t>("max_len", f.max_len, base.max_len);
    cfg.optimizer = nn::parse_optimizer_kind(
        rc.resolve<std::string>("optimizer", f.optimizer, std::string(nn::to_string(base.optimizer))));
    cfg.learning_rate = rc.resolve<double>("lr", f.lr, base.learning_rate);
    cfg.momentum = rc.resolve<double>("momentum", f.momentum, base.momentum);
    cfg.decay = rc.resolve<double>("decay", f.decay, base.decay);
    cfg.epochs = rc.resolve<std::size_t>("epochs", f.epochs, base.epochs);
    cfg.batch_size = rc.resolve<std::size_t>("batch_size", f.batch_size, base.batch_size);
    cfg.clip_norm = rc.resolve<double>("clip_norm", f.clip_norm, base.clip_norm);
    cfg.head_widths = rc.resolve<std::vector<std::size_t>>("head_widths", given(f.head_widths), base.head_widths);
    cfg.checkpoint_every = rc.resolve<std::size_t>("checkpoint_every", f.checkpoint_every, base.checkpoint_every);
    cfg.patience = rc.resolve<std::size_t>("patience", f.patience, base.patience);
    cfg.heldout_fraction = rc.resolve<double>("heldout", f.heldout, base.heldout_fraction);
    cfg.seed = rc.resolve<std::uint64_t>("seed", f.seed, base.seed);
    const auto grid_layers = rc.resolve<std::vector<std::size_t>>("grid_layers", given(f.grid_layers), {});
    const auto grid_dims = rc.resolve<std::vector<std::size_t>>("grid_dims", given(f.grid_dims), {});
    rc.check_section_keys();
    if (pairs_path.empty() || out_dir.empty()) throw UsageError("train needs --pairs and --out");
    if (grid_layers.empty() != grid_dims.empty()) throw UsageError("--grid-layers and --grid-dims go together");

    auto in = open_input(pairs_path);
    const auto pairs = read_pairs(in);
    Vocabulary vocab;
    if (vocab_path.empty()) {
        vocab = build_vocab(pairs, max_vocab, min_count);
    } else {
        auto vin = open_input(vocab_path);
        vocab = read_vocab(vin);
    }
    cfg.vocab_size = vocab.size();

    struct Cell {
        ModelConfig config;
        fs::path dir;
    };
    std::vector<Cell> cells;
    if (grid_layers.empty()) {
        cells.push_back({cfg, out_dir});
    } else {
        for (std::size_t layers : grid_layers) {
            for (std::size_t dim : grid_dims) {
                ModelConfig c = cfg;
                c.layers = layers;
                c.hidden = dim;
                cells.push_back({c, fs::path(out_dir) / ("L" + std::to_string(layers) + "-d" + std::to_string(dim))});
            }
        }
    }
    for (const auto& cell : cells) cell.config.validate();

    const json doc = rc.document();
    std::ostringstream vocab_text;
    write_vocab(vocab_text, vocab);
    write_file(fs::path(out_dir) / "vocab.txt", vocab_text.str());
    write_sidecar(fs::path(out_dir) / "vocab.txt", doc);

    for (const auto& cell : cells) {
        const AffectLexicon lexicon = lexicon_from(lexicon_path);
        const auto examples = make_examples(pairs, vocab, cell.config.max_len, online_labels ? &lexicon : nullptr);
        if (cells.size() > 1) out << "cell " << cell.dir.filename().string() << "\n";
        train_cell(cell.config, vocab, examples, cell.dir, doc, out);
    }
}

// ---- embedding helpers --------------------------------------------------

// Sentences of each session, normalized as training text is. Sentences that
// normalize to nothing are dropped.
std::vector<std::vector<Sentence>> session_sentences(const std::vector<LabeledSession>& sessions) {
    const NormalizationRules rules = NormalizationRules::bundled();
    std::vector<std::vector<Sentence>> out;
    for (const auto& s : sessions) {
        std::vector<Sentence> sentences;
        for (const auto& text : s.sentences) {
            Sentence words = normalize_text(text, rules);
            if (!words.empty()) sentences.push_back(std::move(words));
        }
        if (sentences.empty()) throw Error("session " + s.session_id + " has no usable sentences");
        out.push_back(std::move(sentences));
    }
    return out;
}

std::vector<SessionEmbeddings> embed_sessions(const Embedder& embedder, const std::vector<std::vector<Sentence>>& sessions,
                                              std::size_t jobs) {
    std::vector<Sentence> flat;
    for (const auto& s : sessions) flat.insert(flat.end(), s.begin(), s.end());
    auto vectors = embedder.embed_batch(flat, jobs);
    std::vector<SessionEmbeddings> out;
    std::size_t next = 0;
    for (const auto& s : sessions) {
        out.emplace_back(std::make_move_iterator(vectors.begin() + static_cast<std::ptrdiff_t>(next)),
                         std::make_move_iterator(vectors.begin() + static_cast<std::ptrdiff_t>(next + s.size())));
        next += s.size();
    }
    return out;
}

// ---- embed --------------------------------------------------------------

struct EmbedFlags {
    std::optional<std::string> checkpoint, sessions, in, out, format, manifest;
};

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f32(std::string& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    for (int i = 0; i < 4; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xff);
}

void cmd_embed(const Common& common, const EmbedFlags& f, std::ostream& out) {
    RunConfig rc("embed", common.config_file());
    const auto ckpt_path = rc.resolve<std::string>("checkpoint", f.checkpoint, "");
    const auto sessions_path = rc.resolve<std::string>("sessions", f.sessions, "");
    const auto in_path = rc.resolve<std::string>("in", f.in, "");
    const auto out_path = rc.resolve<std::string>("out", f.out, "");
    const auto format = rc.resolve<std::string>("format", f.format, "binary");
    const auto manifest_path = rc.resolve<std::string>("manifest", f.manifest, out_path + ".manifest.json");
    rc.check_section_keys();
    if (ckpt_path.empty() || out_path.empty()) throw UsageError("embed needs --checkpoint and --out");
    if (sessions_path.empty() == in_path.empty()) throw UsageError("embed needs exactly one of --sessions and --in");
    if (format != "binary" && format != "csv") throw UsageError("--format must be binary or csv");

    const Embedder embedder(load_checkpoint(ckpt_path));
    json sources = json::array();
    std::vector<Sentence> sentences;
    if (!sessions_path.empty()) {
        const auto sessions = load_sessions(sessions_path);
        const auto per_session = session_sentences(sessions);
        for (std::size_t s = 0; s < sessions.size(); ++s) {
            for (std::size_t i = 0; i < per_session[s].size(); ++i) {
                sources.push_back({{"session_id", sessions[s].session_id}, {"index", i}, {"text", join(per_session[s][i])}});
                sentences.push_back(per_session[s][i]);
            }
        }
    } else {
        auto in = open_input(in_path);
        const NormalizationRules rules = NormalizationRules::bundled();
        std::string line;
        for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
            Sentence words = normalize_text(line, rules);
            if (words.empty()) continue;
            sources.push_back({{"line", line_no}, {"text", join(words)}});
            sentences.push_back(std::move(words));
        }
    }
    if (sentences.empty()) throw Error("no sentences to embed");
    const auto vectors = embedder.embed_batch(sentences, common.jobs);

    std::string bytes;
    if (format == "binary") {
        put_u64(bytes, vectors.size());
        put_u64(bytes, embedder.dim());
        for (const auto& v : vectors) {
            for (double x : v) put_f32(bytes, static_cast<float>(x));
        }
    } else {
        for (std::size_t d = 0; d < embedder.dim(); ++d) bytes += (d ? ",d" : "d") + std::to_string(d);
        bytes += "\n";
        for (const auto& v : vectors) {
            for (std::size_t d = 0; d < v.size(); ++d) {
                if (d) bytes += ",";
                bytes += format_double(v[d]);
            }
            bytes += "\n";
        }
    }
    const json doc = rc.document();
    write_file(out_path, bytes);
    write_sidecar(out_path, doc);
    const json manifest = {{"count", vectors.size()}, {"dim", embedder.dim()}, {"format", format},
                           {"sentences", sources},    {"run", doc}};
    write_file(manifest_path, manifest.dump(2) + "\n");
    out << "embedded " << vectors.size() << " sentences (dim " << embedder.dim() << ") -> " << out_path << "\n";
}

// ---- eval ---------------------------------------------------------------

struct EvalFlags {
    std::vector<std::string> checkpoints, behaviors, labels;
    std::optional<std::string> sessions, method, out;
    std::optional<std::size_t> clusters, restarts, neighbors, rating_epochs, emotion_epochs;
    std::optional<double> fraction;
    std::optional<std::uint64_t> seed;
};

// Rows sharing a label are pooled by `report`; pass --label to pool seeds.
std::string model_label(const Checkpoint& ckpt) {
    const ModelConfig& c = ckpt.config;
    return std::string(to_string(c.preset)) + " L" + std::to_string(c.layers) + " d" + std::to_string(c.hidden) +
           " lambda=" + format_double(c.lambda) + " seed=" + std::to_string(c.seed) + " epoch=" + std::to_string(ckpt.epoch);
}

const char* kAggregateHeader = "model,checkpoint,behavior,method,folds,mean_accuracy,se_accuracy,mean_wa,se_wa,mean_mae\n";

void cmd_eval(const Common& common, const EvalFlags& f, std::ostream& out, std::ostream& err) {
    RunConfig rc("eval", common.config_file());
    auto opt_vec = [](const std::vector<std::string>& v) { return v.empty() ? std::nullopt : std::optional(v); };
    const auto checkpoints = rc.resolve<std::vector<std::string>>("checkpoints", opt_vec(f.checkpoints), {});
    const auto sessions_path = rc.resolve<std::string>("sessions", f.sessions, "");
    const EvalMethod method = parse_eval_method(rc.resolve<std::string>("method", f.method, "knn"));
    const auto out_dir = rc.resolve<std::string>("out", f.out, "");
    auto behaviors = rc.resolve<std::vector<std::string>>("behaviors", opt_vec(f.behaviors), {});
    const auto labels = rc.resolve<std::vector<std::string>>("labels", opt_vec(f.labels), {});
    EvalOptions opts;
    opts.clusters = rc.resolve<std::size_t>("clusters", f.clusters, opts.clusters);
    opts.kmeans_restarts = rc.resolve<std::size_t>("restarts", f.restarts, opts.kmeans_restarts);
    opts.neighbors = rc.resolve<std::size_t>("neighbors", f.neighbors, opts.neighbors);
    opts.fraction = rc.resolve<double>("fraction", f.fraction, opts.fraction);
    opts.seed = rc.resolve<std::uint64_t>("seed", f.seed, opts.seed);
    opts.rating.epochs = rc.resolve<std::size_t>("rating_epochs", f.rating_epochs, opts.rating.epochs);
    opts.emotion.epochs = rc.resolve<std::size_t>("emotion_epochs", f.emotion_epochs, opts.emotion.epochs);
    opts.jobs = common.jobs;
    rc.check_section_keys();
    if (checkpoints.empty() || sessions_path.empty() || out_dir.empty()) {
        throw UsageError("eval needs --checkpoint, --sessions and --out");
    }
    if (!labels.empty() && labels.size() != checkpoints.size()) throw UsageError("give one --label per --checkpoint");

    const auto sessions = load_sessions(sessions_path);
    if (sessions.empty()) throw Error("no sessions in " + sessions_path);
    if (method == EvalMethod::Emotion) {
        behaviors = {"emotion"};
    } else if (behaviors.empty()) {
        for (const auto& [name, value] : sessions.front().ratings) {
            const bool everywhere = std::all_of(sessions.begin(), sessions.end(),
                                                [&](const LabeledSession& s) { return s.ratings.count(name) > 0; });
            if (everywhere) behaviors.push_back(name);
        }
        if (behaviors.empty()) throw Error("sessions share no rated behavior");
        rc.set("behaviors", behaviors);
    }
    const auto sentences = session_sentences(sessions);
    const json doc = rc.document();

    std::string folds_text;
    std::string aggregate_text = kAggregateHeader;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const Checkpoint ckpt = load_checkpoint(checkpoints[c]);
        const std::string label = labels.empty() ? model_label(ckpt) : labels[c];
        const Embedder embedder(ckpt);
        const auto embeddings = embed_sessions(embedder, sentences, common.jobs);
        for (const auto& behavior : behaviors) {
            const EvalRun run = evaluate(method, sessions, embeddings, behavior, opts);
            for (const auto& w : run.warnings) err << "warning: " << w << "\n";
            for (const auto& fold : run.folds) {
                json j = to_json(fold);
                j["model"] = label;
                j["checkpoint"] = checkpoints[c];
                folds_text += j.dump() + "\n";
            }
            const Aggregate agg = aggregate(run.folds);
            std::vector<double> maes;
            for (const auto& fold : run.folds) {
                if (fold.mean_absolute_error) maes.push_back(*fold.mean_absolute_error);
            }
            const std::string mae = maes.empty() ? "" : format_double(mean_and_standard_error(maes).first);
            aggregate_text += csv_field(label) + "," + csv_field(checkpoints[c]) + "," + csv_field(behavior) + "," +
                              std::string(to_string(method)) + "," + std::to_string(agg.folds) + "," +
                              format_double(agg.mean_accuracy) + "," + format_double(agg.se_accuracy) + "," +
                              format_double(agg.mean_weighted_accuracy) + "," + format_double(agg.se_weighted_accuracy) +
                              "," + mae + "\n";
            out << label << " " << behavior << " " << to_string(method) << ": accuracy " << fixed4(agg.mean_accuracy)
                << " +/- " << fixed4(agg.se_accuracy) << ", wa " << fixed4(agg.mean_weighted_accuracy) << " over "
                << agg.folds << " folds\n";
        }
    }
    const fs::path dir(out_dir);
    write_file(dir / "folds.jsonl", folds_text);
    write_sidecar(dir / "folds.jsonl", doc);
    write_file(dir / "aggregate.csv", aggregate_text);
    write_sidecar(dir / "aggregate.csv", doc);
}

// ---- report -------------------------------------------------------------

struct ReportFlags {
    std::vector<std::string> results;
    std::optional<std::string> out, metric;
};

struct ReportCell {
    std::vector<double> means;
    std::vector<double> errors;
};

std::pair<double, double> pooled(const ReportCell& cell) {
    if (cell.means.size() == 1) return {cell.means[0], cell.errors[0]};
    return mean_and_standard_error(cell.means);
}

void cmd_report(const Common& common, const ReportFlags& f, std::ostream& out) {
    RunConfig rc("report", common.config_file());
    const auto results = rc.resolve<std::vector<std::string>>(
        "results", f.results.empty() ? std::nullopt : std::optional(f.results), {});
    const auto out_prefix = rc.resolve<std::string>("out", f.out, "");
    const auto metric = rc.resolve<std::string>("metric", f.metric, "accuracy");
    rc.check_section_keys();
    if (results.empty()) throw UsageError("report needs at least one --results file");
    if (metric != "accuracy" && metric != "wa") throw UsageError("--metric must be accuracy or wa");
    const std::string mean_col = metric == "wa" ? "mean_wa" : "mean_accuracy";
    const std::string se_col = metric == "wa" ? "se_wa" : "se_accuracy";

    // (model, method) -> behavior -> cell
    std::map<std::pair<std::string, std::string>, std::map<std::string, ReportCell>> table;
    std::set<std::string> behaviors;
    for (const auto& path : results) {
        auto in = open_input(path);
        std::string line;
        if (!std::getline(in, line)) throw Error(path + " is empty");
        const auto header = parse_csv_line(line);
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
        for (const char* name : {"model", "behavior", "method"}) {
            if (!col.count(name)) throw Error(path + " has no '" + name + "' column");
        }
        if (!col.count(mean_col) || !col.count(se_col)) throw Error(path + " has no " + metric + " columns");
        for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
            if (line.empty()) continue;
            const auto row = parse_csv_line(line);
            if (row.size() != header.size()) throw Error(path + ":" + std::to_string(line_no) + ": wrong field count");
            try {
                ReportCell& cell = table[{row[col["model"]], row[col["method"]]}][row[col["behavior"]]];
                cell.means.push_back(std::stod(row[col[mean_col]]));
                cell.errors.push_back(std::stod(row[col[se_col]]));
            } catch (const std::logic_error&) {
                throw Error(path + ":" + std::to_string(line_no) + ": bad number");
            }
            behaviors.insert(row[col["behavior"]]);
        }
    }

    std::vector<std::vector<std::string>> text_rows;
    text_rows.push_back({"model", "method"});
    std::string csv = "model,method";
    for (const auto& b : behaviors) {
        text_rows[0].push_back(b);
        csv += "," + csv_field(b) + "," + csv_field(b + "_se");
    }
    text_rows[0].push_back("mean");
    csv += ",mean\n";
    for (const auto& [key, cells] : table) {
        std::vector<std::string> row{key.first, key.second};
        csv += csv_field(key.first) + "," + csv_field(key.second);
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& b : behaviors) {
            const auto it = cells.find(b);
            if (it == cells.end()) {
                row.emplace_back();
                csv += ",,";
                continue;
            }
            const auto [mean, se] = pooled(it->second);
            row.push_back(fixed4(mean) + " +/- " + fixed4(se));
            csv += "," + format_double(mean) + "," + format_double(se);
            sum += mean;
            ++n;
        }
        const double row_mean = sum / static_cast<double>(n);
        row.push_back(fixed4(row_mean));
        csv += "," + format_double(row_mean) + "\n";
        text_rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(text_rows[0].size(), 0);
    for (const auto& row : text_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::string text = metric == "wa" ? "weighted accuracy\n" : "accuracy\n";
    for (const auto& row : text_rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string cell = row[i];
            if (i + 1 < row.size()) cell.resize(width[i] + 2, ' ');
            line += cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        text += line + "\n";
    }
    out << text;
    if (!out_prefix.empty()) {
        const json doc = rc.document();
        write_file(out_prefix + ".txt", text);
        write_sidecar(out_prefix + ".txt", doc);
        write_file(out_prefix + ".csv", csv);
        write_sidecar(out_prefix + ".csv", doc);
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sentence embeddings from dialogue with an online affect multitask"};
    app.name("dmtl");
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--config", common.config_path, "JSON config file; flags override it");
    app.add_option("--jobs", common.jobs, "worker threads for embedding and folds")->check(CLI::PositiveNumber);

    std::function<void()> action;

    PrepareFlags prep;
    auto* prepare = app.add_subcommand("prepare", "normalize a corpus into pairs and a vocabulary");
    prepare->add_option("--in", prep.in, "corpus text, one utterance per line, blank line between documents");
    prepare->add_option("--out", prep.out, "pair file to write");
    prepare->add_option("--vocab", prep.vocab, "vocabulary file to write");
    prepare->add_option("--max-vocab", prep.max_vocab, "vocabulary size including reserved symbols");
    prepare->add_option("--min-count", prep.min_count, "minimum word count");
    prepare->add_option("--misspellings", prep.misspellings, "misspelling table replacing the bundled one");
    prepare->add_option("--contractions", prep.contractions, "contraction table replacing the bundled one");
    prepare->add_option("--common-words", prep.common_words, "common-word list replacing the bundled one");
    prepare->callback([&] { action = [&] { cmd_prepare(common, prep, out); }; });

    SynthFlags syn;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dialogue corpus and sessions");
    synth->add_option("--seed", syn.seed);
    synth->add_option("--pairs", syn.pairs, "number of pairs");
    synth->add_option("--out", syn.out, "pair file to write");
    synth->add_flag("--echo", syn.echo, "replies repeat the utterance");
    synth->add_option("--pos-fraction", syn.pos_fraction);
    synth->add_option("--lexicon-overlap", syn.lexicon_overlap);
    synth->add_option("--sessions", syn.sessions, "also write rated sessions (JSON lines)");
    synth->add_option("--groups", syn.groups);
    synth->add_option("--sessions-per-group", syn.sessions_per_group);
    synth->add_option("--rating-noise", syn.rating_noise);
    synth->add_option("--emotion-sessions", syn.emotion_sessions, "also write emotion-labeled sessions");
    synth->add_option("--emotion-groups", syn.emotion_groups);
    synth->add_option("--emotion-utterances", syn.emotion_utterances);
    synth->callback([&] { action = [&] { cmd_synth(common, syn, out); }; });

    LabelFlags lab;
    auto* label = app.add_subcommand("label", "attach lexicon affect labels to pairs");
    label->add_option("--in", lab.in, "pair file");
    label->add_option("--out", lab.out, "labeled pair file to write");
    label->add_option("--lexicon", lab.lexicon, "lexicon file replacing the bundled one");
    label->add_flag("--stats", lab.stats, "print label counts as JSON");
    label->callback([&] { action = [&] { cmd_label(common, lab, out); }; });

    TrainFlags tr;
    auto* trainc = app.add_subcommand("train", "train the encoder-decoder with the affect head");
    trainc->add_option("--pairs", tr.pairs, "pair file");
    trainc->add_option("--vocab", tr.vocab, "vocabulary file (built from the pairs when absent)");
    trainc->add_option("--out", tr.out, "output directory");
    trainc->add_option("--preset", tr.preset, "desk or paper");
    trainc->add_option("--lambda", tr.lambda, "weight of the reply loss; 1 disables the affect head");
    trainc->add_option("--layers", tr.layers);
    trainc->add_option("--dim", tr.dim, "per-direction hidden width");
    trainc->add_option("--word-dim", tr.word_dim, "word vector width (0: same as --dim)");
    trainc->add_option("--max-len", tr.max_len);
    trainc->add_option("--optimizer", tr.optimizer, "sgd_momentum or adagrad");
    trainc->add_option("--lr", tr.lr);
    trainc->add_option("--momentum", tr.momentum);
    trainc->add_option("--decay", tr.decay, "learning-rate divisor per epoch");
    trainc->add_option("--epochs", tr.epochs);
    trainc->add_option("--batch-size", tr.batch_size);
    trainc->add_option("--clip-norm", tr.clip_norm);
    trainc->add_option("--head-widths", tr.head_widths)->delimiter(',');
    trainc->add_option("--checkpoint-every", tr.checkpoint_every, "steps between extra checkpoints (0: none)");
    trainc->add_option("--patience", tr.patience, "epochs without held-out improvement before stopping (0: never)");
    trainc->add_option("--heldout", tr.heldout, "held-out fraction of pairs");
    trainc->add_option("--seed", tr.seed);
    trainc->add_option("--max-vocab", tr.max_vocab);
    trainc->add_option("--min-count", tr.min_count);
    trainc->add_option("--lexicon", tr.lexicon, "lexicon for labeling unlabeled pairs on the fly");
    trainc->add_flag("--no-online-labels", tr.no_online_labels, "leave unlabeled pairs unlabeled");
    trainc->add_option("--grid-layers", tr.grid_layers, "train every layers x dims cell")->delimiter(',');
    trainc->add_option("--grid-dims", tr.grid_dims)->delimiter(',');
    trainc->callback([&] { action = [&] { cmd_train(common, tr, out); }; });

    EmbedFlags em;
    auto* embed = app.add_subcommand("embed", "export sentence embeddings from a checkpoint");
    embed->add_option("--checkpoint", em.checkpoint);
    embed->add_option("--sessions", em.sessions, "session file whose sentences are embedded");
    embed->add_option("--in", em.in, "text file, one sentence per line");
    embed->add_option("--out", em.out, "embedding file to write");
    embed->add_option("--format", em.format, "binary or csv");
    embed->add_option("--manifest", em.manifest, "manifest path (default: <out>.manifest.json)");
    embed->callback([&] { action = [&] { cmd_embed(common, em, out); }; });

    EvalFlags ev;
    auto* eval = app.add_subcommand("eval", "cross-validate session classifiers on embeddings");
    eval->add_option("--checkpoint", ev.checkpoints, "checkpoint to evaluate (repeatable)");
    eval->add_option("--label", ev.labels, "model name for each checkpoint (repeatable)");
    eval->add_option("--sessions", ev.sessions);
    eval->add_option("--method", ev.method, "kmeans, knn, rating or emotion");
    eval->add_option("--behavior", ev.behaviors, "rated behavior (repeatable; default: all)");
    eval->add_option("--out", ev.out, "output directory");
    eval->add_option("--clusters", ev.clusters);
    eval->add_option("--restarts", ev.restarts, "k-means restarts");
    eval->add_option("--neighbors", ev.neighbors);
    eval->add_option("--fraction", ev.fraction, "share of sessions kept at each rating extreme");
    eval->add_option("--seed", ev.seed);
    eval->add_option("--rating-epochs", ev.rating_epochs);
    eval->add_option("--emotion-epochs", ev.emotion_epochs);
    eval->callback([&] { action = [&] { cmd_eval(common, ev, out, err); }; });

    ReportFlags rep;
    auto* report = app.add_subcommand("report", "tabulate aggregate results by model and behavior");
    report->add_option("--results", rep.results, "aggregate.csv from eval (repeatable)");
    report->add_option("--out", rep.out, "write <out>.txt and <out>.csv");
    report->add_option("--metric", rep.metric, "accuracy or wa");
    report->callback([&] { action = [&] { cmd_report(common, rep, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        action();
        return 0;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dmtl
