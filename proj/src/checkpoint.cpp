#include "dmtl/checkpoint.hpp"

#include "dmtl/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dmtl {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'M', 'T', 'L', 'C', 'K', 'P', 'T'};

template <class T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <class T>
T read_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw Error("checkpoint is truncated");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<T>(v);
}

void write_block(std::ostream& out, const TensorBlock& block) {
    for (float f : block.data) write_le(out, std::bit_cast<std::uint32_t>(f));
}

void read_block(std::istream& in, TensorBlock& block) {
    block.data.resize(block.rows * block.cols);
    for (float& f : block.data) f = std::bit_cast<float>(read_le<std::uint32_t>(in));
}

TensorBlock to_block(const std::string& name, const nn::Tensor& t) {
    TensorBlock b{name, t.rows(), t.cols(), {}};
    b.data.reserve(t.size());
    for (double v : t.data()) b.data.push_back(static_cast<float>(v));
    return b;
}

nlohmann::json block_directory(const std::vector<TensorBlock>& blocks) {
    auto dir = nlohmann::json::array();
    for (const auto& b : blocks) dir.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    return dir;
}

std::vector<TensorBlock> blocks_from_directory(const nlohmann::json& dir) {
    std::vector<TensorBlock> blocks;
    for (const auto& entry : dir) {
        blocks.push_back({entry.at("name").get<std::string>(), entry.at("rows").get<std::size_t>(),
                          entry.at("cols").get<std::size_t>(), {}});
    }
    return blocks;
}

nlohmann::json header_json(const Checkpoint& c) {
    auto trace = nlohmann::json::array();
    for (const auto& r : c.trace) trace.push_back(to_json(r));
    return {{"config", to_json(c.config)},
            {"vocab", {{"words", c.vocab_words}, {"counts", c.vocab_counts}}},
            {"epoch", c.epoch},
            {"step", c.step},
            {"optimizer", {{"kind", nn::to_string(c.optimizer)}, {"learning_rate", c.learning_rate}, {"steps", c.optimizer_steps}}},
            {"trace", trace},
            {"run_config", c.run_config},
            {"tool_version", c.tool_version},
            {"parameters", block_directory(c.parameters)},
            {"optimizer_slots", block_directory(c.optimizer_slots)}};
}

}  // namespace

Vocabulary Checkpoint::vocabulary() const { return Vocabulary(vocab_words, vocab_counts); }

Checkpoint make_checkpoint(const Seq2SeqModel& model, const nn::OptimizerState& optimizer, const Vocabulary& vocab,
                           std::size_t epoch, std::uint64_t step, std::vector<LossRecord> trace,
                           nlohmann::json run_config) {
    if (vocab.size() != model.config().vocab_size) throw UsageError("vocabulary size differs from the model");
    Checkpoint c;
    c.config = model.config();
    const auto words = vocab.regular_words();
    c.vocab_words.assign(words.begin(), words.end());
    for (std::size_t id = Vocabulary::kReserved; id < vocab.size(); ++id) {
        c.vocab_counts.push_back(vocab.count(static_cast<TokenId>(id)));
    }
    c.epoch = epoch;
    c.step = step;
    c.optimizer = optimizer.kind;
    c.learning_rate = optimizer.learning_rate;
    c.optimizer_steps = optimizer.steps;
    c.trace = std::move(trace);
    c.run_config = std::move(run_config);
    const auto& params = model.params();
    for (const auto& p : params) c.parameters.push_back(to_block(p->name, p->value));
    if (optimizer.slots.size() != params.size()) throw UsageError("optimizer state does not match the model");
    for (std::size_t k = 0; k < params.size(); ++k) {
        c.optimizer_slots.push_back(to_block(params[k].name, optimizer.slots[k]));
    }
    return c;
}

std::unique_ptr<Seq2SeqModel> model_from_checkpoint(const Checkpoint& ckpt) {
    auto model = std::make_unique<Seq2SeqModel>(ckpt.config);
    auto& params = model->params();
    if (params.size() != ckpt.parameters.size()) throw Error("checkpoint parameter count differs from its config");
    for (std::size_t k = 0; k < params.size(); ++k) {
        nn::Parameter& p = params[k];
        const TensorBlock& b = ckpt.parameters[k];
        if (b.name != p.name || b.rows != p.value.rows() || b.cols != p.value.cols()) {
            throw Error("checkpoint block " + b.name + " does not match parameter " + p.name);
        }
        std::copy(b.data.begin(), b.data.end(), p.value.data().begin());
    }
    return model;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const std::string header = header_json(ckpt).dump();
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint64_t>(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& b : ckpt.parameters) write_block(out, b);
    for (const auto& b : ckpt.optimizer_slots) write_block(out, b);
    if (!out) throw Error("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw Error("not a checkpoint file (bad magic)");
    const auto version = read_le<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw Error("unsupported checkpoint version " + std::to_string(version) + " (this reader supports version " +
                    std::to_string(kCheckpointVersion) + ")");
    }
    const auto header_size = read_le<std::uint64_t>(in);
    if (header_size > (1ULL << 32)) throw Error("checkpoint header is implausibly large");
    std::string header(header_size, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_size))) throw Error("checkpoint is truncated");

    Checkpoint c;
    try {
        const auto j = nlohmann::json::parse(header);
        c.config = model_config_from_json(j.at("config"));
        c.vocab_words = j.at("vocab").at("words").get<std::vector<std::string>>();
        c.vocab_counts = j.at("vocab").at("counts").get<std::vector<std::uint64_t>>();
        c.epoch = j.at("epoch").get<std::size_t>();
        c.step = j.at("step").get<std::uint64_t>();
        const auto& opt = j.at("optimizer");
        c.optimizer = nn::parse_optimizer_kind(opt.at("kind").get<std::string>());
        c.learning_rate = opt.at("learning_rate").get<double>();
        c.optimizer_steps = opt.at("steps").get<std::uint64_t>();
        for (const auto& r : j.at("trace")) c.trace.push_back(loss_record_from_json(r));
        c.run_config = j.at("run_config");
        c.tool_version = j.at("tool_version").get<std::string>();
        c.parameters = blocks_from_directory(j.at("parameters"));
        c.optimizer_slots = blocks_from_directory(j.at("optimizer_slots"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("corrupt checkpoint header: ") + e.what());
    } catch (const UsageError& e) {
        throw Error(std::string("corrupt checkpoint header: ") + e.what());
    }
    if (c.vocab_words.size() != c.vocab_counts.size()) throw Error("corrupt checkpoint vocabulary");
    for (auto& b : c.parameters) read_block(in, b);
    for (auto& b : c.optimizer_slots) read_block(in, b);
    if (in.peek() != std::char_traits<char>::eof()) throw Error("trailing bytes after checkpoint data");
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace dmtl
