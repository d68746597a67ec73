#pragma once

#include "dmtl/corpus.hpp"
#include "dmtl/model.hpp"
#include "dmtl/nn/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace dmtl {

inline constexpr char kToolVersion[] = "0.1.0";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    bool operator==(const TensorBlock&) const = default;
};

// Layout: "DMTLCKPT", u32 version, u64 header length, canonical JSON header,
// then little-endian float32 blocks (parameters, then optimizer slots) in
// declaration order. Values are stored as float32, so load(save(c)) == c.
struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> vocab_words;  // after the reserved block
    std::vector<std::uint64_t> vocab_counts;
    std::size_t epoch = 0;
    std::uint64_t step = 0;
    nn::OptimizerKind optimizer = nn::OptimizerKind::SgdMomentum;
    double learning_rate = 0.0;
    std::uint64_t optimizer_steps = 0;
    std::vector<LossRecord> trace;
    nlohmann::json run_config = nlohmann::json::object();
    std::string tool_version = kToolVersion;
    std::vector<TensorBlock> parameters;
    std::vector<TensorBlock> optimizer_slots;

    Vocabulary vocabulary() const;

    bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const Seq2SeqModel& model, const nn::OptimizerState& optimizer, const Vocabulary& vocab,
                           std::size_t epoch, std::uint64_t step, std::vector<LossRecord> trace,
                           nlohmann::json run_config = nlohmann::json::object());

// Builds a model whose parameters are the stored float32 values.
std::unique_ptr<Seq2SeqModel> model_from_checkpoint(const Checkpoint& ckpt);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws Error on bad magic, a version other than kCheckpointVersion, or a
// truncated or inconsistent file.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dmtl
