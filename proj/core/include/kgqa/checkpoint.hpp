#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgqa/encoder.hpp"
#include "kgqa/tensor.hpp"

namespace kgqa {

inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Matrix value;
};

// On disk: one line of JSON manifest, then the raw little-endian float32
// tensors concatenated in manifest order. `manifest_json` holds the extra
// top-level manifest fields (an object); "version", "kind" and "tensors" are
// written by the codec.
struct Checkpoint {
    std::string kind;
    int version = kCheckpointVersion;
    std::string manifest_json = "{}";
    std::vector<NamedTensor> tensors;

    const Matrix& tensor(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

// Reads only the manifest line (for startup version checks).
std::string read_manifest(const std::string& path);

// Raw helpers shared with the semantic-table format.
void append_float32_le(std::string& out, const Matrix& m);
Matrix read_float32_le(const std::string& bytes, std::size_t offset, Eigen::Index rows,
                       Eigen::Index cols);

// ---- encoder checkpoints -------------------------------------------------------

struct EncoderCheckpoint {
    EncoderParams params;
    std::string graph_id;
    std::vector<std::string> entities;
    std::vector<std::string> relations;  // augmented relation names
    std::uint64_t dict_seed = 0;
    std::uint64_t dict_order_hash = 0;
};

Checkpoint to_checkpoint(const EncoderCheckpoint& enc);
EncoderCheckpoint encoder_from_checkpoint(const Checkpoint& ckpt);
// Throws ValidationError if the checkpoint was trained on a different graph.
void check_encoder_matches(const EncoderCheckpoint& enc, const AugmentedGraph& ag);

}  // namespace kgqa
