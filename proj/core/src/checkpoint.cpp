#include "kgqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgqa/error.hpp"

namespace kgqa {

const Matrix& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return t.value;
    }
    throw FormatError("checkpoint has no tensor '" + name + "'");
}

void append_float32_le(std::string& out, const Matrix& m) {
    const std::size_t start = out.size();
    out.resize(start + static_cast<std::size_t>(m.size()) * 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.data()[i]);
        auto bits = std::bit_cast<std::uint32_t>(f);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        std::memcpy(out.data() + start + static_cast<std::size_t>(i) * 4, &bits, 4);
    }
}

Matrix read_float32_le(const std::string& bytes, std::size_t offset, Eigen::Index rows,
                       Eigen::Index cols) {
    const std::size_t need = static_cast<std::size_t>(rows * cols) * 4;
    if (offset + need > bytes.size()) throw FormatError("truncated float32 blob");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + offset + static_cast<std::size_t>(i) * 4, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        m.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return m;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    nlohmann::ordered_json manifest = nlohmann::ordered_json::parse(ckpt.manifest_json);
    if (!manifest.is_object()) throw ArgumentError("checkpoint manifest must be an object");
    nlohmann::ordered_json head;
    head["version"] = ckpt.version;
    head["kind"] = ckpt.kind;
    for (auto& [k, v] : manifest.items()) head[k] = v;
    auto tensors = nlohmann::ordered_json::array();
    for (const auto& t : ckpt.tensors) {
        tensors.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
    }
    head["tensors"] = std::move(tensors);
    std::string out = head.dump();
    out += '\n';
    for (const auto& t : ckpt.tensors) append_float32_le(out, t.value);
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw FormatError("checkpoint has no manifest line");
    nlohmann::ordered_json head;
    try {
        head = nlohmann::ordered_json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint manifest: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        ckpt.version = head.at("version").get<int>();
        ckpt.kind = head.at("kind").get<std::string>();
        if (ckpt.version != kCheckpointVersion) {
            throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.version));
        }
        std::size_t offset = nl + 1;
        for (const auto& t : head.at("tensors")) {
            NamedTensor nt;
            nt.name = t.at("name").get<std::string>();
            const auto rows = t.at("rows").get<Eigen::Index>();
            const auto cols = t.at("cols").get<Eigen::Index>();
            nt.value = read_float32_le(bytes, offset, rows, cols);
            offset += static_cast<std::size_t>(rows * cols) * 4;
            ckpt.tensors.push_back(std::move(nt));
        }
        if (offset != bytes.size()) throw FormatError("trailing bytes after checkpoint tensors");
        nlohmann::ordered_json rest = head;
        rest.erase("version");
        rest.erase("kind");
        rest.erase("tensors");
        ckpt.manifest_json = rest.dump();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint manifest: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << encode_checkpoint(ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

std::string read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    return line;
}

Checkpoint to_checkpoint(const EncoderCheckpoint& enc) {
    const auto& p = enc.params;
    nlohmann::ordered_json m;
    m["dims"] = {{"init_dim", p.dims.init_dim}, {"embed_dim", p.dims.embed_dim},
                 {"layers", p.dims.layers}};
    m["seed"] = p.seed;
    m["dict_order_hash"] = enc.dict_order_hash;
    m["dict_seed"] = enc.dict_seed;
    m["graph_id"] = enc.graph_id;
    m["op"] = std::string(to_string(p.op));
    m["entities"] = enc.entities;
    m["relations"] = enc.relations;
    Checkpoint c;
    c.kind = "encoder";
    c.manifest_json = m.dump();
    auto params = p;
    const auto names = parameter_names(params);
    const auto tensors = parameter_tensors(params);
    for (std::size_t i = 0; i < names.size(); ++i) c.tensors.push_back({names[i], *tensors[i]});
    return c;
}

EncoderCheckpoint encoder_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "encoder") throw FormatError("checkpoint kind is '" + ckpt.kind + "', expected encoder");
    EncoderCheckpoint enc;
    try {
        const auto m = nlohmann::json::parse(ckpt.manifest_json);
        enc.params.dims.init_dim = m.at("dims").at("init_dim").get<int>();
        enc.params.dims.embed_dim = m.at("dims").at("embed_dim").get<int>();
        enc.params.dims.layers = m.at("dims").at("layers").get<int>();
        enc.params.seed = m.at("seed").get<std::uint64_t>();
        enc.params.op = composition_from_string(m.at("op").get<std::string>());
        enc.dict_order_hash = m.at("dict_order_hash").get<std::uint64_t>();
        enc.dict_seed = m.at("dict_seed").get<std::uint64_t>();
        enc.graph_id = m.at("graph_id").get<std::string>();
        enc.entities = m.at("entities").get<std::vector<std::string>>();
        enc.relations = m.at("relations").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("encoder manifest: ") + e.what());
    }
    enc.params.layers.resize(static_cast<std::size_t>(enc.params.dims.layers));
    const auto names = parameter_names(enc.params);
    const auto tensors = parameter_tensors(enc.params);
    for (std::size_t i = 0; i < names.size(); ++i) *tensors[i] = ckpt.tensor(names[i]);
    return enc;
}

void check_encoder_matches(const EncoderCheckpoint& enc, const AugmentedGraph& ag) {
    if (enc.entities != ag.base().entities() || enc.relations != ag.relations()) {
        throw ValidationError("encoder checkpoint for graph '" + enc.graph_id +
                              "' does not match graph '" + ag.base().graph_id() + "'");
    }
    if (enc.params.entity_init.rows() != static_cast<Eigen::Index>(ag.num_entities()) ||
        enc.params.relation_init.rows() != static_cast<Eigen::Index>(ag.num_relations())) {
        throw ValidationError("encoder checkpoint tensor shapes do not match the graph");
    }
}

}  // namespace kgqa
