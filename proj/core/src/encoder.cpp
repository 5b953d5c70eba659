#include "kgqa/encoder.hpp"

#include <cmath>

#include "kgqa/error.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

namespace {

void fill_uniform(Matrix& m, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

Matrix xavier(Eigen::Index in, Eigen::Index out, Rng& rng) {
    Matrix m(in, out);
    fill_uniform(m, rng, std::sqrt(6.0 / static_cast<double>(in + out)));
    return m;
}

// In-degree of every entity per edge direction.
std::array<std::vector<double>, kNumDirections> in_degrees(const AugmentedGraph& ag) {
    std::array<std::vector<double>, kNumDirections> deg;
    for (auto& d : deg) d.assign(ag.num_entities(), 0.0);
    for (const auto& t : ag.triples()) deg[static_cast<int>(t.direction)][t.target] += 1.0;
    return deg;
}

}  // namespace

bool EncoderParams::all_finite() const {
    if (!entity_init.allFinite() || !relation_init.allFinite()) return false;
    for (const auto& l : layers) {
        for (const auto& w : l.w_dir) {
            if (!w.allFinite()) return false;
        }
        if (!l.w_rel.allFinite()) return false;
    }
    return true;
}

bool operator==(const EncoderParams& a, const EncoderParams& b) {
    if (a.dims.init_dim != b.dims.init_dim || a.dims.embed_dim != b.dims.embed_dim ||
        a.dims.layers != b.dims.layers || a.op != b.op || a.seed != b.seed ||
        a.layers.size() != b.layers.size()) {
        return false;
    }
    auto same = [](const Matrix& x, const Matrix& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    if (!same(a.entity_init, b.entity_init) || !same(a.relation_init, b.relation_init)) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        for (int d = 0; d < kNumDirections; ++d) {
            if (!same(a.layers[l].w_dir[d], b.layers[l].w_dir[d])) return false;
        }
        if (!same(a.layers[l].w_rel, b.layers[l].w_rel)) return false;
    }
    return true;
}

EncoderParams init_encoder(const AugmentedGraph& ag, const EncoderDims& dims, CompositionOp op,
                           std::uint64_t seed) {
    if (dims.init_dim <= 0 || dims.embed_dim <= 0 || dims.layers <= 0) {
        throw ArgumentError("encoder dimensions must be positive");
    }
    EncoderParams p;
    p.dims = dims;
    p.op = op;
    p.seed = seed;
    Rng rng(derive_seed(seed, "encoder-init"));
    p.entity_init.resize(static_cast<Eigen::Index>(ag.num_entities()), dims.init_dim);
    p.relation_init.resize(static_cast<Eigen::Index>(ag.num_relations()), dims.init_dim);
    fill_uniform(p.entity_init, rng, 0.1);
    fill_uniform(p.relation_init, rng, 0.1);
    for (int l = 0; l < dims.layers; ++l) {
        const int in = l == 0 ? dims.init_dim : dims.embed_dim;
        GcnLayer layer;
        for (auto& w : layer.w_dir) w = xavier(in, dims.embed_dim, rng);
        layer.w_rel = xavier(in, dims.embed_dim, rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

GcnOutput gcn_forward(const AugmentedGraph& ag, const EncoderParams& params) {
    const auto n = static_cast<Eigen::Index>(ag.num_entities());
    if (params.entity_init.rows() != n ||
        params.relation_init.rows() != static_cast<Eigen::Index>(ag.num_relations())) {
        throw ArgumentError("encoder parameters do not match the graph");
    }
    const auto deg = in_degrees(ag);
    GcnOutput out;
    Matrix h = params.entity_init;
    Matrix z = params.relation_init;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        LayerCache c;
        c.h_in = h;
        c.z_in = z;
        for (auto& a : c.agg) a = Matrix::Zero(n, h.cols());
        for (const auto& t : ag.triples()) {
            const Vector hu = h.row(t.source).transpose();
            const Vector zr = z.row(t.relation).transpose();
            c.agg[static_cast<int>(t.direction)].row(t.target) +=
                compose(hu, zr, params.op).transpose();
        }
        Matrix pre = Matrix::Zero(n, layer.w_rel.cols());
        for (int d = 0; d < kNumDirections; ++d) {
            for (Eigen::Index v = 0; v < n; ++v) {
                if (deg[d][v] > 0) c.agg[d].row(v) /= deg[d][v];
            }
            pre.noalias() += c.agg[d] * layer.w_dir[d];
        }
        h = pre.array().tanh().matrix();
        z = z * layer.w_rel;
        if (!h.allFinite() || !z.allFinite()) {
            throw NumericError("non-finite activation in GCN layer " + std::to_string(l + 1));
        }
        c.h_out = h;
        out.cache.push_back(std::move(c));
    }
    out.entities = std::move(h);
    out.relations = std::move(z);
    return out;
}

EncoderGrads zero_grads(const EncoderParams& params) {
    EncoderGrads g;
    g.entity_init = Matrix::Zero(params.entity_init.rows(), params.entity_init.cols());
    g.relation_init = Matrix::Zero(params.relation_init.rows(), params.relation_init.cols());
    for (const auto& l : params.layers) {
        GcnLayer gl;
        for (int d = 0; d < kNumDirections; ++d) {
            gl.w_dir[d] = Matrix::Zero(l.w_dir[d].rows(), l.w_dir[d].cols());
        }
        gl.w_rel = Matrix::Zero(l.w_rel.rows(), l.w_rel.cols());
        g.layers.push_back(std::move(gl));
    }
    return g;
}

EncoderGrads gcn_backward(const AugmentedGraph& ag, const EncoderParams& params,
                          const GcnOutput& fwd, const Matrix& d_entities, const Matrix& d_relations) {
    EncoderGrads g = zero_grads(params);
    const auto deg = in_degrees(ag);
    Matrix dh = d_entities;
    Matrix dz = d_relations;
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        const auto& c = fwd.cache[li];
        auto& gl = g.layers[li];
        const Matrix dpre = (dh.array() * (1.0 - c.h_out.array().square())).matrix();

        Matrix dh_in = Matrix::Zero(c.h_in.rows(), c.h_in.cols());
        Matrix dz_in = dz * layer.w_rel.transpose();
        gl.w_rel.noalias() += c.z_in.transpose() * dz;

        std::array<Matrix, kNumDirections> dagg;
        for (int d = 0; d < kNumDirections; ++d) {
            gl.w_dir[d].noalias() += c.agg[d].transpose() * dpre;
            dagg[d] = dpre * layer.w_dir[d].transpose();
        }
        Vector ga(c.h_in.cols()), gb(c.h_in.cols());
        for (const auto& t : ag.triples()) {
            const int d = static_cast<int>(t.direction);
            const Vector grad = dagg[d].row(t.target).transpose() / deg[d][t.target];
            const Vector hu = c.h_in.row(t.source).transpose();
            const Vector zr = c.z_in.row(t.relation).transpose();
            ga.setZero();
            gb.setZero();
            compose_backward(hu, zr, grad, params.op, ga, gb);
            dh_in.row(t.source) += ga.transpose();
            dz_in.row(t.relation) += gb.transpose();
        }
        dh = std::move(dh_in);
        dz = std::move(dz_in);
    }
    g.entity_init = std::move(dh);
    g.relation_init = std::move(dz);
    return g;
}

std::vector<Matrix*> parameter_tensors(EncoderParams& params) {
    std::vector<Matrix*> out{&params.entity_init, &params.relation_init};
    for (auto& l : params.layers) {
        for (auto& w : l.w_dir) out.push_back(&w);
        out.push_back(&l.w_rel);
    }
    return out;
}

std::vector<Matrix*> gradient_tensors(EncoderGrads& grads) {
    std::vector<Matrix*> out{&grads.entity_init, &grads.relation_init};
    for (auto& l : grads.layers) {
        for (auto& w : l.w_dir) out.push_back(&w);
        out.push_back(&l.w_rel);
    }
    return out;
}

std::vector<std::string> parameter_names(const EncoderParams& params) {
    std::vector<std::string> out{"entity_init", "relation_init"};
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l + 1) + ".";
        out.push_back(p + "w_original");
        out.push_back(p + "w_inverse");
        out.push_back(p + "w_self");
        out.push_back(p + "w_rel");
    }
    return out;
}

EmbeddingMatrix encode_structural(const AugmentedGraph& ag, const GcnOutput& out,
                                  const OrderedDictionary& dict) {
    if (!dict.matches(ag.base())) {
        throw ArgumentError("dictionary does not match graph '" + ag.base().graph_id() + "'");
    }
    EmbeddingMatrix m;
    m.values.resize(static_cast<Eigen::Index>(dict.size()), out.entities.cols());
    for (std::size_t i = 0; i < dict.size(); ++i) {
        const auto& s = dict.symbol_at(i);
        const auto row = static_cast<Eigen::Index>(i);
        if (s.kind == SymbolKind::Entity) {
            m.values.row(row) = out.entities.row(s.index);
        } else {
            m.values.row(row) = out.relations.row(s.index);
        }
    }
    return m;
}

EmbeddingMatrix encode_structural(const AugmentedGraph& ag, const EncoderParams& params,
                                  const OrderedDictionary& dict) {
    return encode_structural(ag, gcn_forward(ag, params), dict);
}

}  // namespace kgqa
