#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kgqa/compose.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/tensor.hpp"

namespace kgqa {

struct EncoderDims {
    int init_dim = 128;
    int embed_dim = 768;
    int layers = 2;
};

struct GcnLayer {
    // Indexed by Direction: original, inverse, self. Each is d_in x d_out.
    std::array<Matrix, kNumDirections> w_dir;
    Matrix w_rel;  // d_in x d_out
};

struct EncoderParams {
    EncoderDims dims;
    CompositionOp op = CompositionOp::Corr;
    std::uint64_t seed = 0;
    Matrix entity_init;    // |N| x init_dim
    Matrix relation_init;  // |R_aug| x init_dim
    std::vector<GcnLayer> layers;

    bool all_finite() const;
    friend bool operator==(const EncoderParams& a, const EncoderParams& b);
};

// Seeded uniform [-0.1, 0.1] embeddings and Xavier-uniform layer weights.
EncoderParams init_encoder(const AugmentedGraph& ag, const EncoderDims& dims, CompositionOp op,
                           std::uint64_t seed);

// Intermediates of one layer, kept for the backward pass.
struct LayerCache {
    Matrix h_in;
    Matrix z_in;
    std::array<Matrix, kNumDirections> agg;  // per-direction mean of composed messages
    Matrix h_out;
};

struct GcnOutput {
    Matrix entities;   // |N| x embed_dim
    Matrix relations;  // |R_aug| x embed_dim
    std::vector<LayerCache> cache;
};

// h_v <- tanh(sum_dir W_dir^T mean_{(u,r,v) in dir} phi(h_u, z_r)),  z_r <- W_rel^T z_r.
GcnOutput gcn_forward(const AugmentedGraph& ag, const EncoderParams& params);

struct EncoderGrads {
    Matrix entity_init;
    Matrix relation_init;
    std::vector<GcnLayer> layers;
};

EncoderGrads zero_grads(const EncoderParams& params);

// Backpropagates gradients of the final entity/relation outputs into params.
EncoderGrads gcn_backward(const AugmentedGraph& ag, const EncoderParams& params,
                          const GcnOutput& fwd, const Matrix& d_entities, const Matrix& d_relations);

// Flat views over every parameter tensor, in a fixed order, for optimizers
// and gradient checks.
std::vector<Matrix*> parameter_tensors(EncoderParams& params);
std::vector<Matrix*> gradient_tensors(EncoderGrads& grads);
std::vector<std::string> parameter_names(const EncoderParams& params);

// ---- link prediction -----------------------------------------------------------

struct EncoderTrainConfig {
    int epochs = 500;
    double lr = 1e-3;
    double label_smoothing = 0.1;
    // Also score every head for (?, r, t); without it nothing pushes down
    // corrupted heads.
    bool head_prediction = true;
    std::uint64_t seed = 0;
    EncoderDims dims;
    CompositionOp op = CompositionOp::Corr;
};

struct EncoderEpoch {
    int epoch;
    double loss;
    double hits1;
    double hits3;
    double hits10;
};

struct EncoderTrainResult {
    EncoderParams params;
    std::vector<EncoderEpoch> history;
};

// 1-vs-all prediction loss over the original triples: binary cross entropy
// of sigmoid(DistMult) against label-smoothed one-hot targets, for tails and
// optionally for heads.
double link_prediction_loss(const AugmentedGraph& ag, const GcnOutput& out, double label_smoothing,
                            Matrix* d_entities = nullptr, Matrix* d_relations = nullptr,
                            bool head_prediction = false);

// Central differences of link_prediction_loss against gcn_backward.
GradientCheckResult encoder_gradient_check(const AugmentedGraph& ag, const EncoderParams& params,
                                           double label_smoothing, bool head_prediction, double eps);

// Full-batch Adam with fixed step size. Throws TrainingError on divergence.
EncoderTrainResult train_encoder(const AugmentedGraph& ag, const EncoderTrainConfig& cfg);
EncoderTrainResult train_encoder(const AugmentedGraph& ag, EncoderParams init,
                                 const EncoderTrainConfig& cfg);

// Scores of (head, relation, e) for every entity e.
Vector tail_scores(const GcnOutput& out, EntityId head, RelationId relation);

struct RankedEntity {
    EntityId entity;
    std::string name;
    double score;
};

// Entities by descending DistMult score, ties broken by entity index.
std::vector<RankedEntity> rank_tails(const AugmentedGraph& ag, const GcnOutput& out,
                                     std::string_view head, std::string_view relation);
std::vector<RankedEntity> rank_tails(const AugmentedGraph& ag, const EncoderParams& params,
                                     std::string_view head, std::string_view relation);

struct LinkMetrics {
    double hits1 = 0;
    double hits3 = 0;
    double hits10 = 0;
    double mrr = 0;
};

// Filtered ranking of true tails over the original triples.
LinkMetrics filtered_link_metrics(const AugmentedGraph& ag, const GcnOutput& out);

// Fraction of single-entity corruptions (head or tail, excluding true
// triples) that score strictly below their true triple.
double corruption_win_rate(const AugmentedGraph& ag, const GcnOutput& out);

// Row i = final embedding of the i-th dictionary symbol; relation rows use
// the original (non-inverse) relations.
EmbeddingMatrix encode_structural(const AugmentedGraph& ag, const EncoderParams& params,
                                  const OrderedDictionary& dict);
EmbeddingMatrix encode_structural(const AugmentedGraph& ag, const GcnOutput& out,
                                  const OrderedDictionary& dict);

}  // namespace kgqa
