#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgqa/checkpoint.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/qa.hpp"
#include "kgqa/tensor.hpp"

namespace kgqa {

inline constexpr std::string_view kStopSymbol = "<stop>";

struct AlignmentDims {
    int struct_in = 768;
    int sem_in = 768;
    int model = 256;  // d'; each projector emits d'/2
    // The head reads each graph-token row standardized to zero mean and unit
    // variance; all-zero rows stay zero.
    bool normalize_tokens = true;
    // Entity and STOP logits also receive the raw attention score of their row.
    bool pointer = true;
};

// Two affine layers with a GELU in between, followed by a row softmax.
struct Projector {
    Matrix w1;  // in x d'
    Matrix b1;  // 1 x d'
    Matrix w2;  // d' x d'/2
    Matrix b2;
};

struct AlignmentParams {
    AlignmentDims dims;
    Projector structural;
    Projector semantic;
    Matrix category;  // kNumCategories x d'
    Matrix w_q;       // d' x d'
    Matrix b_q;
    Matrix w_r;  // d' x d', relation gate (no bias)
    Matrix w_k;
    Matrix b_k;
    Matrix w_v;
    Matrix b_v;
    Matrix k_stop;
    Matrix v_stop;
    Matrix w_o;  // d' x (|vocab| + 1), last column is STOP
    Matrix b_o;

    std::vector<std::string> vocab;  // entity names; STOP is index vocab.size()
    std::unordered_map<std::string, std::size_t> vocab_index;

    std::size_t stop_index() const noexcept { return vocab.size(); }
    std::size_t output_size() const noexcept { return vocab.size() + 1; }
    // Throws LookupError for names outside the vocabulary.
    std::size_t token_of(std::string_view entity) const;
    bool all_finite() const;
    friend bool operator==(const AlignmentParams& a, const AlignmentParams& b);
};

// Same layout as AlignmentParams, used for gradients.
struct AlignmentGrads {
    Projector structural;
    Projector semantic;
    Matrix category;
    Matrix w_q;
    Matrix b_q;
    Matrix w_r;
    Matrix w_k;
    Matrix b_k;
    Matrix w_v;
    Matrix b_v;
    Matrix k_stop;
    Matrix v_stop;
    Matrix w_o;
    Matrix b_o;
};

// Sorted, de-duplicated union of entity names.
std::vector<std::string> entity_vocabulary(const std::vector<const KnowledgeGraph*>& graphs);

AlignmentParams init_alignment(const AlignmentDims& dims, std::vector<std::string> vocab,
                               std::uint64_t seed);
AlignmentGrads zero_grads(const AlignmentParams& params);

// Every tensor in a fixed order; biases and stop slots are 1-row matrices.
std::vector<std::string> parameter_names(const AlignmentParams& params);
std::vector<Matrix*> parameter_tensors(AlignmentParams& params);
std::vector<Matrix*> gradient_tensors(AlignmentGrads& grads);

enum class ProjectorKind { Structural, Semantic };

struct ProjectorCache {
    Matrix input;
    Matrix pre1;    // before GELU
    Matrix hidden;  // after GELU
    Matrix output;  // softmax rows
};

// softmax(MLP(E)) per row: m x d'/2.
Matrix project(const Matrix& e, ProjectorKind which, const AlignmentParams& params,
               ProjectorCache* cache = nullptr);
// Row-wise concatenation, structural half first.
Matrix fuse(const Matrix& s, const Matrix& m);

// The per-graph inputs of the head: dictionary-ordered structural and
// semantic matrices of one graph.
struct GraphInputs {
    const KnowledgeGraph* graph = nullptr;
    OrderedDictionary dict;
    Matrix structural;
    Matrix semantic;
    std::unordered_map<std::string, std::size_t> entity_row;
    std::unordered_map<std::string, std::size_t> relation_row;

    GraphInputs() = default;
    GraphInputs(const KnowledgeGraph& g, OrderedDictionary d, Matrix structural, Matrix semantic);

    std::size_t row_of_entity(std::string_view name) const;    // throws LookupError
    std::size_t row_of_relation(std::string_view name) const;  // throws LookupError
    // Dictionary rows that hold relation symbols.
    std::vector<std::size_t> relation_rows() const;
};

// E_G for one graph.
Matrix graph_tokens(const GraphInputs& in, const AlignmentParams& params);

// A question resolved against one graph's dictionary.
struct QueryInput {
    int category = 0;
    std::vector<std::size_t> relation_rows;  // rows of the question's relations
    std::vector<std::size_t> slot_rows;      // rows of the bound slot entities
};

QueryInput resolve_query(const ParsedQuestion& q, const std::vector<QuestionTemplate>& bank,
                         const GraphInputs& in);
QueryInput resolve_query(const QAPair& qa, const std::vector<QuestionTemplate>& bank,
                         const GraphInputs& in);

// Query: (x_ctx W_q + b_q) * (x_rel W_r) where x_ctx = category row + bound
// slot rows + mean of prefix rows + last prefix row, and x_rel = mean of the
// question's relation rows. Single-head scaled dot-product attention over
// the rows of E_G plus a learned stop slot; logits = o W_o + b_o as a
// 1 x (|vocab| + 1) row, plus each row's attention score on its own entity
// token (and the stop slot's on STOP) when dims.pointer is set.
Matrix qa_forward(const Matrix& e_g, const GraphInputs& in, const QueryInput& query,
                  const std::vector<std::size_t>& prefix_rows, const AlignmentParams& params);

struct AlignmentTrainConfig {
    int epochs = 100;
    double lr = 1e-4;
    bool cosine_decay = true;
    double weight_decay = 0.01;
    double lambda_penalty = 1e-5;
    int top_k = 10;
    double max_ratio = 0.1;
    bool penalty_enabled = true;
    std::uint64_t seed = 0;
    // Called after every epoch with the current parameters.
    std::function<void(int epoch, const AlignmentParams&)> on_epoch;
};

// (lambda / N) * sum over rows of the squared K largest logits.
double topk_penalty(const Matrix& logit_rows, int top_k, double lambda, Matrix* d_logits = nullptr);
// L_ce + min(L_pen, L_ce * max_ratio).
double total_loss(double l_ce, double l_pen, double max_ratio);

struct LossBreakdown {
    double ce = 0;
    double penalty = 0;
    double total = 0;
};

// Teacher-forced loss of one example over |answer| + 1 steps. When `grads`
// is non-null the analytic gradient is accumulated into it.
LossBreakdown example_loss(const GraphInputs& in, const QueryInput& query,
                           const std::vector<std::string>& answer, const AlignmentParams& params,
                           const AlignmentTrainConfig& cfg, AlignmentGrads* grads = nullptr);

struct AlignmentStep {
    int epoch;
    std::size_t step;
    double ce;
    double penalty;
    double loss;
    double lr;
};

struct AlignmentEpoch {
    int epoch;
    double mean_loss;
    double mean_ce;
};

struct AlignmentTrainResult {
    AlignmentParams params;
    std::vector<AlignmentStep> steps;
    std::vector<AlignmentEpoch> epochs;
};

// One training example: the graph it belongs to and its resolved query.
struct AlignmentExample {
    std::size_t graph;  // index into the GraphInputs list
    QueryInput query;
    std::vector<std::string> answer;
};

std::vector<AlignmentExample> make_examples(const std::vector<QAPair>& dataset,
                                            const std::vector<QuestionTemplate>& bank,
                                            const std::vector<GraphInputs>& graphs);

// Per-sample AdamW with optional cosine decay; throws TrainingError naming
// the epoch on a non-finite loss.
AlignmentTrainResult train_alignment(const std::vector<AlignmentExample>& examples,
                                     const std::vector<GraphInputs>& graphs, AlignmentParams init,
                                     const AlignmentTrainConfig& cfg);

// Greedy decode over the active graph's entities and STOP.
std::vector<std::string> answer(const Matrix& e_g, const GraphInputs& in, const QueryInput& query,
                                const AlignmentParams& params, int max_steps);

// Max over parameter tensors of |analytic - numeric| / (|analytic| + |numeric|)
// (vector norms), with central differences of step eps.
GradientCheckResult gradient_check(const AlignmentParams& params, const GraphInputs& in,
                                   const AlignmentExample& example, const AlignmentTrainConfig& cfg,
                                   double eps);

Checkpoint to_checkpoint(const AlignmentParams& params);
AlignmentParams alignment_from_checkpoint(const Checkpoint& ckpt);

}  // namespace kgqa
