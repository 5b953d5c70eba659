#include <cmath>
#include <numbers>
#include <unordered_set>

#include "json.hpp"
#include "kgqa/alignment.hpp"
#include "kgqa/error.hpp"
#include "kgqa/optim.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

std::vector<AlignmentExample> make_examples(const std::vector<QAPair>& dataset,
                                            const std::vector<QuestionTemplate>& bank,
                                            const std::vector<GraphInputs>& graphs) {
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < graphs.size(); ++i) by_id.emplace(graphs[i].graph->graph_id(), i);
    std::vector<AlignmentExample> out;
    out.reserve(dataset.size());
    for (const auto& qa : dataset) {
        auto it = by_id.find(qa.graph_id);
        if (it == by_id.end()) throw LookupError("no graph inputs for graph '" + qa.graph_id + "'");
        const GraphInputs& in = graphs[it->second];
        out.push_back({it->second, resolve_query(qa, bank, in), qa.answer});
    }
    return out;
}

AlignmentTrainResult train_alignment(const std::vector<AlignmentExample>& examples,
                                     const std::vector<GraphInputs>& graphs, AlignmentParams init,
                                     const AlignmentTrainConfig& cfg) {
    if (cfg.epochs < 0) throw ArgumentError("epochs must be non-negative");
    if (cfg.lr <= 0) throw ArgumentError("learning rate must be positive");
    if (cfg.max_ratio < 0 || cfg.max_ratio >= 1) throw ArgumentError("max_ratio must be in [0, 1)");
    for (const auto& ex : examples) {
        if (ex.graph >= graphs.size()) throw ArgumentError("example refers to a missing graph");
    }
    AlignmentTrainResult result;
    result.params = std::move(init);
    if (cfg.epochs == 0 || examples.empty()) return result;

    AlignmentParams& p = result.params;
    auto params = parameter_tensors(p);
    Adam opt(params, Adam::Options{0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng rng(derive_seed(cfg.seed, "alignment-order"));
    std::vector<std::size_t> order(examples.size());
    const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(examples.size());
    std::size_t step = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        double sum_loss = 0;
        double sum_ce = 0;
        for (auto idx : order) {
            const AlignmentExample& ex = examples[idx];
            AlignmentGrads g = zero_grads(p);
            const LossBreakdown loss = example_loss(graphs[ex.graph], ex.query, ex.answer, p, cfg, &g);
            if (!std::isfinite(loss.total)) {
                throw TrainingError("alignment loss diverged at epoch " + std::to_string(epoch));
            }
            const double lr = cfg.cosine_decay
                                  ? cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi *
                                                                   static_cast<double>(step) / total_steps))
                                  : cfg.lr;
            opt.step(params, gradient_tensors(g), lr);
            result.steps.push_back({epoch, step, loss.ce, loss.penalty, loss.total, lr});
            sum_loss += loss.total;
            sum_ce += loss.ce;
            ++step;
        }
        if (!p.all_finite()) throw TrainingError("alignment parameters diverged at epoch " + std::to_string(epoch));
        const double n = static_cast<double>(examples.size());
        result.epochs.push_back({epoch, sum_loss / n, sum_ce / n});
        if (cfg.on_epoch) cfg.on_epoch(epoch, p);
    }
    return result;
}

std::vector<std::string> answer(const Matrix& e_g, const GraphInputs& in, const QueryInput& query,
                                const AlignmentParams& params, int max_steps) {
    // Candidates: active-graph entities inside the vocabulary, plus STOP.
    std::vector<std::pair<std::size_t, std::size_t>> candidates;  // (token, row)
    for (const auto& [name, row] : in.entity_row) {
        auto it = params.vocab_index.find(name);
        if (it != params.vocab_index.end()) candidates.emplace_back(it->second, row);
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<std::string> out;
    std::vector<std::size_t> prefix;
    for (int step = 0; step < max_steps; ++step) {
        const Matrix logits = qa_forward(e_g, in, query, prefix, params);
        std::size_t best_token = params.stop_index();
        std::size_t best_row = 0;
        double best = logits(0, static_cast<Eigen::Index>(best_token));
        for (const auto& [token, row] : candidates) {
            const double v = logits(0, static_cast<Eigen::Index>(token));
            if (v > best) {
                best = v;
                best_token = token;
                best_row = row;
            }
        }
        if (best_token == params.stop_index()) break;
        out.push_back(params.vocab[best_token]);
        prefix.push_back(best_row);
    }
    return out;
}

GradientCheckResult gradient_check(const AlignmentParams& params, const GraphInputs& in,
                                   const AlignmentExample& example, const AlignmentTrainConfig& cfg,
                                   double eps) {
    AlignmentGrads analytic = zero_grads(params);
    example_loss(in, example.query, example.answer, params, cfg, &analytic);
    AlignmentParams probe = params;
    auto probe_tensors = parameter_tensors(probe);
    auto grad_tensors = gradient_tensors(analytic);
    const auto names = parameter_names(params);
    GradientCheckResult result;
    for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
        Matrix& w = *probe_tensors[t];
        Matrix numeric(w.rows(), w.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double saved = w.data()[i];
            w.data()[i] = saved + eps;
            const double up = example_loss(in, example.query, example.answer, probe, cfg).total;
            w.data()[i] = saved - eps;
            const double down = example_loss(in, example.query, example.answer, probe, cfg).total;
            w.data()[i] = saved;
            numeric.data()[i] = (up - down) / (2 * eps);
        }
        const Matrix& a = *grad_tensors[t];
        const double denom = a.norm() + numeric.norm();
        const double abs_error = (a - numeric).norm();
        const double rel = denom == 0 ? 0.0 : abs_error / denom;
        result.tensors.push_back({names[t], a.norm(), abs_error, rel});
        if (rel > result.max_relative_error || result.worst_tensor.empty()) {
            result.max_relative_error = std::max(result.max_relative_error, rel);
            result.worst_tensor = names[t];
        }
    }
    return result;
}

Checkpoint to_checkpoint(const AlignmentParams& params) {
    Checkpoint ckpt;
    ckpt.kind = "alignment";
    nlohmann::ordered_json extra;
    extra["struct_in"] = params.dims.struct_in;
    extra["sem_in"] = params.dims.sem_in;
    extra["model"] = params.dims.model;
    extra["normalize_tokens"] = params.dims.normalize_tokens;
    extra["pointer"] = params.dims.pointer;
    extra["vocab"] = params.vocab;
    ckpt.manifest_json = extra.dump();
    auto& mut = const_cast<AlignmentParams&>(params);
    const auto names = parameter_names(params);
    const auto tensors = parameter_tensors(mut);
    for (std::size_t i = 0; i < names.size(); ++i) ckpt.tensors.push_back({names[i], *tensors[i]});
    return ckpt;
}

AlignmentParams alignment_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.kind != "alignment") throw FormatError("checkpoint kind '" + ckpt.kind + "' is not an alignment head");
    AlignmentDims dims;
    std::vector<std::string> vocab;
    try {
        const auto extra = nlohmann::json::parse(ckpt.manifest_json);
        dims.struct_in = extra.at("struct_in").get<int>();
        dims.sem_in = extra.at("sem_in").get<int>();
        dims.model = extra.at("model").get<int>();
        dims.normalize_tokens = extra.value("normalize_tokens", true);
        dims.pointer = extra.value("pointer", true);
        vocab = extra.at("vocab").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("alignment manifest: ") + e.what());
    }
    AlignmentParams p = init_alignment(dims, std::move(vocab), 0);
    const auto names = parameter_names(p);
    auto tensors = parameter_tensors(p);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const Matrix& src = ckpt.tensor(names[i]);
        if (src.rows() != tensors[i]->rows() || src.cols() != tensors[i]->cols()) {
            throw FormatError("tensor '" + names[i] + "' has shape " + std::to_string(src.rows()) + "x" +
                              std::to_string(src.cols()) + ", expected " + std::to_string(tensors[i]->rows()) +
                              "x" + std::to_string(tensors[i]->cols()));
        }
        *tensors[i] = src;
    }
    return p;
}

}  // namespace kgqa
