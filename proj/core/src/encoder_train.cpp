#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "kgqa/encoder.hpp"
#include "kgqa/error.hpp"
#include "kgqa/optim.hpp"

namespace kgqa {

Adam::Adam(const std::vector<Matrix*>& params, Options opts) : opts_(opts) {
    for (const auto* p : params) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix*>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        const auto& g = *grads[i];
        m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
        v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
        if (opts_.weight_decay > 0) p *= (1.0 - lr * opts_.weight_decay);
        p.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + opts_.eps);
    }
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double link_prediction_loss(const AugmentedGraph& ag, const GcnOutput& out, double label_smoothing,
                            Matrix* d_entities, Matrix* d_relations, bool head_prediction) {
    const auto& triples = ag.base().triples();
    const auto n = out.entities.rows();
    if (triples.empty() || n == 0) return 0.0;
    const double directions = head_prediction ? 2.0 : 1.0;
    const double scale = 1.0 / (directions * static_cast<double>(triples.size()) * static_cast<double>(n));
    const double off = label_smoothing / static_cast<double>(n);
    const double on = 1.0 - label_smoothing + off;
    const bool want_grad = d_entities != nullptr && d_relations != nullptr;
    if (want_grad) {
        *d_entities = Matrix::Zero(out.entities.rows(), out.entities.cols());
        *d_relations = Matrix::Zero(out.relations.rows(), out.relations.cols());
    }
    double loss = 0.0;
    Vector g(n);
    // Scores (anchor, relation, e) for every e against a one-hot on `answer`.
    // DistMult is symmetric, so head prediction reuses this with the ends swapped.
    auto one_vs_all = [&](EntityId anchor, RelationId relation, EntityId answer) {
        const Vector hr = (out.entities.row(anchor).array() * out.relations.row(relation).array())
                              .matrix()
                              .transpose();
        const Vector s = out.entities * hr;
        for (Eigen::Index e = 0; e < n; ++e) {
            const double y = e == static_cast<Eigen::Index>(answer) ? on : off;
            loss += softplus(s[e]) - y * s[e];
            g[e] = (sigmoid(s[e]) - y) * scale;
        }
        if (!want_grad) return;
        const Vector dq = out.entities.transpose() * g;
        d_entities->noalias() += g * hr.transpose();
        d_entities->row(anchor) +=
            (dq.array() * out.relations.row(relation).transpose().array()).matrix().transpose();
        d_relations->row(relation) +=
            (dq.array() * out.entities.row(anchor).transpose().array()).matrix().transpose();
    };
    for (const auto& t : triples) {
        one_vs_all(t.head, t.relation, t.tail);
        if (head_prediction) one_vs_all(t.tail, t.relation, t.head);
    }
    return loss * scale;
}

EncoderTrainResult train_encoder(const AugmentedGraph& ag, const EncoderTrainConfig& cfg) {
    return train_encoder(ag, init_encoder(ag, cfg.dims, cfg.op, cfg.seed), cfg);
}

EncoderTrainResult train_encoder(const AugmentedGraph& ag, EncoderParams init,
                                 const EncoderTrainConfig& cfg) {
    if (cfg.epochs < 0) throw ArgumentError("epochs must be non-negative");
    if (cfg.lr <= 0) throw ArgumentError("learning rate must be positive");
    if (cfg.label_smoothing < 0 || cfg.label_smoothing >= 1) {
        throw ArgumentError("label smoothing must lie in [0, 1)");
    }
    EncoderTrainResult result{std::move(init), {}};
    if (cfg.epochs == 0) return result;
    if (ag.base().num_triples() == 0) throw ArgumentError("training needs at least one triple");

    auto params = parameter_tensors(result.params);
    Adam opt(params);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        GcnOutput out;
        try {
            out = gcn_forward(ag, result.params);
        } catch (const NumericError& e) {
            throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        Matrix d_ent, d_rel;
        const double loss = link_prediction_loss(ag, out, cfg.label_smoothing, &d_ent, &d_rel, cfg.head_prediction);
        if (!std::isfinite(loss)) {
            throw TrainingError("loss diverged at epoch " + std::to_string(epoch));
        }
        const auto m = filtered_link_metrics(ag, out);
        result.history.push_back({epoch, loss, m.hits1, m.hits3, m.hits10});

        auto grads = gcn_backward(ag, result.params, out, d_ent, d_rel);
        opt.step(params, gradient_tensors(grads), cfg.lr);
        if (!result.params.all_finite()) {
            throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
        }
    }
    return result;
}

GradientCheckResult encoder_gradient_check(const AugmentedGraph& ag, const EncoderParams& params,
                                           double label_smoothing, bool head_prediction, double eps) {
    const GcnOutput fwd = gcn_forward(ag, params);
    Matrix d_ent, d_rel;
    link_prediction_loss(ag, fwd, label_smoothing, &d_ent, &d_rel, head_prediction);
    EncoderGrads analytic = gcn_backward(ag, params, fwd, d_ent, d_rel);
    auto grad_tensors = gradient_tensors(analytic);
    EncoderParams probe = params;
    auto probe_tensors = parameter_tensors(probe);
    const auto names = parameter_names(params);
    auto loss_at = [&] { return link_prediction_loss(ag, gcn_forward(ag, probe), label_smoothing, nullptr, nullptr, head_prediction); };
    GradientCheckResult result;
    for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
        Matrix& w = *probe_tensors[t];
        Matrix numeric(w.rows(), w.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double saved = w.data()[i];
            w.data()[i] = saved + eps;
            const double up = loss_at();
            w.data()[i] = saved - eps;
            const double down = loss_at();
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

Vector tail_scores(const GcnOutput& out, EntityId head, RelationId relation) {
    const Vector hr =
        (out.entities.row(head).array() * out.relations.row(relation).array()).matrix().transpose();
    return out.entities * hr;
}

std::vector<RankedEntity> rank_tails(const AugmentedGraph& ag, const GcnOutput& out,
                                     std::string_view head, std::string_view relation) {
    const EntityId h = ag.base().entity_id(head);
    const auto& rels = ag.relations();
    const auto it = std::find(rels.begin(), rels.end(), relation);
    if (it == rels.end()) throw LookupError("unknown relation '" + std::string(relation) + "'");
    const auto r = static_cast<RelationId>(it - rels.begin());
    const Vector s = tail_scores(out, h, r);
    std::vector<RankedEntity> ranked;
    for (EntityId e = 0; e < ag.num_entities(); ++e) {
        ranked.push_back({e, ag.base().entity_name(e), s[e]});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedEntity& a, const RankedEntity& b) { return a.score > b.score; });
    return ranked;
}

std::vector<RankedEntity> rank_tails(const AugmentedGraph& ag, const EncoderParams& params,
                                     std::string_view head, std::string_view relation) {
    return rank_tails(ag, gcn_forward(ag, params), head, relation);
}

LinkMetrics filtered_link_metrics(const AugmentedGraph& ag, const GcnOutput& out) {
    const auto& g = ag.base();
    LinkMetrics m;
    if (g.num_triples() == 0) return m;
    for (const auto& t : g.triples()) {
        const Vector s = tail_scores(out, t.head, t.relation);
        const double st = s[t.tail];
        std::size_t rank = 1;
        for (EntityId e = 0; e < g.num_entities(); ++e) {
            if (e == t.tail || g.contains(Triple{t.head, t.relation, e})) continue;
            if (s[e] > st || (s[e] == st && e < t.tail)) ++rank;
        }
        m.hits1 += rank <= 1;
        m.hits3 += rank <= 3;
        m.hits10 += rank <= 10;
        m.mrr += 1.0 / static_cast<double>(rank);
    }
    const double n = static_cast<double>(g.num_triples());
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    m.mrr /= n;
    return m;
}

double corruption_win_rate(const AugmentedGraph& ag, const GcnOutput& out) {
    const auto& g = ag.base();
    std::size_t wins = 0;
    std::size_t total = 0;
    for (const auto& t : g.triples()) {
        const Vector tails = tail_scores(out, t.head, t.relation);
        const Vector rt = (out.relations.row(t.relation).array() * out.entities.row(t.tail).array())
                              .matrix()
                              .transpose();
        const Vector heads = out.entities * rt;
        const double st = tails[t.tail];
        for (EntityId e = 0; e < g.num_entities(); ++e) {
            if (e != t.tail && !g.contains(Triple{t.head, t.relation, e})) {
                ++total;
                wins += st > tails[e];
            }
            if (e != t.head && !g.contains(Triple{e, t.relation, t.tail})) {
                ++total;
                wins += st > heads[e];
            }
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(wins) / static_cast<double>(total);
}

}  // namespace kgqa
