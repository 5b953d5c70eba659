#include "kgqa/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kgqa/error.hpp"
#include "kgqa/rng.hpp"

namespace kgqa {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); }

double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

void fill_uniform(Matrix& m, Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

Matrix xavier(Eigen::Index in, Eigen::Index out, Rng& rng) {
    Matrix m(in, out);
    fill_uniform(m, rng, std::sqrt(6.0 / static_cast<double>(in + out)));
    return m;
}

void softmax_rows(Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        const double mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
    }
}

Projector zero_like(const Projector& p) {
    return {Matrix::Zero(p.w1.rows(), p.w1.cols()), Matrix::Zero(1, p.b1.cols()),
            Matrix::Zero(p.w2.rows(), p.w2.cols()), Matrix::Zero(1, p.b2.cols())};
}

Matrix zeros_like(const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); }

const Projector& projector_of(const AlignmentParams& p, ProjectorKind which) {
    return which == ProjectorKind::Structural ? p.structural : p.semantic;
}

// Accumulates the projector gradient given d(output).
void project_backward(const ProjectorCache& c, const Projector& p, const Matrix& d_out, Projector& g) {
    // Row softmax backward.
    Matrix d_pre2 = c.output.cwiseProduct(d_out);
    const Eigen::VectorXd dots = d_pre2.rowwise().sum();
    d_pre2.array() -= c.output.array().colwise() * dots.array();
    g.w2.noalias() += c.hidden.transpose() * d_pre2;
    g.b2 += d_pre2.colwise().sum();
    Matrix d_hidden = d_pre2 * p.w2.transpose();
    d_hidden.array() *= c.pre1.unaryExpr(&gelu_grad).array();
    g.w1.noalias() += c.input.transpose() * d_hidden;
    g.b1 += d_hidden.colwise().sum();
}

constexpr double kNormEps = 1e-12;

// Row-wise (x - mean) / std in place. Rows with zero variance become zero.
void standardize_rows(Matrix& x, Eigen::VectorXd& inv_std) {
    inv_std.resize(x.rows());
    const double d = static_cast<double>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        row.array() -= row.mean();
        const double var = row.squaredNorm() / d;
        inv_std[i] = var > kNormEps ? 1.0 / std::sqrt(var) : 0.0;
        row *= inv_std[i];
    }
}

// Given y = standardize(x) and dL/dy in `d`, overwrites `d` with dL/dx.
void standardize_rows_backward(const Matrix& y, const Eigen::VectorXd& inv_std, Matrix& d) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        auto g = d.row(i);
        if (inv_std[i] == 0.0) {
            g.setZero();
            continue;
        }
        const double mean_g = g.mean();
        const double mean_gy = g.dot(y.row(i)) / static_cast<double>(y.cols());
        g = inv_std[i] * (g.array() - mean_g - y.row(i).array() * mean_gy).matrix();
    }
}

// All intermediates of one example that are shared across decode steps.
struct HeadState {
    ProjectorCache ps;
    ProjectorCache pm;
    Matrix e_g;     // m x d', as read by the head
    Eigen::VectorXd inv_std;
    Matrix keys;    // (m + 1) x d', last row is the stop slot
    Matrix values;  // (m + 1) x d'
    Matrix x_rel;   // 1 x d'
    Matrix gate;    // x_rel W_r
    std::vector<std::pair<std::size_t, std::size_t>> pointer;  // (row, token)
};

HeadState prepare(const Matrix& e_g, const GraphInputs& in, const QueryInput& query, const AlignmentParams& p) {
    const Eigen::Index m = e_g.rows();
    const int d = p.dims.model;
    if (e_g.cols() != d) {
        throw ArgumentError("graph tokens have width " + std::to_string(e_g.cols()) + ", expected " +
                            std::to_string(d));
    }
    if (query.category < 0 || query.category >= p.category.rows()) {
        throw LookupError("unknown question category index " + std::to_string(query.category));
    }
    if (query.relation_rows.empty()) throw ArgumentError("question has no relation");
    HeadState h;
    h.e_g = e_g;
    if (p.dims.normalize_tokens) standardize_rows(h.e_g, h.inv_std);
    h.keys.resize(m + 1, d);
    h.values.resize(m + 1, d);
    h.keys.topRows(m) = h.e_g * p.w_k;
    h.keys.topRows(m).rowwise() += p.b_k.row(0);
    h.keys.row(m) = p.k_stop.row(0);
    h.values.topRows(m) = h.e_g * p.w_v;
    h.values.topRows(m).rowwise() += p.b_v.row(0);
    h.values.row(m) = p.v_stop.row(0);
    h.x_rel = Matrix::Zero(1, d);
    for (auto r : query.relation_rows) h.x_rel += h.e_g.row(static_cast<Eigen::Index>(r));
    h.x_rel /= static_cast<double>(query.relation_rows.size());
    h.gate = h.x_rel * p.w_r;
    if (p.dims.pointer) {
        for (const auto& [name, row] : in.entity_row) {
            auto it = p.vocab_index.find(name);
            if (it != p.vocab_index.end() && row < static_cast<std::size_t>(m)) h.pointer.emplace_back(row, it->second);
        }
        std::sort(h.pointer.begin(), h.pointer.end());
    }
    return h;
}

struct StepCache {
    Matrix x_ctx;  // 1 x d'
    Matrix a;      // x_ctx W_q + b_q
    Matrix q;      // a * gate
    Eigen::VectorXd scores;
    Eigen::VectorXd attn;
    Matrix o;
    Matrix logits;
};

StepCache step_forward(const HeadState& h, const QueryInput& query,
                       const std::vector<std::size_t>& prefix_rows, const AlignmentParams& p) {
    const int d = p.dims.model;
    StepCache s;
    s.x_ctx = p.category.row(query.category);
    for (auto r : query.slot_rows) s.x_ctx += h.e_g.row(static_cast<Eigen::Index>(r));
    if (!prefix_rows.empty()) {
        Matrix mean = Matrix::Zero(1, d);
        for (auto r : prefix_rows) mean += h.e_g.row(static_cast<Eigen::Index>(r));
        s.x_ctx += mean / static_cast<double>(prefix_rows.size());
        s.x_ctx += h.e_g.row(static_cast<Eigen::Index>(prefix_rows.back()));
    }
    s.a = s.x_ctx * p.w_q + p.b_q;
    s.q = s.a.cwiseProduct(h.gate);
    s.scores = h.keys * s.q.row(0).transpose() / std::sqrt(static_cast<double>(d));
    const double mx = s.scores.maxCoeff();
    s.attn = (s.scores.array() - mx).exp();
    s.attn /= s.attn.sum();
    s.o = s.attn.transpose() * h.values;
    s.logits = s.o * p.w_o + p.b_o;
    if (p.dims.pointer) {
        for (const auto& [row, token] : h.pointer) {
            s.logits(0, static_cast<Eigen::Index>(token)) += s.scores[static_cast<Eigen::Index>(row)];
        }
        s.logits(0, static_cast<Eigen::Index>(p.stop_index())) += s.scores[s.scores.size() - 1];
    }
    return s;
}

void check_rows(const Matrix& e_g, const std::vector<std::size_t>& rows, const char* what) {
    for (auto r : rows) {
        if (r >= static_cast<std::size_t>(e_g.rows())) {
            throw ArgumentError(std::string(what) + " row " + std::to_string(r) + " outside graph tokens");
        }
    }
}

}  // namespace

// ---- params --------------------------------------------------------------------

std::size_t AlignmentParams::token_of(std::string_view entity) const {
    auto it = vocab_index.find(std::string(entity));
    if (it == vocab_index.end()) throw LookupError("entity '" + std::string(entity) + "' not in output vocabulary");
    return it->second;
}

bool AlignmentParams::all_finite() const {
    auto* self = const_cast<AlignmentParams*>(this);
    for (auto* t : parameter_tensors(*self)) {
        if (!t->allFinite()) return false;
    }
    return true;
}

bool operator==(const AlignmentParams& a, const AlignmentParams& b) {
    if (a.dims.struct_in != b.dims.struct_in || a.dims.sem_in != b.dims.sem_in ||
        a.dims.model != b.dims.model || a.dims.normalize_tokens != b.dims.normalize_tokens || a.dims.pointer != b.dims.pointer ||
         a.vocab != b.vocab) {
        return false;
    }
    auto ta = parameter_tensors(const_cast<AlignmentParams&>(a));
    auto tb = parameter_tensors(const_cast<AlignmentParams&>(b));
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols() || *ta[i] != *tb[i]) {
            return false;
        }
    }
    return true;
}

std::vector<std::string> entity_vocabulary(const std::vector<const KnowledgeGraph*>& graphs) {
    std::set<std::string> names;
    for (const auto* g : graphs) names.insert(g->entities().begin(), g->entities().end());
    return {names.begin(), names.end()};
}

AlignmentParams init_alignment(const AlignmentDims& dims, std::vector<std::string> vocab,
                               std::uint64_t seed) {
    if (dims.model <= 0 || dims.model % 2 != 0) throw ArgumentError("model dimension must be even and positive");
    if (dims.struct_in <= 0 || dims.sem_in <= 0) throw ArgumentError("projector inputs must be positive");
    AlignmentParams p;
    p.dims = dims;
    p.vocab = std::move(vocab);
    for (std::size_t i = 0; i < p.vocab.size(); ++i) {
        if (!p.vocab_index.emplace(p.vocab[i], i).second) {
            throw ArgumentError("duplicate vocabulary entry '" + p.vocab[i] + "'");
        }
    }
    const int d = dims.model;
    const int half = d / 2;
    const auto out = static_cast<Eigen::Index>(p.output_size());
    Rng rng(derive_seed(seed, "alignment-init"));
    auto make_projector = [&](int in) {
        return Projector{xavier(in, d, rng), Matrix::Zero(1, d), xavier(d, half, rng), Matrix::Zero(1, half)};
    };
    p.structural = make_projector(dims.struct_in);
    p.semantic = make_projector(dims.sem_in);
    p.category.resize(kNumCategories, d);
    fill_uniform(p.category, rng, 0.1);
    p.w_q = xavier(d, d, rng);
    p.b_q = Matrix::Zero(1, d);
    p.w_r = xavier(d, d, rng);
    p.w_k = xavier(d, d, rng);
    p.b_k = Matrix::Zero(1, d);
    p.w_v = xavier(d, d, rng);
    p.b_v = Matrix::Zero(1, d);
    p.k_stop.resize(1, d);
    fill_uniform(p.k_stop, rng, 0.1);
    p.v_stop.resize(1, d);
    fill_uniform(p.v_stop, rng, 0.1);
    p.w_o = xavier(d, out, rng);
    p.b_o = Matrix::Zero(1, out);
    return p;
}

AlignmentGrads zero_grads(const AlignmentParams& p) {
    AlignmentGrads g;
    g.structural = zero_like(p.structural);
    g.semantic = zero_like(p.semantic);
    g.category = zeros_like(p.category);
    g.w_q = zeros_like(p.w_q);
    g.b_q = zeros_like(p.b_q);
    g.w_r = zeros_like(p.w_r);
    g.w_k = zeros_like(p.w_k);
    g.b_k = zeros_like(p.b_k);
    g.w_v = zeros_like(p.w_v);
    g.b_v = zeros_like(p.b_v);
    g.k_stop = zeros_like(p.k_stop);
    g.v_stop = zeros_like(p.v_stop);
    g.w_o = zeros_like(p.w_o);
    g.b_o = zeros_like(p.b_o);
    return g;
}

std::vector<std::string> parameter_names(const AlignmentParams&) {
    return {"struct.w1", "struct.b1", "struct.w2", "struct.b2", "sem.w1", "sem.b1",
            "sem.w2",    "sem.b2",    "category",  "w_q",       "b_q",    "w_r",
            "w_k",       "b_k",       "w_v",       "b_v",       "k_stop", "v_stop",
            "w_o",       "b_o"};
}

namespace {

template <typename T>
std::vector<Matrix*> tensors_of(T& t) {
    return {&t.structural.w1, &t.structural.b1, &t.structural.w2, &t.structural.b2,
            &t.semantic.w1,   &t.semantic.b1,   &t.semantic.w2,   &t.semantic.b2,
            &t.category,      &t.w_q,           &t.b_q,           &t.w_r,
            &t.w_k,           &t.b_k,           &t.w_v,           &t.b_v,
            &t.k_stop,        &t.v_stop,        &t.w_o,           &t.b_o};
}

}  // namespace

std::vector<Matrix*> parameter_tensors(AlignmentParams& params) { return tensors_of(params); }
std::vector<Matrix*> gradient_tensors(AlignmentGrads& grads) { return tensors_of(grads); }

// ---- projection ------------------------------------------------------------

Matrix project(const Matrix& e, ProjectorKind which, const AlignmentParams& params, ProjectorCache* cache) {
    const Projector& p = projector_of(params, which);
    if (e.cols() != p.w1.rows()) {
        throw ArgumentError(std::string(which == ProjectorKind::Structural ? "structural" : "semantic") +
                            " input has width " + std::to_string(e.cols()) + ", projector expects " +
                            std::to_string(p.w1.rows()));
    }
    Matrix pre1 = e * p.w1;
    pre1.rowwise() += p.b1.row(0);
    Matrix hidden = pre1.unaryExpr(&gelu);
    Matrix out = hidden * p.w2;
    out.rowwise() += p.b2.row(0);
    softmax_rows(out);
    if (cache) {
        cache->input = e;
        cache->pre1 = std::move(pre1);
        cache->hidden = std::move(hidden);
        cache->output = out;
    }
    return out;
}

Matrix fuse(const Matrix& s, const Matrix& m) {
    if (s.rows() != m.rows()) {
        throw ArgumentError("cannot fuse " + std::to_string(s.rows()) + " structural rows with " +
                            std::to_string(m.rows()) + " semantic rows");
    }
    Matrix out(s.rows(), s.cols() + m.cols());
    out.leftCols(s.cols()) = s;
    out.rightCols(m.cols()) = m;
    return out;
}

// ---- graph inputs ----------------------------------------------------------

GraphInputs::GraphInputs(const KnowledgeGraph& g, OrderedDictionary d, Matrix s, Matrix m)
    : graph(&g), dict(std::move(d)), structural(std::move(s)), semantic(std::move(m)) {
    if (!dict.matches(g)) throw ArgumentError("dictionary does not match graph '" + g.graph_id() + "'");
    const auto n = static_cast<Eigen::Index>(dict.size());
    if (structural.rows() != n || semantic.rows() != n) {
        throw ArgumentError("embedding rows do not match dictionary size " + std::to_string(n));
    }
    for (std::size_t i = 0; i < dict.size(); ++i) {
        const Symbol& sym = dict.symbol_at(i);
        if (sym.kind == SymbolKind::Entity) {
            entity_row.emplace(g.entities()[sym.index], i);
        } else {
            relation_row.emplace(g.relations()[sym.index], i);
        }
    }
}

std::size_t GraphInputs::row_of_entity(std::string_view name) const {
    auto it = entity_row.find(std::string(name));
    if (it == entity_row.end()) throw LookupError("unknown entity '" + std::string(name) + "'");
    return it->second;
}

std::size_t GraphInputs::row_of_relation(std::string_view name) const {
    auto it = relation_row.find(std::string(name));
    if (it == relation_row.end()) throw LookupError("unknown relation '" + std::string(name) + "'");
    return it->second;
}

std::vector<std::size_t> GraphInputs::relation_rows() const {
    std::vector<std::size_t> rows;
    for (const auto& [name, row] : relation_row) rows.push_back(row);
    std::sort(rows.begin(), rows.end());
    return rows;
}

Matrix graph_tokens(const GraphInputs& in, const AlignmentParams& params) {
    return fuse(project(in.structural, ProjectorKind::Structural, params),
                project(in.semantic, ProjectorKind::Semantic, params));
}

QueryInput resolve_query(const ParsedQuestion& q, const std::vector<QuestionTemplate>& bank,
                         const GraphInputs& in) {
    const QuestionTemplate& t = find_template(bank, q.template_id);
    QueryInput out;
    out.category = static_cast<int>(t.category);
    for (const auto& r : t.question_relations()) out.relation_rows.push_back(in.row_of_relation(r));
    for (const auto& slot : t.slots()) {
        auto it = q.bindings.find(slot);
        if (it == q.bindings.end()) throw ArgumentError("slot {" + slot + "} unbound");
        out.slot_rows.push_back(in.row_of_entity(it->second));
    }
    return out;
}

QueryInput resolve_query(const QAPair& qa, const std::vector<QuestionTemplate>& bank, const GraphInputs& in) {
    return resolve_query(parse_question(qa.question, bank, *in.graph), bank, in);
}

// ---- head --------------------------------------------------------------------

Matrix qa_forward(const Matrix& e_g, const GraphInputs& in, const QueryInput& query,
                  const std::vector<std::size_t>& prefix_rows, const AlignmentParams& params) {
    check_rows(e_g, query.relation_rows, "relation");
    check_rows(e_g, query.slot_rows, "slot");
    check_rows(e_g, prefix_rows, "prefix");
    const HeadState h = prepare(e_g, in, query, params);
    return step_forward(h, query, prefix_rows, params).logits;
}

double topk_penalty(const Matrix& logit_rows, int top_k, double lambda, Matrix* d_logits) {
    const Eigen::Index n = logit_rows.rows();
    const Eigen::Index v = logit_rows.cols();
    if (n < 1) throw ArgumentError("penalty needs at least one row");
    if (top_k < 1 || top_k > v) {
        throw ArgumentError("top_k " + std::to_string(top_k) + " outside [1, " + std::to_string(v) + "]");
    }
    if (d_logits) *d_logits = Matrix::Zero(n, v);
    double total = 0;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(v));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::partial_sort(idx.begin(), idx.begin() + top_k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            const double la = logit_rows(i, a);
            const double lb = logit_rows(i, b);
            return la > lb || (la == lb && a < b);
        });
        for (int j = 0; j < top_k; ++j) {
            const double x = logit_rows(i, idx[static_cast<std::size_t>(j)]);
            total += x * x;
            if (d_logits) (*d_logits)(i, idx[static_cast<std::size_t>(j)]) = 2.0 * lambda * x / static_cast<double>(n);
        }
    }
    return lambda * total / static_cast<double>(n);
}

double total_loss(double l_ce, double l_pen, double max_ratio) {
    if (l_ce < 0 || l_pen < 0) throw ArgumentError("losses must be non-negative");
    if (max_ratio < 0) throw ArgumentError("max_ratio must be non-negative");
    return l_ce + std::min(l_pen, l_ce * max_ratio);
}

LossBreakdown example_loss(const GraphInputs& in, const QueryInput& query, const std::vector<std::string>& answer,
                           const AlignmentParams& params, const AlignmentTrainConfig& cfg,
                           AlignmentGrads* grads) {
    HeadState h;
    {
        ProjectorCache ps;
        ProjectorCache pm;
        const Matrix s = project(in.structural, ProjectorKind::Structural, params, grads ? &ps : nullptr);
        const Matrix m = project(in.semantic, ProjectorKind::Semantic, params, grads ? &pm : nullptr);
        Matrix e_g = fuse(s, m);
        check_rows(e_g, query.relation_rows, "relation");
        check_rows(e_g, query.slot_rows, "slot");
        h = prepare(e_g, in, query, params);
        h.ps = std::move(ps);
        h.pm = std::move(pm);
    }

    const std::size_t n_steps = answer.size() + 1;
    std::vector<std::size_t> targets;
    std::vector<std::size_t> answer_rows;
    for (const auto& a : answer) {
        targets.push_back(params.token_of(a));
        answer_rows.push_back(in.row_of_entity(a));
    }
    targets.push_back(params.stop_index());

    std::vector<StepCache> steps;
    steps.reserve(n_steps);
    Matrix logit_rows(static_cast<Eigen::Index>(n_steps), static_cast<Eigen::Index>(params.output_size()));
    std::vector<std::size_t> prefix;
    for (std::size_t t = 0; t < n_steps; ++t) {
        steps.push_back(step_forward(h, query, prefix, params));
        logit_rows.row(static_cast<Eigen::Index>(t)) = steps.back().logits;
        if (t < answer.size()) prefix.push_back(answer_rows[t]);
    }

    // Cross-entropy averaged over steps.
    const double inv_n = 1.0 / static_cast<double>(n_steps);
    Matrix d_logits(logit_rows.rows(), logit_rows.cols());
    double ce = 0;
    for (std::size_t t = 0; t < n_steps; ++t) {
        const auto row = logit_rows.row(static_cast<Eigen::Index>(t));
        const double mx = row.maxCoeff();
        Eigen::RowVectorXd p = (row.array() - mx).exp();
        const double z = p.sum();
        p /= z;
        ce += (std::log(z) + mx - row(static_cast<Eigen::Index>(targets[t]))) * inv_n;
        d_logits.row(static_cast<Eigen::Index>(t)) = p * inv_n;
        d_logits(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(targets[t])) -= inv_n;
    }

    LossBreakdown out;
    out.ce = ce;
    if (!cfg.penalty_enabled) {
        out.total = ce;
    } else {
        Matrix d_pen;
        out.penalty = topk_penalty(logit_rows, cfg.top_k, cfg.lambda_penalty, grads ? &d_pen : nullptr);
        out.total = total_loss(ce, out.penalty, cfg.max_ratio);
        if (grads) {
            if (out.penalty <= ce * cfg.max_ratio) {
                d_logits += d_pen;
            } else {
                d_logits *= 1.0 + cfg.max_ratio;
            }
        }
    }
    if (!grads) return out;

    // Backward through every decode step.
    AlignmentGrads& g = *grads;
    const int d = params.dims.model;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix d_e_g = Matrix::Zero(h.e_g.rows(), h.e_g.cols());
    Matrix d_keys = Matrix::Zero(h.keys.rows(), d);
    Matrix d_values = Matrix::Zero(h.values.rows(), d);
    Matrix d_gate = Matrix::Zero(1, d);
    prefix.clear();
    for (std::size_t t = 0; t < n_steps; ++t) {
        const StepCache& s = steps[t];
        const Matrix dz = d_logits.row(static_cast<Eigen::Index>(t));
        g.w_o.noalias() += s.o.transpose() * dz;
        g.b_o += dz;
        const Matrix d_o = dz * params.w_o.transpose();
        const Eigen::VectorXd d_attn = h.values * d_o.row(0).transpose();
        d_values.noalias() += s.attn * d_o;
        const double dot = s.attn.dot(d_attn);
        Eigen::VectorXd d_scores = s.attn.array() * (d_attn.array() - dot);
        if (params.dims.pointer) {
            for (const auto& [row, token] : h.pointer) {
                d_scores[static_cast<Eigen::Index>(row)] += dz(0, static_cast<Eigen::Index>(token));
            }
            d_scores[d_scores.size() - 1] += dz(0, static_cast<Eigen::Index>(params.stop_index()));
        }
        d_keys.noalias() += d_scores * s.q * inv_sqrt_d;
        const Matrix d_q = d_scores.transpose() * h.keys * inv_sqrt_d;
        const Matrix d_a = d_q.cwiseProduct(h.gate);
        d_gate += d_q.cwiseProduct(s.a);
        g.w_q.noalias() += s.x_ctx.transpose() * d_a;
        g.b_q += d_a;
        const Matrix d_ctx = d_a * params.w_q.transpose();
        g.category.row(query.category) += d_ctx.row(0);
        for (auto r : query.slot_rows) d_e_g.row(static_cast<Eigen::Index>(r)) += d_ctx.row(0);
        if (!prefix.empty()) {
            const double w = 1.0 / static_cast<double>(prefix.size());
            for (auto r : prefix) d_e_g.row(static_cast<Eigen::Index>(r)) += w * d_ctx.row(0);
            d_e_g.row(static_cast<Eigen::Index>(prefix.back())) += d_ctx.row(0);
        }
        if (t < answer.size()) prefix.push_back(answer_rows[t]);
    }
    g.w_r.noalias() += h.x_rel.transpose() * d_gate;
    const Matrix d_rel = d_gate * params.w_r.transpose() / static_cast<double>(query.relation_rows.size());
    for (auto r : query.relation_rows) d_e_g.row(static_cast<Eigen::Index>(r)) += d_rel.row(0);

    const Eigen::Index m = h.e_g.rows();
    g.k_stop += d_keys.row(m);
    g.v_stop += d_values.row(m);
    const auto dk = d_keys.topRows(m);
    const auto dv = d_values.topRows(m);
    g.w_k.noalias() += h.e_g.transpose() * dk;
    g.b_k += dk.colwise().sum();
    g.w_v.noalias() += h.e_g.transpose() * dv;
    g.b_v += dv.colwise().sum();
    d_e_g.noalias() += dk * params.w_k.transpose();
    d_e_g.noalias() += dv * params.w_v.transpose();

    if (params.dims.normalize_tokens) standardize_rows_backward(h.e_g, h.inv_std, d_e_g);
    const Eigen::Index half = h.ps.output.cols();
    project_backward(h.ps, params.structural, d_e_g.leftCols(half), g.structural);
    project_backward(h.pm, params.semantic, d_e_g.rightCols(d_e_g.cols() - half), g.semantic);
    return out;
}

}  // namespace kgqa
