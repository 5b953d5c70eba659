#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kgqa/checkpoint.hpp"
#include "kgqa/compose.hpp"
#include "kgqa/encoder.hpp"
#include "kgqa/error.hpp"
#include "kgqa/optim.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/synth.hpp"
#include "support.hpp"

using namespace kgqa;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Vector random_vec(Rng& rng, int d) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.uniform(-1, 1);
    return v;
}

// Brute-force double sum.
Vector corr_oracle(const Vector& a, const Vector& b) {
    const auto d = a.size();
    Vector c = Vector::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index i = 0; i < d; ++i) c[k] += a[i] * b[(i + k) % d];
    }
    return c;
}

KnowledgeGraph chain3() { return parse_triples("a\tnext\tb\nb\tnext\tc\n", "chain"); }

KnowledgeGraph five_node() {
    return parse_triples("a\tr\tb\nb\ts\tc\nc\tr\td\nd\ts\te\na\ts\te\ne\tr\tb\n", "five");
}

EncoderDims tiny_dims() { return {6, 5, 2}; }

}  // namespace

TEST(Compose, MultIdentity) {
    Rng rng(1);
    const Vector h = random_vec(rng, 7);
    EXPECT_EQ(compose(h, Vector::Ones(7), CompositionOp::Mult), h);
}

TEST(Compose, CorrHandExample) {
    EXPECT_EQ(compose(vec({1, 0}), vec({0, 1}), CompositionOp::Corr), vec({0, 1}));
}

TEST(Compose, CorrMatchesDoubleSum) {
    Rng rng(2);
    for (int d : {1, 2, 3, 8, 17, 64}) {
        const Vector a = random_vec(rng, d), b = random_vec(rng, d);
        EXPECT_LT((circular_correlation(a, b) - corr_oracle(a, b)).cwiseAbs().maxCoeff(), 1e-12) << d;
    }
}

TEST(Compose, SubSelfIsZero) {
    Rng rng(3);
    const Vector x = random_vec(rng, 9);
    EXPECT_TRUE(compose(x, x, CompositionOp::Sub).isZero(0));
}

TEST(Compose, DimensionMismatch) {
    EXPECT_THROW(compose(Vector::Ones(3), Vector::Ones(4), CompositionOp::Mult), ArgumentError);
    EXPECT_THROW(composition_from_string("conv"), ArgumentError);
    EXPECT_EQ(composition_from_string(to_string(CompositionOp::Sub)), CompositionOp::Sub);
}

TEST(Compose, BackwardMatchesFiniteDifferences) {
    Rng rng(4);
    const int d = 6;
    for (auto op : {CompositionOp::Mult, CompositionOp::Corr, CompositionOp::Sub}) {
        const Vector a = random_vec(rng, d), b = random_vec(rng, d), g = random_vec(rng, d);
        Vector ga = Vector::Zero(d), gb = Vector::Zero(d);
        compose_backward(a, b, g, op, ga, gb);
        const double eps = 1e-6;
        for (int i = 0; i < d; ++i) {
            Vector ap = a, am = a, bp = b, bm = b;
            ap[i] += eps;
            am[i] -= eps;
            bp[i] += eps;
            bm[i] -= eps;
            const double na = (g.dot(compose(ap, b, op)) - g.dot(compose(am, b, op))) / (2 * eps);
            const double nb = (g.dot(compose(a, bp, op)) - g.dot(compose(a, bm, op))) / (2 * eps);
            EXPECT_NEAR(ga[i], na, 1e-8);
            EXPECT_NEAR(gb[i], nb, 1e-8);
        }
    }
}

TEST(DistMult, Examples) {
    EXPECT_DOUBLE_EQ(distmult_score(Vector::Ones(5), Vector::Ones(5), Vector::Ones(5)), 5.0);
    EXPECT_DOUBLE_EQ(distmult_score(vec({1, 2}), vec({1, 1}), vec({2, 0})), 2.0);
    Rng rng(5);
    const Vector h = random_vec(rng, 4), r = random_vec(rng, 4);
    EXPECT_EQ(distmult_score(h, r, Vector::Zero(4)), 0.0);
    EXPECT_EQ(distmult_score(Vector::Zero(4), r, h), 0.0);
}

TEST(Gcn, EmptyGraph) {
    auto ag = augment(KnowledgeGraph("empty"));
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 1);
    auto out = gcn_forward(ag, p);
    EXPECT_EQ(out.entities.rows(), 0);
    EXPECT_EQ(out.relations.rows(), 1);  // the self-loop relation
}

TEST(Gcn, SingleNodeClosedForm) {
    auto ag = augment(KnowledgeGraph::from_parts("one", {"x"}, {}, {}));
    EncoderDims dims{4, 4, 1};
    for (auto op : {CompositionOp::Mult, CompositionOp::Corr, CompositionOp::Sub}) {
        auto p = init_encoder(ag, dims, op, 7);
        for (auto& w : p.layers[0].w_dir) w = Matrix::Identity(4, 4);
        p.layers[0].w_rel = Matrix::Identity(4, 4);
        auto out = gcn_forward(ag, p);
        const Vector h = p.entity_init.row(0).transpose();
        const Vector z = p.relation_init.row(0).transpose();
        const Vector expected = compose(h, z, op).array().tanh().matrix();
        EXPECT_LT((out.entities.row(0).transpose() - expected).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_EQ(out.relations.row(0), p.relation_init.row(0));
    }
}

TEST(Gcn, PermutationEquivariance) {
    auto g = five_node();
    auto ag = augment(g);
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 11);
    const auto out = gcn_forward(ag, p);

    // new id of old entity i
    const std::vector<EntityId> perm{3, 0, 4, 1, 2};
    std::vector<std::string> names(g.num_entities());
    for (EntityId i = 0; i < g.num_entities(); ++i) names[perm[i]] = g.entity_name(i);
    std::vector<Triple> triples;
    for (const auto& t : g.triples()) triples.push_back({perm[t.head], t.relation, perm[t.tail]});
    std::reverse(triples.begin(), triples.end());
    auto gp = KnowledgeGraph::from_parts("five", names, g.relations(), triples);
    auto agp = augment(gp);
    auto pp = p;
    for (EntityId i = 0; i < g.num_entities(); ++i) pp.entity_init.row(perm[i]) = p.entity_init.row(i);
    const auto outp = gcn_forward(agp, pp);
    for (EntityId i = 0; i < g.num_entities(); ++i) {
        EXPECT_LT((outp.entities.row(perm[i]) - out.entities.row(i)).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LT((outp.relations - out.relations).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gcn, InitIsSeededAndBounded) {
    auto ag = augment(five_node());
    auto a = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 3);
    EXPECT_EQ(a, init_encoder(ag, tiny_dims(), CompositionOp::Corr, 3));
    EXPECT_FALSE(a == init_encoder(ag, tiny_dims(), CompositionOp::Corr, 4));
    EXPECT_LE(a.entity_init.cwiseAbs().maxCoeff(), 0.1);
    EXPECT_LE(a.relation_init.cwiseAbs().maxCoeff(), 0.1);
    EXPECT_EQ(a.entity_init.rows(), 5);
    EXPECT_EQ(a.relation_init.rows(), 5);  // 2 base + 2 inverse + self
    ASSERT_EQ(a.layers.size(), 2u);
    EXPECT_EQ(a.layers[0].w_rel.rows(), 6);
    EXPECT_EQ(a.layers[1].w_rel.cols(), 5);
    EXPECT_EQ(parameter_names(a).size(), parameter_tensors(a).size());
}

TEST(EncoderGradients, MatchFiniteDifferences) {
    auto ag = augment(five_node());
    for (auto op : {CompositionOp::Mult, CompositionOp::Corr, CompositionOp::Sub}) {
        for (bool heads : {false, true}) {
            auto p = init_encoder(ag, tiny_dims(), op, 21);
            // larger weights so that tanh is off its linear regime
            for (auto* t : parameter_tensors(p)) *t *= 3.0;
            const auto r = encoder_gradient_check(ag, p, 0.1, heads, 1e-5);
            EXPECT_LE(r.max_relative_error, 1e-4) << to_string(op) << " worst " << r.worst_tensor;
        }
    }
}

TEST(EncoderGradients, FirstOrderTaylor) {
    auto g = five_node();
    auto ag = augment(g);
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 8);
    auto fwd = gcn_forward(ag, p);
    Matrix de, dr;
    const double l0 = link_prediction_loss(ag, fwd, 0.1, &de, &dr, true);
    auto grads = gcn_backward(ag, p, fwd, de, dr);
    const double eps = 1e-4;
    auto moved = p;
    moved.layers[1].w_dir[0](1, 2) += eps;
    const double l1 = link_prediction_loss(ag, gcn_forward(ag, moved), 0.1, nullptr, nullptr, true);
    const double predicted = grads.layers[1].w_dir[0](1, 2) * eps;
    ASSERT_NE(predicted, 0.0);
    EXPECT_NEAR((l1 - l0) / predicted, 1.0, 0.01);
}

TEST(EncoderTraining, ZeroEpochsReturnsInit) {
    auto ag = augment(chain3());
    EncoderTrainConfig cfg;
    cfg.epochs = 0;
    cfg.dims = tiny_dims();
    auto init = init_encoder(ag, cfg.dims, cfg.op, 5);
    auto res = train_encoder(ag, init, cfg);
    EXPECT_EQ(res.params, init);
    EXPECT_TRUE(res.history.empty());
}

TEST(EncoderTraining, ChainReachesPerfectHits) {
    auto ag = augment(chain3());
    EncoderTrainConfig cfg;
    cfg.epochs = 200;
    auto res = train_encoder(ag, cfg);
    ASSERT_EQ(res.history.size(), 200u);
    const auto out = gcn_forward(ag, res.params);
    EXPECT_DOUBLE_EQ(filtered_link_metrics(ag, out).hits1, 1.0);

    // exhaustive scoring: the true tail ranks first
    for (const auto& t : ag.base().triples()) {
        const auto ranked = rank_tails(ag, out, ag.base().entity_name(t.head), ag.base().relation_name(t.relation));
        EXPECT_EQ(ranked.front().entity, t.tail);
        const auto& o = ag.base();
        double best = -1e300;
        EntityId arg = 0;
        for (EntityId e = 0; e < o.num_entities(); ++e) {
            const double s = distmult_score(out.entities.row(t.head).transpose(),
                                            out.relations.row(t.relation).transpose(), out.entities.row(e).transpose());
            if (s > best) best = s, arg = e;
        }
        EXPECT_EQ(arg, t.tail);
    }
    EXPECT_LT(res.history.back().loss, res.history.front().loss);
}

TEST(EncoderTraining, DeterministicHistory) {
    auto ag = augment(five_node());
    EncoderTrainConfig cfg;
    cfg.epochs = 30;
    cfg.dims = {16, 16, 2};
    cfg.seed = 9;
    auto a = train_encoder(ag, cfg);
    auto b = train_encoder(ag, cfg);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
    EXPECT_EQ(a.params, b.params);
}

TEST(EncoderTraining, ArgumentChecks) {
    auto ag = augment(chain3());
    EncoderTrainConfig cfg;
    cfg.dims = tiny_dims();
    cfg.epochs = -1;
    EXPECT_THROW(train_encoder(ag, cfg), ArgumentError);
    cfg.epochs = 1;
    cfg.lr = 0;
    EXPECT_THROW(train_encoder(ag, cfg), ArgumentError);
    cfg.lr = 1e-3;
    cfg.label_smoothing = 1.0;
    EXPECT_THROW(train_encoder(ag, cfg), ArgumentError);
    cfg.label_smoothing = 0.1;
    EXPECT_THROW(train_encoder(augment(KnowledgeGraph::from_parts("x", {"a"}, {}, {})), cfg), ArgumentError);
}

TEST(EncoderTraining, DivergenceIsATrainingError) {
    auto ag = augment(five_node());
    EncoderTrainConfig cfg;
    cfg.dims = tiny_dims();
    cfg.epochs = 5;
    auto init = init_encoder(ag, cfg.dims, cfg.op, 1);
    init.entity_init(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(train_encoder(ag, init, cfg), Error);
}

TEST(RankTails, TiesFollowEntityOrder) {
    auto g = five_node();
    auto ag = augment(g);
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Mult, 1);
    for (auto* t : parameter_tensors(p)) t->setZero();
    const auto ranked = rank_tails(ag, p, "a", "r");
    ASSERT_EQ(ranked.size(), g.num_entities());
    for (std::size_t i = 0; i < ranked.size(); ++i) EXPECT_EQ(ranked[i].entity, i);
    EXPECT_THROW(rank_tails(ag, p, "a", "nope"), LookupError);
}

TEST(RankTails, PositionMatchesBruteForceRank) {
    auto g = make_assembly_graph(AssemblyRecipe::default_recipe(), "P", 3);
    auto ag = augment(g);
    auto p = init_encoder(ag, {8, 8, 2}, CompositionOp::Corr, 2);
    const auto out = gcn_forward(ag, p);
    for (std::size_t k = 0; k < std::min<std::size_t>(g.num_triples(), 10); ++k) {
        const auto& t = g.triples()[k];
        const auto ranked = rank_tails(ag, out, g.entity_name(t.head), g.relation_name(t.relation));
        const auto pos = std::find_if(ranked.begin(), ranked.end(), [&](const auto& r) { return r.entity == t.tail; }) -
                         ranked.begin();
        const double st = distmult_score(out.entities.row(t.head).transpose(), out.relations.row(t.relation).transpose(),
                                         out.entities.row(t.tail).transpose());
        long rank = 0;
        for (EntityId e = 0; e < g.num_entities(); ++e) {
            const double s = distmult_score(out.entities.row(t.head).transpose(),
                                            out.relations.row(t.relation).transpose(), out.entities.row(e).transpose());
            if (s > st || (s == st && e < t.tail)) ++rank;
        }
        EXPECT_EQ(pos, rank);
    }
}

TEST(EncodeStructural, ShapeOnDefaults) {
    auto g = test::toy_product();
    auto ag = augment(g);
    auto p = init_encoder(ag, {}, CompositionOp::Corr, 1);
    auto dict = build_dictionary(g, 3);
    auto m = encode_structural(ag, p, dict);
    EXPECT_EQ(m.rows(), static_cast<Eigen::Index>(g.num_entities() + g.num_relations()));
    EXPECT_EQ(m.dim(), 768);
    EXPECT_TRUE(m.all_finite());
    EXPECT_EQ(encode_structural(ag, p, dict).values, m.values);
}

TEST(EncodeStructural, SwappingPositionsSwapsRows) {
    auto g = test::toy_product();
    auto ag = augment(g);
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 1);
    auto dict = build_dictionary(g, 3);
    auto seq = dict.sequence();
    std::swap(seq[1], seq[4]);
    OrderedDictionary swapped(seq, g.num_entities(), g.num_relations(), 3);
    const auto a = encode_structural(ag, p, dict).values;
    const auto b = encode_structural(ag, p, swapped).values;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const Eigen::Index j = i == 1 ? 4 : i == 4 ? 1 : i;
        EXPECT_EQ(b.row(i), a.row(j));
    }
}

TEST(EncodeStructural, RelationRowsUseOriginalRelations) {
    auto g = test::toy_product();
    auto ag = augment(g);
    auto p = init_encoder(ag, tiny_dims(), CompositionOp::Corr, 1);
    auto out = gcn_forward(ag, p);
    auto dict = build_dictionary(g, 3);
    auto m = encode_structural(ag, out, dict);
    for (std::size_t i = 0; i < dict.size(); ++i) {
        const auto s = dict.symbol_at(i);
        const auto& src = s.kind == SymbolKind::Entity ? out.entities : out.relations;
        EXPECT_EQ(m.values.row(static_cast<Eigen::Index>(i)), src.row(s.index));
    }
    EXPECT_THROW(encode_structural(ag, out, build_dictionary(five_node(), 1)), ArgumentError);
}

TEST(Adam, MinimizesQuadratic) {
    Matrix x = Matrix::Constant(2, 2, 3.0);
    Matrix g(2, 2);
    Adam opt({&x});
    for (int i = 0; i < 2000; ++i) {
        g = 2 * x;
        opt.step({&x}, {&g}, 0.01);
    }
    EXPECT_LT(x.cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_EQ(opt.steps(), 2000);
}

TEST(Adam, DecoupledWeightDecayShrinksWithZeroGradient) {
    Matrix x = Matrix::Constant(1, 3, 1.0);
    Matrix g = Matrix::Zero(1, 3);
    Adam opt({&x}, {0.9, 0.999, 1e-8, 0.5});
    opt.step({&x}, {&g}, 0.1);
    EXPECT_NEAR(x(0, 0), 1.0 - 0.1 * 0.5, 1e-12);
}

TEST(EncoderCheckpoint, RoundTrip) {
    test::TempDir dir("enc");
    auto g = five_node();
    auto ag = augment(g);
    EncoderCheckpoint enc;
    enc.params = init_encoder(ag, tiny_dims(), CompositionOp::Sub, 4);
    enc.graph_id = g.graph_id();
    enc.entities = g.entities();
    enc.relations = ag.relations();
    enc.dict_seed = 12;
    enc.dict_order_hash = build_dictionary(g, 12).order_hash(g);
    save_checkpoint(to_checkpoint(enc), dir.file("e.ckpt"));
    auto back = encoder_from_checkpoint(load_checkpoint(dir.file("e.ckpt")));
    EXPECT_EQ(back.graph_id, enc.graph_id);
    EXPECT_EQ(back.dict_seed, 12u);
    EXPECT_EQ(back.dict_order_hash, enc.dict_order_hash);
    EXPECT_EQ(back.params.op, CompositionOp::Sub);
    EXPECT_EQ(back.params.layers.size(), 2u);
    const auto a = gcn_forward(ag, enc.params), b = gcn_forward(ag, back.params);
    EXPECT_LT((a.entities - b.entities).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NO_THROW(check_encoder_matches(back, ag));
    EXPECT_THROW(check_encoder_matches(back, augment(chain3())), ValidationError);
    const auto head = read_manifest(dir.file("e.ckpt"));
    EXPECT_NE(head.find("\"version\""), std::string::npos);
}

TEST(EncoderCheckpoint, CorruptFiles) {
    Checkpoint c;
    c.kind = "encoder";
    c.tensors.push_back({"x", Matrix::Ones(2, 3)});
    const auto bytes = encode_checkpoint(c);
    EXPECT_EQ(decode_checkpoint(bytes).tensor("x"), Matrix::Ones(2, 3));
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes + "zz"), FormatError);
    EXPECT_THROW(decode_checkpoint("no newline"), FormatError);
    c.version = kCheckpointVersion + 1;
    EXPECT_THROW(decode_checkpoint(encode_checkpoint(c)), FormatError);
    EXPECT_THROW(decode_checkpoint(bytes).tensor("y"), FormatError);
    Checkpoint other;
    other.kind = "alignment";
    EXPECT_THROW(encoder_from_checkpoint(other), FormatError);
}
