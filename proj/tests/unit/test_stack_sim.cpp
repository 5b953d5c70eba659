#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "kgqa/error.hpp"
#include "kgqa/metrics.hpp"
#include "kgqa/stack_sim.hpp"

using namespace kgqa;

namespace {

SceneObject obj(int id, double x, double y, double w, double h, int layer) {
    return {id, "o" + std::to_string(id), {x, y, w, h}, layer};
}

// 0 on the floor, 1 on 0, 2 on 1.
StackedScene chain3() {
    return StackedScene({400, 300}, {obj(0, 100, 100, 80, 80, 0), obj(1, 110, 110, 60, 60, 1), obj(2, 120, 120, 40, 40, 2)},
                        {{1, 0}, {2, 1}});
}

// Shortest removal count by breadth-first search over remaining sets.
int bfs_min_length(const StackedScene& scene, int target) {
    const auto n = scene.size();
    std::map<int, std::size_t> bit;
    for (std::size_t i = 0; i < n; ++i) bit[scene.objects()[i].id] = i;
    std::vector<unsigned> above(n, 0);
    for (const auto& e : scene.support_edges()) above[bit[e.lower]] |= 1u << bit[e.upper];
    const unsigned full = (1u << n) - 1;
    std::map<unsigned, int> dist{{full, 0}};
    std::deque<unsigned> q{full};
    while (!q.empty()) {
        const unsigned s = q.front();
        q.pop_front();
        for (std::size_t i = 0; i < n; ++i) {
            if (!(s & (1u << i)) || (above[i] & s)) continue;
            if (i == bit[target]) return dist[s] + 1;
            const unsigned next = s & ~(1u << i);
            if (dist.emplace(next, dist[s] + 1).second) q.push_back(next);
        }
    }
    return -1;
}

std::vector<int> brute_graspable(const StackedScene& scene) {
    std::vector<int> out;
    for (const auto& o : scene.objects()) {
        bool covered = false;
        for (const auto& e : scene.support_edges()) covered = covered || e.lower == o.id;
        if (!covered) out.push_back(o.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> remaining_ids(const StackedScene& s) {
    std::vector<int> ids;
    for (const auto& o : s.objects()) ids.push_back(o.id);
    return ids;
}

}  // namespace

TEST(Box, OpenIntersection) {
    Box a{0, 0, 10, 10};
    EXPECT_TRUE(a.intersects({5, 5, 10, 10}));
    EXPECT_FALSE(a.intersects({10, 0, 5, 5}));  // touching edge
    EXPECT_TRUE(a.inside(10, 10));
    EXPECT_FALSE(a.inside(9.9, 10));
}

TEST(Scene, SingleObject) {
    auto s = generate_scene(1, 3);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_TRUE(s.support_edges().empty());
    EXPECT_EQ(s.objects()[0].layer, 0);
}

TEST(Scene, Deterministic) {
    EXPECT_EQ(generate_scene(12, 5), generate_scene(12, 5));
    EXPECT_NE(generate_scene(12, 5), generate_scene(12, 6));
}

TEST(Scene, TwentyTwoObjectSceneIsValid) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = generate_scene(22, seed);
        ASSERT_EQ(s.size(), 22u);
        s.validate();
        for (const auto& o : s.objects()) {
            EXPECT_TRUE(o.box.inside(s.canvas().width, s.canvas().height));
            EXPECT_LT(o.layer, 4);
        }
    }
}

TEST(Scene, LaterDropsRestOnEveryOverlappedObject) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto s = generate_scene(10, seed);
        std::set<std::pair<int, int>> edges;
        for (const auto& e : s.support_edges()) edges.insert({e.upper, e.lower});
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                const auto& up = s.objects()[i];
                const auto& lo = s.objects()[j];
                EXPECT_EQ(edges.count({up.id, lo.id}) == 1, up.box.intersects(lo.box));
            }
        }
    }
}

TEST(Scene, PilesUp) {
    double mean = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = generate_scene(12, seed);
        for (const auto& o : s.objects()) mean += static_cast<double>(ancestors(s, o.id).size());
    }
    EXPECT_GT(mean / (50 * 12), 0.5);
}

TEST(Scene, ConfigChecks) {
    SceneConfig cfg;
    EXPECT_THROW(generate_scene(0, 1, cfg), ArgumentError);
    cfg.pile_fraction = 0;
    EXPECT_THROW(generate_scene(3, 1, cfg), ArgumentError);
    cfg = {};
    cfg.canvas = {50, 50};
    EXPECT_THROW(generate_scene(3, 1, cfg), GenerationError);
    cfg = {};
    cfg.names = {"a", "b"};
    EXPECT_THROW(generate_scene(3, 1, cfg), ArgumentError);
    cfg.names = {"a", "b", "c"};
    auto s = generate_scene(3, 1, cfg);
    EXPECT_EQ(s.objects()[1].name, "b");
    EXPECT_EQ(s.id_of("c"), s.objects()[2].id);
}

TEST(Scene, ValidationRejectsBadEdges) {
    EXPECT_THROW(StackedScene({100, 100}, {obj(0, 0, 0, 10, 10, 0), obj(1, 50, 50, 10, 10, 1)}, {{1, 0}}).validate(),
                 ValidationError);
    EXPECT_THROW(StackedScene({100, 100}, {obj(0, 0, 0, 10, 10, 1), obj(1, 5, 5, 10, 10, 1)}, {{1, 0}}).validate(),
                 ValidationError);
    EXPECT_THROW(chain3().object(9), LookupError);
}

TEST(Scene, JsonRoundTrip) {
    auto s = generate_scene(9, 4);
    EXPECT_EQ(scene_from_json(scene_to_json(s)), s);
    EXPECT_THROW(scene_from_json("[1,2"), FormatError);
}

TEST(Scene, WithoutDropsEdges) {
    auto s = chain3().without(1);
    EXPECT_EQ(s.size(), 2u);
    EXPECT_TRUE(s.support_edges().empty());
    EXPECT_FALSE(s.contains(1));
}

TEST(Graspable, Examples) {
    auto one = StackedScene({100, 100}, {obj(0, 10, 10, 20, 20, 0)}, {});
    EXPECT_EQ(graspable_set(one), std::vector<int>{0});
    auto two = StackedScene({100, 100}, {obj(0, 10, 10, 20, 20, 0), obj(1, 15, 15, 20, 20, 1)}, {{1, 0}});
    EXPECT_EQ(graspable_set(two), std::vector<int>{1});
    EXPECT_FALSE(is_graspable(two, 0));
}

TEST(Graspable, MatchesEdgeScan) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = generate_scene(12, seed);
        EXPECT_EQ(graspable_set(s), brute_graspable(s));
    }
}

TEST(Ancestors, Chain) {
    auto s = chain3();
    EXPECT_EQ(ancestors(s, 0), (std::vector<int>{1, 2}));
    EXPECT_EQ(ancestors(s, 1), std::vector<int>{2});
    EXPECT_TRUE(ancestors(s, 2).empty());
}

TEST(OptimalPlan, Examples) {
    auto s = chain3();
    EXPECT_EQ(optimal_plan(s, 2).min_length(), 1);
    EXPECT_EQ(optimal_plan(s, 0).min_length(), 3);
    EXPECT_EQ(optimal_plan(s, 0).minimal_sequence(), (std::vector<int>{2, 1, 0}));
    EXPECT_EQ(optimal_plan(s, 0, PlanMode::Closure).min_length(), 3);
}

TEST(OptimalPlan, RandomScenesMatchClosureAndSearch) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto s = generate_scene(8, seed);
        for (const auto& o : s.objects()) {
            const int expected = static_cast<int>(ancestors(s, o.id).size()) + 1;
            EXPECT_EQ(optimal_plan(s, o.id).min_length(), expected);
            EXPECT_EQ(optimal_plan(s, o.id, PlanMode::Closure).min_length(), expected);
            EXPECT_EQ(bfs_min_length(s, o.id), expected);
        }
    }
}

TEST(OptimalPlan, ModeLimit) {
    auto big = generate_scene(16, 1);
    EXPECT_THROW(optimal_plan(big, big.objects()[0].id, PlanMode::Exhaustive), ModeError);
    EXPECT_NO_THROW(optimal_plan(big, big.objects()[0].id, PlanMode::Closure));
}

TEST(OptimalPlan, MinimalSequenceReplaysOptimally) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto s = generate_scene(10, seed);
        const int target = s.objects()[seed % s.size()].id;
        const auto plan = optimal_plan(s, target);
        const auto seq = plan.minimal_sequence();
        ASSERT_EQ(static_cast<int>(seq.size()), plan.min_length());
        EXPECT_EQ(seq.back(), target);
        auto work = s;
        for (int id : seq) {
            EXPECT_TRUE(is_graspable(work, id));
            EXPECT_TRUE(plan.is_optimal(remaining_ids(work), id));
            work = work.without(id);
        }
    }
}

TEST(Greedy, Examples) {
    auto s = chain3();
    EXPECT_EQ(greedy_step(s, 2), 2);
    auto two = StackedScene({100, 100}, {obj(0, 10, 10, 20, 20, 0), obj(1, 15, 15, 20, 20, 1)}, {{1, 0}});
    EXPECT_EQ(greedy_step(two, 0), 1);
}

TEST(Greedy, EveryChoiceIsOptimal) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto s = generate_scene(8, seed);
        for (const auto& o : s.objects()) {
            auto ep = run_episode(s, {o.id}, PlannerKind::Greedy, 8);
            EXPECT_TRUE(ep.terminated);
            for (const auto& st : ep.steps) EXPECT_TRUE(st.was_optimal);
        }
    }
}

TEST(Episode, FreeTarget) {
    auto s = chain3();
    for (auto k : {PlannerKind::Greedy, PlannerKind::Optimal, PlannerKind::Adversarial}) {
        auto ep = run_episode(s, {2}, k, 5);
        ASSERT_EQ(ep.steps.size(), 1u) << to_string(k);
        EXPECT_TRUE(ep.steps[0].was_optimal);
        EXPECT_TRUE(ep.terminated);
    }
}

TEST(Episode, AdversarialDetourIsFlagged) {
    // 0 is buried under 1; 2 stands apart
    auto s = StackedScene({300, 300}, {obj(0, 10, 10, 40, 40, 0), obj(1, 20, 20, 40, 40, 1), obj(2, 200, 200, 40, 40, 0)},
                          {{1, 0}});
    auto ep = run_episode(s, {0}, PlannerKind::Adversarial, 10);
    ASSERT_GE(ep.steps.size(), 1u);
    EXPECT_EQ(ep.steps[0].removed, 2);
    EXPECT_FALSE(ep.steps[0].was_optimal);
    EXPECT_TRUE(ep.terminated);
    std::vector<EpisodeSteps> recs(1);
    for (const auto& st : ep.steps) recs[0].push_back({st.was_optimal});
    EXPECT_LT(opr(recs), 1.0);
}

TEST(Episode, TwoFreeTargets) {
    auto s = StackedScene({300, 300}, {obj(0, 10, 10, 40, 40, 0), obj(1, 200, 200, 40, 40, 0)}, {});
    auto ep = run_episode(s, {0, 1}, PlannerKind::Greedy, 10);
    ASSERT_EQ(ep.steps.size(), 2u);
    std::vector<EpisodeSteps> recs(1);
    for (const auto& st : ep.steps) recs[0].push_back({st.was_optimal});
    EXPECT_DOUBLE_EQ(average_step(recs), 2.0);
}

TEST(Episode, BudgetAndTargetCleared) {
    auto s = chain3();
    auto ep = run_episode(s, {0}, PlannerKind::Greedy, 2);
    EXPECT_FALSE(ep.terminated);
    EXPECT_EQ(ep.steps.size(), 2u);
    // 1 goes away as an obstruction of 0, so it needs no steps of its own
    auto both = run_episode(s, {0, 1}, PlannerKind::Greedy, 10);
    EXPECT_TRUE(both.terminated);
    EXPECT_EQ(both.steps.size(), 3u);
    EXPECT_THROW(run_episode(s, {}, PlannerKind::Greedy, 3), ArgumentError);
    EXPECT_THROW(run_episode(s, {0}, PlannerKind::Greedy, 0), ArgumentError);
    EXPECT_THROW(run_episode(s, {0}, [](const StackedScene&, int) { return 0; }, 3), ArgumentError);
    const auto lines = episode_to_jsonl(both, s, 4);
    EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 3);
    EXPECT_NE(lines.find("\"episode\":4"), std::string::npos);
    EXPECT_NE(lines.find("\"removed_name\":\"o2\""), std::string::npos);
}

TEST(Labels, FirstRadiusAngleZero) {
    auto s = StackedScene({1000, 1000}, {obj(0, 490, 490, 20, 20, 0)}, {});
    LabelConfig cfg;
    auto p = place_labels(s, cfg);
    ASSERT_EQ(p.size(), 1u);
    const double step = std::hypot(cfg.label_w, cfg.label_h);
    EXPECT_NEAR(p[0].anchor_x, 500 + step, 1e-9);
    EXPECT_NEAR(p[0].anchor_y, 500, 1e-9);
    EXPECT_EQ(p[0].arrow_x1, 500);
    EXPECT_EQ(p[0].text, "o0");
}

TEST(Labels, AdjacentObjectsGetDisjointLabels) {
    auto s = StackedScene({600, 400}, {obj(0, 200, 150, 50, 50, 0), obj(1, 250, 150, 50, 50, 0)}, {});
    auto p = place_labels(s);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_FALSE(p[0].label.intersects(p[1].label));
    for (const auto& l : p) {
        for (const auto& o : s.objects()) EXPECT_FALSE(l.label.intersects(o.box));
    }
}

TEST(Labels, NoBackgroundLeft) {
    auto s = StackedScene({90, 90}, {obj(0, 0, 0, 90, 90, 0)}, {});
    EXPECT_THROW(place_labels(s), PlacementError);
}

TEST(Labels, ArgumentChecks) {
    auto s = chain3();
    EXPECT_THROW(place_labels(s, std::vector<std::string>{"a"}), ArgumentError);
    LabelConfig cfg;
    cfg.angle_step_deg = 0;
    EXPECT_THROW(place_labels(s, cfg), ArgumentError);
}

TEST(Svg, EmptyScene) {
    StackedScene s({320, 200}, {}, {});
    const auto svg = render_svg(s, {});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("<text"), std::string::npos);
    EXPECT_EQ(svg.find("class=\"object\""), std::string::npos);
}

TEST(Svg, DeterministicAndCounted) {
    auto s = generate_scene(12, 8);
    const auto p = place_labels(s);
    const auto a = render_svg(s, p);
    EXPECT_EQ(a, render_svg(s, place_labels(s)));
    auto count = [&](std::string_view needle) {
        std::size_t n = 0;
        for (auto pos = a.find(needle); pos != std::string::npos; pos = a.find(needle, pos + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("<text"), p.size());
    EXPECT_EQ(count("<path"), p.size());
    EXPECT_EQ(count("class=\"object\""), s.size());
}

TEST(Planner, Names) {
    EXPECT_EQ(planner_from_string("optimal"), PlannerKind::Optimal);
    EXPECT_EQ(to_string(PlannerKind::Adversarial), "adversarial");
    EXPECT_THROW(planner_from_string("random"), ArgumentError);
}
