#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgqa/error.hpp"
#include "kgqa/rng.hpp"
#include "kgqa/stack_sim.hpp"

namespace kgqa {

bool Box::intersects(const Box& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
}

bool Box::inside(double width, double height) const {
    return x >= 0 && y >= 0 && x + w <= width && y + h <= height;
}

StackedScene::StackedScene(Canvas canvas, std::vector<SceneObject> objects, std::vector<SupportEdge> edges)
    : canvas_(canvas), objects_(std::move(objects)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
        if (!index_.emplace(objects_[i].id, i).second) {
            throw ValidationError("duplicate object id " + std::to_string(objects_[i].id));
        }
    }
    for (const auto& e : edges_) {
        if (!contains(e.upper) || !contains(e.lower)) {
            throw ValidationError("support edge (" + std::to_string(e.upper) + ", " + std::to_string(e.lower) +
                                  ") refers to a missing object");
        }
    }
}

bool StackedScene::contains(int id) const { return index_.count(id) > 0; }

const SceneObject& StackedScene::object(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw LookupError("no object with id " + std::to_string(id));
    return objects_[it->second];
}

int StackedScene::id_of(std::string_view name) const {
    for (const auto& o : objects_) {
        if (o.name == name) return o.id;
    }
    throw LookupError("no object named '" + std::string(name) + "'");
}

StackedScene StackedScene::without(int id) const {
    object(id);
    std::vector<SceneObject> objs;
    objs.reserve(objects_.size() - 1);
    for (const auto& o : objects_) {
        if (o.id != id) objs.push_back(o);
    }
    std::vector<SupportEdge> edges;
    for (const auto& e : edges_) {
        if (e.upper != id && e.lower != id) edges.push_back(e);
    }
    return StackedScene(canvas_, std::move(objs), std::move(edges));
}

void StackedScene::validate() const {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges_) {
        const auto& up = object(e.upper);
        const auto& lo = object(e.lower);
        if (e.upper == e.lower) throw ValidationError("self-support on object " + std::to_string(e.upper));
        if (!seen.emplace(e.upper, e.lower).second) throw ValidationError("duplicate support edge");
        if (!up.box.intersects(lo.box)) {
            throw ValidationError("object " + std::to_string(e.upper) + " rests on " + std::to_string(e.lower) +
                                  " without overlapping it");
        }
        // Layer monotonicity along every edge also rules out cycles.
        if (up.layer <= lo.layer) {
            throw ValidationError("object " + std::to_string(e.upper) + " is not above " + std::to_string(e.lower));
        }
    }
}

StackedScene generate_scene(int n, std::uint64_t seed, const SceneConfig& cfg) {
    if (n < 1) throw ArgumentError("scene needs at least one object");
    if (cfg.min_size <= 0 || cfg.max_size < cfg.min_size) throw ArgumentError("invalid object size range");
    if (cfg.max_size > cfg.canvas.width || cfg.max_size > cfg.canvas.height) {
        throw GenerationError("canvas " + std::to_string(cfg.canvas.width) + "x" + std::to_string(cfg.canvas.height) +
                              " cannot hold objects up to size " + std::to_string(cfg.max_size));
    }
    if (!cfg.names.empty() && static_cast<int>(cfg.names.size()) < n) {
        throw ArgumentError("fewer object names than objects");
    }
    if (cfg.pile_fraction <= 0 || cfg.pile_fraction > 1) throw ArgumentError("pile_fraction must be in (0, 1]");
    const double pile_w = std::max(cfg.max_size, cfg.pile_fraction * cfg.canvas.width);
    const double pile_h = std::max(cfg.max_size, cfg.pile_fraction * cfg.canvas.height);
    const double x0 = (cfg.canvas.width - pile_w) / 2;
    const double y0 = (cfg.canvas.height - pile_h) / 2;
    Rng rng(derive_seed(seed, "scene"));
    std::vector<SceneObject> objects;
    std::vector<SupportEdge> edges;
    for (int i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
            Box b;
            b.w = rng.uniform(cfg.min_size, cfg.max_size);
            b.h = rng.uniform(cfg.min_size, cfg.max_size);
            b.x = x0 + rng.uniform(0, std::max(0.0, pile_w - b.w));
            b.y = y0 + rng.uniform(0, std::max(0.0, pile_h - b.h));
            int layer = 0;
            std::vector<int> below;
            for (const auto& o : objects) {
                if (o.box.intersects(b)) {
                    below.push_back(o.id);
                    layer = std::max(layer, o.layer + 1);
                }
            }
            if (layer >= cfg.max_layers) continue;
            for (int lower : below) edges.push_back({i, lower});
            objects.push_back({i, cfg.names.empty() ? "object" + std::to_string(i) : cfg.names[i], b, layer});
            placed = true;
        }
        if (!placed) {
            throw GenerationError("could not place object " + std::to_string(i) + " within " +
                                  std::to_string(cfg.max_layers) + " layers on the canvas");
        }
    }
    return StackedScene(cfg.canvas, std::move(objects), std::move(edges));
}

std::vector<int> graspable_set(const StackedScene& scene) {
    std::set<int> covered;
    for (const auto& e : scene.support_edges()) covered.insert(e.lower);
    std::vector<int> out;
    for (const auto& o : scene.objects()) {
        if (!covered.count(o.id)) out.push_back(o.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_graspable(const StackedScene& scene, int id) {
    scene.object(id);
    for (const auto& e : scene.support_edges()) {
        if (e.lower == id) return false;
    }
    return true;
}

std::vector<int> ancestors(const StackedScene& scene, int id) {
    scene.object(id);
    std::set<int> seen;
    std::queue<int> frontier;
    frontier.push(id);
    while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop();
        for (const auto& e : scene.support_edges()) {
            if (e.lower == cur && seen.insert(e.upper).second) frontier.push(e.upper);
        }
    }
    return {seen.begin(), seen.end()};
}

std::string scene_to_json(const StackedScene& scene, int indent) {
    nlohmann::ordered_json j;
    j["canvas"] = {{"width", scene.canvas().width}, {"height", scene.canvas().height}};
    auto objs = nlohmann::ordered_json::array();
    for (const auto& o : scene.objects()) {
        objs.push_back({{"id", o.id},
                        {"name", o.name},
                        {"x", o.box.x},
                        {"y", o.box.y},
                        {"w", o.box.w},
                        {"h", o.box.h},
                        {"layer", o.layer}});
    }
    j["objects"] = objs;
    auto edges = nlohmann::ordered_json::array();
    for (const auto& e : scene.support_edges()) edges.push_back({e.upper, e.lower});
    j["support_edges"] = edges;
    return j.dump(indent);
}

StackedScene scene_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        Canvas c{j.at("canvas").at("width").get<double>(), j.at("canvas").at("height").get<double>()};
        std::vector<SceneObject> objs;
        for (const auto& o : j.at("objects")) {
            SceneObject so;
            so.id = o.at("id").get<int>();
            so.name = o.value("name", "object" + std::to_string(so.id));
            so.box = {o.at("x").get<double>(), o.at("y").get<double>(), o.at("w").get<double>(),
                      o.at("h").get<double>()};
            so.layer = o.value("layer", 0);
            objs.push_back(std::move(so));
        }
        std::vector<SupportEdge> edges;
        for (const auto& e : j.at("support_edges")) {
            if (!e.is_array() || e.size() != 2) throw FormatError("support edge must be [upper, lower]");
            edges.push_back({e[0].get<int>(), e[1].get<int>()});
        }
        StackedScene s(c, std::move(objs), std::move(edges));
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("scene JSON: ") + e.what());
    }
}

StackedScene load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str());
}

}  // namespace kgqa
