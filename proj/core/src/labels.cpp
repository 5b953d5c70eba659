#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "kgqa/error.hpp"
#include "kgqa/stack_sim.hpp"

namespace kgqa {

std::vector<LabelPlacement> place_labels(const StackedScene& scene, const std::vector<std::string>& texts,
                                         const LabelConfig& cfg) {
    if (texts.size() != scene.size()) {
        throw ArgumentError("got " + std::to_string(texts.size()) + " label texts for " +
                            std::to_string(scene.size()) + " objects");
    }
    const Canvas& c = scene.canvas();
    if (cfg.label_w <= 0 || cfg.label_h <= 0 || cfg.label_w > c.width || cfg.label_h > c.height) {
        throw ArgumentError("label box does not fit the canvas");
    }
    if (cfg.angle_step_deg <= 0 || cfg.angle_step_deg > 360) throw ArgumentError("angle step must be in (0, 360]");
    const double step = cfg.radius_step > 0 ? cfg.radius_step : std::hypot(cfg.label_w, cfg.label_h);
    const double max_r = cfg.max_radius > 0 ? cfg.max_radius : std::hypot(c.width, c.height);
    const int n_angles = static_cast<int>(std::ceil(360.0 / cfg.angle_step_deg - 1e-9));

    std::vector<LabelPlacement> out;
    out.reserve(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const SceneObject& obj = scene.objects()[i];
        const double cx = obj.box.cx();
        const double cy = obj.box.cy();
        bool placed = false;
        for (int ring = 1; !placed && ring * step <= max_r + 1e-9; ++ring) {
            const double r = ring * step;
            for (int a = 0; a < n_angles; ++a) {
                const double theta = a * cfg.angle_step_deg * std::numbers::pi / 180.0;
                const double ax = cx + r * std::cos(theta);
                const double ay = cy + r * std::sin(theta);
                const Box label{ax - cfg.label_w / 2, ay - cfg.label_h / 2, cfg.label_w, cfg.label_h};
                if (!label.inside(c.width, c.height)) continue;
                bool clear = true;
                for (const auto& o : scene.objects()) {
                    if (o.box.intersects(label)) {
                        clear = false;
                        break;
                    }
                }
                for (const auto& p : out) {
                    if (!clear) break;
                    if (p.label.intersects(label)) clear = false;
                }
                if (!clear) continue;
                LabelPlacement lp;
                lp.object_id = obj.id;
                lp.text = texts[i];
                lp.label = label;
                lp.anchor_x = ax;
                lp.anchor_y = ay;
                // Nearest point of the label box to the object center.
                lp.arrow_x0 = std::clamp(cx, label.x, label.x + label.w);
                lp.arrow_y0 = std::clamp(cy, label.y, label.y + label.h);
                lp.arrow_x1 = cx;
                lp.arrow_y1 = cy;
                out.push_back(std::move(lp));
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw PlacementError("no free label position for object " + std::to_string(obj.id) + " ('" + obj.name +
                                 "') within radius " + std::to_string(max_r));
        }
    }
    return out;
}

std::vector<LabelPlacement> place_labels(const StackedScene& scene, const LabelConfig& cfg) {
    std::vector<std::string> texts;
    for (const auto& o : scene.objects()) texts.push_back(o.name);
    return place_labels(scene, texts, cfg);
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const StackedScene& scene, const std::vector<LabelPlacement>& placements) {
    const Canvas& c = scene.canvas();
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(c.width) + "\" height=\"" + num(c.height) +
         "\" viewBox=\"0 0 " + num(c.width) + " " + num(c.height) + "\">\n";
    s += "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"7\" refY=\"4\" "
         "orient=\"auto\"><polygon points=\"0,0 8,4 0,8\" fill=\"#c0392b\"/></marker></defs>\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(c.width) + "\" height=\"" + num(c.height) + "\" fill=\"#ffffff\"/>\n";
    // Lower layers first so upper boxes paint over them.
    std::vector<const SceneObject*> order;
    for (const auto& o : scene.objects()) order.push_back(&o);
    std::stable_sort(order.begin(), order.end(),
                     [](const SceneObject* a, const SceneObject* b) { return a->layer < b->layer; });
    for (const auto* o : order) {
        const int shade = std::max(0, 220 - 30 * o->layer);
        char fill[32];
        std::snprintf(fill, sizeof fill, "#%02x%02x%02x", shade, shade, 255);
        s += "<rect class=\"object\" data-id=\"" + std::to_string(o->id) + "\" x=\"" + num(o->box.x) + "\" y=\"" +
             num(o->box.y) + "\" width=\"" + num(o->box.w) + "\" height=\"" + num(o->box.h) + "\" fill=\"" + fill +
             "\" stroke=\"#333333\"/>\n";
    }
    for (const auto& p : placements) {
        s += "<rect class=\"label\" x=\"" + num(p.label.x) + "\" y=\"" + num(p.label.y) + "\" width=\"" +
             num(p.label.w) + "\" height=\"" + num(p.label.h) + "\" fill=\"#fff8dc\" stroke=\"#999999\"/>\n";
        s += "<text x=\"" + num(p.label.cx()) + "\" y=\"" + num(p.label.cy()) +
             "\" font-size=\"11\" text-anchor=\"middle\" dominant-baseline=\"middle\">" + escape_xml(p.text) +
             "</text>\n";
        s += "<path d=\"M " + num(p.arrow_x0) + " " + num(p.arrow_y0) + " L " + num(p.arrow_x1) + " " +
             num(p.arrow_y1) + "\" stroke=\"#c0392b\" fill=\"none\" marker-end=\"url(#arrow)\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace kgqa
