#include "mosaic/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace mosaic {

namespace {

struct ColorEntry {
    Color color;
    std::string_view name;
    Rgb rgb;
};

constexpr std::array<ColorEntry, 11> kColors{{
    {Color::Red, "RED", {220, 50, 47}},
    {Color::Green, "GREEN", {40, 160, 60}},
    {Color::Blue, "BLUE", {30, 90, 220}},
    {Color::Yellow, "YELLOW", {235, 210, 40}},
    {Color::Purple, "PURPLE", {130, 60, 180}},
    {Color::Orange, "ORANGE", {240, 140, 30}},
    {Color::Cyan, "CYAN", {40, 200, 210}},
    {Color::Gray, "GRAY", {128, 128, 128}},
    {Color::White, "WHITE", {245, 245, 245}},
    {Color::Black, "BLACK", {25, 25, 25}},
    {Color::Brown, "BROWN", {120, 80, 40}},
}};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

Rgb color_rgb(Color c) { return kColors.at(static_cast<std::size_t>(c)).rgb; }

std::string_view color_name(Color c) { return kColors.at(static_cast<std::size_t>(c)).name; }

Color color_from_name(std::string_view name) {
    for (const auto& e : kColors) {
        if (iequals(e.name, name)) return e.color;
    }
    throw ArgumentError("unknown color '" + std::string(name) + "'");
}

int color_index(Color c) {
    if (c == Color::Brown) throw ArgumentError("BROWN is not a palette class");
    return static_cast<int>(c);
}

Color color_from_index(int index) {
    if (index < 0 || index >= kPaletteSize) {
        throw ArgumentError("color index out of range: " + std::to_string(index));
    }
    return static_cast<Color>(index);
}

std::string_view shape_name(Shape s) { return s == Shape::Sphere ? "sphere" : "cube"; }

Shape shape_from_name(std::string_view name) {
    if (iequals(name, "sphere")) return Shape::Sphere;
    if (iequals(name, "cube")) return Shape::Cube;
    throw ArgumentError("unknown shape '" + std::string(name) + "'");
}

std::string_view task_name(Task t) {
    switch (t) {
        case Task::Attribution: return "attribution";
        case Task::SpatialRelations: return "spatial_relations";
        case Task::Counting: return "counting";
    }
    return "?";
}

Task task_from_name(std::string_view name) {
    if (iequals(name, "attribution")) return Task::Attribution;
    if (iequals(name, "spatial_relations") || iequals(name, "relations")) return Task::SpatialRelations;
    if (iequals(name, "counting")) return Task::Counting;
    throw ArgumentError("unknown task '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::Base: return "base";
        case Variant::Complex: return "complex";
        case Variant::Grid: return "grid";
        case Variant::Composition: return "composition";
    }
    return "?";
}

Variant variant_from_name(std::string_view name) {
    if (iequals(name, "base")) return Variant::Base;
    if (iequals(name, "complex")) return Variant::Complex;
    if (iequals(name, "grid")) return Variant::Grid;
    if (iequals(name, "composition")) return Variant::Composition;
    throw ArgumentError("unknown variant '" + std::string(name) + "'");
}

double footprint_radius(const SceneObject& obj) {
    return obj.shape == Shape::Cube ? obj.radius * std::numbers::sqrt2 : obj.radius;
}

std::string condition_key(const ConditionLabel& label) {
    std::string key;
    auto append = [&key](std::string_view part) {
        if (!key.empty()) key += '_';
        key += part;
    };
    if (label.count) append("count_" + std::to_string(*label.count));
    if (label.relation_sector) append("sector_" + std::to_string(*label.relation_sector));
    if (label.sphere_color) append("sphere_" + std::string(color_name(*label.sphere_color)));
    if (label.cube_color) append("cube_" + std::string(color_name(*label.cube_color)));
    if (label.object_color) append(color_name(*label.object_color));
    return key;
}

std::optional<std::string> check_scene_geometry(const SceneSpec& scene, double margin) {
    const auto& objs = scene.objects;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        const auto& o = objs[i];
        if (!(o.radius > 0.0)) return "object " + std::to_string(i) + " has non-positive radius";
        if (o.center.x < o.radius || o.center.x > 1.0 - o.radius || o.center.y < o.radius ||
            o.center.y > 1.0 - o.radius) {
            return "object " + std::to_string(i) + " leaves the canvas";
        }
        for (std::size_t j = i + 1; j < objs.size(); ++j) {
            const double d = std::hypot(o.center.x - objs[j].center.x, o.center.y - objs[j].center.y);
            if (d < footprint_radius(o) + footprint_radius(objs[j]) + margin) {
                return "objects " + std::to_string(i) + " and " + std::to_string(j) + " overlap";
            }
        }
    }
    return std::nullopt;
}

SectorInterval sector_interval(int sector) {
    if (sector < 1 || sector > kSectorCount) {
        throw ArgumentError("sector out of range 1..10: " + std::to_string(sector));
    }
    const double lo = 36.0 * (sector - 1);
    return {lo, lo + 18.0};
}

std::optional<int> sector_of_angle(double theta_deg) {
    if (!std::isfinite(theta_deg)) return std::nullopt;
    double t = std::fmod(theta_deg, 360.0);
    if (t < 0.0) t += 360.0;
    if (t >= 360.0) t = 0.0;
    int s = static_cast<int>(std::floor(t / 36.0)) + 1;
    // Interval bounds are exact integers, so compare against them directly.
    while (s > 1 && t < 36.0 * (s - 1)) --s;
    while (s < kSectorCount && t >= 36.0 * s) ++s;
    const double lo = 36.0 * (s - 1);
    if (t >= lo && t < lo + 18.0) return s;
    return std::nullopt;
}

double angle_between(Point origin, Point target) {
    const double dx = target.x - origin.x;
    const double dy = origin.y - target.y;
    double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    return deg;
}

Point direction(double theta_deg) {
    const double rad = theta_deg * std::numbers::pi / 180.0;
    return {std::cos(rad), -std::sin(rad)};
}

int diagonal_index(int row, int col, int n) {
    if (n <= 0 || row < 0 || row >= n || col < 0 || col >= n) {
        throw ArgumentError("diagonal_index out of range");
    }
    return ((col - row) % n + n) % n + 1;
}

}  // namespace mosaic
