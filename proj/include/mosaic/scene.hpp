#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mosaic {

// Error taxonomy shared by every module.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Canonical ordered palette. The first ten entries are the class labels;
/// Brown is the out-of-palette reference color and never a class.
enum class Color : std::uint8_t {
    Red = 0,
    Green,
    Blue,
    Yellow,
    Purple,
    Orange,
    Cyan,
    Gray,
    White,
    Black,
    Brown,
};

inline constexpr int kPaletteSize = 10;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

Rgb color_rgb(Color c);
std::string_view color_name(Color c);
/// Accepts the canonical upper-case name (case-insensitive). Throws ArgumentError.
Color color_from_name(std::string_view name);
/// Palette class index 0..9. Throws ArgumentError for Brown.
int color_index(Color c);
Color color_from_index(int index);

enum class Shape : std::uint8_t { Sphere, Cube };
std::string_view shape_name(Shape s);
Shape shape_from_name(std::string_view name);

enum class Task : std::uint8_t { Attribution, SpatialRelations, Counting };
enum class Variant : std::uint8_t { Base, Complex, Grid, Composition };

std::string_view task_name(Task t);
Task task_from_name(std::string_view name);
std::string_view variant_name(Variant v);
Variant variant_from_name(std::string_view name);

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// One object in canonical coordinates: unit square, y grows downward.
/// For cubes `radius` is the half-extent of the axis-aligned square.
struct SceneObject {
    Shape shape = Shape::Sphere;
    Color color = Color::Gray;
    Point center;
    double radius = 0.0;
    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Radius of the circle that encloses the object's footprint; used for
/// non-overlap tests so that squares never touch either.
double footprint_radius(const SceneObject& obj);

struct ConditionLabel {
    std::optional<int> count;
    std::optional<int> relation_sector;
    std::optional<Color> sphere_color;
    std::optional<Color> cube_color;
    std::optional<Color> object_color;
    friend bool operator==(const ConditionLabel&, const ConditionLabel&) = default;
};

/// Filesystem-safe key naming a condition, e.g. "count_3", "sector_7_RED",
/// "sphere_BLACK_cube_RED".
std::string condition_key(const ConditionLabel& label);

struct SceneSpec {
    std::vector<SceneObject> objects;
    Task task = Task::Counting;
    Variant variant = Variant::Base;
    ConditionLabel labels;
    std::uint64_t seed = 0;
};

inline constexpr double kPlacementMargin = 0.01;
inline constexpr int kDefaultMaxCount = 10;
inline constexpr int kMaxSupportedCount = 20;
inline constexpr int kSectorCount = 10;

/// Checks containment in the unit square and pairwise non-overlap with the
/// placement margin. Returns a description of the first violation, if any.
std::optional<std::string> check_scene_geometry(const SceneSpec& scene,
                                                double margin = kPlacementMargin);

// Angular sectors: sector s covers [36(s-1), 36(s-1)+18) degrees,
// counter-clockwise from the 3 o'clock axis.
struct SectorInterval {
    double lo_deg;
    double hi_deg;
};

SectorInterval sector_interval(int sector);
/// Normalizes theta into [0,360) and returns the sector, or nullopt in a gap.
std::optional<int> sector_of_angle(double theta_deg);

/// Angle of `target` seen from `origin`, in [0,360), using the on-screen
/// orientation (y axis flipped).
double angle_between(Point origin, Point target);
/// Unit direction on screen for an angle in degrees.
Point direction(double theta_deg);

/// Generalized diagonal index ((col - row) mod n) + 1 of the concept-pair grid.
int diagonal_index(int row, int col, int n);

}  // namespace mosaic
