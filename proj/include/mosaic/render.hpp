#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mosaic/scene.hpp"

namespace mosaic {

/// Row-major 8-bit RGB image.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, Rgb fill = {});

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr Rgb kBackground{200, 198, 195};

struct RenderSettings {
    int resolution = 128;
    int supersampling = 4;
    Rgb background = kBackground;
    double ambient = 0.55;   // sphere rim intensity
    double diffuse = 0.45;   // added at the disc center
    double border_shade = 0.6;
};

inline constexpr int kMaxSuperResolution = 4096;

/// Pure function of (scene, settings); identical bytes on every run and thread.
Image render_scene(const SceneSpec& scene, const RenderSettings& settings = {});

/// Sum over output pixels of the fraction of subsamples covered by `obj`.
double object_coverage(const SceneObject& obj, const RenderSettings& settings = {});

struct DerivedLabels {
    int spheres = 0;
    int cubes = 0;
    std::vector<Color> colors;
    std::optional<double> target_angle_deg;
    std::optional<int> sector;
};

/// Measures ground truth from scene geometry. For relation scenes the
/// reference is the unique BROWN object and the target the first other object.
DerivedLabels measure_scene(const SceneSpec& scene);

/// Re-derives the condition label of a scene from its geometry and objects,
/// using the fields that (task, variant) requires.
ConditionLabel derive_label(const SceneSpec& scene);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Area-average downsampling by an integer factor (dimensions must divide).
Image downsample(const Image& image, int target_size);

}  // namespace mosaic
