#include "mosaic/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace mosaic {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
        data[i] = fill.r;
        data[i + 1] = fill.g;
        data[i + 2] = fill.b;
    }
}

Rgb Image::at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
}

namespace {

void check_settings(const RenderSettings& s) {
    if (s.resolution < 1) throw ArgumentError("resolution must be positive");
    if (s.supersampling < 1) throw ArgumentError("supersampling must be at least 1");
    if (static_cast<long>(s.resolution) * s.supersampling > kMaxSuperResolution) {
        throw ArgumentError("resolution x supersampling exceeds 4096");
    }
}

struct Shaded {
    bool inside;
    double r, g, b;
};

// Color of one subsample at canonical position (u, v).
Shaded shade(const SceneObject& obj, double u, double v, const RenderSettings& s) {
    const Rgb base = color_rgb(obj.color);
    const double dx = u - obj.center.x;
    const double dy = v - obj.center.y;
    if (obj.shape == Shape::Sphere) {
        const double q = (dx * dx + dy * dy) / (obj.radius * obj.radius);
        if (q >= 1.0) return {false, 0, 0, 0};
        const double k = s.ambient + s.diffuse * std::sqrt(std::max(0.0, 1.0 - q));
        return {true, base.r * k, base.g * k, base.b * k};
    }
    const double ax = std::abs(dx);
    const double ay = std::abs(dy);
    if (ax >= obj.radius || ay >= obj.radius) return {false, 0, 0, 0};
    const double k = (obj.radius - std::max(ax, ay) < 1.0 / s.resolution) ? s.border_shade : 1.0;
    return {true, base.r * k, base.g * k, base.b * k};
}

struct SubsampleBox {
    int x0, x1, y0, y1;  // inclusive subsample index ranges
};

SubsampleBox box_of(const SceneObject& obj, int super) {
    const double ext = obj.radius;
    auto lo = [&](double c) { return std::max(0, static_cast<int>(std::floor((c - ext) * super - 0.5))); };
    auto hi = [&](double c) {
        return std::min(super - 1, static_cast<int>(std::ceil((c + ext) * super - 0.5)));
    };
    return {lo(obj.center.x), hi(obj.center.x), lo(obj.center.y), hi(obj.center.y)};
}

}  // namespace

Image render_scene(const SceneSpec& scene, const RenderSettings& settings) {
    check_settings(settings);
    const int res = settings.resolution;
    const int ss = settings.supersampling;
    const int super = res * ss;
    const double per_pixel = static_cast<double>(ss) * ss;
    const Rgb bg = settings.background;

    // Accumulated per-pixel deviation from the background.
    std::vector<double> acc(static_cast<std::size_t>(res) * res * 3, 0.0);
    for (const auto& obj : scene.objects) {
        const SubsampleBox box = box_of(obj, super);
        for (int ky = box.y0; ky <= box.y1; ++ky) {
            const double v = (ky + 0.5) / super;
            for (int kx = box.x0; kx <= box.x1; ++kx) {
                const double u = (kx + 0.5) / super;
                const Shaded c = shade(obj, u, v, settings);
                if (!c.inside) continue;
                const auto i = (static_cast<std::size_t>(ky / ss) * res + kx / ss) * 3;
                acc[i] += c.r - bg.r;
                acc[i + 1] += c.g - bg.g;
                acc[i + 2] += c.b - bg.b;
            }
        }
    }

    Image img(res, res, bg);
    auto to_byte = [](double base, double delta, double n) {
        const double v = std::round(base + delta / n);
        return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    };
    for (std::size_t p = 0; p < acc.size(); p += 3) {
        img.data[p] = to_byte(bg.r, acc[p], per_pixel);
        img.data[p + 1] = to_byte(bg.g, acc[p + 1], per_pixel);
        img.data[p + 2] = to_byte(bg.b, acc[p + 2], per_pixel);
    }
    return img;
}

double object_coverage(const SceneObject& obj, const RenderSettings& settings) {
    check_settings(settings);
    const int super = settings.resolution * settings.supersampling;
    const SubsampleBox box = box_of(obj, super);
    long covered = 0;
    for (int ky = box.y0; ky <= box.y1; ++ky) {
        for (int kx = box.x0; kx <= box.x1; ++kx) {
            if (shade(obj, (kx + 0.5) / super, (ky + 0.5) / super, settings).inside) ++covered;
        }
    }
    return static_cast<double>(covered) / (static_cast<double>(settings.supersampling) * settings.supersampling);
}

DerivedLabels measure_scene(const SceneSpec& scene) {
    DerivedLabels out;
    for (const auto& o : scene.objects) {
        (o.shape == Shape::Sphere ? out.spheres : out.cubes) += 1;
        out.colors.push_back(o.color);
    }
    if (scene.task != Task::SpatialRelations) return out;

    const SceneObject* reference = nullptr;
    const SceneObject* target = nullptr;
    for (const auto& o : scene.objects) {
        if (o.color == Color::Brown) {
            if (reference) throw StructuralError("relation scene has more than one BROWN object");
            reference = &o;
        } else if (!target) {
            target = &o;
        }
    }
    if (!reference) throw StructuralError("relation scene has no BROWN reference object");
    if (!target) throw StructuralError("relation scene has no target object");
    out.target_angle_deg = angle_between(reference->center, target->center);
    out.sector = sector_of_angle(*out.target_angle_deg);
    return out;
}

namespace {

std::optional<Color> common_color(const SceneSpec& scene, std::optional<Shape> shape) {
    std::optional<Color> c;
    for (const auto& o : scene.objects) {
        if (shape && o.shape != *shape) continue;
        if (c && *c != o.color) throw StructuralError("objects of one identity disagree on color");
        c = o.color;
    }
    return c;
}

}  // namespace

ConditionLabel derive_label(const SceneSpec& scene) {
    ConditionLabel label;
    switch (scene.task) {
        case Task::Attribution:
            label.sphere_color = common_color(scene, Shape::Sphere);
            label.cube_color = common_color(scene, Shape::Cube);
            break;
        case Task::SpatialRelations: {
            const DerivedLabels m = measure_scene(scene);
            label.relation_sector = m.sector;
            if (scene.variant == Variant::Composition) {
                for (const auto& o : scene.objects) {
                    if (o.color != Color::Brown) {
                        label.object_color = o.color;
                        break;
                    }
                }
            }
            break;
        }
        case Task::Counting:
            label.count = static_cast<int>(std::count_if(scene.objects.begin(), scene.objects.end(),
                                                         [](const auto& o) { return o.shape == Shape::Sphere; }));
            if (scene.variant == Variant::Composition) label.object_color = common_color(scene, std::nullopt);
            break;
    }
    return label;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    png_image info{};
    info.version = PNG_IMAGE_VERSION;
    info.width = static_cast<png_uint_32>(image.width);
    info.height = static_cast<png_uint_32>(image.height);
    info.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(info, size, 0, image.data.data(), 0, nullptr)) {
        throw std::runtime_error("png sizing failed: " + std::string(info.message));
    }
    std::vector<std::uint8_t> buffer(size);
    if (!png_image_write_to_memory(&info, buffer.data(), &size, 0, image.data.data(), 0, nullptr)) {
        throw std::runtime_error("png encoding failed: " + std::string(info.message));
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    png_image info{};
    info.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&info, path.c_str())) {
        throw std::runtime_error("cannot read PNG " + path.string() + ": " + info.message);
    }
    info.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(info.width), static_cast<int>(info.height));
    if (!png_image_finish_read(&info, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&info);
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + info.message);
    }
    return img;
}

Image downsample(const Image& image, int target_size) {
    if (target_size <= 0 || image.width != image.height || image.width % target_size != 0) {
        throw ArgumentError("cannot downsample " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " to " + std::to_string(target_size));
    }
    const int f = image.width / target_size;
    if (f == 1) return image;
    Image out(target_size, target_size);
    const int area = f * f;
    for (int y = 0; y < target_size; ++y) {
        for (int x = 0; x < target_size; ++x) {
            int sum[3] = {0, 0, 0};
            for (int dy = 0; dy < f; ++dy) {
                for (int dx = 0; dx < f; ++dx) {
                    const auto i = (static_cast<std::size_t>(y * f + dy) * image.width + (x * f + dx)) * 3;
                    for (int c = 0; c < 3; ++c) sum[c] += image.data[i + c];
                }
            }
            out.set(x, y, {static_cast<std::uint8_t>((sum[0] + area / 2) / area),
                           static_cast<std::uint8_t>((sum[1] + area / 2) / area),
                           static_cast<std::uint8_t>((sum[2] + area / 2) / area)});
        }
    }
    return out;
}

}  // namespace mosaic
