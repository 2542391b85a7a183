#include "dside/attributes.hpp"

#include <algorithm>
#include <cmath>

#include "dside/errors.hpp"

namespace dside {

std::string BBoxAnnotation::invalid_reason() const {
    if (!(image_w > 0) || !(image_h > 0)) return "image size must be positive";
    if (!(w > 0) || !(h > 0)) return "box width and height must be positive";
    if (x < 0 || y < 0) return "box origin lies outside the image";
    if (x + w > image_w) return "box exceeds image width";
    if (y + h > image_h) return "box exceeds image height";
    return {};
}

double object_scale(const BBoxAnnotation& a) {
    if (auto why = a.invalid_reason(); !why.empty())
        throw InputError("annotation '" + a.instance_id + "': " + why);
    return std::max(a.w, a.h) / std::max(a.image_w, a.image_h);
}

std::int64_t receptive_field(int layers) {
    if (layers < 1) throw InputError("receptive field needs at least 1 layer");
    if (layers > 61) throw InputError("receptive field overflows for " + std::to_string(layers) + " layers");
    return (std::int64_t{1} << (layers + 1)) - 1;
}

int min_layers(std::int64_t b_max) {
    if (b_max < 1) throw InputError("b_max must be at least 1 pixel");
    // ⌈log2(b+1)⌉ in integers: bit width of b.
    int ceil_log2 = 0;
    while ((std::int64_t{1} << ceil_log2) < b_max + 1) ++ceil_log2;
    return std::max(1, ceil_log2 - 1);
}

std::int64_t pixels_at(double scale, int resolution) {
    if (resolution <= 0) throw InputError("resolution must be positive");
    const double px = scale * resolution;
    // Guard against 0.5 * 500 landing a hair above 250.
    return static_cast<std::int64_t>(std::ceil(px - 1e-9 * std::max(1.0, px)));
}

namespace {

struct Sample {
    double scale;
    std::int64_t pixels;
};

ScaleSummary summarize(std::vector<Sample> samples, std::size_t bins) {
    ScaleSummary s;
    s.count = samples.size();
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.scale < b.scale; });
    s.min_scale = samples.front().scale;
    s.max_scale = samples.back().scale;
    const std::size_t mid = samples.size() / 2;
    s.median_scale = samples.size() % 2 ? samples[mid].scale : (samples[mid - 1].scale + samples[mid].scale) / 2.0;
    for (const auto& x : samples) s.b_max = std::max(s.b_max, x.pixels);

    s.histogram.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        s.histogram[b].low = static_cast<double>(b) / bins;
        s.histogram[b].high = static_cast<double>(b + 1) / bins;
    }
    for (const auto& x : samples) {
        // left-closed bins, the last one also closed on the right
        auto b = static_cast<std::size_t>(x.scale * bins);
        s.histogram[std::min(b, bins - 1)].count++;
    }
    return s;
}

}  // namespace

ScaleStats scale_stats(std::span<const BBoxAnnotation> annotations, const ScaleOptions& options) {
    if (annotations.empty()) throw InputError("scale statistics need at least one annotation");
    if (options.bins == 0) throw InputError("histogram needs at least one bin");
    if (options.resolution && *options.resolution <= 0) throw InputError("resolution must be positive");

    std::vector<Sample> all;
    std::map<std::string, std::vector<Sample>> by_class;
    for (const auto& a : annotations) {
        std::string cls = a.class_id;
        if (options.grouping) {
            auto target = options.grouping->target(cls);
            if (!target) continue;
            cls = *target;
        }
        Sample s;
        s.scale = object_scale(a);
        s.pixels = options.resolution ? pixels_at(s.scale, *options.resolution)
                                      : static_cast<std::int64_t>(std::ceil(std::max(a.w, a.h)));
        all.push_back(s);
        by_class[cls].push_back(s);
    }
    if (all.empty()) throw InputError("grouping drops every annotation");

    ScaleStats out;
    out.resolution = options.resolution;
    out.overall = summarize(std::move(all), options.bins);
    for (auto& [cls, samples] : by_class) out.per_class.emplace(cls, summarize(std::move(samples), options.bins));
    return out;
}

}  // namespace dside
