#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dside/grouping.hpp"

namespace dside {

/// One bounding box in pixels, top-left origin.
struct BBoxAnnotation {
    std::string instance_id;
    std::string class_id;
    std::string image_id;
    double x = 0, y = 0, w = 0, h = 0;
    double image_w = 0, image_h = 0;

    /// Empty when the box satisfies its invariants, otherwise the reason.
    std::string invalid_reason() const;
};

struct HistogramBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;

    bool operator==(const HistogramBin&) const = default;
};

struct ScaleSummary {
    std::size_t count = 0;
    double min_scale = 0.0;
    double max_scale = 0.0;
    double median_scale = 0.0;
    /// Longest box side in pixels at the effective resolution.
    std::int64_t b_max = 0;
    std::vector<HistogramBin> histogram;

    bool operator==(const ScaleSummary&) const = default;
};

struct ScaleStats {
    std::optional<int> resolution;  // longer side after uniform resize, if any
    ScaleSummary overall;
    std::map<std::string, ScaleSummary> per_class;

    bool operator==(const ScaleStats&) const = default;
};

struct ScaleOptions {
    const ClassGrouping* grouping = nullptr;
    /// Uniformly resize every image so its longer side equals this.
    std::optional<int> resolution;
    std::size_t bins = 20;
};

/// Longer box side over longer image side.
double object_scale(const BBoxAnnotation& a);

/// Receptive field side of `layers` stacked stride-1 3×3 convolutions.
std::int64_t receptive_field(int layers);

/// Smallest layer count whose receptive field covers a `b_max` pixel object,
/// never less than 1.
int min_layers(std::int64_t b_max);

/// Pixel size of an object of `scale` at longer-side `resolution`, rounded up.
std::int64_t pixels_at(double scale, int resolution);

ScaleStats scale_stats(std::span<const BBoxAnnotation> annotations, const ScaleOptions& options = {});

}  // namespace dside
