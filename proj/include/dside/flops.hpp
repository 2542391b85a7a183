#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dside {

enum class ColorMode { color, gray };

const char* to_string(ColorMode mode);
ColorMode parse_color_mode(const std::string& text);

struct ConvLayerSpec {
    std::string name;
    int kernel = 3;
    int in_channels = 1;
    int out_channels = 1;
    int stride = 1;
    int padding = 0;
    bool has_bias = false;
    /// Channel groups; equal to in_channels for a depthwise conv.
    int groups = 1;
    /// Spatial downsample applied after the conv (max-pool). Its own
    /// operations are not counted.
    int pool = 1;

    bool operator==(const ConvLayerSpec&) const = default;
};

struct ModelSpec {
    std::string name;
    int input_w = 0;
    int input_h = 0;
    std::vector<ConvLayerSpec> layers;

    void validate() const;
    bool operator==(const ModelSpec&) const = default;
};

struct ConvResult {
    std::int64_t flops = 0;
    int out_w = 0;
    int out_h = 0;
};

struct LayerFlops {
    std::string name;
    std::int64_t flops = 0;
    int out_w = 0;
    int out_h = 0;
};

struct FlopsReport {
    std::string model;
    ColorMode mode = ColorMode::color;
    std::vector<LayerFlops> per_layer;  // for `mode`
    std::int64_t total = 0;             // for `mode`
    std::int64_t total_color = 0;
    std::int64_t total_gray = 0;
    std::int64_t layer1_color = 0;
    std::int64_t layer1_gray = 0;

    double gray_to_color_ratio() const {
        return static_cast<double>(total_gray) / static_cast<double>(total_color);
    }
};

/// out = ⌊(in + 2·pad − k)/stride⌋ + 1 per axis;
/// flops = out_h·out_w·out_ch·(k²·in_ch/groups + bias).
ConvResult conv_flops(const ConvLayerSpec& layer, int in_w, int in_h);

/// Gray mode rewrites the first layer to a single input channel; nothing
/// else changes.
FlopsReport model_flops(const ModelSpec& model, ColorMode mode);

/// Total FLOPs of `model` (color) on square inputs of each size.
std::vector<std::pair<int, std::int64_t>> resolution_sweep(const ModelSpec& model, const std::vector<int>& sizes);

/// Count / 1000 with a fixed number of decimals.
std::string format_kflops(std::int64_t flops, int decimals = 2);

}  // namespace dside
