#include "dside/flops.hpp"

#include <cstdio>

#include "dside/errors.hpp"

namespace dside {

const char* to_string(ColorMode mode) { return mode == ColorMode::gray ? "gray" : "color"; }

ColorMode parse_color_mode(const std::string& text) {
    if (text == "color") return ColorMode::color;
    if (text == "gray" || text == "grey" || text == "grayscale") return ColorMode::gray;
    throw InputError("unknown color mode '" + text + "' (expected color or gray)");
}

void ModelSpec::validate() const {
    if (layers.empty()) throw InputError("model '" + name + "' has no layers");
    if (input_w < 1 || input_h < 1) throw InputError("model '" + name + "' has a non-positive input size");
    const int first = layers.front().in_channels;
    if (first != 1 && first != 3)
        throw InputError("model '" + name + "' first layer must take 1 or 3 channels, got " + std::to_string(first));
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const std::string where = "layer '" + l.name + "' of model '" + name + "'";
        if (i > 0 && l.in_channels != layers[i - 1].out_channels)
            throw InputError(where + ": takes " + std::to_string(l.in_channels) + " channels but the previous layer gives " +
                             std::to_string(layers[i - 1].out_channels));
        if (l.kernel < 1 || l.stride < 1 || l.pool < 1) throw InputError(where + ": kernel, stride and pool must be >= 1");
        if (l.in_channels < 1 || l.out_channels < 1 || l.groups < 1)
            throw InputError(where + ": channel and group counts must be >= 1");
        if (l.padding < 0) throw InputError(where + ": negative padding");
        if (l.in_channels % l.groups || l.out_channels % l.groups)
            throw InputError(where + ": channels not divisible by groups");
    }
}

ConvResult conv_flops(const ConvLayerSpec& layer, int in_w, int in_h) {
    const int pw = in_w + 2 * layer.padding, ph = in_h + 2 * layer.padding;
    if (layer.kernel > pw || layer.kernel > ph)
        throw InputError("layer '" + layer.name + "': kernel " + std::to_string(layer.kernel) +
                         " larger than padded input " + std::to_string(pw) + "x" + std::to_string(ph));
    if (layer.stride < 1 || layer.groups < 1 || layer.in_channels % layer.groups)
        throw InputError("layer '" + layer.name + "': invalid stride or groups");
    ConvResult r;
    r.out_w = (pw - layer.kernel) / layer.stride + 1;
    r.out_h = (ph - layer.kernel) / layer.stride + 1;
    const std::int64_t per_output = std::int64_t{layer.kernel} * layer.kernel * (layer.in_channels / layer.groups) +
                                    (layer.has_bias ? 1 : 0);
    r.flops = std::int64_t{r.out_w} * r.out_h * layer.out_channels * per_output;
    return r;
}

namespace {

std::vector<LayerFlops> chain(const ModelSpec& model, int first_in_channels) {
    std::vector<LayerFlops> out;
    int w = model.input_w, h = model.input_h;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        ConvLayerSpec layer = model.layers[i];
        if (i == 0) {
            if (layer.groups == layer.in_channels) layer.groups = first_in_channels;
            layer.in_channels = first_in_channels;
        }
        const auto r = conv_flops(layer, w, h);
        w = r.out_w / layer.pool;
        h = r.out_h / layer.pool;
        if (w < 1 || h < 1) throw InputError("layer '" + layer.name + "': pooling collapses the feature map");
        out.push_back({layer.name, r.flops, r.out_w, r.out_h});
    }
    return out;
}

std::int64_t sum(const std::vector<LayerFlops>& layers) {
    std::int64_t t = 0;
    for (const auto& l : layers) t += l.flops;
    return t;
}

}  // namespace

FlopsReport model_flops(const ModelSpec& model, ColorMode mode) {
    model.validate();
    const auto color = chain(model, 3);
    const auto gray = chain(model, 1);
    FlopsReport r;
    r.model = model.name;
    r.mode = mode;
    r.total_color = sum(color);
    r.total_gray = sum(gray);
    r.layer1_color = color.front().flops;
    r.layer1_gray = gray.front().flops;
    r.per_layer = mode == ColorMode::gray ? gray : color;
    r.total = mode == ColorMode::gray ? r.total_gray : r.total_color;
    return r;
}

std::vector<std::pair<int, std::int64_t>> resolution_sweep(const ModelSpec& model, const std::vector<int>& sizes) {
    std::vector<std::pair<int, std::int64_t>> out;
    for (int s : sizes) {
        if (s < 1) throw InputError("sweep sizes must be positive");
        ModelSpec m = model;
        m.input_w = m.input_h = s;
        out.emplace_back(s, model_flops(m, ColorMode::color).total);
    }
    return out;
}

std::string format_kflops(std::int64_t flops, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, static_cast<double>(flops) / 1000.0);
    return buf;
}

}  // namespace dside
