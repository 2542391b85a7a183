// Regenerates the shipped synthetic fixture under data/fixtures/.
//
//   make_fixtures <output dir> [seed]
//
// Six street-scene classes in a 16-d space. rider/motor/bike sit close
// together, car/truck less so. Coordinate 15 is a shared "hue" offset that
// the gray sets lose; coordinates 12-14 carry fine texture that the 16 px
// rung loses.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dside/io.hpp"
#include "dside/serialize.hpp"
#include "dside/synthetic.hpp"

namespace fs = std::filesystem;
using dside::synthetic::Cluster;

namespace {

constexpr std::size_t kDim = 16;
constexpr std::size_t kPerClass = 24;

std::vector<Cluster> base_clusters() {
    struct Def {
        const char* name;
        std::vector<std::pair<std::size_t, double>> coords;
    };
    const std::vector<Def> defs = {
        {"car", {{0, 3.0}, {1, 1.2}, {12, 0.8}}},
        {"truck", {{0, 2.4}, {2, 2.0}, {13, 0.8}}},
        {"person", {{4, 3.0}, {5, 1.0}, {14, 0.8}}},
        {"rider", {{6, 2.5}, {7, 1.5}, {12, 1.2}}},
        {"motor", {{6, 2.0}, {8, 2.0}, {13, 1.2}}},
        {"bike", {{6, 1.5}, {9, 2.2}, {14, 1.2}}},
    };
    std::vector<Cluster> out;
    for (const auto& d : defs) {
        Cluster c;
        c.class_id = d.name;
        c.centroid.assign(kDim, 0.0);
        for (auto [k, v] : d.coords) c.centroid[k] = v;
        c.centroid[15] = 1.5;
        c.sigma = 0.45;
        c.count = kPerClass;
        out.push_back(std::move(c));
    }
    return out;
}

dside::EmbeddingSet make_set(int resolution, bool gray, std::uint64_t seed) {
    auto clusters = base_clusters();
    for (auto& c : clusters) {
        if (gray) c.centroid[15] = 0.0;
        if (resolution <= 16)
            for (std::size_t k = 12; k < 15; ++k) c.centroid[k] *= 0.1;
    }
    const std::string tag = std::string("fx-") + (gray ? "gray" : "color") + "-" + std::to_string(resolution);
    // One noise stream per resolution so color and gray share instances.
    auto set = dside::synthetic::gaussian_clusters(clusters, seed + static_cast<std::uint64_t>(resolution), tag,
                                                   "fx-space-v1");
    set.set_color_mode(gray ? "gray" : "color");
    set.set_resolution(resolution);
    return set;
}

nlohmann::ordered_json annotations(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<std::pair<const char*, std::pair<double, double>>> classes = {
        {"car", {0.08, 0.45}}, {"truck", {0.12, 0.6}}, {"person", {0.04, 0.3}},
        {"rider", {0.05, 0.3}}, {"motor", {0.05, 0.28}}, {"bike", {0.04, 0.25}}};
    nlohmann::ordered_json images = nlohmann::ordered_json::array();
    nlohmann::ordered_json anns = nlohmann::ordered_json::array();
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < classes.size(); ++c) cats.push_back({{"id", c + 1}, {"name", classes[c].first}});
    int ann_id = 1;
    for (int img = 1; img <= 12; ++img) {
        const int w = img % 2 ? 640 : 1024, h = img % 2 ? 480 : 768;
        images.push_back({{"id", img}, {"width", w}, {"height", h}, {"file_name", "frame" + std::to_string(img) + ".jpg"}});
        for (std::size_t c = 0; c < classes.size(); ++c) {
            std::uniform_real_distribution<double> scale(classes[c].second.first, classes[c].second.second);
            const double side = std::round(scale(rng) * w);
            const double other = std::round(side * 0.6);
            const bool tall = c == 2 || c == 3;
            const double bw = tall ? other : side, bh = tall ? side : other;
            std::uniform_real_distribution<double> px(0.0, w - bw), py(0.0, h - bh);
            anns.push_back({{"id", ann_id++},
                            {"image_id", img},
                            {"category_id", c + 1},
                            {"bbox", {std::round(px(rng)), std::round(py(rng)), bw, bh}}});
        }
    }
    // one box that runs off the right edge; readers must reject it
    anns.push_back({{"id", ann_id++}, {"image_id", 1}, {"category_id", 1}, {"bbox", {600, 10, 80, 40}}});
    return {{"images", images}, {"annotations", anns}, {"categories", cats}};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_fixtures <output dir> [seed]\n";
        return 2;
    }
    const fs::path dir = argv[1];
    const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20240611;
    fs::create_directories(dir);
    for (int res : {64, 32, 16})
        for (bool gray : {false, true}) {
            const auto set = make_set(res, gray, seed);
            dside::write_embeddings(set, dir / (set.config_tag() + ".semb"));
        }
    dside::write_text(dir / "annotations.json", annotations(seed).dump(1) + "\n");

    dside::ClassGrouping merge{"merge-riders", {}};
    for (const char* c : {"car", "truck", "person"}) merge.mapping[c] = c;
    for (const char* c : {"rider", "motor", "bike"}) merge.mapping[c] = "rider";
    dside::write_grouping(merge, dir / "merge-riders.json");

    dside::ClassGrouping vehicles{"vehicles-vs-people", {}};
    for (const char* c : {"car", "truck", "motor", "bike"}) vehicles.mapping[c] = "vehicle";
    for (const char* c : {"person", "rider"}) vehicles.mapping[c] = "person";
    dside::write_grouping(vehicles, dir / "vehicles-vs-people.json");

    dside::ClassGrouping no_truck{"drop-truck", {}};
    for (const char* c : {"car", "person", "rider", "motor", "bike"}) no_truck.mapping[c] = c;
    no_truck.mapping["truck"] = std::nullopt;
    dside::write_grouping(no_truck, dir / "drop-truck.json");

    dside::write_text(dir / "identity.json",
                      dside::to_json(dside::ClassGrouping::identity({"bike", "car", "motor", "person", "rider", "truck"}))
                              .dump(2) +
                          "\n");
    std::cout << "wrote fixture to " << dir << "\n";
    return 0;
}
