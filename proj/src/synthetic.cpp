#include "dside/synthetic.hpp"

#include <cmath>
#include <random>

#include "dside/errors.hpp"

namespace dside::synthetic {

EmbeddingSet gaussian_clusters(const std::vector<Cluster>& clusters, std::uint64_t seed, std::string config_tag,
                               std::string space_id) {
    if (clusters.empty()) throw InputError("no clusters requested");
    const std::size_t dim = clusters.front().centroid.size();
    EmbeddingSet set(dim, std::move(config_tag), std::move(space_id));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<float> v(dim);
    for (const auto& c : clusters) {
        if (c.centroid.size() != dim) throw InputError("cluster centroids differ in dimension");
        for (std::size_t i = 0; i < c.count; ++i) {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    v[k] = static_cast<float>(c.centroid[k] + c.sigma * normal(rng));
                    norm2 += static_cast<double>(v[k]) * v[k];
                }
            } while (norm2 == 0.0);
            set.add(c.class_id + "-" + std::to_string(i), c.class_id, v);
        }
    }
    return set;
}

EmbeddingSet separated_clusters(std::size_t classes, std::size_t dim, double separation, std::size_t per_class,
                                std::uint64_t seed, double sigma, double base_norm) {
    if (classes > dim) throw InputError("need at least one dimension per class");
    std::vector<Cluster> clusters;
    if (dim < 2) throw InputError("need at least two dimensions");
    const double d = static_cast<double>(dim);
    const double base = base_norm / std::sqrt(d);
    // offset along e_k minus its all-ones component, so separating classes
    // never moves them along the shared base direction
    const double unit = 1.0 / std::sqrt(1.0 - 1.0 / d);
    for (std::size_t k = 0; k < classes; ++k) {
        Cluster c;
        c.class_id = "c" + std::to_string(k);
        c.centroid.assign(dim, base - separation * unit / d);
        c.centroid[k] += separation * unit;
        c.sigma = sigma;
        c.count = per_class;
        clusters.push_back(std::move(c));
    }
    return gaussian_clusters(clusters, seed);
}

EmbeddingSet random_set(std::size_t classes, std::size_t dim, std::size_t min_size, std::size_t max_size,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(min_size, max_size);
    std::normal_distribution<double> normal(0.0, 1.0);
    EmbeddingSet set(dim, "random", "random");
    std::vector<float> v(dim);
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t n = size(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (auto& x : v) {
                    x = static_cast<float>(normal(rng));
                    norm2 += static_cast<double>(x) * x;
                }
            } while (norm2 == 0.0);
            set.add("k" + std::to_string(c) + "-" + std::to_string(i), "k" + std::to_string(c), v);
        }
    }
    return set;
}

}  // namespace dside::synthetic
