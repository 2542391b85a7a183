#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dside/similarity.hpp"

namespace dside::synthetic {

struct Cluster {
    std::string class_id;
    std::vector<double> centroid;
    double sigma = 1.0;  // isotropic per-coordinate standard deviation
    std::size_t count = 0;
};

/// Isotropic Gaussian samples around each centroid. Instance ids are
/// "<class>-<index>". Zero vectors are redrawn.
EmbeddingSet gaussian_clusters(const std::vector<Cluster>& clusters, std::uint64_t seed,
                               std::string config_tag = "synthetic", std::string space_id = "synthetic");

/// `classes` clusters in `dim` dimensions whose centroids sit at
/// base + separation·u_k, where base points along the all-ones direction
/// with norm `base_norm` and u_k is the unit part of e_k orthogonal to it.
/// Expected centroid cosine falls strictly with separation.
EmbeddingSet separated_clusters(std::size_t classes, std::size_t dim, double separation, std::size_t per_class,
                                std::uint64_t seed, double sigma = 1.0, double base_norm = 4.0);

/// Uniform random directions, classes of random size in [min_size, max_size].
EmbeddingSet random_set(std::size_t classes, std::size_t dim, std::size_t min_size, std::size_t max_size,
                        std::uint64_t seed);

}  // namespace dside::synthetic
