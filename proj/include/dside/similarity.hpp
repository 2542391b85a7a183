#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dside/grouping.hpp"

namespace dside {

/// Instance embeddings for one dataset configuration. Vectors are stored
/// row-major as float32, the on-disk type.
class EmbeddingSet {
public:
    explicit EmbeddingSet(std::size_t dimension, std::string config_tag = {},
                          std::string space_id = {});

    /// Appends a record. Rejects a dimension mismatch, a zero-norm or
    /// non-finite vector and a duplicate instance id.
    void add(std::string instance_id, std::string class_id, std::span<const float> values);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return instance_ids_.size(); }
    bool empty() const noexcept { return instance_ids_.empty(); }

    const std::string& instance_id(std::size_t i) const { return instance_ids_.at(i); }
    const std::string& class_id(std::size_t i) const { return class_ids_.at(i); }
    std::span<const float> vector(std::size_t i) const;
    std::span<const float> data() const noexcept { return values_; }

    /// Distinct class ids, sorted.
    std::vector<std::string> classes() const;
    /// Record indices of one class in insertion order.
    std::vector<std::size_t> members(const std::string& class_id) const;
    bool has_class(const std::string& class_id) const;
    std::optional<std::size_t> find(const std::string& instance_id) const;

    const std::string& config_tag() const noexcept { return config_tag_; }
    const std::string& space_id() const noexcept { return space_id_; }
    void set_config_tag(std::string tag) { config_tag_ = std::move(tag); }
    void set_space_id(std::string id) { space_id_ = std::move(id); }

    // Extraction settings carried over from the manifest.
    const std::string& color_mode() const noexcept { return color_mode_; }
    int resolution() const noexcept { return resolution_; }
    const std::string& grouping_name() const noexcept { return grouping_name_; }
    void set_color_mode(std::string mode) { color_mode_ = std::move(mode); }
    void set_resolution(int px) { resolution_ = px; }
    void set_grouping_name(std::string name) { grouping_name_ = std::move(name); }

private:
    std::size_t dimension_;
    std::string config_tag_;
    std::string space_id_;
    std::string color_mode_ = "color";
    int resolution_ = 0;
    std::string grouping_name_ = "identity";
    std::vector<std::string> instance_ids_;
    std::vector<std::string> class_ids_;
    std::vector<float> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ClassSimilarityStats {
    std::string class_id;
    double s1 = 0.0;
    double sigma2 = 0.0;
    std::size_t pair_count = 0;
    std::size_t instance_count = 0;

    bool operator==(const ClassSimilarityStats&) const = default;
};

/// Symmetric K×K inter-class matrix. The diagonal is undefined and is
/// never stored.
class S2Matrix {
public:
    S2Matrix() = default;
    explicit S2Matrix(std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    /// nullopt on the diagonal.
    std::optional<double> at(std::size_t m, std::size_t n) const;
    void set(std::size_t m, std::size_t n, double value);

    bool operator==(const S2Matrix&) const = default;

private:
    std::size_t index(std::size_t m, std::size_t n) const;

    std::vector<std::string> labels_;
    std::vector<double> upper_;  // strict upper triangle, row-major
};

struct SimilarityReport {
    std::string config_tag;
    std::string grouping_name;
    std::vector<ClassSimilarityStats> per_class;
    /// Grouped classes with fewer than two instances (no S1 possible).
    std::vector<std::string> insufficient;
    S2Matrix s2;
    double s2_max = 0.0;
    double s2_mean = 0.0;
    /// Undefined when s2_mean <= 0.
    std::optional<double> delta_s2;
    std::pair<std::string, std::string> argmax_pair;

    const ClassSimilarityStats* stats_for(const std::string& class_id) const;
    std::size_t class_count() const noexcept { return s2.size(); }

    bool operator==(const SimilarityReport&) const = default;
};

/// Sufficient statistics of one class's unit-normalized embeddings. Every
/// cosine statistic used here is a function of these sums, so classes can be
/// merged by adding moments.
struct ClassMoments {
    std::size_t count = 0;
    std::vector<double> sum;      // Σ â
    double norm2_sum = 0.0;       // Σ ‖â‖²
    double norm4_sum = 0.0;       // Σ ‖â‖⁴
    std::vector<double> gram;     // Σ â âᵀ (d×d, upper triangle used), empty if not requested

    void merge(const ClassMoments& other);
};

/// Moments per grouped class. With `grouping` null every original class is
/// its own group; a non-null grouping must be valid for `set`.
std::map<std::string, ClassMoments> class_moments(const EmbeddingSet& set,
                                                  const ClassGrouping* grouping,
                                                  bool with_gram);

/// Mean pairwise cosine over all cross pairs of two disjoint instance groups.
double mean_cross_similarity(const ClassMoments& a, const ClassMoments& b);

/// (S1, σ²) of one group; requires count ≥ 2.
ClassSimilarityStats intra_stats(const std::string& class_id, const ClassMoments& m);

double cosine(std::span<const float> a, std::span<const float> b);

ClassSimilarityStats intra_class(const EmbeddingSet& set, const std::string& class_id);
double inter_class(const EmbeddingSet& set, const std::string& c1, const std::string& c2);
SimilarityReport similarity_report(const EmbeddingSet& set, const ClassGrouping& grouping);
/// Report over the set's own classes.
SimilarityReport similarity_report(const EmbeddingSet& set);

/// Builds the report's derived fields (max, mean, ΔS2, argmax) from a filled
/// matrix.
void summarize_s2(SimilarityReport& report);

double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace dside
