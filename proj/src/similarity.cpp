#include "dside/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dside/errors.hpp"

namespace dside {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

double squared_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return s;
}

// The cosine kernel enters only here: everything downstream works on
// unit-normalized vectors and their dot products.
void unit_normalize(std::span<const float> v, std::vector<double>& out) {
    const double inv = 1.0 / std::sqrt(squared_norm(v));
    out.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void accumulate(ClassMoments& m, std::span<const double> unit, bool with_gram) {
    const std::size_t d = unit.size();
    if (m.sum.empty()) {
        m.sum.assign(d, 0.0);
        if (with_gram) m.gram.assign(d * d, 0.0);
    }
    ++m.count;
    for (std::size_t i = 0; i < d; ++i) m.sum[i] += unit[i];
    const double n2 = dot(unit, unit);
    m.norm2_sum += n2;
    m.norm4_sum += n2 * n2;
    if (!with_gram) return;
    for (std::size_t i = 0; i < d; ++i) {
        const double ui = unit[i];
        double* row = m.gram.data() + i * d;
        for (std::size_t j = i; j < d; ++j) row[j] += ui * unit[j];
    }
}

double gram_frobenius2(const ClassMoments& m) {
    const std::size_t d = m.sum.size();
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = m.gram.data() + i * d;
        diag += row[i] * row[i];
        for (std::size_t j = i + 1; j < d; ++j) off += row[j] * row[j];
    }
    return diag + 2.0 * off;
}

}  // namespace

// ---- EmbeddingSet ----------------------------------------------------------

EmbeddingSet::EmbeddingSet(std::size_t dimension, std::string config_tag, std::string space_id)
    : dimension_(dimension), config_tag_(std::move(config_tag)), space_id_(std::move(space_id)) {
    if (dimension_ == 0) throw InputError("embedding dimension must be at least 1");
}

void EmbeddingSet::add(std::string instance_id, std::string class_id, std::span<const float> values) {
    if (values.size() != dimension_)
        throw InputError("instance '" + instance_id + "' has dimension " +
                         std::to_string(values.size()) + ", expected " + std::to_string(dimension_));
    for (float x : values)
        if (!std::isfinite(x)) throw InputError("instance '" + instance_id + "' has a non-finite value");
    if (!(squared_norm(values) > 0.0))
        throw InputError("instance '" + instance_id + "' is a zero vector");
    if (class_id.empty()) throw InputError("instance '" + instance_id + "' has an empty class id");
    if (index_.count(instance_id)) throw InputError("duplicate instance id '" + instance_id + "'");
    index_.emplace(instance_id, instance_ids_.size());
    instance_ids_.push_back(std::move(instance_id));
    class_ids_.push_back(std::move(class_id));
    values_.insert(values_.end(), values.begin(), values.end());
}

std::span<const float> EmbeddingSet::vector(std::size_t i) const {
    if (i >= size()) throw std::out_of_range("embedding index out of range");
    return std::span<const float>(values_).subspan(i * dimension_, dimension_);
}

std::vector<std::string> EmbeddingSet::classes() const {
    std::set<std::string> s(class_ids_.begin(), class_ids_.end());
    return {s.begin(), s.end()};
}

std::vector<std::size_t> EmbeddingSet::members(const std::string& class_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < class_ids_.size(); ++i)
        if (class_ids_[i] == class_id) out.push_back(i);
    return out;
}

bool EmbeddingSet::has_class(const std::string& class_id) const {
    return std::find(class_ids_.begin(), class_ids_.end(), class_id) != class_ids_.end();
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& instance_id) const {
    auto it = index_.find(instance_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

// ---- S2Matrix --------------------------------------------------------------

S2Matrix::S2Matrix(std::vector<std::string> labels) : labels_(std::move(labels)) {
    const std::size_t k = labels_.size();
    upper_.assign(k * (k - (k > 0 ? 1 : 0)) / 2, std::numeric_limits<double>::quiet_NaN());
}

std::size_t S2Matrix::index(std::size_t m, std::size_t n) const {
    if (m > n) std::swap(m, n);
    const std::size_t k = labels_.size();
    // offset of row m in the strict upper triangle
    return m * (2 * k - m - 1) / 2 + (n - m - 1);
}

std::optional<double> S2Matrix::at(std::size_t m, std::size_t n) const {
    if (m >= size() || n >= size()) throw std::out_of_range("S2 matrix index out of range");
    if (m == n) return std::nullopt;
    return upper_[index(m, n)];
}

void S2Matrix::set(std::size_t m, std::size_t n, double value) {
    if (m >= size() || n >= size()) throw std::out_of_range("S2 matrix index out of range");
    if (m == n) throw InputError("S2 matrix diagonal is undefined");
    upper_[index(m, n)] = value;
}

// ---- moments ---------------------------------------------------------------

void ClassMoments::merge(const ClassMoments& other) {
    if (other.count == 0) return;
    if (count == 0) {
        *this = other;
        return;
    }
    if (sum.size() != other.sum.size()) throw InputError("cannot merge moments of different dimension");
    count += other.count;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other.sum[i];
    norm2_sum += other.norm2_sum;
    norm4_sum += other.norm4_sum;
    if (gram.empty() || other.gram.empty()) {
        gram.clear();
    } else {
        for (std::size_t i = 0; i < gram.size(); ++i) gram[i] += other.gram[i];
    }
}

std::map<std::string, ClassMoments> class_moments(const EmbeddingSet& set, const ClassGrouping* grouping,
                                                  bool with_gram) {
    if (grouping) grouping->validate_against(set.classes());
    std::map<std::string, ClassMoments> out;
    std::vector<double> unit;
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::string key = set.class_id(i);
        if (grouping) {
            auto target = grouping->target(key);
            if (!target) continue;
            key = *target;
        }
        unit_normalize(set.vector(i), unit);
        accumulate(out[key], unit, with_gram);
    }
    return out;
}

double mean_cross_similarity(const ClassMoments& a, const ClassMoments& b) {
    if (a.count == 0 || b.count == 0) throw InputError("inter-class similarity needs nonempty classes");
    if (a.sum.size() != b.sum.size()) throw InputError("inter-class similarity across dimensions");
    const double total = dot(a.sum, b.sum);
    return clamp_unit(total / (static_cast<double>(a.count) * static_cast<double>(b.count)));
}

ClassSimilarityStats intra_stats(const std::string& class_id, const ClassMoments& m) {
    if (m.count < 2)
        throw InsufficientDataError(class_id, "class '" + class_id + "' has " + std::to_string(m.count) +
                                                  " instance(s); intra-class similarity needs at least 2");
    const double n = static_cast<double>(m.count);
    const double pairs = n * (n - 1.0) / 2.0;
    // Σ_{i<j} âi·âj = (‖Σâ‖² − Σ‖â‖²) / 2
    const double sum_cos = (dot(m.sum, m.sum) - m.norm2_sum) / 2.0;
    ClassSimilarityStats s;
    s.class_id = class_id;
    s.instance_count = m.count;
    s.pair_count = m.count * (m.count - 1) / 2;
    s.s1 = clamp_unit(sum_cos / pairs);
    if (!m.gram.empty()) {
        // Σ_{i<j} (âi·âj)² = (‖Σ â âᵀ‖_F² − Σ‖â‖⁴) / 2
        const double sum_cos2 = (gram_frobenius2(m) - m.norm4_sum) / 2.0;
        const double mean = sum_cos / pairs;
        s.sigma2 = std::clamp(sum_cos2 / pairs - mean * mean, 0.0, 4.0);
    }
    return s;
}

// ---- operations ------------------------------------------------------------

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw InputError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    const double na = squared_norm(a), nb = squared_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw InputError("cosine: zero-norm vector");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<double>(a[i]) * b[i];
    return clamp_unit(d / (std::sqrt(na) * std::sqrt(nb)));
}

namespace {

ClassMoments single_class(const EmbeddingSet& set, const std::string& class_id, bool with_gram) {
    ClassMoments m;
    std::vector<double> unit;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set.class_id(i) != class_id) continue;
        unit_normalize(set.vector(i), unit);
        accumulate(m, unit, with_gram);
    }
    return m;
}

}  // namespace

ClassSimilarityStats intra_class(const EmbeddingSet& set, const std::string& class_id) {
    return intra_stats(class_id, single_class(set, class_id, true));
}

double inter_class(const EmbeddingSet& set, const std::string& c1, const std::string& c2) {
    if (c1 == c2) throw InputError("inter-class similarity needs two different classes");
    for (const auto* c : {&c1, &c2})
        if (!set.has_class(*c)) throw InputError("unknown class '" + *c + "'");
    // Summation order is fixed by record order, so swapping the arguments
    // gives the same value.
    const auto a = single_class(set, c1, false);
    const auto b = single_class(set, c2, false);
    return mean_cross_similarity(a, b);
}

void summarize_s2(SimilarityReport& report) {
    const std::size_t k = report.s2.size();
    if (k < 2) throw InputError("similarity report needs at least 2 classes");
    double best = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < k; ++m) {
        for (std::size_t n = m + 1; n < k; ++n) {
            const double v = *report.s2.at(m, n);
            total += v;
            ++pairs;
            if (v > best) {  // ties keep the earlier pair
                best = v;
                report.argmax_pair = {report.s2.labels()[m], report.s2.labels()[n]};
            }
        }
    }
    report.s2_max = best;
    report.s2_mean = total / static_cast<double>(pairs);
    if (report.s2_mean > 0.0)
        report.delta_s2 = (report.s2_max - report.s2_mean) / report.s2_mean;
    else
        report.delta_s2.reset();
}

SimilarityReport similarity_report(const EmbeddingSet& set, const ClassGrouping& grouping) {
    const auto moments = class_moments(set, &grouping, true);
    for (const auto& g : grouping.grouped_classes())
        if (!moments.count(g)) throw InputError("grouped class '" + g + "' is empty");
    if (moments.size() < 2) throw InputError("similarity report needs at least 2 grouped classes");

    SimilarityReport report;
    report.config_tag = set.config_tag();
    report.grouping_name = grouping.name;
    std::vector<std::string> labels;
    std::vector<const ClassMoments*> ordered;
    for (const auto& [label, m] : moments) {
        labels.push_back(label);
        ordered.push_back(&m);
        if (m.count >= 2)
            report.per_class.push_back(intra_stats(label, m));
        else
            report.insufficient.push_back(label);
    }
    report.s2 = S2Matrix(labels);
    for (std::size_t m = 0; m < ordered.size(); ++m)
        for (std::size_t n = m + 1; n < ordered.size(); ++n)
            report.s2.set(m, n, mean_cross_similarity(*ordered[m], *ordered[n]));
    summarize_s2(report);
    return report;
}

SimilarityReport similarity_report(const EmbeddingSet& set) {
    return similarity_report(set, ClassGrouping::identity(set.classes()));
}

const ClassSimilarityStats* SimilarityReport::stats_for(const std::string& class_id) const {
    for (const auto& s : per_class)
        if (s.class_id == class_id) return &s;
    return nullptr;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InputError("pearson: sequences differ in length");
    if (xs.size() < 2) throw InputError("pearson: need at least 2 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("pearson: zero variance");
    return clamp_unit(sxy / std::sqrt(sxx * syy));
}

}  // namespace dside
