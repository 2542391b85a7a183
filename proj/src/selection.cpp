#include "dside/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <sstream>

#include "dside/errors.hpp"

namespace dside {

const char* to_string(Procedure p) {
    switch (p) {
        case Procedure::classes: return "classes";
        case Procedure::color: return "color";
        case Procedure::resolution: return "resolution";
    }
    return "?";
}

Procedure parse_procedure(const std::string& text) {
    if (text == "classes") return Procedure::classes;
    if (text == "color") return Procedure::color;
    if (text == "resolution") return Procedure::resolution;
    throw FormatError("unknown procedure '" + text + "'");
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- DecisionLog -----------------------------------------------------------

namespace {

double rank_of(const SimilarityReport& r) {
    return r.delta_s2 ? *r.delta_s2 : std::numeric_limits<double>::infinity();
}

}  // namespace

DecisionLog::DecisionLog(Clock clock) : clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {}

bool DecisionLog::improves(Procedure procedure, const SimilarityReport& report) const {
    auto it = best_.find(procedure);
    if (it == best_.end()) return true;
    if (procedure == Procedure::color) return true;
    return rank_of(report) < rank_of(entries_[it->second].report);
}

const LogEntry& DecisionLog::append(Procedure procedure, ConfigKey config, SimilarityReport report, std::string note,
                                    std::optional<ClassGrouping> grouping) {
    LogEntry e;
    e.seq = entries_.size();
    e.timestamp = clock_();
    e.procedure = procedure;
    e.config = std::move(config);
    e.improved = improves(procedure, report);
    e.report = std::move(report);
    e.grouping = std::move(grouping);
    e.note = std::move(note);
    if (e.improved) best_[procedure] = e.seq;
    entries_.push_back(std::move(e));
    return entries_.back();
}

std::optional<std::size_t> DecisionLog::best(Procedure procedure) const {
    auto it = best_.find(procedure);
    if (it == best_.end()) return std::nullopt;
    return it->second;
}

bool DecisionLog::is_best_so_far(std::size_t index) const {
    if (index >= entries_.size()) return false;
    auto b = best(entries_[index].procedure);
    return b && *b == index;
}

DecisionLog DecisionLog::replay(const std::vector<LogEntry>& stored, Clock clock) {
    DecisionLog log(std::move(clock));
    for (const auto& e : stored) {
        if (e.seq != log.entries_.size())
            throw FormatError("decision log entry " + std::to_string(e.seq) + " out of sequence");
        const bool improved = log.improves(e.procedure, e.report);
        if (improved != e.improved)
            throw FormatError("decision log entry " + std::to_string(e.seq) + " has a best-so-far flag that does not replay");
        log.entries_.push_back(e);
        if (improved) log.best_[e.procedure] = e.seq;
    }
    return log;
}

// ---- classes ---------------------------------------------------------------

GroupingEvaluation evaluate_grouping(const EmbeddingSet& set, const ClassGrouping& grouping, DecisionLog& log,
                                     const SelectionOptions& options, std::string note) {
    GroupingEvaluation out;
    out.report = similarity_report(set, grouping);
    ConfigKey key;
    key.grouping_name = grouping.name;
    key.color_mode = set.color_mode();
    key.resolution = set.resolution();
    out.entry = log.append(Procedure::classes, key, out.report, std::move(note), grouping);
    if (options.stop_delta_s2 && out.report.delta_s2) out.stop_suggested = *out.report.delta_s2 <= *options.stop_delta_s2;
    return out;
}

std::vector<GuidanceRow> grouping_guidance(const EmbeddingSet& set, const ClassGrouping& grouping) {
    const auto moments = class_moments(set, &grouping, true);
    std::vector<GuidanceRow> rows;
    for (const auto& [label, m] : moments) {
        GuidanceRow row;
        row.class_id = label;
        row.instance_count = m.count;
        if (m.count >= 2) row.stats = intra_stats(label, m);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const GuidanceRow& a, const GuidanceRow& b) {
        if (a.stats.has_value() != b.stats.has_value()) return !a.stats.has_value();
        if (!a.stats) return false;
        return a.stats->s1 < b.stats->s1;
    });
    return rows;
}

// ---- color -----------------------------------------------------------------

namespace {

void check_paired(const EmbeddingSet& color, const EmbeddingSet& gray) {
    if (color.space_id() != gray.space_id())
        throw InputError("color and gray sets come from different embedding spaces ('" + color.space_id() + "' vs '" +
                         gray.space_id() + "')");
    if (color.dimension() != gray.dimension()) throw InputError("color and gray sets differ in dimension");
    if (color.size() != gray.size())
        throw InputError("color and gray sets differ in size (" + std::to_string(color.size()) + " vs " +
                         std::to_string(gray.size()) + ")");
    for (std::size_t i = 0; i < color.size(); ++i) {
        const auto j = gray.find(color.instance_id(i));
        if (!j) throw InputError("instance '" + color.instance_id(i) + "' missing from the gray set");
        if (gray.class_id(*j) != color.class_id(i))
            throw InputError("instance '" + color.instance_id(i) + "' has different classes in the color and gray sets");
    }
}

ClassGrouping grouping_or_identity(const EmbeddingSet& set, const ClassGrouping* grouping) {
    return grouping ? *grouping : ClassGrouping::identity(set.classes());
}

}  // namespace

ColorDecision select_color(const EmbeddingSet& color, const EmbeddingSet& gray, const ClassGrouping* grouping) {
    check_paired(color, gray);
    const auto g = grouping_or_identity(color, grouping);
    ColorDecision d;
    d.color_report = similarity_report(color, g);
    d.gray_report = similarity_report(gray, g);
    d.s2_max_color = d.color_report.s2_max;
    d.s2_max_gray = d.gray_report.s2_max;
    d.decision = d.s2_max_gray <= d.s2_max_color ? ColorMode::gray : ColorMode::color;
    return d;
}

PerClassColorDecision select_color_per_class(const EmbeddingSet& color, const EmbeddingSet& gray,
                                             const ClassGrouping* grouping) {
    check_paired(color, gray);
    const auto g = grouping_or_identity(color, grouping);
    const auto cm = class_moments(color, &g, false);
    const auto gm = class_moments(gray, &g, false);
    if (cm.size() < 2) throw InputError("per-class color selection needs at least 2 classes");

    PerClassColorDecision out;
    constexpr double lowest = -std::numeric_limits<double>::infinity();
    for (const auto& [anchor, anchor_color] : cm) {
        const auto& anchor_gray = gm.at(anchor);
        ClassColorMaxima row{anchor, lowest, lowest, lowest, lowest, ColorMode::color};
        for (const auto& [other, other_color] : cm) {
            if (other == anchor) continue;
            const auto& other_gray = gm.at(other);
            row.gray_gray = std::max(row.gray_gray, mean_cross_similarity(anchor_gray, other_gray));
            row.gray_color = std::max(row.gray_color, mean_cross_similarity(anchor_gray, other_color));
            row.color_gray = std::max(row.color_gray, mean_cross_similarity(anchor_color, other_gray));
            row.color_color = std::max(row.color_color, mean_cross_similarity(anchor_color, other_color));
        }
        const double gray_side = std::max(row.gray_gray, row.gray_color);
        const double color_side = std::min(row.color_gray, row.color_color);
        row.mode = gray_side < color_side ? ColorMode::gray : ColorMode::color;
        out.modes[anchor] = row.mode;
        out.classes.push_back(row);
    }
    out.note = "per-class color modes may improve accuracy but do not directly yield computation reduction";
    return out;
}

const LogEntry& record_color(const ColorDecision& decision, const EmbeddingSet& color_set, DecisionLog& log,
                             const std::string& grouping_name) {
    ConfigKey key;
    key.grouping_name = grouping_name;
    key.color_mode = to_string(decision.decision);
    key.resolution = color_set.resolution();
    std::ostringstream note;
    note.precision(17);
    note << "s2_max gray=" << decision.s2_max_gray << " color=" << decision.s2_max_color;
    const auto& report = decision.decision == ColorMode::gray ? decision.gray_report : decision.color_report;
    return log.append(Procedure::color, key, report, note.str());
}

const LogEntry& record_color(const PerClassColorDecision& decision, const ColorDecision& base,
                             const EmbeddingSet& color_set, DecisionLog& log, const std::string& grouping_name) {
    ConfigKey key;
    key.grouping_name = grouping_name;
    key.color_mode = "per-class";
    key.per_class = decision.modes;
    key.resolution = color_set.resolution();
    return log.append(Procedure::color, key, base.color_report, decision.note);
}

// ---- resolution ------------------------------------------------------------

LadderResult resolution_ladder(const std::vector<int>& resolutions, const std::map<int, const EmbeddingSet*>& sets,
                               const LadderOptions& options) {
    if (resolutions.size() < 2) throw InputError("resolution ladder needs at least 2 rungs");
    std::vector<int> order = resolutions;
    std::sort(order.begin(), order.end(), std::greater<>());
    if (std::adjacent_find(order.begin(), order.end()) != order.end())
        throw InputError("resolution ladder has a repeated rung");
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] <= 0) throw InputError("resolutions must be positive");
        if (i > 0 && std::abs(2.0 * order[i] - order[i - 1]) > 2.0)
            throw InputError("rung " + std::to_string(order[i]) + " is not half of " + std::to_string(order[i - 1]));
    }

    LadderResult out;
    double best = std::numeric_limits<double>::infinity();
    bool have = false;
    for (int r : order) {
        auto it = sets.find(r);
        if (it == sets.end() || !it->second)
            throw InputError("no embedding set for resolution " + std::to_string(r));
        const EmbeddingSet& set = *it->second;
        const auto g = grouping_or_identity(set, options.grouping);
        out.rungs.push_back({r, similarity_report(set, g)});
        const double rank = rank_of(out.rungs.back().report);
        if (!have || rank < best) {
            best = rank;
            have = true;
            out.chosen_index = out.rungs.size() - 1;
        }
    }
    out.chosen_resolution = out.rungs[out.chosen_index].resolution;

    if (!options.annotations.empty()) {
        ScaleOptions so;
        so.grouping = options.grouping;
        so.resolution = out.chosen_resolution;
        const auto stats = scale_stats(options.annotations, so);
        for (const auto& [cls, s] : stats.per_class)
            if (s.b_max < options.bmax_floor)
                out.warnings.push_back("class '" + cls + "': b_max " + std::to_string(s.b_max) + " px at resolution " +
                                       std::to_string(out.chosen_resolution) + " is below " +
                                       std::to_string(options.bmax_floor) +
                                       " px; fine texture may not survive the downsampling");
    }
    return out;
}

void record_ladder(const LadderResult& ladder, DecisionLog& log, const std::string& grouping_name,
                   const std::string& color_mode) {
    for (const auto& rung : ladder.rungs) {
        ConfigKey key;
        key.grouping_name = grouping_name;
        key.color_mode = color_mode;
        key.resolution = rung.resolution;
        log.append(Procedure::resolution, key, rung.report, "ladder rung " + std::to_string(rung.resolution));
    }
}

// ---- recommendation --------------------------------------------------------

Recommendation recommend(const DecisionLog& log, std::span<const BBoxAnnotation> annotations, const ModelSpec* model,
                         const RecommendOptions& options) {
    std::vector<std::string> missing;
    for (auto p : {Procedure::classes, Procedure::color, Procedure::resolution})
        if (!log.best(p)) missing.emplace_back(to_string(p));
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw StateError("recommendation needs results from: " + list);
    }
    if (annotations.empty()) throw InputError("recommendation needs annotations for object scale");

    const auto& classes = log.entries()[*log.best(Procedure::classes)];
    const auto& color = log.entries()[*log.best(Procedure::color)];
    const auto& resolution = log.entries()[*log.best(Procedure::resolution)];

    Recommendation rec;
    rec.chosen.grouping_name = classes.config.grouping_name;
    rec.chosen.color_mode = color.config.color_mode;
    rec.chosen.per_class = color.config.per_class;
    rec.chosen.resolution = resolution.config.resolution;
    if (rec.chosen.resolution <= 0) throw StateError("resolution procedure recorded no resolution");
    rec.class_count = classes.report.class_count();
    rec.s2_max = classes.report.s2_max;
    rec.delta_s2 = classes.report.delta_s2;

    ScaleOptions so;
    so.grouping = classes.grouping ? &*classes.grouping : nullptr;
    so.resolution = rec.chosen.resolution;
    const auto stats = scale_stats(annotations, so);
    rec.max_scale = stats.overall.max_scale;
    rec.b_max_at_resolution = pixels_at(rec.max_scale, rec.chosen.resolution);
    rec.min_layers = min_layers(rec.b_max_at_resolution);

    if (model) {
        ModelSpec m = *model;
        m.input_w = m.input_h = rec.chosen.resolution;
        const auto mode = rec.chosen.color_mode == "gray" ? ColorMode::gray : ColorMode::color;
        rec.flops_estimate = model_flops(m, mode).total;
    }

    for (const auto& [cls, s] : stats.per_class)
        if (s.b_max < options.bmax_floor)
            rec.warnings.push_back("class '" + cls + "': b_max " + std::to_string(s.b_max) + " px at resolution " +
                                   std::to_string(rec.chosen.resolution) + " is below " +
                                   std::to_string(options.bmax_floor) + " px; fine texture may not survive");
    if (rec.class_count <= options.small_class_count && rec.s2_max >= options.high_s2) {
        std::ostringstream w;
        w << "only " << rec.class_count << " classes yet s2_max is " << rec.s2_max
          << "; low intra-class similarity may be driving inter-class similarity up, and the effect grows with more classes";
        rec.warnings.push_back(w.str());
    }
    if (rec.chosen.color_mode == "per-class")
        rec.warnings.push_back("per-class color modes need a color-input model; no computation reduction");
    return rec;
}

}  // namespace dside
