#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dside/attributes.hpp"
#include "dside/flops.hpp"
#include "dside/grouping.hpp"
#include "dside/similarity.hpp"

namespace dside {

enum class Procedure { classes, color, resolution };

const char* to_string(Procedure p);
Procedure parse_procedure(const std::string& text);

/// One candidate configuration: grouping, color mode and input resolution.
struct ConfigKey {
    std::string grouping_name = "identity";
    /// "color", "gray" or "per-class" (then `per_class` holds the modes).
    std::string color_mode = "color";
    std::map<std::string, ColorMode> per_class;
    int resolution = 0;

    bool operator==(const ConfigKey&) const = default;
};

struct LogEntry {
    std::size_t seq = 0;
    std::string timestamp;
    Procedure procedure = Procedure::classes;
    ConfigKey config;
    SimilarityReport report;
    /// The grouping evaluated, for class-procedure entries.
    std::optional<ClassGrouping> grouping;
    /// Whether this entry became its procedure's best when appended.
    bool improved = false;
    std::string note;

    bool operator==(const LogEntry&) const = default;
};

/// Append-only record of procedure iterations. The best entry per procedure
/// is the strict running argmin of ΔS2 (undefined ΔS2 ranks last, ties keep
/// the earlier entry); for the color procedure the latest decision wins.
class DecisionLog {
public:
    using Clock = std::function<std::string()>;

    explicit DecisionLog(Clock clock = {});

    const LogEntry& append(Procedure procedure, ConfigKey config, SimilarityReport report,
                           std::string note = {}, std::optional<ClassGrouping> grouping = std::nullopt);

    const std::vector<LogEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::optional<std::size_t> best(Procedure procedure) const;
    bool is_best_so_far(std::size_t index) const;

    /// Rebuilds a log from stored entries, recomputing every flag. Throws
    /// FormatError when a stored `improved` flag or sequence number disagrees.
    static DecisionLog replay(const std::vector<LogEntry>& stored, Clock clock = {});

private:
    bool improves(Procedure procedure, const SimilarityReport& report) const;

    Clock clock_;
    std::vector<LogEntry> entries_;
    std::map<Procedure, std::size_t> best_;
};

std::string utc_timestamp();

struct SelectionOptions {
    /// Suggest stopping once ΔS2 falls to or below this; off by default.
    std::optional<double> stop_delta_s2;
};

struct GroupingEvaluation {
    SimilarityReport report;
    LogEntry entry;
    bool stop_suggested = false;
};

GroupingEvaluation evaluate_grouping(const EmbeddingSet& set, const ClassGrouping& grouping, DecisionLog& log,
                                     const SelectionOptions& options = {}, std::string note = {});

struct GuidanceRow {
    std::string class_id;
    std::size_t instance_count = 0;
    std::optional<ClassSimilarityStats> stats;  // empty when insufficient
};

/// Per grouped class (S1, σ²), worst first: insufficient classes, then
/// ascending S1.
std::vector<GuidanceRow> grouping_guidance(const EmbeddingSet& set, const ClassGrouping& grouping);

struct ColorDecision {
    ColorMode decision = ColorMode::color;
    double s2_max_color = 0.0;
    double s2_max_gray = 0.0;
    SimilarityReport color_report;
    SimilarityReport gray_report;
};

/// Gray iff Ŝ2(gray) ≤ Ŝ2(color). Both sets must hold the same instances
/// with the same classes in one embedding space.
ColorDecision select_color(const EmbeddingSet& color, const EmbeddingSet& gray,
                           const ClassGrouping* grouping = nullptr);

struct ClassColorMaxima {
    std::string class_id;
    // max over other classes of S2(anchor in first mode, other in second)
    double gray_gray = 0.0;
    double gray_color = 0.0;
    double color_gray = 0.0;
    double color_color = 0.0;
    ColorMode mode = ColorMode::color;
};

struct PerClassColorDecision {
    std::vector<ClassColorMaxima> classes;
    std::map<std::string, ColorMode> modes;
    std::string note;
};

PerClassColorDecision select_color_per_class(const EmbeddingSet& color, const EmbeddingSet& gray,
                                             const ClassGrouping* grouping = nullptr);

/// Appends the decision as a color-procedure entry.
const LogEntry& record_color(const ColorDecision& decision, const EmbeddingSet& color_set, DecisionLog& log,
                             const std::string& grouping_name = "identity");
const LogEntry& record_color(const PerClassColorDecision& decision, const ColorDecision& base,
                             const EmbeddingSet& color_set, DecisionLog& log,
                             const std::string& grouping_name = "identity");

struct LadderOptions {
    const ClassGrouping* grouping = nullptr;
    /// When given, classes whose b_max at the chosen resolution falls below
    /// `bmax_floor` pixels are warned about.
    std::span<const BBoxAnnotation> annotations;
    int bmax_floor = 8;
};

struct LadderRung {
    int resolution = 0;
    SimilarityReport report;
};

struct LadderResult {
    std::vector<LadderRung> rungs;  // descending resolution
    std::size_t chosen_index = 0;
    int chosen_resolution = 0;
    std::vector<std::string> warnings;
};

/// Evaluates ΔS2 on each rung (resolutions must halve, ±1 px) and picks the
/// lowest. Ties keep the higher resolution, so input order does not matter.
LadderResult resolution_ladder(const std::vector<int>& resolutions, const std::map<int, const EmbeddingSet*>& sets,
                               const LadderOptions& options = {});

/// Appends one resolution-procedure entry per rung, highest first.
void record_ladder(const LadderResult& ladder, DecisionLog& log, const std::string& grouping_name = "identity",
                   const std::string& color_mode = "color");

struct RecommendOptions {
    int bmax_floor = 8;
    /// Interdependency note when N_Cl ≤ small_class_count and Ŝ2 ≥ high_s2.
    std::size_t small_class_count = 3;
    double high_s2 = 0.5;
};

struct Recommendation {
    ConfigKey chosen;
    std::size_t class_count = 0;
    double s2_max = 0.0;
    std::optional<double> delta_s2;
    double max_scale = 0.0;
    std::int64_t b_max_at_resolution = 0;
    int min_layers = 0;
    std::optional<std::int64_t> flops_estimate;
    std::vector<std::string> warnings;
};

/// Throws StateError naming the procedures that have no result yet.
Recommendation recommend(const DecisionLog& log, std::span<const BBoxAnnotation> annotations,
                         const ModelSpec* model = nullptr, const RecommendOptions& options = {});

}  // namespace dside
