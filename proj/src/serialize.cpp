#include "dside/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dside/errors.hpp"

namespace dside {

namespace {

template <class T>
T field(const Json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string(what) + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(std::string(what) + ": field '" + key + "' has the wrong type");
    }
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

// ---- grouping --------------------------------------------------------------

Json to_json(const ClassGrouping& g) {
    Json m = Json::object();
    for (const auto& [from, to] : g.mapping) m[from] = to ? Json(*to) : Json(nullptr);
    return Json{{"name", g.name}, {"mapping", m}};
}

ClassGrouping grouping_from_json(const Json& j) {
    ClassGrouping g;
    g.name = field<std::string>(j, "name", "grouping");
    if (g.name.empty()) throw FormatError("grouping: field 'name' is empty");
    if (!j.contains("mapping") || !j["mapping"].is_object())
        throw FormatError("grouping: field 'mapping' must be an object of class -> grouped class or null");
    for (const auto& [from, to] : j["mapping"].items()) {
        if (to.is_null())
            g.mapping[from] = std::nullopt;
        else if (to.is_string() && !to.get<std::string>().empty())
            g.mapping[from] = to.get<std::string>();
        else
            throw FormatError("grouping: mapping['" + from + "'] must be a nonempty string or null");
    }
    if (g.mapping.empty()) throw FormatError("grouping: field 'mapping' is empty");
    return g;
}

// ---- similarity report -----------------------------------------------------

Json to_json(const SimilarityReport& r) {
    Json per_class = Json::array();
    for (const auto& s : r.per_class)
        per_class.push_back({{"class_id", s.class_id},
                             {"instances", s.instance_count},
                             {"pairs", s.pair_count},
                             {"s1", s.s1},
                             {"sigma2", s.sigma2}});
    Json matrix = Json::array();
    for (std::size_t m = 0; m < r.s2.size(); ++m) {
        Json row = Json::array();
        for (std::size_t n = 0; n < r.s2.size(); ++n) row.push_back(optional_number(r.s2.at(m, n)));
        matrix.push_back(row);
    }
    return Json{{"config_tag", r.config_tag},
                {"grouping", r.grouping_name},
                {"classes", r.s2.labels()},
                {"per_class", per_class},
                {"insufficient", r.insufficient},
                {"s2_matrix", matrix},
                {"s2_max", r.s2_max},
                {"s2_mean", r.s2_mean},
                {"delta_s2", optional_number(r.delta_s2)},
                {"argmax_pair", {r.argmax_pair.first, r.argmax_pair.second}}};
}

SimilarityReport report_from_json(const Json& j) {
    const char* what = "similarity report";
    SimilarityReport r;
    r.config_tag = field<std::string>(j, "config_tag", what);
    r.grouping_name = field<std::string>(j, "grouping", what);
    const auto labels = field<std::vector<std::string>>(j, "classes", what);
    if (labels.size() < 2) throw FormatError("similarity report: fewer than 2 classes");
    r.s2 = S2Matrix(labels);
    const auto& matrix = j.at("s2_matrix");
    if (!matrix.is_array() || matrix.size() != labels.size())
        throw FormatError("similarity report: s2_matrix does not match the class list");
    for (std::size_t m = 0; m < labels.size(); ++m) {
        if (!matrix[m].is_array() || matrix[m].size() != labels.size())
            throw FormatError("similarity report: s2_matrix row " + std::to_string(m) + " has the wrong length");
        for (std::size_t n = m + 1; n < labels.size(); ++n) {
            if (!matrix[m][n].is_number())
                throw FormatError("similarity report: s2_matrix entry is not a number");
            r.s2.set(m, n, matrix[m][n].get<double>());
        }
    }
    for (const auto& s : field<Json>(j, "per_class", what)) {
        ClassSimilarityStats st;
        st.class_id = field<std::string>(s, "class_id", "per_class entry");
        st.instance_count = field<std::size_t>(s, "instances", "per_class entry");
        st.pair_count = field<std::size_t>(s, "pairs", "per_class entry");
        st.s1 = field<double>(s, "s1", "per_class entry");
        st.sigma2 = field<double>(s, "sigma2", "per_class entry");
        r.per_class.push_back(st);
    }
    r.insufficient = field<std::vector<std::string>>(j, "insufficient", what);
    r.s2_max = field<double>(j, "s2_max", what);
    r.s2_mean = field<double>(j, "s2_mean", what);
    if (j.contains("delta_s2") && !j["delta_s2"].is_null()) r.delta_s2 = field<double>(j, "delta_s2", what);
    const auto pair = field<std::vector<std::string>>(j, "argmax_pair", what);
    if (pair.size() != 2) throw FormatError("similarity report: argmax_pair must have 2 entries");
    r.argmax_pair = {pair[0], pair[1]};
    return r;
}

// ---- config / log ----------------------------------------------------------

Json to_json(const ConfigKey& k) {
    Json j{{"grouping", k.grouping_name}, {"color_mode", k.color_mode}, {"resolution", k.resolution}};
    if (!k.per_class.empty()) {
        Json m = Json::object();
        for (const auto& [cls, mode] : k.per_class) m[cls] = to_string(mode);
        j["per_class"] = m;
    }
    return j;
}

ConfigKey config_from_json(const Json& j) {
    ConfigKey k;
    k.grouping_name = field<std::string>(j, "grouping", "config");
    k.color_mode = field<std::string>(j, "color_mode", "config");
    k.resolution = field<int>(j, "resolution", "config");
    if (j.contains("per_class")) {
        for (const auto& [cls, mode] : j["per_class"].items()) {
            try {
                k.per_class[cls] = parse_color_mode(mode.get<std::string>());
            } catch (const std::exception&) {
                throw FormatError("config: per_class['" + cls + "'] is not a color mode");
            }
        }
    }
    return k;
}

Json to_json(const LogEntry& e, bool is_best) {
    Json j{{"seq", e.seq},
           {"timestamp", e.timestamp},
           {"procedure", to_string(e.procedure)},
           {"config", to_json(e.config)},
           {"improved", e.improved},
           {"is_best_so_far", is_best},
           {"note", e.note}};
    if (e.grouping) j["grouping"] = to_json(*e.grouping);
    j["report"] = to_json(e.report);
    return j;
}

LogEntry log_entry_from_json(const Json& j) {
    LogEntry e;
    e.seq = field<std::size_t>(j, "seq", "log entry");
    e.timestamp = field<std::string>(j, "timestamp", "log entry");
    e.procedure = parse_procedure(field<std::string>(j, "procedure", "log entry"));
    e.config = config_from_json(field<Json>(j, "config", "log entry"));
    e.improved = field<bool>(j, "improved", "log entry");
    e.note = field<std::string>(j, "note", "log entry");
    if (j.contains("grouping")) e.grouping = grouping_from_json(j["grouping"]);
    e.report = report_from_json(field<Json>(j, "report", "log entry"));
    return e;
}

Json to_json(const DecisionLog& log) {
    Json entries = Json::array();
    for (std::size_t i = 0; i < log.size(); ++i) entries.push_back(to_json(log.entries()[i], log.is_best_so_far(i)));
    Json best = Json::object();
    for (auto p : {Procedure::classes, Procedure::color, Procedure::resolution}) {
        auto b = log.best(p);
        best[to_string(p)] = b ? Json(*b) : Json(nullptr);
    }
    return Json{{"entries", entries}, {"best", best}};
}

// ---- other reports ---------------------------------------------------------

namespace {

Json to_json(const ScaleSummary& s) {
    Json hist = Json::array();
    for (const auto& b : s.histogram) hist.push_back({b.low, b.high, b.count});
    return Json{{"count", s.count},
                {"min_scale", s.min_scale},
                {"median_scale", s.median_scale},
                {"max_scale", s.max_scale},
                {"b_max", s.b_max},
                {"min_layers", min_layers(std::max<std::int64_t>(1, s.b_max))},
                {"histogram", hist}};
}

}  // namespace

Json to_json(const ScaleStats& s) {
    Json per = Json::object();
    for (const auto& [cls, summary] : s.per_class) per[cls] = to_json(summary);
    return Json{{"resolution", s.resolution ? Json(*s.resolution) : Json(nullptr)},
                {"overall", to_json(s.overall)},
                {"per_class", per}};
}

Json to_json(const FlopsReport& r) {
    Json layers = Json::array();
    for (const auto& l : r.per_layer)
        layers.push_back({{"name", l.name}, {"flops", l.flops}, {"kflops", format_kflops(l.flops)},
                          {"out_w", l.out_w}, {"out_h", l.out_h}});
    return Json{{"model", r.model},
                {"mode", to_string(r.mode)},
                {"total", r.total},
                {"total_color", r.total_color},
                {"total_gray", r.total_gray},
                {"layer1_color", r.layer1_color},
                {"layer1_gray", r.layer1_gray},
                {"layer1_color_kflops", format_kflops(r.layer1_color)},
                {"layer1_gray_kflops", format_kflops(r.layer1_gray)},
                {"gray_to_color_ratio", r.gray_to_color_ratio()},
                {"per_layer", layers}};
}

Json to_json(const GuidanceRow& row) {
    Json j{{"class_id", row.class_id}, {"instances", row.instance_count}};
    if (row.stats) {
        j["s1"] = row.stats->s1;
        j["sigma2"] = row.stats->sigma2;
        j["insufficient"] = false;
    } else {
        j["s1"] = nullptr;
        j["sigma2"] = nullptr;
        j["insufficient"] = true;
    }
    return j;
}

Json to_json(const ColorDecision& d) {
    return Json{{"decision", to_string(d.decision)},
                {"s2_max_color", d.s2_max_color},
                {"s2_max_gray", d.s2_max_gray},
                {"color_report", to_json(d.color_report)},
                {"gray_report", to_json(d.gray_report)}};
}

Json to_json(const PerClassColorDecision& d) {
    Json rows = Json::array();
    for (const auto& c : d.classes)
        rows.push_back({{"class_id", c.class_id},
                        {"gray_gray", c.gray_gray},
                        {"gray_color", c.gray_color},
                        {"color_gray", c.color_gray},
                        {"color_color", c.color_color},
                        {"mode", to_string(c.mode)}});
    return Json{{"classes", rows}, {"note", d.note}};
}

Json to_json(const LadderResult& l) {
    Json rungs = Json::array();
    for (const auto& r : l.rungs)
        rungs.push_back({{"resolution", r.resolution},
                         {"s2_max", r.report.s2_max},
                         {"s2_mean", r.report.s2_mean},
                         {"delta_s2", optional_number(r.report.delta_s2)}});
    return Json{{"rungs", rungs}, {"chosen_resolution", l.chosen_resolution}, {"warnings", l.warnings}};
}

Json to_json(const Recommendation& r) {
    return Json{{"config", to_json(r.chosen)},
                {"class_count", r.class_count},
                {"s2_max", r.s2_max},
                {"delta_s2", optional_number(r.delta_s2)},
                {"max_scale", r.max_scale},
                {"b_max_at_resolution", r.b_max_at_resolution},
                {"min_layers", r.min_layers},
                {"flops_estimate", r.flops_estimate ? Json(*r.flops_estimate) : Json(nullptr)},
                {"warnings", r.warnings}};
}

// ---- markdown --------------------------------------------------------------

namespace {

std::string fixed(double v, int decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

std::string report_markdown(const SimilarityReport& r) {
    std::ostringstream out;
    out << "# Similarity report";
    if (!r.config_tag.empty()) out << ": " << r.config_tag;
    out << "\n\nGrouping: `" << r.grouping_name << "`, " << r.class_count() << " classes\n\n";
    out << "- **s2_max**: " << fixed(r.s2_max) << " (" << r.argmax_pair.first << ", " << r.argmax_pair.second << ")\n";
    out << "- **s2_mean**: " << fixed(r.s2_mean) << "\n";
    out << "- **delta_s2**: " << (r.delta_s2 ? fixed(*r.delta_s2) : std::string("undefined (s2_mean <= 0)")) << "\n\n";

    out << "## Intra-class similarity\n\n| class | instances | s1 | sigma2 |\n|---|---:|---:|---:|\n";
    for (const auto& s : r.per_class)
        out << "| " << s.class_id << " | " << s.instance_count << " | " << fixed(s.s1) << " | " << fixed(s.sigma2, 6)
            << " |\n";
    for (const auto& c : r.insufficient) out << "| " << c << " | 1 | n/a | n/a |\n";

    out << "\n## Inter-class similarity\n\n|   |";
    for (const auto& l : r.s2.labels()) out << " " << l << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < r.s2.size(); ++i) out << "---:|";
    out << "\n";
    for (std::size_t m = 0; m < r.s2.size(); ++m) {
        out << "| " << r.s2.labels()[m] << " |";
        for (std::size_t n = 0; n < r.s2.size(); ++n) {
            const auto v = r.s2.at(m, n);
            out << " " << (v ? fixed(*v) : std::string("-")) << " |";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace dside
