#include "dside/io.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "dside/errors.hpp"
#include "dside/serialize.hpp"

namespace dside {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InputError("write to '" + path.string() + "' failed");
}

namespace {

Json parse_json(std::string_view text, const std::string& source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw FormatError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
    }
}

std::string id_string(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

// ---- annotations -----------------------------------------------------------

AnnotationLoad parse_annotations(std::string_view text, const std::string& source) {
    const Json root = parse_json(text, source);
    if (!root.is_object()) throw FormatError(source + ": top level must be an object");
    for (const char* key : {"images", "annotations", "categories"})
        if (!root.contains(key) || !root[key].is_array())
            throw FormatError(source + ": missing array '" + key + "'");

    struct Size {
        double w, h;
    };
    std::map<std::string, Size> images;
    std::size_t i = 0;
    for (const auto& img : root["images"]) {
        const std::string where = source + ": images[" + std::to_string(i++) + "]";
        if (!img.is_object() || !img.contains("id") || !img.contains("width") || !img.contains("height") ||
            !img["width"].is_number() || !img["height"].is_number())
            throw FormatError(where + ": needs id, width and height");
        images[id_string(img["id"])] = {img["width"].get<double>(), img["height"].get<double>()};
    }
    std::map<std::string, std::string> categories;
    i = 0;
    for (const auto& cat : root["categories"]) {
        const std::string where = source + ": categories[" + std::to_string(i++) + "]";
        if (!cat.is_object() || !cat.contains("id") || !cat.contains("name") || !cat["name"].is_string())
            throw FormatError(where + ": needs id and name");
        categories[id_string(cat["id"])] = cat["name"].get<std::string>();
    }

    AnnotationLoad out;
    i = 0;
    for (const auto& ann : root["annotations"]) {
        const std::size_t record = i++;
        const std::string where = source + ": annotations[" + std::to_string(record) + "]";
        if (!ann.is_object() || !ann.contains("id") || !ann.contains("image_id") || !ann.contains("category_id") ||
            !ann.contains("bbox"))
            throw FormatError(where + ": needs id, image_id, category_id and bbox");
        const auto& bbox = ann["bbox"];
        if (!bbox.is_array() || bbox.size() != 4)
            throw FormatError(where + ": bbox must be [x, y, width, height]");
        for (const auto& v : bbox)
            if (!v.is_number()) throw FormatError(where + ": bbox values must be numbers");

        BBoxAnnotation a;
        a.instance_id = id_string(ann["id"]);
        a.image_id = id_string(ann["image_id"]);
        a.x = bbox[0].get<double>();
        a.y = bbox[1].get<double>();
        a.w = bbox[2].get<double>();
        a.h = bbox[3].get<double>();
        auto img = images.find(a.image_id);
        auto cat = categories.find(id_string(ann["category_id"]));
        std::string reason;
        if (img == images.end()) {
            reason = "unknown image id " + a.image_id;
        } else if (cat == categories.end()) {
            reason = "unknown category id " + id_string(ann["category_id"]);
        } else {
            a.image_w = img->second.w;
            a.image_h = img->second.h;
            a.class_id = cat->second;
            reason = a.invalid_reason();
        }
        if (reason.empty())
            out.annotations.push_back(std::move(a));
        else
            out.rejects.push_back({record, a.instance_id, reason});
    }
    return out;
}

AnnotationLoad read_annotations(const fs::path& path) { return parse_annotations(read_text(path), path.string()); }

// ---- embeddings ------------------------------------------------------------

namespace {

std::uint32_t crc_of(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

void check_token(const std::string& s, const char* what) {
    if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos)
        throw InputError(std::string(what) + " '" + s + "' is empty or contains tabs or newlines");
}

template <class Int>
Int parse_int(const std::string& text, const std::string& where) {
    Int v{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) throw FormatError(where + ": '" + text + "' is not an integer");
    return v;
}

}  // namespace

EmbeddingFileManifest read_manifest(const fs::path& path) {
    std::istringstream in(read_text(path));
    EmbeddingFileManifest m;
    std::string line;
    std::size_t lineno = 0;
    bool have_checksum = false, have_dimension = false, have_count = false, in_records = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (in_records) {
            if (line.empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
                throw FormatError(where + ": record must be '<instance id>\\t<class id>'");
            m.records.emplace_back(line.substr(0, tab), line.substr(tab + 1));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        const auto sp = line.find(' ');
        const std::string key = line.substr(0, sp);
        const std::string value = sp == std::string::npos ? std::string() : line.substr(sp + 1);
        if (key == "records") {
            in_records = true;
        } else if (key == "format_version") {
            m.format_version = parse_int<int>(value, where);
            if (m.format_version != kEmbeddingFormatVersion)
                throw FormatError(where + ": unsupported format version " + value);
        } else if (key == "dimension") {
            m.dimension = parse_int<std::size_t>(value, where);
            have_dimension = true;
        } else if (key == "record_count") {
            m.record_count = parse_int<std::size_t>(value, where);
            have_count = true;
        } else if (key == "config_tag") {
            m.config_tag = value;
        } else if (key == "space_id") {
            m.space_id = value;
        } else if (key == "color_mode") {
            m.color_mode = value;
        } else if (key == "resolution") {
            m.resolution = parse_int<int>(value, where);
        } else if (key == "grouping_name") {
            m.grouping_name = value;
        } else if (key == "payload") {
            m.payload = value;
        } else if (key == "checksum") {
            if (value.rfind("crc32:", 0) != 0 || value.size() != 14)
                throw FormatError(where + ": checksum must be crc32:<8 hex digits>");
            std::uint32_t v = 0;
            auto [p, ec] = std::from_chars(value.data() + 6, value.data() + value.size(), v, 16);
            if (ec != std::errc{} || p != value.data() + value.size()) throw FormatError(where + ": bad checksum digits");
            m.checksum = v;
            have_checksum = true;
        } else {
            throw FormatError(where + ": unknown manifest key '" + key + "'");
        }
    }
    if (!have_dimension || !have_count || !have_checksum || m.payload.empty() || !in_records)
        throw FormatError(path.string() + ": manifest needs dimension, record_count, payload, checksum and records");
    if (m.dimension == 0) throw FormatError(path.string() + ": dimension must be positive");
    if (m.records.size() != m.record_count)
        throw FormatError(path.string() + ": record_count " + std::to_string(m.record_count) + " but " +
                          std::to_string(m.records.size()) + " records listed");
    return m;
}

EmbeddingSet read_embeddings(const fs::path& path) {
    const auto m = read_manifest(path);
    const fs::path payload_path = path.parent_path() / m.payload;
    const std::string bytes = read_text(payload_path);
    if (crc_of(bytes) != m.checksum)
        throw ChecksumError(payload_path.string() + ": checksum mismatch (payload corrupt or truncated)");
    const std::size_t expected = m.record_count * m.dimension * 4;
    if (bytes.size() != expected)
        throw ChecksumError(payload_path.string() + ": payload holds " + std::to_string(bytes.size()) + " bytes, expected " +
                            std::to_string(expected));

    EmbeddingSet set(m.dimension, m.config_tag, m.space_id);
    set.set_color_mode(m.color_mode);
    set.set_resolution(m.resolution);
    set.set_grouping_name(m.grouping_name);
    std::vector<float> row(m.dimension);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t r = 0; r < m.record_count; ++r) {
        for (std::size_t k = 0; k < m.dimension; ++k, p += 4) {
            const std::uint32_t bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                                       std::uint32_t{p[3]} << 24;
            row[k] = std::bit_cast<float>(bits);
        }
        try {
            set.add(m.records[r].first, m.records[r].second, row);
        } catch (const InputError& e) {
            throw FormatError(path.string() + ": record " + std::to_string(r) + ": " + e.what());
        }
    }
    return set;
}

void write_embeddings(const EmbeddingSet& set, const fs::path& path) {
    std::string bytes;
    bytes.reserve(set.data().size() * 4);
    for (float f : set.data()) {
        const auto bits = std::bit_cast<std::uint32_t>(f);
        for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<char>((bits >> s) & 0xffu));
    }
    const fs::path payload = fs::path(path.filename().string() + ".bin");

    std::ostringstream m;
    m << "# dside embedding manifest\n"
      << "format_version " << kEmbeddingFormatVersion << "\n"
      << "dimension " << set.dimension() << "\n"
      << "record_count " << set.size() << "\n"
      << "config_tag " << set.config_tag() << "\n"
      << "space_id " << set.space_id() << "\n"
      << "color_mode " << set.color_mode() << "\n"
      << "resolution " << set.resolution() << "\n"
      << "grouping_name " << set.grouping_name() << "\n"
      << "payload " << payload.string() << "\n"
      << "checksum crc32:" << hex32(crc_of(bytes)) << "\n"
      << "records\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        check_token(set.instance_id(i), "instance id");
        check_token(set.class_id(i), "class id");
        m << set.instance_id(i) << '\t' << set.class_id(i) << '\n';
    }
    write_text(path.parent_path() / payload, bytes);
    write_text(path, m.str());
}

// ---- groupings -------------------------------------------------------------

ClassGrouping read_grouping(const fs::path& path) {
    return grouping_from_json(parse_json(read_text(path), path.string()));
}

void write_grouping(const ClassGrouping& grouping, const fs::path& path) {
    write_text(path, to_json(grouping).dump(2) + "\n");
}

// ---- model specs -----------------------------------------------------------

ModelSpec parse_model_spec(std::string_view text, const std::string& source) {
    ModelSpec model;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool have_input = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string keyword;
        if (!(words >> keyword)) continue;
        if (keyword == "model") {
            if (!(words >> model.name)) throw FormatError(where + ": model needs a name");
        } else if (keyword == "input") {
            std::string w, h;
            if (!(words >> w >> h)) throw FormatError(where + ": input needs width and height");
            model.input_w = parse_int<int>(w, where);
            model.input_h = parse_int<int>(h, where);
            have_input = true;
        } else if (keyword == "conv") {
            ConvLayerSpec layer;
            if (!(words >> layer.name)) throw FormatError(where + ": conv needs a name");
            bool have_k = false, have_in = false, have_out = false;
            std::string kv;
            while (words >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw FormatError(where + ": expected key=value, got '" + kv + "'");
                const std::string key = kv.substr(0, eq);
                const int v = parse_int<int>(kv.substr(eq + 1), where);
                if (key == "k") {
                    layer.kernel = v;
                    have_k = true;
                } else if (key == "in") {
                    layer.in_channels = v;
                    have_in = true;
                } else if (key == "out") {
                    layer.out_channels = v;
                    have_out = true;
                } else if (key == "stride") {
                    layer.stride = v;
                } else if (key == "pad") {
                    layer.padding = v;
                } else if (key == "bias") {
                    if (v != 0 && v != 1) throw FormatError(where + ": bias must be 0 or 1");
                    layer.has_bias = v == 1;
                } else if (key == "groups") {
                    layer.groups = v;
                } else if (key == "pool") {
                    layer.pool = v;
                } else {
                    throw FormatError(where + ": unknown conv field '" + key + "'");
                }
            }
            if (!have_k || !have_in || !have_out) throw FormatError(where + ": conv needs k, in and out");
            model.layers.push_back(std::move(layer));
        } else {
            throw FormatError(where + ": unknown keyword '" + keyword + "'");
        }
    }
    if (model.name.empty() || !have_input) throw FormatError(source + ": model spec needs 'model' and 'input' lines");
    try {
        model.validate();
    } catch (const InputError& e) {
        throw FormatError(source + ": " + e.what());
    }
    return model;
}

ModelSpec read_model_spec(const fs::path& path) { return parse_model_spec(read_text(path), path.string()); }

std::string format_model_spec(const ModelSpec& model) {
    std::ostringstream out;
    out << "model " << model.name << "\ninput " << model.input_w << " " << model.input_h << "\n";
    for (const auto& l : model.layers) {
        out << "conv " << l.name << " k=" << l.kernel << " in=" << l.in_channels << " out=" << l.out_channels
            << " stride=" << l.stride << " pad=" << l.padding << " bias=" << (l.has_bias ? 1 : 0);
        if (l.groups != 1) out << " groups=" << l.groups;
        if (l.pool != 1) out << " pool=" << l.pool;
        out << "\n";
    }
    return out.str();
}

// ---- reports ---------------------------------------------------------------

ReportFormat parse_report_format(const std::string& text) {
    if (text == "structured" || text == "json") return ReportFormat::structured;
    if (text == "markdown" || text == "md") return ReportFormat::markdown;
    throw InputError("unknown report format '" + text + "' (expected structured or markdown)");
}

std::string render_report(const SimilarityReport& report, ReportFormat format) {
    return format == ReportFormat::structured ? to_json(report).dump(2) + "\n" : report_markdown(report);
}

void write_report(const SimilarityReport& report, ReportFormat format, const fs::path& path) {
    write_text(path, render_report(report, format));
}

SimilarityReport read_report(const fs::path& path) {
    return report_from_json(parse_json(read_text(path), path.string()));
}

// ---- decision log ----------------------------------------------------------

void append_log_entry(const LogEntry& entry, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw InputError("cannot append to '" + path.string() + "'");
    Json j = to_json(entry, entry.improved);
    j.erase("is_best_so_far");
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw InputError("append to '" + path.string() + "' failed");
}

DecisionLog read_log(const fs::path& path, DecisionLog::Clock clock) {
    if (!fs::exists(path)) return DecisionLog(std::move(clock));
    std::istringstream in(read_text(path));
    std::vector<LogEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            entries.push_back(log_entry_from_json(parse_json(line, where)));
        } catch (const FormatError& e) {
            const std::string msg = e.what();
            throw FormatError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
        }
    }
    return DecisionLog::replay(entries, std::move(clock));
}

}  // namespace dside
