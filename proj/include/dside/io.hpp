#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dside/attributes.hpp"
#include "dside/flops.hpp"
#include "dside/grouping.hpp"
#include "dside/selection.hpp"
#include "dside/similarity.hpp"

namespace dside {

namespace fs = std::filesystem;

// ---- annotations (COCO instances subset) -----------------------------------

struct AnnotationReject {
    std::size_t record = 0;  // index in the source "annotations" array
    std::string instance_id;
    std::string reason;
};

struct AnnotationLoad {
    std::vector<BBoxAnnotation> annotations;
    std::vector<AnnotationReject> rejects;
};

/// Reads images / annotations / categories. Boxes violating their
/// invariants go to `rejects`; structural problems throw FormatError.
AnnotationLoad parse_annotations(std::string_view text, const std::string& source = "<memory>");
AnnotationLoad read_annotations(const fs::path& path);

// ---- embeddings ------------------------------------------------------------
//
// A plain-text manifest (`*.semb`) next to a payload of little-endian
// float32 values, row-major, one row per record in manifest order.

inline constexpr int kEmbeddingFormatVersion = 1;

struct EmbeddingFileManifest {
    int format_version = kEmbeddingFormatVersion;
    std::size_t dimension = 0;
    std::size_t record_count = 0;
    std::string config_tag;
    std::string space_id;
    std::string color_mode = "color";
    int resolution = 0;
    std::string grouping_name = "identity";
    std::string payload;   // file name relative to the manifest
    std::uint32_t checksum = 0;  // CRC-32 of the payload bytes
    std::vector<std::pair<std::string, std::string>> records;  // (instance id, class id)
};

EmbeddingFileManifest read_manifest(const fs::path& path);
EmbeddingSet read_embeddings(const fs::path& path);
/// Writes `path` and its payload `path` + ".bin".
void write_embeddings(const EmbeddingSet& set, const fs::path& path);

// ---- groupings, model specs ------------------------------------------------

ClassGrouping read_grouping(const fs::path& path);
void write_grouping(const ClassGrouping& grouping, const fs::path& path);

/// Line-oriented model description:
///   model <name>
///   input <width> <height>
///   conv <name> k=3 in=3 out=64 [stride=1] [pad=0] [bias=0|1] [groups=1] [pool=1]
/// Blank lines and `#` comments are ignored.
ModelSpec parse_model_spec(std::string_view text, const std::string& source = "<memory>");
ModelSpec read_model_spec(const fs::path& path);
std::string format_model_spec(const ModelSpec& model);

// ---- reports ---------------------------------------------------------------

enum class ReportFormat { structured, markdown };

ReportFormat parse_report_format(const std::string& text);
std::string render_report(const SimilarityReport& report, ReportFormat format);
void write_report(const SimilarityReport& report, ReportFormat format, const fs::path& path);
SimilarityReport read_report(const fs::path& path);

// ---- decision log (JSON lines, append-only) --------------------------------

void append_log_entry(const LogEntry& entry, const fs::path& path);
/// Missing file → empty log. Flags are re-derived and checked.
DecisionLog read_log(const fs::path& path, DecisionLog::Clock clock = {});

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

}  // namespace dside
