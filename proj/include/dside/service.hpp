#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dside/attributes.hpp"
#include "dside/flops.hpp"
#include "dside/selection.hpp"
#include "dside/serialize.hpp"
#include "dside/similarity.hpp"

namespace httplib {
class Server;
}

namespace dside {

namespace fs = std::filesystem;

/// Session configuration, read from a JSON file. Relative paths resolve
/// against the file's directory.
struct ServiceConfig {
    std::vector<fs::path> embeddings;  // registry; each set is keyed by its config_tag
    std::vector<fs::path> groupings;
    std::optional<fs::path> annotations;
    std::optional<fs::path> model;
    std::optional<fs::path> log;  // persisted decision log (JSON lines)
    std::vector<int> ladder;      // rung resolutions; empty → every color set's resolution
    std::size_t ladder_rungs = 3;
    std::size_t histogram_bins = 20;
    std::uint64_t seed = 0;
    std::string host = "127.0.0.1";
    int port = 8080;
    SelectionOptions selection;
    RecommendOptions recommend;
};

ServiceConfig parse_config(const Json& j, const fs::path& base_dir);
ServiceConfig load_config(const fs::path& path);

struct ApiResponse {
    int status = 200;
    Json body;
};

/// The single analysis session behind the HTTP API. Handlers are safe to
/// call concurrently: log appends go through one mutex and readers work on
/// immutable snapshots of the log.
class Session {
public:
    explicit Session(ServiceConfig config, DecisionLog::Clock clock = {});

    ApiResponse classes() const;
    ApiResponse report(const std::string& config_tag, const std::string& grouping_name = {}) const;
    ApiResponse evaluate_grouping(const std::string& body);
    ApiResponse select_color(const std::string& body);
    ApiResponse ladder(bool commit);
    ApiResponse log() const;
    ApiResponse recommendation() const;

    const ServiceConfig& config() const noexcept { return config_; }
    std::shared_ptr<const DecisionLog> log_snapshot() const;

private:
    const EmbeddingSet& set_for(const std::string& config_tag) const;
    const EmbeddingSet& default_set() const;
    /// Appends entries produced by `fn` atomically; `expected` enforces the
    /// caller's view of the log length.
    template <class Fn>
    auto commit(std::optional<std::size_t> expected, Fn&& fn);

    ServiceConfig config_;
    std::map<std::string, EmbeddingSet> sets_;
    std::vector<std::string> set_order_;
    std::map<std::string, ClassGrouping> groupings_;
    std::vector<BBoxAnnotation> annotations_;
    std::optional<ModelSpec> model_;

    mutable std::mutex write_mutex_;
    std::shared_ptr<const DecisionLog> log_;
    DecisionLog::Clock clock_;
};

/// Routes /api/* onto `session`.
void mount(httplib::Server& server, Session& session);

}  // namespace dside
