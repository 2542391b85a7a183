#include "dside/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <set>

#include "dside/errors.hpp"
#include "dside/io.hpp"

namespace dside {

// ---- config ----------------------------------------------------------------

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(std::string("config: field '") + key + "' has the wrong type");
    }
}

}  // namespace

ServiceConfig parse_config(const Json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw FormatError("config: top level must be an object");
    ServiceConfig c;
    for (const auto& p : get_or<std::vector<std::string>>(j, "embeddings", {})) c.embeddings.push_back(resolve(base_dir, p));
    for (const auto& p : get_or<std::vector<std::string>>(j, "groupings", {})) c.groupings.push_back(resolve(base_dir, p));
    if (auto a = get_or<std::string>(j, "annotations", ""); !a.empty()) c.annotations = resolve(base_dir, a);
    if (auto m = get_or<std::string>(j, "model", ""); !m.empty()) c.model = resolve(base_dir, m);
    if (auto l = get_or<std::string>(j, "log", ""); !l.empty()) c.log = resolve(base_dir, l);
    c.ladder = get_or<std::vector<int>>(j, "ladder", {});
    c.ladder_rungs = get_or<std::size_t>(j, "ladder_rungs", c.ladder_rungs);
    c.histogram_bins = get_or<std::size_t>(j, "histogram_bins", c.histogram_bins);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (auto bind = get_or<std::string>(j, "bind", ""); !bind.empty()) {
        const auto colon = bind.rfind(':');
        if (colon == std::string::npos) throw FormatError("config: bind must be host:port");
        c.host = bind.substr(0, colon);
        try {
            c.port = std::stoi(bind.substr(colon + 1));
        } catch (const std::exception&) {
            throw FormatError("config: bind port is not a number");
        }
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        c.recommend.bmax_floor = get_or<int>(t, "bmax_floor", c.recommend.bmax_floor);
        c.recommend.small_class_count = get_or<std::size_t>(t, "small_class_count", c.recommend.small_class_count);
        c.recommend.high_s2 = get_or<double>(t, "high_s2", c.recommend.high_s2);
        if (t.contains("stop_delta_s2") && !t["stop_delta_s2"].is_null())
            c.selection.stop_delta_s2 = get_or<double>(t, "stop_delta_s2", 0.0);
    }
    if (c.histogram_bins == 0) throw FormatError("config: histogram_bins must be positive");
    return c;
}

ServiceConfig load_config(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error&) {
        throw FormatError(path.string() + ": invalid JSON");
    }
    return parse_config(j, path.parent_path());
}

// ---- session ---------------------------------------------------------------

namespace {

struct ApiError {
    int status;
    std::string message;
    std::string field;
};

ApiResponse error_response(int status, const std::string& message, const std::string& field = {}) {
    Json body{{"error", message}};
    if (!field.empty()) body["field"] = field;
    return {status, body};
}

template <class Fn>
ApiResponse guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ApiError& e) {
        return error_response(e.status, e.message, e.field);
    } catch (const FormatError& e) {
        return error_response(400, e.what());
    } catch (const InputError& e) {
        return error_response(422, e.what());
    } catch (const StateError& e) {
        return error_response(409, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

Json parse_body(const std::string& body) {
    Json j;
    try {
        j = Json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw ApiError{400, "request body is not valid JSON", ""};
    }
    if (!j.is_object()) throw ApiError{400, "request body must be a JSON object", ""};
    return j;
}

std::optional<std::size_t> expected_length(const Json& body) {
    if (!body.contains("expected_log_length") || body["expected_log_length"].is_null()) return std::nullopt;
    if (!body["expected_log_length"].is_number_unsigned())
        throw ApiError{400, "expected_log_length must be a non-negative integer", "expected_log_length"};
    return body["expected_log_length"].get<std::size_t>();
}

std::string string_field(const Json& body, const char* key, bool required) {
    if (!body.contains(key) || body[key].is_null()) {
        if (required) throw ApiError{400, std::string("missing field '") + key + "'", key};
        return {};
    }
    if (!body[key].is_string()) throw ApiError{400, std::string("field '") + key + "' must be a string", key};
    return body[key].get<std::string>();
}

}  // namespace

Session::Session(ServiceConfig config, DecisionLog::Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {
    for (const auto& p : config_.embeddings) {
        auto set = read_embeddings(p);
        std::string tag = set.config_tag().empty() ? p.stem().string() : set.config_tag();
        if (sets_.count(tag)) throw InputError("two embedding sets share config tag '" + tag + "'");
        set_order_.push_back(tag);
        sets_.emplace(tag, std::move(set));
    }
    for (const auto& p : config_.groupings) {
        auto g = read_grouping(p);
        groupings_[g.name] = std::move(g);
    }
    if (config_.annotations) annotations_ = read_annotations(*config_.annotations).annotations;
    if (config_.model) model_ = read_model_spec(*config_.model);
    log_ = std::make_shared<const DecisionLog>(config_.log ? read_log(*config_.log, clock_) : DecisionLog(clock_));
}

std::shared_ptr<const DecisionLog> Session::log_snapshot() const { return std::atomic_load(&log_); }

const EmbeddingSet& Session::set_for(const std::string& config_tag) const {
    if (config_tag.empty()) return default_set();
    auto it = sets_.find(config_tag);
    if (it == sets_.end()) throw ApiError{404, "no embedding set with config tag '" + config_tag + "'", "config"};
    return it->second;
}

const EmbeddingSet& Session::default_set() const {
    if (sets_.empty()) throw StateError("session has no embedding sets");
    // highest-resolution color set, first registered on ties
    const EmbeddingSet* best = nullptr;
    for (const auto& tag : set_order_) {
        const auto& s = sets_.at(tag);
        if (s.color_mode() != "color") continue;
        if (!best || s.resolution() > best->resolution()) best = &s;
    }
    return best ? *best : sets_.at(set_order_.front());
}

template <class Fn>
auto Session::commit(std::optional<std::size_t> expected, Fn&& fn) {
    std::lock_guard lock(write_mutex_);
    auto current = std::atomic_load(&log_);
    if (expected && *expected != current->size())
        throw ApiError{409, "decision log has " + std::to_string(current->size()) + " entries, request expected " +
                                std::to_string(*expected),
                       "expected_log_length"};
    auto next = std::make_shared<DecisionLog>(*current);
    auto result = fn(*next);
    if (config_.log)
        for (std::size_t i = current->size(); i < next->size(); ++i) append_log_entry(next->entries()[i], *config_.log);
    std::atomic_store(&log_, std::shared_ptr<const DecisionLog>(std::move(next)));
    return result;
}

ApiResponse Session::classes() const {
    return guarded([&] {
        const auto& set = default_set();
        Json classes = Json::array();
        for (const auto& c : set.classes()) classes.push_back({{"class_id", c}, {"instances", set.members(c).size()}});
        Json configs = Json::array();
        for (const auto& tag : set_order_) {
            const auto& s = sets_.at(tag);
            configs.push_back({{"config_tag", tag},
                               {"color_mode", s.color_mode()},
                               {"resolution", s.resolution()},
                               {"grouping", s.grouping_name()},
                               {"records", s.size()}});
        }
        Json groupings = Json::array();
        for (const auto& [name, g] : groupings_) groupings.push_back(to_json(g));
        return ApiResponse{200, Json{{"config_tag", set.config_tag()},
                                     {"classes", classes},
                                     {"configs", configs},
                                     {"groupings", groupings}}};
    });
}

ApiResponse Session::report(const std::string& config_tag, const std::string& grouping_name) const {
    return guarded([&] {
        const auto& set = set_for(config_tag);
        if (grouping_name.empty() || grouping_name == "identity") return ApiResponse{200, to_json(similarity_report(set))};
        auto it = groupings_.find(grouping_name);
        if (it == groupings_.end()) throw ApiError{404, "unknown grouping '" + grouping_name + "'", "grouping"};
        return ApiResponse{200, to_json(similarity_report(set, it->second))};
    });
}

ApiResponse Session::evaluate_grouping(const std::string& body_text) {
    return guarded([&] {
        const Json body = parse_body(body_text);
        if (!body.contains("grouping")) throw ApiError{400, "missing field 'grouping'", "grouping"};
        ClassGrouping grouping;
        try {
            grouping = grouping_from_json(body["grouping"]);
        } catch (const FormatError& e) {
            throw ApiError{400, e.what(), "grouping"};
        }
        const auto& set = set_for(string_field(body, "config", false));
        const std::string note = string_field(body, "note", false);
        return commit(expected_length(body), [&](DecisionLog& log) {
            const auto eval = dside::evaluate_grouping(set, grouping, log, config_.selection, note);
            Json out = to_json(eval.report);
            out["entry"] = to_json(eval.entry, log.is_best_so_far(eval.entry.seq));
            out["is_best_so_far"] = log.is_best_so_far(eval.entry.seq);
            out["stop_suggested"] = eval.stop_suggested;
            Json guidance = Json::array();
            for (const auto& row : grouping_guidance(set, grouping)) guidance.push_back(to_json(row));
            out["guidance"] = guidance;
            return ApiResponse{200, out};
        });
    });
}

ApiResponse Session::select_color(const std::string& body_text) {
    return guarded([&] {
        const Json body = parse_body(body_text);
        const auto& color = set_for(string_field(body, "color", true));
        const auto& gray = set_for(string_field(body, "gray", true));
        const bool per_class = body.value("per_class", false);
        std::optional<ClassGrouping> grouping;
        if (auto name = string_field(body, "grouping", false); !name.empty() && name != "identity") {
            auto it = groupings_.find(name);
            if (it == groupings_.end()) throw ApiError{404, "unknown grouping '" + name + "'", "grouping"};
            grouping = it->second;
        }
        const ClassGrouping* gp = grouping ? &*grouping : nullptr;
        const std::string gname = grouping ? grouping->name : "identity";
        return commit(expected_length(body), [&](DecisionLog& log) {
            const auto decision = dside::select_color(color, gray, gp);
            Json out = to_json(decision);
            const LogEntry* entry = &record_color(decision, color, log, gname);
            if (per_class && decision.decision == ColorMode::color) {
                const auto pc = select_color_per_class(color, gray, gp);
                out["per_class"] = to_json(pc);
                entry = &record_color(pc, decision, color, log, gname);
            }
            out["entry"] = to_json(*entry, log.is_best_so_far(entry->seq));
            return ApiResponse{200, out};
        });
    });
}

ApiResponse Session::ladder(bool commit_rungs) {
    return guarded([&] {
        std::map<int, const EmbeddingSet*> by_res;
        for (const auto& tag : set_order_) {
            const auto& s = sets_.at(tag);
            if (s.color_mode() == "color" && s.resolution() > 0) by_res.emplace(s.resolution(), &s);
        }
        std::vector<int> rungs = config_.ladder;
        if (rungs.empty()) {
            for (auto it = by_res.rbegin(); it != by_res.rend() && rungs.size() < config_.ladder_rungs; ++it)
                rungs.push_back(it->first);
        }
        auto snapshot = log_snapshot();
        std::optional<ClassGrouping> grouping;
        if (auto b = snapshot->best(Procedure::classes)) grouping = snapshot->entries()[*b].grouping;
        LadderOptions opts;
        opts.grouping = grouping ? &*grouping : nullptr;
        opts.annotations = annotations_;
        opts.bmax_floor = config_.recommend.bmax_floor;
        const auto result = resolution_ladder(rungs, by_res, opts);
        Json out = to_json(result);
        if (commit_rungs) {
            const std::string gname = grouping ? grouping->name : "identity";
            commit(std::nullopt, [&](DecisionLog& log) {
                record_ladder(result, log, gname, "color");
                return 0;
            });
        }
        out["committed"] = commit_rungs;
        return ApiResponse{200, out};
    });
}

ApiResponse Session::log() const {
    return guarded([&] { return ApiResponse{200, to_json(*log_snapshot())}; });
}

ApiResponse Session::recommendation() const {
    return guarded([&] {
        auto snapshot = log_snapshot();
        const auto rec = recommend(*snapshot, annotations_, model_ ? &*model_ : nullptr, config_.recommend);
        return ApiResponse{200, to_json(rec)};
    });
}

// ---- HTTP ------------------------------------------------------------------

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

}  // namespace

void mount(httplib::Server& server, Session& session) {
    server.Get("/api/classes", [&](const httplib::Request&, httplib::Response& res) { send(res, session.classes()); });
    server.Get("/api/report", [&](const httplib::Request& req, httplib::Response& res) {
        send(res, session.report(req.get_param_value("config"), req.get_param_value("grouping")));
    });
    server.Post("/api/grouping/evaluate", [&](const httplib::Request& req, httplib::Response& res) {
        send(res, session.evaluate_grouping(req.body));
    });
    server.Post("/api/color/select", [&](const httplib::Request& req, httplib::Response& res) {
        send(res, session.select_color(req.body));
    });
    server.Get("/api/ladder", [&](const httplib::Request& req, httplib::Response& res) {
        const auto c = req.get_param_value("commit");
        send(res, session.ladder(c == "true" || c == "1"));
    });
    server.Get("/api/log", [&](const httplib::Request&, httplib::Response& res) { send(res, session.log()); });
    server.Get("/api/recommendation",
               [&](const httplib::Request&, httplib::Response& res) { send(res, session.recommendation()); });
}

}  // namespace dside
