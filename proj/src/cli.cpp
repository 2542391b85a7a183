#include "dside/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <iomanip>
#include <iostream>
#include <optional>

#include "dside/errors.hpp"
#include "dside/io.hpp"
#include "dside/serialize.hpp"
#include "dside/service.hpp"

namespace dside {

namespace {

struct Common {
    std::string config;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Session config file (JSON); flags override it");
    cmd->add_option("--out", c.out, "Write the report here instead of stdout");
}

std::optional<ServiceConfig> maybe_config(const Common& c) {
    if (c.config.empty()) return std::nullopt;
    return load_config(c.config);
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
    if (c.out.empty())
        out << text;
    else
        write_text(c.out, text);
}

std::string pick(const std::string& flag, const std::optional<ServiceConfig>& cfg,
                 std::optional<fs::path> ServiceConfig::*member, const char* what) {
    if (!flag.empty()) return flag;
    if (cfg && (*cfg).*member) return ((*cfg).*member)->string();
    throw InputError(std::string("missing ") + what + " (pass the flag or set it in --config)");
}

std::string pick_optional(const std::string& flag, const std::optional<ServiceConfig>& cfg,
                          std::optional<fs::path> ServiceConfig::*member) {
    if (!flag.empty()) return flag;
    if (cfg && (*cfg).*member) return ((*cfg).*member)->string();
    return {};
}

void persist_new(const DecisionLog& log, std::size_t from, const fs::path& path) {
    for (std::size_t i = from; i < log.size(); ++i) append_log_entry(log.entries()[i], path);
}

std::string fixed(double v, int decimals) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(decimals) << v;
    return s.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Data-side attribute analysis for lightweight CNN sizing"};
    app.require_subcommand(1);

    // analyze-scale
    Common scale_c;
    std::string scale_ann, scale_grouping, scale_rejects;
    std::optional<int> scale_res;
    std::optional<std::size_t> scale_bins;
    auto* scale = app.add_subcommand("analyze-scale", "Object-scale statistics and the minimum layer bound");
    add_common(scale, scale_c);
    scale->add_option("--annotations", scale_ann, "COCO-style instances file");
    scale->add_option("--grouping", scale_grouping, "Grouping file applied to class ids");
    scale->add_option("--resolution", scale_res, "Resize images so the longer side is this many pixels");
    scale->add_option("--bins", scale_bins, "Histogram bins over [0,1]");

    // estimate-flops
    Common flops_c;
    std::string flops_model, flops_mode = "color";
    std::vector<int> flops_sweep;
    auto* flops = app.add_subcommand("estimate-flops", "Conv-layer FLOP accounting, color vs gray");
    add_common(flops, flops_c);
    flops->add_option("--model", flops_model, "Model spec file");
    flops->add_option("--mode", flops_mode, "color or gray");
    flops->add_option("--sweep", flops_sweep, "Square input sizes for a resolution sweep")->delimiter(',');

    // similarity
    Common sim_c;
    std::string sim_emb, sim_grouping, sim_format = "structured";
    auto* sim = app.add_subcommand("similarity", "Intra/inter-class similarity report");
    add_common(sim, sim_c);
    sim->add_option("--embeddings", sim_emb, "Embedding manifest (.semb)")->required();
    sim->add_option("--grouping", sim_grouping, "Grouping file");
    sim->add_option("--format", sim_format, "structured or markdown");

    // select-classes
    Common cls_c;
    std::string cls_emb, cls_log;
    std::vector<std::string> cls_groupings;
    std::optional<double> cls_stop;
    auto* cls = app.add_subcommand("select-classes", "Evaluate class groupings by delta S2");
    add_common(cls, cls_c);
    cls->add_option("--embeddings", cls_emb, "Embedding manifest (.semb)")->required();
    cls->add_option("--grouping", cls_groupings, "Grouping file(s), evaluated in order")->required();
    cls->add_option("--log", cls_log, "Decision log (JSON lines)");
    cls->add_option("--stop-threshold", cls_stop, "Suggest stopping at or below this delta S2");

    // select-color
    Common col_c;
    std::string col_color, col_gray, col_grouping, col_log;
    bool col_per_class = false;
    auto* col = app.add_subcommand("select-color", "Choose grayscale or color input");
    add_common(col, col_c);
    col->add_option("--color", col_color, "Color-mode embedding manifest")->required();
    col->add_option("--gray", col_gray, "Gray-mode embedding manifest")->required();
    col->add_option("--grouping", col_grouping, "Grouping file");
    col->add_flag("--per-class", col_per_class, "If color wins, also run the per-class option");
    col->add_option("--log", col_log, "Decision log (JSON lines)");

    // select-resolution
    Common res_c;
    std::vector<std::string> res_rungs;
    std::string res_grouping, res_ann, res_log;
    std::optional<int> res_floor;
    auto* res = app.add_subcommand("select-resolution", "Walk the halving resolution ladder");
    add_common(res, res_c);
    res->add_option("--rung", res_rungs, "Embedding manifest per rung (resolution from the manifest)")->required();
    res->add_option("--grouping", res_grouping, "Grouping file (default: best class grouping in the log)");
    res->add_option("--annotations", res_ann, "Annotations for the small-object warning");
    res->add_option("--bmax-floor", res_floor, "Warn when a class's b_max drops below this many pixels");
    res->add_option("--log", res_log, "Decision log (JSON lines)");

    // recommend
    Common rec_c;
    std::string rec_log, rec_ann, rec_model;
    auto* rec = app.add_subcommand("recommend", "Combine the procedures into a configuration");
    add_common(rec, rec_c);
    rec->add_option("--log", rec_log, "Decision log (JSON lines)");
    rec->add_option("--annotations", rec_ann, "COCO-style instances file");
    rec->add_option("--model", rec_model, "Model spec for the FLOP estimate");

    // serve
    std::string serve_config, serve_bind;
    auto* serve = app.add_subcommand("serve", "HTTP API for the grouping explorer");
    serve->add_option("--config", serve_config, "Session config file (JSON)")->required();
    serve->add_option("--bind", serve_bind, "host:port, overrides the config");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (scale->parsed()) {
            const auto cfg = maybe_config(scale_c);
            const auto load = read_annotations(pick(scale_ann, cfg, &ServiceConfig::annotations, "--annotations"));
            std::optional<ClassGrouping> g;
            if (!scale_grouping.empty()) g = read_grouping(scale_grouping);
            ScaleOptions opts;
            opts.grouping = g ? &*g : nullptr;
            opts.resolution = scale_res;
            opts.bins = scale_bins.value_or(cfg ? cfg->histogram_bins : 20);
            Json j = to_json(scale_stats(load.annotations, opts));
            Json rejects = Json::array();
            for (const auto& r : load.rejects)
                rejects.push_back({{"record", r.record}, {"instance_id", r.instance_id}, {"reason", r.reason}});
            j["rejects"] = rejects;
            for (const auto& r : load.rejects)
                err << "rejected annotation " << r.instance_id << " (record " << r.record << "): " << r.reason << "\n";
            emit(scale_c, j.dump(2) + "\n", out);
        } else if (flops->parsed()) {
            const auto cfg = maybe_config(flops_c);
            const auto model = read_model_spec(pick(flops_model, cfg, &ServiceConfig::model, "--model"));
            const auto mode = parse_color_mode(flops_mode);
            const auto r = model_flops(model, mode);
            Json j = to_json(r);
            if (!flops_sweep.empty()) {
                Json sweep = Json::array();
                for (const auto& [size, total] : resolution_sweep(model, flops_sweep))
                    sweep.push_back({{"size", size}, {"flops", total}});
                j["sweep"] = sweep;
            }
            if (!flops_c.out.empty()) write_text(flops_c.out, j.dump(2) + "\n");
            out << "model " << r.model << " (" << to_string(mode) << ", " << model.input_w << "x" << model.input_h
                << ")\n";
            for (const auto& l : r.per_layer)
                out << "  " << l.name << " " << l.flops << " FLOPs " << format_kflops(l.flops) << " kFLOPS\n";
            out << "layer1 " << to_string(mode) << " "
                << format_kflops(mode == ColorMode::gray ? r.layer1_gray : r.layer1_color) << " kFLOPS\n";
            out << "layer1 color " << format_kflops(r.layer1_color) << " kFLOPS, gray " << format_kflops(r.layer1_gray)
                << " kFLOPS\n";
            out << "total color " << format_kflops(r.total_color) << " kFLOPS, gray " << format_kflops(r.total_gray)
                << " kFLOPS, ratio " << fixed(100.0 * r.gray_to_color_ratio(), 2) << "%\n";
            if (j.contains("sweep"))
                for (const auto& s : j["sweep"])
                    out << "sweep " << s["size"].get<int>() << " " << format_kflops(s["flops"].get<std::int64_t>())
                        << " kFLOPS\n";
        } else if (sim->parsed()) {
            const auto set = read_embeddings(sim_emb);
            const auto fmt = parse_report_format(sim_format);
            const auto report = sim_grouping.empty() ? similarity_report(set)
                                                     : similarity_report(set, read_grouping(sim_grouping));
            emit(sim_c, render_report(report, fmt), out);
        } else if (cls->parsed()) {
            const auto cfg = maybe_config(cls_c);
            const std::string log_path = pick(cls_log, cfg, &ServiceConfig::log, "--log");
            const auto set = read_embeddings(cls_emb);
            auto log = read_log(log_path);
            const std::size_t before = log.size();
            SelectionOptions opts = cfg ? cfg->selection : SelectionOptions{};
            if (cls_stop) opts.stop_delta_s2 = cls_stop;
            Json evals = Json::array();
            for (const auto& path : cls_groupings) {
                const auto g = read_grouping(path);
                const auto eval = evaluate_grouping(set, g, log, opts);
                Json e = to_json(eval.report);
                e["seq"] = eval.entry.seq;
                e["improved"] = eval.entry.improved;
                e["stop_suggested"] = eval.stop_suggested;
                Json guidance = Json::array();
                for (const auto& row : grouping_guidance(set, g)) guidance.push_back(to_json(row));
                e["guidance"] = guidance;
                evals.push_back(e);
                err << "grouping " << g.name << ": delta_s2 "
                    << (eval.report.delta_s2 ? fixed(*eval.report.delta_s2, 6) : std::string("undefined"))
                    << (eval.entry.improved ? " (best so far)" : "") << (eval.stop_suggested ? " (stop suggested)" : "")
                    << "\n";
            }
            persist_new(log, before, log_path);
            const auto best = log.best(Procedure::classes);
            emit(cls_c, Json{{"evaluations", evals}, {"best_seq", best ? Json(*best) : Json(nullptr)}}.dump(2) + "\n",
                 out);
        } else if (col->parsed()) {
            const auto cfg = maybe_config(col_c);
            const std::string log_path = pick(col_log, cfg, &ServiceConfig::log, "--log");
            const auto color = read_embeddings(col_color);
            const auto gray = read_embeddings(col_gray);
            std::optional<ClassGrouping> g;
            if (!col_grouping.empty()) g = read_grouping(col_grouping);
            const ClassGrouping* gp = g ? &*g : nullptr;
            const std::string gname = g ? g->name : "identity";
            auto log = read_log(log_path);
            const std::size_t before = log.size();
            const auto decision = select_color(color, gray, gp);
            record_color(decision, color, log, gname);
            Json j = to_json(decision);
            if (col_per_class && decision.decision == ColorMode::color) {
                const auto pc = select_color_per_class(color, gray, gp);
                record_color(pc, decision, color, log, gname);
                j["per_class"] = to_json(pc);
            }
            persist_new(log, before, log_path);
            err << "color decision: " << to_string(decision.decision) << " (s2_max gray " << fixed(decision.s2_max_gray, 6)
                << ", color " << fixed(decision.s2_max_color, 6) << ")\n";
            emit(col_c, j.dump(2) + "\n", out);
        } else if (res->parsed()) {
            const auto cfg = maybe_config(res_c);
            const std::string log_path = pick(res_log, cfg, &ServiceConfig::log, "--log");
            auto log = read_log(log_path);
            const std::size_t before = log.size();
            std::vector<EmbeddingSet> sets;
            for (const auto& p : res_rungs) sets.push_back(read_embeddings(p));
            std::map<int, const EmbeddingSet*> by_res;
            std::vector<int> resolutions;
            for (const auto& s : sets) {
                if (s.resolution() <= 0) throw InputError("manifest '" + s.config_tag() + "' has no resolution");
                if (!by_res.emplace(s.resolution(), &s).second)
                    throw InputError("two rungs share resolution " + std::to_string(s.resolution()));
                resolutions.push_back(s.resolution());
            }
            std::optional<ClassGrouping> g;
            if (!res_grouping.empty())
                g = read_grouping(res_grouping);
            else if (auto b = log.best(Procedure::classes))
                g = log.entries()[*b].grouping;
            std::vector<BBoxAnnotation> anns;
            if (auto a = pick_optional(res_ann, cfg, &ServiceConfig::annotations); !a.empty())
                anns = read_annotations(a).annotations;
            LadderOptions opts;
            opts.grouping = g ? &*g : nullptr;
            opts.annotations = anns;
            opts.bmax_floor = res_floor.value_or(cfg ? cfg->recommend.bmax_floor : 8);
            const auto ladder = resolution_ladder(resolutions, by_res, opts);
            record_ladder(ladder, log, g ? g->name : "identity", sets.front().color_mode());
            persist_new(log, before, log_path);
            for (const auto& w : ladder.warnings) err << "warning: " << w << "\n";
            err << "chosen resolution: " << ladder.chosen_resolution << "\n";
            emit(res_c, to_json(ladder).dump(2) + "\n", out);
        } else if (rec->parsed()) {
            const auto cfg = maybe_config(rec_c);
            const auto log = read_log(pick(rec_log, cfg, &ServiceConfig::log, "--log"));
            // State first: a missing procedure is reported before input problems.
            std::vector<BBoxAnnotation> anns;
            std::optional<ModelSpec> model;
            if (log.best(Procedure::classes) && log.best(Procedure::color) && log.best(Procedure::resolution)) {
                anns = read_annotations(pick(rec_ann, cfg, &ServiceConfig::annotations, "--annotations")).annotations;
                if (auto m = pick_optional(rec_model, cfg, &ServiceConfig::model); !m.empty()) model = read_model_spec(m);
            }
            RecommendOptions opts = cfg ? cfg->recommend : RecommendOptions{};
            const auto r = recommend(log, anns, model ? &*model : nullptr, opts);
            for (const auto& w : r.warnings) err << "warning: " << w << "\n";
            emit(rec_c, to_json(r).dump(2) + "\n", out);
        } else if (serve->parsed()) {
            auto cfg = load_config(serve_config);
            if (!serve_bind.empty()) {
                const auto colon = serve_bind.rfind(':');
                if (colon == std::string::npos) throw InputError("--bind must be host:port");
                cfg.host = serve_bind.substr(0, colon);
                cfg.port = std::stoi(serve_bind.substr(colon + 1));
            }
            Session session(cfg);
            httplib::Server server;
            mount(server, session);
            err << "serving on http://" << cfg.host << ":" << cfg.port << "\n";
            if (!server.listen(cfg.host, cfg.port)) throw StateError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
        }
    } catch (const StateError& e) {
        err << "error: " << e.what() << "\n";
        return kExitState;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}

}  // namespace dside
