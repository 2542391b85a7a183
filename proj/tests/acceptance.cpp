// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Uses only the shipped fixtures and seeded synthetic data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dside/attributes.hpp"
#include "dside/flops.hpp"
#include "dside/io.hpp"
#include "dside/selection.hpp"
#include "dside/similarity.hpp"
#include "dside/synthetic.hpp"
#include "oracle.hpp"

using namespace dside;

namespace {

const fs::path kData = DSIDE_DATA_DIR;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream s;
            s.precision(17);
            s << what << ": got " << got << ", want " << want << " ±" << tol;
            failures.push_back(s.str());
        }
    }
};

struct Criterion {
    std::string name;
    double budget_s;
    std::function<std::string(Check&)> run;  // returns a short summary
};

std::string layer_bound_examples(Check& c) {
    c.expect(min_layers(250) == 7, "min_layers(250) == 7");
    c.expect(min_layers(15) == 3, "min_layers(15) == 3");
    c.expect(receptive_field(7) == 255 && receptive_field(6) == 127, "receptive fields around 250");
    c.expect(receptive_field(3) == 15, "receptive_field(3) == 15");
    return "min_layers(250)=" + std::to_string(min_layers(250)) + " min_layers(15)=" + std::to_string(min_layers(15));
}

std::string first_layer_flops(Check& c) {
    const auto vgg = model_flops(read_model_spec(kData / "models/vgg19-32.spec"), ColorMode::color);
    const auto en = model_flops(read_model_spec(kData / "models/en-b0-32.spec"), ColorMode::color);
    c.expect(vgg.layer1_color == 1835008, "VGG-19 layer-1 color == 1835008");
    c.expect(vgg.layer1_gray == 655360, "VGG-19 layer-1 gray == 655360");
    c.expect(en.layer1_color == 884736, "EN-B0 layer-1 color == 884736");
    c.expect(en.layer1_gray == 294912, "EN-B0 layer-1 gray == 294912");
    c.expect(format_kflops(vgg.layer1_color) == "1835.01", "format 1835.01");
    c.expect(format_kflops(vgg.layer1_gray) == "655.36", "format 655.36");
    c.expect(format_kflops(en.layer1_color, 1) == "884.7", "format 884.7");
    c.expect(format_kflops(en.layer1_gray, 1) == "294.9", "format 294.9");
    return format_kflops(vgg.layer1_color) + " / " + format_kflops(vgg.layer1_gray) + " / " +
           format_kflops(en.layer1_color, 1) + " / " + format_kflops(en.layer1_gray, 1) + " kFLOPS";
}

std::string all_layer_ratios(Check& c) {
    std::string summary;
    for (auto [file, want] : {std::pair{"vgg19-32.spec", 99.7}, std::pair{"en-b0-32.spec", 98.1}}) {
        const auto r = model_flops(read_model_spec(kData / "models" / file), ColorMode::gray);
        const double pct = 100.0 * r.gray_to_color_ratio();
        c.near(pct, want, 0.5, std::string(file) + " gray/color %");
        c.expect(r.total_color - r.total_gray == r.layer1_color - r.layer1_gray,
                 std::string(file) + " total delta equals layer-1 delta");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s%s %.2f%%", summary.empty() ? "" : ", ", r.model.c_str(), pct);
        summary += buf;
    }
    return summary;
}

// Random sets built from offset clusters so the mean inter-class similarity
// stays well away from zero and ΔS2 is well conditioned.
EmbeddingSet random_cluster_set(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim_d(2, 64), classes_d(2, 8);
    std::uniform_real_distribution<double> u(-1.0, 1.0), sig(0.1, 1.5);
    const std::size_t dim = dim_d(rng), classes = classes_d(rng);
    const std::size_t per_class_max = std::max<std::size_t>(2, 200 / classes);
    std::uniform_int_distribution<std::size_t> size_d(2, per_class_max);
    std::vector<synthetic::Cluster> cs;
    for (std::size_t k = 0; k < classes; ++k) {
        std::vector<double> centroid(dim);
        for (auto& x : centroid) x = 1.0 + u(rng);
        cs.push_back({"k" + std::to_string(k), centroid, sig(rng), size_d(rng)});
    }
    return synthetic::gaussian_clusters(cs, rng());
}

std::string oracle_equivalence(Check& c) {
    std::mt19937_64 rng(20240611);
    double worst = 0;
    std::size_t largest = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto set = random_cluster_set(rng);
        largest = std::max(largest, set.size());
        c.expect(set.size() <= 200 && set.dimension() <= 64, "trial sizes within n <= 200, d <= 64");
        const auto r = similarity_report(set);
        const auto o = oracle::report(set);
        const std::string t = "trial " + std::to_string(trial);
        auto track = [&](double got, double want, const std::string& what) {
            worst = std::max(worst, std::abs(got - want));
            c.near(got, want, 1e-9, t + " " + what);
        };
        for (const auto& [cls, in] : o.intra) {
            const auto* st = r.stats_for(cls);
            if (!st) {
                c.expect(false, t + " missing stats for " + cls);
                continue;
            }
            track(st->s1, in.s1, cls + " S1");
            track(st->sigma2, in.sigma2, cls + " sigma2");
        }
        c.expect(r.s2.labels() == o.labels, t + " labels");
        for (std::size_t i = 0; i < o.labels.size(); ++i)
            for (std::size_t j = i + 1; j < o.labels.size(); ++j) track(*r.s2.at(i, j), o.s2[i][j], "S2");
        track(r.s2_max, o.s2_max, "S2 max");
        c.expect(r.delta_s2.has_value() == o.delta.has_value(), t + " delta defined");
        if (r.delta_s2 && o.delta) track(*r.delta_s2, *o.delta, "delta S2");
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "100 sets, n<=%zu, max |diff| %.1e", largest, worst);
    return buf;
}

std::string separation_monotonicity(Check& c) {
    std::string summary;
    double prev = 2.0;
    for (double s : {0.5, 1.0, 2.0, 4.0}) {
        const auto set = synthetic::separated_clusters(4, 16, s, 50, 7);
        const double m = similarity_report(set).s2_max;
        c.expect(m < prev, "S2 max strictly decreasing at s=" + std::to_string(s));
        prev = m;
        char buf[48];
        std::snprintf(buf, sizeof buf, "%ss=%.1f:%.4f", summary.empty() ? "" : " ", s, m);
        summary += buf;
    }
    return summary;
}

std::string procedure_properties(Check& c) {
    const auto fx = kData / "fixtures";
    const auto c64 = read_embeddings(fx / "fx-color-64.semb");
    const auto c32 = read_embeddings(fx / "fx-color-32.semb");
    const auto c16 = read_embeddings(fx / "fx-color-16.semb");
    const auto g64 = read_embeddings(fx / "fx-gray-64.semb");
    auto fixed = [] { return std::string("2024-01-01T00:00:00Z"); };

    // identity grouping is the plain report
    DecisionLog log(fixed);
    const auto id = evaluate_grouping(c64, ClassGrouping::identity(c64.classes()), log);
    c.expect(id.report == similarity_report(c64), "identity grouping equals the ungrouped report");

    // argmin with ties to the earliest, replayed identically
    for (const char* g : {"merge-riders.json", "drop-truck.json", "identity.json", "drop-truck.json"})
        evaluate_grouping(c64, read_grouping(fx / g), log);
    c.expect(*log.best(Procedure::classes) == 2, "best grouping is the first drop-truck evaluation");
    c.expect(!log.is_best_so_far(4), "repeated equal delta does not take the flag");
    const auto replayed = DecisionLog::replay(log.entries(), fixed);
    for (std::size_t i = 0; i < log.size(); ++i)
        c.expect(replayed.is_best_so_far(i) == log.is_best_so_far(i), "replay flag " + std::to_string(i));
    c.expect(replayed.best(Procedure::classes) == log.best(Procedure::classes), "replay best");

    // ladder result independent of evaluation order
    const std::map<int, const EmbeddingSet*> sets{{64, &c64}, {32, &c32}, {16, &c16}};
    std::vector<int> order{16, 32, 64};
    std::set<int> chosen;
    do chosen.insert(resolution_ladder(order, sets).chosen_resolution);
    while (std::next_permutation(order.begin(), order.end()));
    c.expect(chosen.size() == 1, "ladder choice independent of order");

    // a tie between color and gray goes to gray
    c.expect(select_color(c64, c64).decision == ColorMode::gray, "select_color tie -> gray");
    c.expect(select_color(c64, g64).decision == ColorMode::gray, "fixture gray set is chosen");

    return "best grouping " + log.entries()[*log.best(Procedure::classes)].config.grouping_name + ", ladder " +
           std::to_string(*chosen.begin()) + ", tie gray";
}

std::string performance(Check& c) {
    std::vector<synthetic::Cluster> cs;
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        std::vector<double> centroid(128);
        for (auto& x : centroid) x = nd(rng);
        cs.push_back({"c" + std::to_string(k), centroid, 1.0, 1000});
    }
    const auto set = synthetic::gaussian_clusters(cs, 5, "perf", "perf");
    const auto path = fs::temp_directory_path() / ("dside-perf-" + std::to_string(rng()) + ".semb");
    write_embeddings(set, path);

    auto t0 = Clock::now();
    const auto loaded = read_embeddings(path);
    const double load_s = seconds_since(t0);
    fs::remove(path);
    fs::remove(path.string() + ".bin");

    t0 = Clock::now();
    const auto r = similarity_report(loaded);
    const double report_s = seconds_since(t0);

    c.expect(loaded.size() == 10000, "10000 instances loaded");
    c.expect(r.per_class.size() == 10, "10 classes reported");
    c.expect(load_s < 1.0, "load < 1 s");
    c.expect(report_s < 5.0, "similarity report < 5 s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "load %.3f s, report %.3f s", load_s, report_s);
    return buf;
}

std::string pearson_properties(Check& c) {
    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
    const double r = pearson(a, b);
    c.expect(r == 0.8 || std::abs(r - 0.8) <= 1e-15, "pearson((1,2,3,4),(1,3,2,4)) == 0.8");
    const std::vector<double> lin{3, 5, 7, 9}, anti{-1, -3, -5, -7};
    c.near(pearson(a, lin), 1.0, 1e-15, "linear");
    c.near(pearson(a, anti), -1.0, 1e-15, "anti-linear");
    // substituted ordering properties: symmetry, affine invariance, sign flip
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(20), y(20), y2(20), yneg(20);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = nd(rng);
            y[i] = 0.5 * x[i] + nd(rng);
            y2[i] = 3.0 * y[i] + 7.0;
            yneg[i] = -y[i];
        }
        const double p = pearson(x, y);
        c.near(pearson(y, x), p, 1e-12, "symmetry");
        c.near(pearson(x, y2), p, 1e-12, "positive affine invariance");
        c.near(pearson(x, yneg), -p, 1e-12, "negation flips sign");
        c.expect(p >= -1 && p <= 1, "range");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "r=%.17g", r);
    return buf;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"layer-bound worked examples", 1, layer_bound_examples},
        {"first-layer FLOPs, color vs gray", 1, first_layer_flops},
        {"all-layer gray/color ratios", 1, all_layer_ratios},
        {"similarity matches naive oracle", 30, oracle_equivalence},
        {"separation monotonicity", 10, separation_monotonicity},
        {"selection procedure properties", 10, procedure_properties},
        {"similarity report performance", 30, performance},
        {"pearson correlation", 1, pearson_properties},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        std::string summary;
        const auto t0 = Clock::now();
        try {
            summary = cr.run(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const double took = seconds_since(t0);
        if (took > cr.budget_s) c.failures.push_back("took " + std::to_string(took) + " s");
        const bool ok = c.failures.empty();
        failed += !ok;
        std::printf("%s  %-36s %s (%.2f s)\n", ok ? "PASS" : "FAIL", cr.name.c_str(), summary.c_str(), took);
        for (std::size_t i = 0; i < c.failures.size() && i < 5; ++i) std::printf("      %s\n", c.failures[i].c_str());
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
