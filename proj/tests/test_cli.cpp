#include <doctest.h>

#include <random>
#include <sstream>

#include "dside/cli.hpp"
#include "dside/errors.hpp"
#include "dside/io.hpp"
#include "dside/serialize.hpp"

using namespace dside;

namespace {

const fs::path kData = DSIDE_DATA_DIR;
const fs::path kFx = kData / "fixtures";

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "dside");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("dside-cli-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("similarity output matches the golden report") {
    const auto r = run({"similarity", "--embeddings", (kFx / "fx-color-64.semb").string()});
    REQUIRE(r.code == kExitOk);
    const auto got = report_from_json(Json::parse(r.out));
    const auto golden = read_report(kData / "golden/fx-color-64.report.json");
    CHECK(got == golden);
}

TEST_CASE("estimate-flops prints the gray first-layer cost") {
    const auto r = run({"estimate-flops", "--model", (kData / "models/vgg19-32.spec").string(), "--mode", "gray"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("layer1 gray 655.36 kFLOPS") != std::string::npos);
    CHECK(r.out.find("ratio 99.70%") != std::string::npos);

    const auto sweep =
        run({"estimate-flops", "--model", (kData / "models/en-b0-32.spec").string(), "--sweep", "16,32,64"});
    REQUIRE(sweep.code == kExitOk);
    CHECK(sweep.out.find("32x32") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run({"similarity", "--embeddings", "/nonexistent.semb"}).code == kExitInput);
    CHECK(run({"similarity"}).code == kExitInput);
    CHECK(run({"estimate-flops", "--model", (kData / "models/vgg19-32.spec").string(), "--mode", "sepia"}).code ==
          kExitInput);
    CHECK(run({"no-such-command"}).code == kExitInput);
    CHECK(run({"--help"}).code == kExitOk);

    TempDir tmp;
    const auto r = run({"recommend", "--log", (tmp.path / "log.jsonl").string()});
    CHECK(r.code == kExitState);
    CHECK(r.err.find("classes, color, resolution") != std::string::npos);
}

TEST_CASE("analyze-scale reports the layer bound") {
    const auto r = run({"analyze-scale", "--annotations", (kFx / "annotations.json").string(), "--resolution", "64"});
    REQUIRE(r.code == kExitOk);
    const auto j = Json::parse(r.out);
    CHECK(j["resolution"] == 64);
    CHECK(j["overall"]["b_max"] == 36);
    CHECK(j["overall"]["min_layers"] == 5);
}

TEST_CASE("full pipeline reproduces the golden recommendation") {
    TempDir tmp;
    const auto log = (tmp.path / "log.jsonl").string();
    auto fx = [](const char* name) { return (kFx / name).string(); };

    auto cls = run({"select-classes", "--embeddings", fx("fx-color-64.semb"), "--grouping", fx("identity.json"),
                    "--grouping", fx("merge-riders.json"), "--grouping", fx("vehicles-vs-people.json"), "--grouping",
                    fx("drop-truck.json"), "--log", log});
    REQUIRE(cls.code == kExitOk);
    CHECK(run({"recommend", "--log", log}).code == kExitState);

    REQUIRE(run({"select-color", "--color", fx("fx-color-64.semb"), "--gray", fx("fx-gray-64.semb"), "--log", log})
                .code == kExitOk);
    const auto res = run({"select-resolution", "--rung", fx("fx-color-64.semb"), "--rung", fx("fx-color-32.semb"),
                          "--rung", fx("fx-color-16.semb"), "--annotations", fx("annotations.json"), "--log", log});
    REQUIRE(res.code == kExitOk);

    const auto out = tmp.path / "rec.json";
    const auto rec = run({"recommend", "--log", log, "--annotations", fx("annotations.json"), "--model",
                          (kData / "models/vgg19-32.spec").string(), "--out", out.string()});
    REQUIRE(rec.code == kExitOk);
    CHECK(read_text(out) == read_text(kData / "golden/recommendation.json"));

    const auto entries = read_log(log);
    CHECK(entries.size() == 8);
}
