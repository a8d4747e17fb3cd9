#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = CONFDETECT_CLI_PATH;

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    Result r;
    const std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("help lists flags with their defaults") {
    auto eval = run("eval --help");
    CHECK(eval.code == 0);
    for (const char* needle : {"--seed UINT [20211]", "--trees UINT:POSITIVE [50]", "--runs UINT:POSITIVE [100]",
                               "--test-picks UINT:POSITIVE [1000]", "--cv-folds UINT [5]", "--window-halfwidth",
                               "--train-fraction", "--layout", "--out"}) {
        CHECK_MESSAGE(eval.out.find(needle) != std::string::npos, needle);
    }
    auto stream = run("stream --help");
    CHECK(stream.out.find("--queue-capacity UINT:POSITIVE [2000]") != std::string::npos);
    CHECK(stream.out.find("--rate") != std::string::npos);
    auto top = run("--help");
    for (const char* sub : {"synth", "label", "train", "eval", "stream", "bench", "split"}) {
        CHECK(top.out.find(sub) != std::string::npos);
    }
}

TEST_CASE("usage errors exit 1, data errors exit 2") {
    CHECK(run("").code == 1);
    CHECK(run("eval --bogus --out x").code == 1);
    CHECK(run("train --out x").code == 1);
    CHECK(run("stream --model /nonexistent/f.json < /dev/null").code == 2);
    CHECK(run("label --input /nonexistent --out /tmp/x").code == 2);
    CHECK(run("eval --runs 1 --layout por_x,nose --out /tmp/x").code == 1);
}

TEST_CASE("synth, label, split, train, stream and bench") {
    testing_support::TempDir tmp("cli");
    const auto corpus = tmp.path / "corpus";
    REQUIRE(run("synth --subjects 15 --duration 60 --out " + q(corpus)).code == 0);
    std::size_t csv = 0, json = 0;
    for (const auto& e : fs::directory_iterator(corpus)) {
        csv += e.path().extension() == ".csv";
        json += e.path().extension() == ".json";
    }
    CHECK(csv == 15);
    CHECK(json == 15);

    const auto lab = tmp.path / "lab";
    auto labeled = run("label --input " + q(corpus) + " --out " + q(lab));
    REQUIRE(labeled.code == 0);
    CHECK(labeled.out.find("event=9045 no_event=80955") != std::string::npos);

    REQUIRE(run("split --input " + q(lab / "labeled.csv") + " --seed 4 --out " + q(tmp.path / "split")).code == 0);
    CHECK(slurp(tmp.path / "split" / "split.json").find("\"seed\":4") != std::string::npos);

    const auto m1 = tmp.path / "m1";
    const auto m2 = tmp.path / "m2";
    const std::string train_args = "train --trees 10 --seed 3 --input " + q(lab / "labeled.csv") + " --out ";
    REQUIRE(run(train_args + q(m1)).code == 0);
    REQUIRE(run(train_args + q(m2)).code == 0);
    CHECK(slurp(m1 / "forest.json") == slurp(m2 / "forest.json"));

    REQUIRE(run("train --cv --cv-folds 3 --trees 6 --input " + q(lab / "labeled.csv") + " --out " + q(tmp.path / "cv"))
                .code == 0);
    CHECK(fs::exists(tmp.path / "cv" / "cv_curve.csv"));

    // Fewer rows than the queue capacity: only warm-up outcomes.
    const auto rec = corpus / "S01.csv";
    auto warm = run("stream --model " + q(m1 / "forest.json") + " --queue-capacity 8000 < " + q(rec));
    REQUIRE(warm.code == 0);
    std::istringstream lines(warm.out);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) {
        ++n;
        CHECK(line.find("\"label\":\"warmup\"") != std::string::npos);
    }
    CHECK(n == 6000);

    auto live = run("stream --model " + q(m1 / "forest.json") + " --queue-capacity 100 --input " + q(rec));
    REQUIRE(live.code == 0);
    CHECK(live.out.find("{\"step\":99,\"label\":\"warmup\"") != std::string::npos);
    CHECK(live.out.find("{\"step\":100,\"label\":\"warmup\"") == std::string::npos);
    CHECK(live.out.find("{\"step\":100,\"label\":\"") != std::string::npos);

    auto bench = run("bench --runs 20 --model " + q(m1 / "forest.json") + " --input " + q(rec) + " --out " +
                     q(tmp.path / "bench"));
    REQUIRE(bench.code == 0);
    CHECK(bench.out.find("\"mean_latency_s\"") != std::string::npos);
    CHECK(fs::exists(tmp.path / "bench" / "bench.json"));
}

TEST_CASE("eval is byte-identical across invocations") {
    testing_support::TempDir tmp("cli-eval");
    const auto a = tmp.path / "a";
    const auto b = tmp.path / "b";
    REQUIRE(run("eval --runs 1 --seed 7 --out " + q(a)).code == 0);
    REQUIRE(run("eval --runs 1 --seed 7 --out " + q(b)).code == 0);
    for (const char* f : {"report.json", "confusion_matrix.csv", "loss_vs_trees.csv"}) {
        CHECK(slurp(a / f).size() > 0);
        CHECK(slurp(a / f) == slurp(b / f));
    }
    REQUIRE(run("eval --runs 1 --seed 8 --cv-folds 0 --out " + q(b)).code == 0);
    CHECK(slurp(a / "report.json") != slurp(b / "report.json"));
}
