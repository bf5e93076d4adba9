#include <doctest.h>

#include "fieldseg/grid.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using fieldseg::PixelGrid;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch() {
    // Never destroyed, so the exit hook can still read it.
    static const fs::path* dir = [] {
        auto* p = new fs::path(fs::temp_directory_path() / ("fieldseg_cli_" + std::to_string(::getpid())));
        fs::remove_all(*p);
        fs::create_directories(*p);
        std::atexit([] {
            std::error_code ec;
            fs::remove_all(scratch(), ec);
        });
        return p;
    }();
    return *dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    const auto out = scratch() / "stdout.txt";
    const std::string cmd = std::string("\"") + FIELDSEG_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            (scratch() / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out)};
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

const std::string kCamera = std::string(FIELDSEG_TEST_DATA) + "/camera256.pgm";

} // namespace

TEST_CASE("criticality subcommand") {
    auto r = run("criticality --m 2");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["K_c"] == 2);
    CHECK(j["m_c"] == 1);
    CHECK(j["R_c"] == 1);

    r = run("criticality --rows 16 --cols 16");
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK(j["m"] == 16);
    CHECK(j["K_c"] == 4);
    CHECK(j["m_c"] == 4);

    CHECK(run("criticality --m 1").code == 2);
    CHECK(run("criticality --m 8 --rho 1.5").code == 2);
    CHECK(run("criticality").code == 2);
}

TEST_CASE("usage and data errors") {
    CHECK(run("").code == 2);
    CHECK(run("--help").code == 0);
    CHECK(run("bogus").code == 2);
    CHECK(run("segment -i " + path("missing.pgm") + " -o " + path("seg_missing")).code == 1);
    CHECK(run("segment -i " + kCamera + " -o " + path("seg_bad") + " --epsilon 300").code == 2);
    CHECK(run("sweep -i " + kCamera + " --epsilons 0:10").code == 2);
    CHECK(run("sweep -i " + kCamera + " --epsilons 70,abc").code == 2);

    std::ofstream(path("garbage.pgm"), std::ios::binary) << "P2\n1 1\n255\n0\n";
    CHECK(run("stats " + path("garbage.pgm")).code == 1);
}

TEST_CASE("segment writes images and proposals") {
    // A single bright pixel in a flat 3x3 field.
    fieldseg::save_pgm(path("toy.pgm"), PixelGrid(3, 3, std::vector<std::uint8_t>{0, 0, 0, 0, 200, 0, 0, 0, 0}));
    const auto r = run("segment -i " + path("toy.pgm") + " -o " + path("toy_out") + " --m-c 2 --epsilon 256");
    REQUIRE(r.code == 0);
    const auto metrics = nlohmann::json::parse(r.out);
    CHECK(metrics["m_c"] == 2);
    CHECK(metrics["proposals"] == 1);
    for (const char* name : {"equilibrium.pgm", "difference.pgm", "overlay.pgm", "proposals.json"}) {
        CHECK(fs::exists(scratch() / "toy_out" / name));
    }
    const auto eq = fieldseg::load_pgm(scratch() / "toy_out" / "equilibrium.pgm");
    CHECK(eq.rows() == 3);
    CHECK(eq.cols() == 3);
    const auto proposals = nlohmann::json::parse(slurp(scratch() / "toy_out" / "proposals.json"));
    REQUIRE(proposals.size() == 1);
    CHECK(proposals[0]["box"] == nlohmann::json::array({1, 1, 1, 1}));
}

TEST_CASE("compress and reconstruct") {
    const auto a = run("compress -i " + kCamera + " -o " + path("a.rfc") + " --m-c 2 --seed 1");
    REQUIRE(a.code == 0);
    const auto stats = nlohmann::json::parse(a.out);
    CHECK(stats["raw_bytes"] == 65536);
    CHECK(stats["compressed_bytes"] == fs::file_size(path("a.rfc")));
    REQUIRE(run("compress -i " + kCamera + " -o " + path("b.rfc") + " --m-c 2 --seed 77").code == 0);
    REQUIRE(run("reconstruct -i " + path("a.rfc") + " -o " + path("a.pgm")).code == 0);
    REQUIRE(run("reconstruct -i " + path("b.rfc") + " -o " + path("b.pgm")).code == 0);
    CHECK(slurp(path("a.pgm")) == slurp(path("b.pgm")));
    CHECK(run("reconstruct -i " + path("a.rfc") + " -o " + path("a_render.pgm") + " --render").code == 0);

    const auto bytes = slurp(path("a.rfc"));
    std::ofstream(path("cut.rfc"), std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK(run("reconstruct -i " + path("cut.rfc") + " -o " + path("cut.pgm")).code == 1);
    CHECK(run("reconstruct -i " + path("none.rfc") + " -o " + path("none.pgm")).code == 1);
}

TEST_CASE("sweep output") {
    const auto one = run("sweep -i " + kCamera + " --m-c 2 --epsilons 90");
    REQUIRE(one.code == 0);
    std::istringstream lines(one.out);
    int data_rows = 0;
    std::string header;
    std::getline(lines, header);
    CHECK(header == "epsilon,E,S");
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty() && line[0] != '#') ++data_rows;
    }
    CHECK(data_rows == 1);

    const auto first = run("sweep -i " + kCamera + " --m-c 2 --epsilons 70:90:10");
    const auto second = run("sweep -i " + kCamera + " --m-c 2 --epsilons 70,80,90");
    REQUIRE(first.code == 0);
    CHECK(first.out == second.out);

    REQUIRE(run("sweep -i " + kCamera + " --m-c 2 --epsilons 70:80:10 -o " + path("sweep.csv")).code == 0);
    CHECK(slurp(path("sweep.csv")).starts_with("epsilon,E,S\n70,"));
}

TEST_CASE("stats and anneal") {
    const auto s = run("stats " + kCamera + " " + kCamera);
    REQUIRE(s.code == 0);
    const auto j = nlohmann::json::parse(s.out);
    CHECK(j["kl"] == 0.0);
    CHECK(j["sw_first"]["w"] == j["sw_second"]["w"]);

    fieldseg::save_pgm(path("small.pgm"), PixelGrid(8, 8, std::vector<std::uint8_t>(64, 40)));
    const auto a = run("anneal -i " + path("small.pgm") + " --trace " + path("trace.csv") + " --stops 5 --tol 0");
    REQUIRE(a.code == 0);
    std::istringstream trace(slurp(path("trace.csv")));
    std::string line;
    std::getline(trace, line);
    CHECK(line == "stop,temperature,energy");
    int rows = 0;
    while (std::getline(trace, line)) ++rows;
    CHECK(rows == 6);
    const auto again = run("anneal -i " + path("small.pgm") + " --trace " + path("trace2.csv") + " --stops 5 --tol 0");
    CHECK(a.out == again.out);
    CHECK(slurp(path("trace.csv")) == slurp(path("trace2.csv")));
}
