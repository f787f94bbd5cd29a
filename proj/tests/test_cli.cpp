#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fracsing/cli.hpp"

using namespace fracsing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::initializer_list<std::string> args) {
    std::vector<std::string> store{"fracsing"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : store) argv.push_back(s.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "fracsing_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ErrorCode::InvalidArgument) == kExitUsage);
    CHECK(exit_code_for(ErrorCode::OutOfRange) == kExitUsage);
    CHECK(exit_code_for(ErrorCode::RegimeMismatch) == kExitRegime);
    CHECK(exit_code_for(ErrorCode::SingularMatrix) == kExitNumeric);
    CHECK(exit_code_for(ErrorCode::MaxIterExceeded) == kExitNumeric);
}

TEST_CASE("ctau writes a schema-tagged table") {
    const Run r = run({"ctau", "--dim", "2", "--alpha", "0.5", "--tau", "-1"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("#schema=1\n", 0) == 0);
    CHECK(r.out.find("tau,c_quadrature,c_error,c_oracle") != std::string::npos);
}

TEST_CASE("invalid input and regime errors") {
    CHECK(run({"ctau", "--alpha", "1.5", "--tau", "-1"}).code == kExitUsage);
    CHECK(run({"ctau", "--tau", "0.5"}).code == kExitUsage);
    CHECK(run({"ctau"}).code == kExitUsage);
    CHECK(run({"nosuch"}).code == kExitUsage);
    CHECK(run({"solve", "--p", "1.2", "--profile", "strong", "--nodes", "100"}).code == kExitRegime);
    CHECK(run({"barrier", "--kind", "strong_super", "--p", "2.5", "--nodes", "100"}).code == kExitRegime);
    CHECK(run({"probe", "--p", "1.8", "--tau", "-1.25", "--nodes", "100"}).code == kExitUsage);
}

TEST_CASE("json output parses") {
    const Run r = run({"signchart", "--samples", "21", "--format", "json"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["schema"] == 1);
    CHECK(j["command"] == "signchart");
    CHECK(j["rows"].size() == 21);
    CHECK(j["summary"]["pass"] == true);
}

TEST_CASE("config file with command-line precedence") {
    const fs::path cfg = scratch("run.cfg");
    {
        std::ofstream os(cfg);
        os << "# defaults\nalpha = 0.25\ndim = 3\nsamples = 25\n";
    }
    const Run a = run({"signchart", "--config", cfg.string(), "--format", "json"});
    REQUIRE(a.code == kExitOk);
    const auto ja = nlohmann::json::parse(a.out);
    CHECK(ja["rows"].size() == 25);
    CHECK(ja["meta"]["params"]["dim"] == 3);
    const Run b = run({"signchart", "--config", cfg.string(), "--dim", "2", "--format", "json"});
    REQUIRE(b.code == kExitOk);
    CHECK(nlohmann::json::parse(b.out)["meta"]["params"]["dim"] == 2);
    {
        std::ofstream os(cfg);
        os << "bogus_key = 1\n";
    }
    CHECK(run({"signchart", "--config", cfg.string()}).code == kExitUsage);
}

TEST_CASE("fit reads a solution table") {
    const fs::path in = scratch("power.csv");
    {
        std::ofstream os(in);
        os << "#schema=1\nr,u\n";
        for (int i = 0; i < 40; ++i) {
            const double r = 1e-3 * std::pow(100.0, i / 39.0);
            os << r << ',' << 2 * std::pow(r, -1.25) << '\n';
        }
    }
    const Run r = run({"fit", "--in", in.string(), "--window", "0.001:0.1", "--expect", "-1.25",
                       "--format", "json"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["rows"][0]["exponent"].get<double>() == doctest::Approx(-1.25));
    CHECK(run({"fit", "--in", in.string(), "--window", "0.001:0.1", "--expect", "-1"}).code ==
          kExitVerdict);
    CHECK(run({"fit", "--in", "/nonexistent.csv", "--window", "0.001:0.1"}).code == kExitUsage);
}

TEST_CASE("solve output is reproducible") {
    const std::initializer_list<std::string> args = {"solve", "--nodes", "120", "--eps", "1e-2",
                                                     "--profile", "strong"};
    const Run a = run(args);
    const Run b = run(args);
    REQUIRE(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK(a.out.find("r,u,super,sub,u_from_sub") != std::string::npos);
}

}
