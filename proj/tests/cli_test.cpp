#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "identrank/cli.hpp"
#include "identrank/errors.hpp"
#include "identrank/json_out.hpp"
#include "identrank/specfile.hpp"

namespace identrank {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = IDENTRANK_SOURCE_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "identrank");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string spec(const std::string &name) { return (kSource / "specs" / (name + ".json")).string(); }

fs::path temp_file(const std::string &name) { return fs::temp_directory_path() / ("identrank_cli_" + name); }

TEST(JsonOutTest, SeventeenDigitsAndFixedOrder) {
    JsonValue v = JsonValue::object();
    v.set("b", 0.1).set("a", 1.0).set("n", 3).set("s", "q\"x").set("l", JsonValue::numbers({1e-300, -2.5}));
    EXPECT_EQ(v.dump_compact(), R"({"b":0.10000000000000001,"a":1.0,"n":3,"s":"q\"x","l":[1e-300,-2.5]})");
    EXPECT_EQ(format_double(std::nan("")), "null");
    // Round trip through a real parser.
    const auto parsed = nlohmann::json::parse(v.dump());
    EXPECT_EQ(parsed["b"].get<double>(), 0.1);
}

TEST(SpecfileTest, Fnv1aVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(SpecfileTest, DataCsv) {
    const fs::path p = temp_file("data.csv");
    std::ofstream(p) << "x,z,y_1,y_2,trials\r\n# comment\n3,10,0.5,1,5\n\n0,2.5,1e-3,-2,7\n";
    const Dataset d = read_data_csv(p);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.x[1], 0.0);
    EXPECT_EQ(d.aux.z[1], 2.5);
    EXPECT_EQ(d.aux.y[1], (std::vector<double>{1e-3, -2.0}));
    EXPECT_EQ(d.aux.trials, (std::vector<double>{5.0, 7.0}));

    auto expect_error = [&](const std::string &body, const std::string &needle) {
        std::ofstream(p) << body;
        try {
            read_data_csv(p);
            ADD_FAILURE() << body;
        } catch (const InputError &e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("x,y\n1,2\n", "header must start with x,z");
    expect_error("x,z,y_2\n1,2,3\n", "unexpected column 'y_2'");
    expect_error("x,z\n1,abc\n", ":2: 'abc' is not a finite number");
    expect_error("x,z\n1,nan\n", "not a finite number");
    expect_error("x,z\n", "no data rows");
    expect_error("x,z,trials\n1,1,2.5\n", "trials must be a positive integer");
}

TEST(SpecfileTest, BuildModelAppliesOverrides) {
    const fs::path dir = fs::temp_directory_path() / "identrank_specfile";
    fs::create_directories(dir);
    const fs::path p = dir / "s.json";
    std::ofstream(p) << R"({"model": {"name": "armitage_doll", "stages": 3},
        "param_box": {"rate_2": {"lower": 0.5, "upper": 2, "scale": "linear"}},
        "declared_factorization": {"N": 2}})";
    const ModelSpec spec = load_spec(p);
    EXPECT_EQ(spec.seed_source, "default");
    const auto model = std::get<MeanModel>(build_model(spec));
    EXPECT_EQ(model.box[1].lower, 0.5);
    EXPECT_EQ(model.box[1].scale, Scale::Linear);
    EXPECT_EQ(model.box[0].scale, Scale::Log);
    ASSERT_TRUE(model.factorization.has_value());
    EXPECT_EQ(model.factorization->count, 2u);
    EXPECT_FALSE(model.factorization->has_functions());

    std::ofstream(p) << R"({"model": {"name": "armitage_doll"}, "param_box": {"rate_9": {"lower": 1}}})";
    EXPECT_THROW(build_model(load_spec(p)), InputError);
}

TEST(CliTest, RankCommand) {
    const auto r = run_cli({"rank", "--matrix", (kSource / "specs" / "rank1.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["rank"], 1);
    EXPECT_LT(j["gap_ratio"].get<double>(), 1e-8);

    const fs::path eye = temp_file("eye.csv");
    std::ofstream(eye) << "1,0,0\n0,1,0\n0,0,1\n";
    EXPECT_EQ(nlohmann::json::parse(run_cli({"rank", "--matrix", eye.string()}).out)["rank"], 3);
    const fs::path zero = temp_file("zero.csv");
    std::ofstream(zero) << "0,0\n0,0\n";
    EXPECT_EQ(nlohmann::json::parse(run_cli({"rank", "--matrix", zero.string()}).out)["rank"], 0);

    const auto ragged = run_cli({"rank", "--matrix", (kSource / "tests" / "data" / "ragged_matrix.csv").string()});
    EXPECT_EQ(ragged.code, 2);
    EXPECT_NE(ragged.err.find("ragged_matrix.csv:2"), std::string::npos) << ragged.err;
}

TEST(CliTest, RankTolerancesAreHonoured) {
    const fs::path m = temp_file("diag.csv");
    std::ofstream(m) << "1,0\n0,1e-6\n";
    EXPECT_EQ(nlohmann::json::parse(run_cli({"rank", "--matrix", m.string()}).out)["rank"], 2);
    const auto loose = run_cli({"rank", "--matrix", m.string(), "--tol-rel", "1e-4"});
    EXPECT_EQ(nlohmann::json::parse(loose.out)["rank"], 1);
    EXPECT_EQ(nlohmann::json::parse(loose.out)["tol_rel"], 1e-4);
    EXPECT_EQ(run_cli({"rank", "--matrix", m.string(), "--tol-abs", "-1"}).code, 2);
}

TEST(CliTest, AnalyzeArmitageDoll) {
    const auto r = run_cli({"analyze", "--spec", spec("armitage_doll_k4")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["classification"]["verdict"], "Redundant");
    EXPECT_EQ(j["bounds"]["hessian_lower"], 1);
    EXPECT_EQ(j["bounds"]["fisher_upper"], 1);
    EXPECT_EQ(j["factorization"]["passed"], true);
    EXPECT_EQ(j["redundancy"]["directions"].size(), 3u);
    EXPECT_EQ(j["tolerances"]["tol_rel"], 1e-8);
    EXPECT_EQ(j["sampler"]["seed"], 20100127);
    EXPECT_EQ(j["samples"].size(), 64u);
}

TEST(CliTest, AnalyzeQuartic) {
    const auto r = run_cli({"analyze", "--spec", spec("quartic")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["rank_H"], 0);
    EXPECT_EQ(j["notes"][0], "unique maximum verified on grid");
}

TEST(CliTest, AnalyzeMatchesGoldenReports) {
    for (const char *name : {"armitage_doll_k4", "two_mutation", "poisson_glm", "cond_demo", "quartic"}) {
        const fs::path out = temp_file(std::string(name) + ".json");
        const auto r = run_cli({"analyze", "--spec", spec(name), "--out", out.string()});
        ASSERT_EQ(r.code, 0) << name << ": " << r.err;
        EXPECT_EQ(slurp(out), slurp(kSource / "tests" / "golden" / (std::string(name) + ".json"))) << name;
    }
}

TEST(CliTest, ZeroOffsetIsAnInputError) {
    const auto r = run_cli({"analyze", "--spec", spec("armitage_doll_k4"), "--data",
                            (kSource / "tests" / "data" / "zero_offset.csv").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("zero_offset.csv:3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("non-zero"), std::string::npos) << r.err;
}

TEST(CliTest, MalformedRowNamesFileAndLine) {
    const auto r = run_cli({"analyze", "--spec", spec("armitage_doll_k4"), "--data",
                            (kSource / "tests" / "data" / "short_row.csv").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("short_row.csv:3"), std::string::npos) << r.err;
}

TEST(CliTest, SpecValidation) {
    const fs::path dir = fs::temp_directory_path() / "identrank_cli_specs";
    fs::create_directories(dir);
    auto expect_input_error = [&](const std::string &body, const std::string &needle) {
        const fs::path p = dir / "s.json";
        std::ofstream(p) << body;
        const auto r = run_cli({"analyze", "--spec", p.string()});
        EXPECT_EQ(r.code, 2) << body;
        EXPECT_NE(r.err.find(needle), std::string::npos) << r.err;
    };
    expect_input_error("{", "invalid JSON");
    expect_input_error(R"({"model": {"name": "nope"}})", "unknown model");
    expect_input_error(R"({"model": {"name": "two_mutation"}, "sampler": {"M": 0}})", "at least 1");
    expect_input_error(R"({"model": {"name": "two_mutation"}, "tolerances": {"tol_rel": 0}})", "positive");
    expect_input_error(R"({"model": {"name": "two_mutation"}, "data": "missing.csv"})", "does not exist");
    expect_input_error(R"({"model": {"name": "two_mutation"}, "typo": 1})", "unknown key 'typo'");
    expect_input_error(R"({"model": {"name": "two_mutation"}, "pinned_theta": [[9, 9, 9, 9]]})", "outside");
    expect_input_error(R"({"model": {"name": "two_mutation"}})", "needs a data file");
}

TEST(CliTest, EnvironmentSeedOverridesSpec) {
    const auto base = nlohmann::json::parse(run_cli({"analyze", "--spec", spec("two_mutation")}).out);
    ::setenv("IDENTRANK_SEED", "7", 1);
    const auto env = nlohmann::json::parse(run_cli({"analyze", "--spec", spec("two_mutation")}).out);
    ::setenv("IDENTRANK_SEED", "seven", 1);
    const auto bad = run_cli({"analyze", "--spec", spec("two_mutation")});
    ::unsetenv("IDENTRANK_SEED");
    EXPECT_EQ(env["sampler"]["seed"], 7);
    EXPECT_EQ(env["sampler"]["seed_source"], "env");
    EXPECT_EQ(base["sampler"]["seed_source"], "spec");
    EXPECT_NE(env["samples"].back()["theta"], base["samples"].back()["theta"]);
    EXPECT_EQ(bad.code, 2);
}

TEST(CliTest, RidgeCommand) {
    const auto r = run_cli({"ridge", "--spec", spec("armitage_doll_k4"), "--theta", "0.5,0.8,1.2,0.9", "--tmax", "0.2",
                            "--steps", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream lines(r.out);
    std::string line;
    std::vector<nlohmann::json> rows;
    while (std::getline(lines, line)) rows.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(rows.size(), 22u);
    EXPECT_LT(rows.back()["max_drift"].get<double>(), 1e-9);
    EXPECT_EQ(rows.front()["t"], -0.2);

    const auto full = run_cli({"ridge", "--spec", spec("poisson_glm"), "--theta", "1,0.5,0.1", "--tmax", "0.2",
                               "--steps", "4"});
    EXPECT_EQ(full.code, 2);
    EXPECT_NE(full.err.find("full rank"), std::string::npos);
    EXPECT_EQ(run_cli({"ridge", "--spec", spec("armitage_doll_k4"), "--theta", "0.5,x", "--tmax", "0.2", "--steps", "2"})
                  .code,
              2);
}

TEST(CliTest, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"analyze"}).code, 2);
    EXPECT_EQ(run_cli({"rank", "--matrix", "/nonexistent.csv"}).code, 2);
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    EXPECT_EQ(run_cli({"--format", "xml", "rank", "--matrix", "x"}).code, 2);
}

TEST(CliTest, TextFormat) {
    const auto r = run_cli({"rank", "--matrix", (kSource / "specs" / "rank1.csv").string(), "--format", "text"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("rank: 1\n", 0), 0u) << r.out;
}

} // namespace
} // namespace identrank
