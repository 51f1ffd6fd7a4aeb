#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bsee/harness.hpp"

using namespace bsee;

namespace {

std::filesystem::path fresh_dir(const std::string& leaf) {
    auto dir = std::filesystem::temp_directory_path() / leaf;
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

//Capture std::cout while fn runs.
template <typename Fn>
std::string capture_stdout(Fn&& fn, int& rc) {
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    rc = fn();
    std::cout.rdbuf(old);
    return captured.str();
}

} // namespace

TEST_CASE("config files parse with comments and whitespace") {
    auto dir = fresh_dir("bsee_cfg_test");
    auto file = dir / "a.cfg";
    {
        std::ofstream out(file);
        out << "# header comment\n"
            << "\n"
            << "  n_steps = 32  \n"
            << "t_end=2.5\n"
            << "flag = true\n"
            << "label= fine \n";
    }
    Config cfg = parse_config_file(file.string());
    REQUIRE(cfg.get_int("n_steps", 0) == 32);
    REQUIRE(cfg.get_double("t_end", 0.0) == Catch::Approx(2.5));
    REQUIRE(cfg.get_bool("flag", false));
    REQUIRE(cfg.get_string("label", "") == "fine");
    REQUIRE(cfg.get_int("absent", 7) == 7);
    REQUIRE_FALSE(cfg.has("absent"));

    REQUIRE_THROWS_AS(parse_config_file((dir / "missing.cfg").string()), ConfigError);
    {
        std::ofstream out(dir / "bad.cfg");
        out << "just a bare line\n";
    }
    REQUIRE_THROWS_AS(parse_config_file((dir / "bad.cfg").string()), ConfigError);
    {
        std::ofstream out(dir / "nokey.cfg");
        out << "= value\n";
    }
    REQUIRE_THROWS_AS(parse_config_file((dir / "nokey.cfg").string()), ConfigError);
}

TEST_CASE("typed getters reject malformed values") {
    Config cfg;
    cfg.set("n", "12x");
    cfg.set("x", "nan-ish");
    cfg.set("b", "maybe");
    REQUIRE_THROWS_AS(cfg.get_int("n", 0), ConfigError);
    REQUIRE_THROWS_AS(cfg.get_double("x", 0.0), ConfigError);
    REQUIRE_THROWS_AS(cfg.get_bool("b", false), ConfigError);
    cfg.set("b", "1");
    REQUIRE(cfg.get_bool("b", false));
}

TEST_CASE("canonical form is sorted and drives the hash") {
    Config empty;
    REQUIRE(empty.canonical().empty());
    REQUIRE(empty.hash() == "cbf29ce484222325"); // FNV-1a 64 offset basis

    Config cfg;
    cfg.set("zeta", "1");
    cfg.set("alpha", "2");
    REQUIRE(cfg.canonical() == "alpha=2\nzeta=1\n");

    Config same;
    same.set("alpha", "2");
    same.set("zeta", "1");
    REQUIRE(cfg.hash() == same.hash());
    same.set("alpha", "3");
    REQUIRE(cfg.hash() != same.hash());

    Config reduced = same.without("alpha");
    REQUIRE_FALSE(reduced.has("alpha"));
    Config only_zeta;
    only_zeta.set("zeta", "1");
    REQUIRE(reduced.hash() == only_zeta.hash());
}

TEST_CASE("unknown keys are rejected with a suggestion") {
    std::map<std::string, std::string> allowed{{"n_steps", "64"}, {"n_paths", "512"}};
    Config cfg;
    cfg.set("n_stepz", "32");
    try {
        cfg.validate_keys(allowed);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("n_steps") != std::string::npos);
    }
    REQUIRE(detail::edit_distance("kitten", "sitting") == 3);
}

TEST_CASE("overrides parse key=value pairs") {
    Config cfg = parse_overrides({"a=1", " b = two "});
    REQUIRE(cfg.get_string("a", "") == "1");
    REQUIRE(cfg.get_string("b", "") == "two");
    REQUIRE_THROWS_AS(parse_overrides({"noequals"}), ConfigError);
    REQUIRE_THROWS_AS(parse_overrides({"=orphan"}), ConfigError);
}

TEST_CASE("scenario registry is well formed") {
    std::set<std::string> names;
    for (const auto& sc : scenario_registry()) {
        REQUIRE(names.insert(sc.name).second);
        REQUIRE_FALSE(sc.summary.empty());
        REQUIRE_FALSE(sc.details.empty());
        REQUIRE(sc.run != nullptr);
        REQUIRE(sc.defaults.count("n_workers") == 1);
        REQUIRE(sc.defaults.count("seed") == 1);
    }
    REQUIRE(names.size() == 6);
    REQUIRE(find_scenario("lambda_bsde") != nullptr);
    REQUIRE(find_scenario("no_such_thing") == nullptr);
}

TEST_CASE("scenario lookup suggests near misses") {
    REQUIRE(require_scenario("scalar_linear").name == "scalar_linear");
    try {
        require_scenario("scalar_lineer");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("scalar_linear") != std::string::npos);
    }
    REQUIRE_THROWS_AS(require_scenario("zzzzzzzzzzzz"), ConfigError);
}

TEST_CASE("scenario configs validate user keys and layer defaults") {
    const Scenario& sc = require_scenario("scalar_linear");
    Config user;
    user.set("n_steps", "16");
    Config merged = scenario_config(sc, user);
    REQUIRE(merged.get_int("n_steps", 0) == 16);
    REQUIRE(merged.get_int("n_paths", 0) == 512); // default survives
    Config bad;
    bad.set("n_stepz", "16");
    REQUIRE_THROWS_AS(scenario_config(sc, bad), ConfigError);
}

TEST_CASE("output root resolution prefers flag, then environment") {
    REQUIRE(resolve_out_root("explicit") == std::filesystem::path("explicit"));
    setenv("BSEE_LAB_OUT", "/tmp/from_env", 1);
    REQUIRE(resolve_out_root("") == std::filesystem::path("/tmp/from_env"));
    REQUIRE(resolve_out_root("flag_wins") == std::filesystem::path("flag_wins"));
    unsetenv("BSEE_LAB_OUT");
    REQUIRE(resolve_out_root("") == std::filesystem::path("runs"));
}

TEST_CASE("executed runs write a complete reproducible report") {
    auto root = fresh_dir("bsee_exec_test");
    const Scenario& sc = require_scenario("scalar_linear");
    Config user;
    user.set("n_paths", "64");
    user.set("n_steps", "16");

    RunOutcome out = execute_scenario(sc, user, root);
    REQUIRE(out.report.all_pass());
    REQUIRE(out.run_dir.filename().string() ==
            "scalar_linear_" + scenario_config(sc, user).without("n_workers").hash());
    for (const char* leaf : {"results.json", "checks.csv", "config_echo.cfg", "run_meta.json"})
        REQUIRE(std::filesystem::exists(out.run_dir / leaf));

    REQUIRE(slurp(out.run_dir / "config_echo.cfg") == scenario_config(sc, user).canonical());

    auto j = nlohmann::json::parse(slurp(out.run_dir / "results.json"));
    REQUIRE(j["scenario"] == "scalar_linear");
    REQUIRE(j["all_pass"] == true);
    REQUIRE(j["config"].contains("n_paths"));
    REQUIRE_FALSE(j["config"].contains("n_workers")); // execution detail only
    REQUIRE(j["checks"].size() == out.report.checks.size());

    //reruns overwrite in place with identical bytes
    std::string first = slurp(out.run_dir / "results.json");
    RunOutcome again = execute_scenario(sc, user, root);
    REQUIRE(again.run_dir == out.run_dir);
    REQUIRE(slurp(out.run_dir / "results.json") == first);

    //a different worker count lands in the same directory name with the same bytes
    auto root2 = fresh_dir("bsee_exec_test_w2");
    Config user2 = user;
    user2.set("n_workers", "2");
    RunOutcome out2 = execute_scenario(sc, user2, root2);
    REQUIRE(out2.run_dir.filename() == out.run_dir.filename());
    REQUIRE(slurp(out2.run_dir / "results.json") == first);
}

TEST_CASE("cli entry points run, list, describe and validate") {
    auto root = fresh_dir("bsee_cli_test");
    int rc = 0;

    std::string listing = capture_stdout([&] { return cmd_list(); }, rc);
    REQUIRE(rc == kExitPass);
    REQUIRE(listing.find("scalar_linear") != std::string::npos);
    REQUIRE(listing.find("lq_heat") != std::string::npos);

    std::string described = capture_stdout([&] { return cmd_describe("diag_galerkin"); }, rc);
    REQUIRE(rc == kExitPass);
    REQUIRE(described.find("defaults:") != std::string::npos);
    REQUIRE(described.find("ranks=2,4,6") != std::string::npos);

    std::string validated =
        capture_stdout([&] { return cmd_validate("scalar_linear", "", {"n_steps=16"}); }, rc);
    REQUIRE(rc == kExitPass);
    REQUIRE(validated.find("n_steps=16") != std::string::npos);
    REQUIRE(validated.find("hash ") != std::string::npos);
    REQUIRE(validated.find("ok\n") != std::string::npos);

    std::string ran = capture_stdout(
        [&] { return cmd_run("scalar_linear", "", {"n_paths=64", "n_steps=16"}, root.string()); }, rc);
    REQUIRE(rc == kExitPass);
    REQUIRE(ran.find("PASS scalar_linear") != std::string::npos);
    REQUIRE(ran.find("wrote ") != std::string::npos);
    REQUIRE(ran.find("[PASS] regression_y_error") != std::string::npos);
}
