//Command-line front end: run / list / describe / validate over the scenario
//registry.  Exit codes: 0 all checks pass, 1 a check failed, 2 bad usage or
//configuration.
#include <CLI11.hpp>

#include "bsee/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for backward stochastic evolution equations"};
    app.require_subcommand(1);

    std::string scenario, config_file, out_flag;
    std::vector<std::string> overrides;

    auto add_config_opts = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("scenario", scenario, "scenario name (see 'list')")->required();
        cmd->add_option("-c,--config", config_file, "key=value configuration file");
        cmd->add_option("-s,--set", overrides, "override, key=value (repeatable)");
        if (with_out) cmd->add_option("-o,--out", out_flag, "output root (default $BSEE_LAB_OUT or ./runs)");
    };
    CLI::App* run = app.add_subcommand("run", "run a scenario and write its report");
    add_config_opts(run, true);
    CLI::App* list = app.add_subcommand("list", "list available scenarios");
    CLI::App* describe = app.add_subcommand("describe", "show a scenario's checks and configuration keys");
    describe->add_option("scenario", scenario, "scenario name")->required();
    CLI::App* validate = app.add_subcommand("validate", "merge and echo a configuration without running");
    add_config_opts(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : bsee::kExitConfigError;
    }

    try {
        if (run->parsed()) return bsee::cmd_run(scenario, config_file, overrides, out_flag);
        if (list->parsed()) return bsee::cmd_list();
        if (describe->parsed()) return bsee::cmd_describe(scenario);
        if (validate->parsed()) return bsee::cmd_validate(scenario, config_file, overrides);
    } catch (const bsee::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return bsee::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bsee::kExitCheckFailed;
    }
    return bsee::kExitConfigError;
}
