#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "etop/config.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw etop::ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "job config file (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
        args.seed_set = true;
    });
}

int dispatch(const CommonArgs& args, int (*command)(const etop::JobConfig&, const std::string&)) {
    etop::JobConfig config = etop::JobConfig::parse(read_file(args.config_path));
    if (args.seed_set) {
        config.seed = args.seed;
        config.study.seed = args.seed;
    }
    const std::string out = args.out_dir.empty() ? config.output : args.out_dir;
    return command(config, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eigenfrequency and bandgap topology optimization with eigenvalue clustering"};
    app.require_subcommand(1);

    CommonArgs opt_args, eig_args, verify_args;
    CLI::App* optimize = app.add_subcommand("optimize", "run the optimization loop");
    add_common(optimize, opt_args);
    CLI::App* eig = app.add_subcommand("eig", "solve the eigenproblem at the initial design");
    add_common(eig, eig_args);
    CLI::App* verify = app.add_subcommand("verify", "analytic-vs-CDM sensitivity study");
    add_common(verify, verify_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (optimize->parsed()) return dispatch(opt_args, etop::cmd_optimize);
        if (eig->parsed()) return dispatch(eig_args, etop::cmd_eig);
        if (verify->parsed()) return dispatch(verify_args, etop::cmd_verify);
    } catch (const etop::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
