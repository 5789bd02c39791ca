#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kmpc/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
}

kmpc::RunConfig resolve(const CommonArgs& args) {
    kmpc::RunConfig cfg = kmpc::load_config(args.config_path);
    if (args.seed.has_value()) cfg.seed = *args.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman-based identification and MPC experiments"};
    app.require_subcommand(1);

    CommonArgs collect_args, noise_args, identify_args, predict_args, mpc_args;
    CLI::App* collect = app.add_subcommand("collect", "simulate trials and write CSV logs");
    add_common(collect, collect_args);
    CLI::App* noise = app.add_subcommand("noise", "characterize period-to-period stochasticity");
    add_common(noise, noise_args);
    CLI::App* identify =
        app.add_subcommand("identify", "fit Koopman and baseline models from trial logs");
    add_common(identify, identify_args);
    CLI::App* predict = app.add_subcommand("predict", "multi-step prediction comparison");
    add_common(predict, predict_args);
    CLI::App* mpc = app.add_subcommand("mpc", "closed-loop tracking comparison");
    add_common(mpc, mpc_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (collect->parsed()) kmpc::cmd_collect(resolve(collect_args), collect_args.out_dir);
        if (noise->parsed()) kmpc::cmd_noise(resolve(noise_args), noise_args.out_dir);
        if (identify->parsed()) kmpc::cmd_identify(resolve(identify_args), identify_args.out_dir);
        if (predict->parsed()) kmpc::cmd_predict(resolve(predict_args), predict_args.out_dir);
        if (mpc->parsed()) kmpc::cmd_mpc(resolve(mpc_args), mpc_args.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
