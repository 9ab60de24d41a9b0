// lcrdo command-line front end: run, compare, calibrate, ssim.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lcrdo/lcrdo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCalibration = 3;

std::string opt_number(const std::optional<double>& v) { return v ? lcrdo::format_double(*v) : ""; }

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& policy, const std::string& out_dir, bool plotdata) {
    lcrdo::SimConfig cfg = lcrdo::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (policy) {
        const auto p = lcrdo::parse_policy(*policy);
        const bool regroup = lcrdo::uses_encoder_pair(p) != lcrdo::uses_encoder_pair(cfg.policy) ||
                             (lcrdo::uses_encoder_pair(p) && p != cfg.policy);
        cfg.policy = p;
        if (regroup) lcrdo::apply_policy_defaults(cfg);
        cfg.validate();
    }
    const lcrdo::RunResult r = lcrdo::run(cfg);
    lcrdo::write_outputs(r, out_dir, plotdata);
    const auto& rep = r.report;
    std::printf("policy=%s seed=%llu d_M=%s temporal_ratio=%s avg_ssim=%s drop=[%s %s %s] switches=%zu\n",
                std::string(lcrdo::to_string(cfg.policy)).c_str(), static_cast<unsigned long long>(cfg.seed),
                lcrdo::format_double(rep.d_M).c_str(), lcrdo::format_double(rep.temporal_ratio).c_str(),
                opt_number(rep.avg_ssim).c_str(), lcrdo::format_double(rep.packet_drop_rate_by_priority[0]).c_str(),
                lcrdo::format_double(rep.packet_drop_rate_by_priority[1]).c_str(),
                lcrdo::format_double(rep.packet_drop_rate_by_priority[2]).c_str(), r.switches.size());
    return kExitOk;
}

int cmd_compare(const std::string& preset, int seeds, std::uint64_t first_seed, bool ssim) {
    if (preset != "sim40" && !lcrdo::is_trio_preset(preset)) {
        throw lcrdo::ConfigError("unknown preset '" + preset + "' (expected exp1 | exp2 | exp3 | sim40)");
    }
    const auto rows = lcrdo::compare_preset(preset, seeds, first_seed, ssim);
    std::cout << "seed,case,policy,d_M,temporal_ratio,avg_ssim,drop_f1,drop_f2,drop_f3,f1_completion,switches\n";
    for (const auto& row : rows) {
        const auto& rep = row.report;
        std::cout << row.seed << ',' << row.label << ',' << lcrdo::to_string(row.policy) << ','
                  << lcrdo::format_double(rep.d_M) << ',' << lcrdo::format_double(rep.temporal_ratio) << ','
                  << opt_number(rep.avg_ssim) << ',' << lcrdo::format_double(rep.packet_drop_rate_by_priority[0])
                  << ',' << lcrdo::format_double(rep.packet_drop_rate_by_priority[1]) << ','
                  << lcrdo::format_double(rep.packet_drop_rate_by_priority[2]) << ','
                  << lcrdo::format_double(rep.frame_completion_rate[0]) << ',' << row.switches << '\n';
    }
    return kExitOk;
}

int cmd_calibrate(const std::optional<std::string>& config_path, double target, double tol) {
    lcrdo::SimConfig cfg = config_path ? lcrdo::load_config(*config_path) : lcrdo::sim40_config(lcrdo::Policy::NoAck);
    const auto p = lcrdo::calibrate_channel(cfg.topology, cfg.channel, target, tol);
    std::printf("drop_midpoint_dbm=%s mean_drop=%s\n", lcrdo::format_double(p.drop_midpoint_dbm).c_str(),
                lcrdo::format_double(lcrdo::mean_drop_probability(cfg.topology, p)).c_str());
    return kExitOk;
}

int cmd_ssim(const std::string& ref, const std::string& test, int window) {
    const auto a = lcrdo::read_pgm_file(ref);
    const auto b = lcrdo::read_pgm_file(test);
    lcrdo::SsimParams p;
    p.window = window;
    std::printf("%.12f\n", lcrdo::ssim(a, b, p));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for prioritised video streaming over a mobile wireless link"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run one simulation from a config file");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
    std::string out_dir;
    bool no_plotdata = false;
    run->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the run seed");
    run->add_option("--policy", policy,
                    "no-ack | ack | lcrdo-ack | lcrdo-beacon | lcrdo-adaptive-mpeg2 | lcrdo-adaptive-mjpeg");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_flag("--no-plotdata", no_plotdata, "Skip plotdata.csv");

    auto* compare = app.add_subcommand("compare", "Run a named preset over several seeds (CSV on stdout)");
    std::string preset;
    int seeds = 30;
    std::uint64_t first_seed = 1;
    bool with_ssim = false;
    compare->add_option("--preset", preset, "exp1 | exp2 | exp3 | sim40")->required();
    compare->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    compare->add_option("--first-seed", first_seed, "First seed");
    compare->add_flag("--ssim", with_ssim, "Also compute avg SSIM (slower)");

    auto* calibrate = app.add_subcommand("calibrate", "Solve the drop midpoint for a target mean drop rate");
    double target = 0.40;
    double tol = 0.005;
    std::optional<std::string> cal_config;
    calibrate->add_option("--target", target, "Mean per-attempt drop probability");
    calibrate->add_option("--tol", tol, "Tolerance");
    calibrate->add_option("--config", cal_config, "Config file providing topology and channel (default: sim40)");

    auto* ssim = app.add_subcommand("ssim", "SSIM between two PGM images");
    std::string ref;
    std::string test;
    int window = 8;
    ssim->add_option("--ref", ref, "Reference image (PGM)")->required();
    ssim->add_option("--test", test, "Test image (PGM)")->required();
    ssim->add_option("--window", window, "Window size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return cmd_run(config_path, seed, policy, out_dir, !no_plotdata);
        if (*compare) return cmd_compare(preset, seeds, first_seed, with_ssim);
        if (*calibrate) return cmd_calibrate(cal_config, target, tol);
        if (*ssim) return cmd_ssim(ref, test, window);
    } catch (const lcrdo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const lcrdo::CalibrationError& e) {
        std::cerr << "calibration failed: " << e.what() << '\n';
        return kExitCalibration;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitOk;
}
