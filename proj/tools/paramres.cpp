#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "paramres/cli/commands.hpp"

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("paramres"));
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("PARAMRES_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

    CLI::App app{"Two-mode flux-pumped Kerr cavity: steady states, gain, squeezing and conversion"};
    app.require_subcommand(1);
    paramres::cli::RunOptions opt;
    std::string format = "csv";
    std::string chosen;
    for (auto& name : paramres::cli::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "TOML run configuration")->required();
        sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", opt.threads, "worker threads (0 = all logical cores)")->check(CLI::NonNegativeNumber);
        sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    opt.format = paramres::cli::parse_format(format);
    return paramres::cli::run(chosen, opt);
}
