#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "fdx/audit.hpp"
#include "fdx/error.hpp"
#include "fdx/io.hpp"

namespace {

// 0 ok, 1 failed audit or numerical failure, 2 invalid input, 3 I/O
int exit_code(fdx::ErrorCode c) {
    using fdx::ErrorCode;
    switch (c) {
        case ErrorCode::BelowCritical:
        case ErrorCode::NotFast:
        case ErrorCode::WeakAbsorption:
        case ErrorCode::SigmaTooSmall:
        case ErrorCode::BadDimension:
        case ErrorCode::NonFinite:
        case ErrorCode::DegenerateDimension:
        case ErrorCode::BadConfig:
        case ErrorCode::BadRange:
        case ErrorCode::BadBracket:
        case ErrorCode::PreconditionViolated:
        case ErrorCode::Config:
            return 2;
        case ErrorCode::Io:
            return 3;
        default:
            return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace fdx::cli;
    const std::map<std::string, std::pair<std::string, std::function<int(const RunContext&)>>> commands{
        {"derive", {"derived constants and equilibrium spectra", cmd_derive}},
        {"profile", {"shoot one self-similar profile", cmd_profile}},
        {"phase", {"integrate one l_C trajectory", cmd_phase}},
        {"classify", {"classify a list of A values", cmd_classify}},
        {"find-astar", {"bisect for the critical A*", cmd_find_astar}},
        {"verify", {"run the invariant-region audits", cmd_verify}},
        {"fig1", {"trajectory family plot and CSVs", cmd_fig1}},
        {"pde", {"radial PDE run to extinction", cmd_pde}},
    };

    CLI::App app{"fdx: self-similar extinction for fast diffusion with weighted absorption"};
    app.set_version_flag("--version", std::string("fdx ") + FDX_VERSION);
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    for (const auto& [name, entry] : commands) {
        auto* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "output directory (must exist)")->required();
        sub->add_option("--seed", seed, "RNG seed (overrides config \"seed\")");
        sub->add_option("--threads", threads, "worker threads, 0 for all cores");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string name = app.get_subcommands().front()->get_name();

    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    try {
        nlohmann::json cfg = nlohmann::json::object();
        if (!config_path.empty()) {
            try {
                cfg = nlohmann::json::parse(fdx::io::read_file(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw fdx::Error(fdx::ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
            }
            if (!cfg.is_object()) throw fdx::Error(fdx::ErrorCode::Config, "config must be a JSON object");
        }
        std::uint64_t s = fdx::kDefaultSeed;
        if (cfg.contains("seed")) {
            if (!cfg["seed"].is_number_unsigned()) throw fdx::Error(fdx::ErrorCode::Config, "config.seed must be a non-negative integer");
            s = cfg["seed"].get<std::uint64_t>();
            cfg.erase("seed");
        }
        if (seed) s = *seed;
        ctx.seed = s;
        nlohmann::json hashed = cfg;
        hashed["seed"] = s;
        ctx.config_hash = fdx::io::config_hash(hashed);
        ctx.config = cfg;
        if (!std::filesystem::is_directory(out_dir))
            throw fdx::Error(fdx::ErrorCode::Io, "output directory does not exist: " + out_dir);
        return commands.at(name).second(ctx);
    } catch (const fdx::Error& e) {
        std::cerr << "fdx " << name << ": " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "fdx " << name << ": Io: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "fdx " << name << ": " << e.what() << "\n";
        return 1;
    }
}
