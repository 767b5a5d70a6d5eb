#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "blends/blends.hpp"

namespace {

void configure_logging() {
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("BLENDS_LOG_LEVEL")) {
        spdlog::set_level(spdlog::level::from_str(level));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"INS/GNSS post-processing: forward EKF, two-filter and RTS smoothing, BLENDS fusion"};
    std::string config_path;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> provider;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--mode", mode, "simulate | ekf | tfs | rtss | blends | motivation-study");
    app.add_option("--seed", seed, "simulation seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--provider", provider, "zero | oracle | file:<path>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(blends::ErrorCode::kArgument);
    }
    configure_logging();

    try {
        blends::RunConfig cfg = config_path.empty() ? blends::parse_config(nlohmann::json::object())
                                                    : blends::load_config(config_path);
        if (mode) cfg.mode = blends::parse_mode(*mode);
        if (seed) cfg.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (provider) cfg.provider = blends::parse_provider(*provider);
        spdlog::info("mode {} seed {} -> {}", blends::to_string(cfg.mode), cfg.seed, cfg.out_dir);
        blends::run_pipeline(cfg, [](const std::string& m) { spdlog::info("{}", m); });
        spdlog::info("done");
    } catch (const blends::Error& e) {
        std::cerr << "error: " << blends::to_string(e.code()) << ": " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
