// Command-line front end: subcommand + key=value config file + flag
// overrides, exit 0 / 2 (validation) / 3 (numerical consistency).

#include <CLI11.hpp>
#include <iostream>

#include "dft/errors.hpp"
#include "dft/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"double fibration transform toolkit"};
    app.require_subcommand(1);

    dft::RunConfig cfg;
    std::string config_path;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* name : {"radon-invert", "xray", "conjugate-scan", "bolker-check",
                             "normal-op", "artifact-demo", "order-probe", "excess"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--out", cfg.output_dir, "output directory");
        sub->add_option("--metric", cfg.metric,
                        "metric preset (euclidean|curvature1|focusing|lines)");
        sub->add_option("--rdom", cfg.r_dom, "disk radius");
        sub->add_option("--phantom", cfg.phantom, "phantom name");
        sub->add_option("--grid", cfg.grid, "grid cells per side");
        sub->add_option("--angles", cfg.angles, "line sinogram angle count");
        sub->add_option("--offsets", cfg.offsets, "line sinogram offset count");
        sub->add_option("--nbeta", cfg.n_beta, "X-ray boundary angle count");
        sub->add_option("--nalpha", cfg.n_alpha, "X-ray direction count");
        sub->add_option("--quad-step", cfg.quad_step, "quadrature step along G_z");
        sub->add_option("--rank-tol", cfg.rank_tol, "rank threshold override");
        sub->add_option("--seed", cfg.seed, "seed for all random draws");
        sub->add_option("--beta", cfg.beta, "boundary angle of the scanned ray");
        sub->add_option("--alpha", cfg.alpha, "entry direction of the scanned ray");
        sub->add_option("--x0x", cfg.x0x, "probe/phantom center x");
        sub->add_option("--x0y", cfg.x0y, "probe/phantom center y");
        sub->add_option("--xi0x", cfg.xi0x, "probe covector x");
        sub->add_option("--xi0y", cfg.xi0y, "probe covector y");
        sub->add_option("--freq-min", cfg.freq_min, "lowest probe frequency");
        sub->add_option("--freq-max", cfg.freq_max, "highest probe frequency");
        sub->add_option("--freq-count", cfg.freq_count, "probe frequency count");
        sub->add_option("--N", cfg.N, "dim of the ray space");
        sub->add_option("--n", cfg.n, "dim of the base space");
        sub->add_option("--nprime", cfg.nprime, "n' (dim Z - N)");
        sub->add_option("--k", cfg.k, "conjugacy degree (0 = none)");
        subs.emplace_back(name, sub);
    }

    // config file first, then flag overrides on a fresh parse pass
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        cfg.command = name;
        if (!config_path.empty()) {
            // file values fill in whatever the flags did not set
            dft::RunConfig file_cfg;
            file_cfg.command = name;
            try {
                dft::apply_config_file(file_cfg, config_path);
            } catch (const dft::ValidationError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            const dft::RunConfig defaults{};
            auto pick = [](auto& target, const auto& file_value, const auto& default_value) {
                if (target == default_value) target = file_value;
            };
            pick(cfg.metric, file_cfg.metric, defaults.metric);
            pick(cfg.r_dom, file_cfg.r_dom, defaults.r_dom);
            pick(cfg.phantom, file_cfg.phantom, defaults.phantom);
            pick(cfg.grid, file_cfg.grid, defaults.grid);
            pick(cfg.angles, file_cfg.angles, defaults.angles);
            pick(cfg.offsets, file_cfg.offsets, defaults.offsets);
            pick(cfg.n_beta, file_cfg.n_beta, defaults.n_beta);
            pick(cfg.n_alpha, file_cfg.n_alpha, defaults.n_alpha);
            pick(cfg.quad_step, file_cfg.quad_step, defaults.quad_step);
            pick(cfg.rank_tol, file_cfg.rank_tol, defaults.rank_tol);
            pick(cfg.seed, file_cfg.seed, defaults.seed);
            pick(cfg.output_dir, file_cfg.output_dir, defaults.output_dir);
            pick(cfg.N, file_cfg.N, defaults.N);
            pick(cfg.n, file_cfg.n, defaults.n);
            pick(cfg.nprime, file_cfg.nprime, defaults.nprime);
            pick(cfg.k, file_cfg.k, defaults.k);
            pick(cfg.beta, file_cfg.beta, defaults.beta);
            pick(cfg.alpha, file_cfg.alpha, defaults.alpha);
            pick(cfg.x0x, file_cfg.x0x, defaults.x0x);
            pick(cfg.x0y, file_cfg.x0y, defaults.x0y);
            pick(cfg.xi0x, file_cfg.xi0x, defaults.xi0x);
            pick(cfg.xi0y, file_cfg.xi0y, defaults.xi0y);
            pick(cfg.freq_min, file_cfg.freq_min, defaults.freq_min);
            pick(cfg.freq_max, file_cfg.freq_max, defaults.freq_max);
            pick(cfg.freq_count, file_cfg.freq_count, defaults.freq_count);
        }
    }

    try {
        return dft::run(cfg);
    } catch (const dft::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const dft::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
