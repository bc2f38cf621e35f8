#include "dft/experiments.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "dft/calculus.hpp"
#include "dft/errors.hpp"
#include "dft/fibrations.hpp"
#include "dft/geodesic.hpp"
#include "dft/grid.hpp"
#include "dft/normal.hpp"
#include "dft/transform.hpp"

namespace dft {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

const char* kCommands[] = {"radon-invert", "xray",       "conjugate-scan",
                           "bolker-check", "normal-op",  "artifact-demo",
                           "order-probe",  "excess"};

/// Collects output files and their checksums while a command runs.
struct Session {
    const RunConfig& cfg;
    fs::path dir;
    json results = json::object();
    std::vector<fs::path> outputs;

    explicit Session(const RunConfig& c) : cfg(c), dir(c.output_dir) {
        fs::create_directories(dir);
    }

    fs::path path(const std::string& name) {
        outputs.push_back(dir / name);
        return outputs.back();
    }

    void write_manifest(double wall_seconds, const std::string& error) {
        json m;
        m["command"] = cfg.command;
        m["seed"] = cfg.seed;
        m["wall_seconds"] = wall_seconds;
        m["config"] = {{"metric", cfg.metric},   {"r_dom", cfg.r_dom},
                       {"phantom", cfg.phantom}, {"grid", cfg.grid},
                       {"angles", cfg.angles},   {"n_beta", cfg.n_beta},
                       {"n_alpha", cfg.n_alpha}, {"quad_step", cfg.quad_step},
                       {"rank_tol", cfg.rank_tol}};
        m["results"] = results;
        if (!error.empty()) m["error"] = error;
        json files = json::array();
        for (const auto& p : outputs) {
            if (!fs::exists(p)) continue;
            files.push_back({{"file", p.filename().string()},
                             {"fnv1a", fnv1a_file(p.string())}});
        }
        m["outputs"] = files;
        std::ofstream os(dir / "manifest.json");
        os << m.dump(2) << "\n";
    }
};

GridFunction config_phantom(const RunConfig& cfg, double extent) {
    return phantom_by_name(cfg.phantom, cfg.grid, extent);
}

int config_offsets(const RunConfig& cfg) {
    return cfg.offsets > 0 ? cfg.offsets : 2 * cfg.grid + 1;
}

Eigen::MatrixXd to_image(const Eigen::MatrixXd& values) {
    // grid (ix, iy) -> image rows from top: transpose and flip the y axis
    return values.transpose().colwise().reverse();
}

// --- commands ----------------------------------------------------------------

void cmd_radon_invert(Session& s) {
    const RunConfig& cfg = s.cfg;
    const GridFunction f = config_phantom(cfg, 1.0);
    const FibrationSpec spec = lines_fibration(1.0);
    const Quadrature q{QuadratureRule::trapezoid, cfg.quad_step};
    const SinogramFunction u =
        forward(spec, f, q, lines_sinogram(cfg.angles, config_offsets(cfg), 1.0));
    const GridFunction rec = radon_invert(u, cfg.grid, 1.0);

    GridFunction diff = rec;
    diff.values -= f.values;
    const double rel = diff.norm2() / f.norm2();
    s.results["relative_l2_error"] = rel;

    write_dftg(s.path("phantom.dftg").string(), f);
    write_dftg(s.path("sinogram.dftg").string(), u);
    write_dftg(s.path("reconstruction.dftg").string(), rec);
    write_pgm16(s.path("reconstruction.pgm").string(), to_image(rec.values));

    // center-row profile of phantom vs reconstruction
    std::vector<double> xs, ys;
    for (int i = 0; i < cfg.grid; ++i) {
        xs.push_back(f.cell_center(i, cfg.grid / 2)[0]);
        ys.push_back(rec.values(i, cfg.grid / 2));
    }
    write_csv_pairs(s.path("profile.csv").string(), "x", "reconstruction", xs, ys);
}

void cmd_xray(Session& s) {
    const RunConfig& cfg = s.cfg;
    const MetricField m = MetricField::preset(cfg.metric, cfg.r_dom);
    const GridFunction f = config_phantom(cfg, m.r_dom);
    const Quadrature q{QuadratureRule::trapezoid, cfg.quad_step};
    const SinogramFunction u = xray_forward(
        m, [](const Vec2&) { return 1.0; }, f, q, cfg.n_beta, cfg.n_alpha);
    s.results["sinogram_max"] = u.values.maxCoeff();
    write_dftg(s.path("phantom.dftg").string(), f);
    write_dftg(s.path("sinogram.dftg").string(), u);
    write_pgm16(s.path("sinogram.pgm").string(), u.values);
}

void cmd_conjugate_scan(Session& s) {
    const RunConfig& cfg = s.cfg;
    const MetricField m = MetricField::preset(cfg.metric, cfg.r_dom);
    const Geodesic g = integrate_geodesic(
        m, boundary_start(m, cfg.beta, cfg.alpha), 1e-3 * m.r_dom);
    const auto pairs = conjugate_scan(m, g);
    s.results["exit_time"] = g.exit_time;
    s.results["pairs"] = pairs.size();

    std::ofstream os(s.path("conjugate_pairs.csv"));
    os.precision(17);
    os << "t0,t1,degree\n";
    for (const auto& p : pairs) os << p.t0 << "," << p.t1 << "," << p.degree << "\n";
}

void cmd_bolker_check(Session& s) {
    const RunConfig& cfg = s.cfg;
    std::mt19937 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::ofstream os(s.path("bolker.csv"));
    os.precision(17);
    os << "theta_or_beta,s_or_alpha,t,rank,immersive,collisions\n";
    int immersive_failures = 0, collisions = 0;
    const int samples = 200;

    if (cfg.metric == "lines") {
        const FibrationSpec spec = lines_fibration(1.0);
        for (int i = 0; i < samples; ++i) {
            VecX z(2);
            z << unif(rng) * kPi, (2.0 * unif(rng) - 1.0) * 0.9;
            const auto gz = spec.gz_points(z, 0.01);
            const Vec2 x = gz.points[gz.points.size() / 2];
            VecX xv(2);
            xv = x;
            VecX eta(1);
            eta[0] = 1.0;
            const auto res = bolker_rank(spec, z, xv, eta);
            const auto zeta = a_map(spec, z, xv, eta);
            const PhiChart& c = spec.phi_at(z, xv);
            const auto hits = pi_l_scan(spec, z, zeta.covector, xv,
                                        c.conormal(z, c.x_prime(xv), eta),
                                        line_candidates(z, std::sqrt(2.0), 201));
            if (!res.immersive) ++immersive_failures;
            collisions += static_cast<int>(hits.size());
            os << z[0] << "," << z[1] << ",0," << res.rank << ","
               << (res.immersive ? 1 : 0) << "," << hits.size() << "\n";
        }
    } else {
        const MetricField m = MetricField::preset(cfg.metric, cfg.r_dom);
        const FibrationSpec spec = xray_fibration(m);
        for (int i = 0; i < samples; ++i) {
            VecX z(2);
            z << unif(rng) * 2.0 * kPi, (2.0 * unif(rng) - 1.0) * 1.2;
            const Geodesic g =
                integrate_geodesic(m, boundary_start(m, z[0], z[1]), 1e-3 * m.r_dom);
            const double t = g.exit_time * (0.2 + 0.6 * unif(rng));
            VecX xv(2);
            xv = g.at(t).x;
            VecX eta(1);
            eta[0] = 1.0;
            const auto res = bolker_rank(spec, z, xv, eta);
            if (!res.immersive) ++immersive_failures;
            os << z[0] << "," << z[1] << "," << t << "," << res.rank << ","
               << (res.immersive ? 1 : 0) << ",0\n";
        }
    }
    s.results["immersive_failures"] = immersive_failures;
    s.results["pi_l_collisions"] = collisions;
}

void cmd_normal_op(Session& s) {
    const RunConfig& cfg = s.cfg;
    const Quadrature q{QuadratureRule::trapezoid, cfg.quad_step};
    const bool lines = cfg.metric == "lines";
    const double extent = lines ? 1.0 : cfg.r_dom;
    FibrationSpec spec =
        lines ? lines_fibration(extent)
              : xray_fibration(MetricField::preset(cfg.metric, cfg.r_dom));
    const SinogramFunction layout =
        lines ? lines_sinogram(cfg.angles, config_offsets(cfg), extent)
              : xray_sinogram(cfg.n_beta, cfg.n_alpha);
    const NormalOperator op(std::move(spec), q, layout);

    const GridFunction f = config_phantom(cfg, extent);
    const GridFunction g = op.apply(f);
    write_dftg(s.path("normal.dftg").string(), g);
    write_pgm16(s.path("normal.pgm").string(), to_image(g.values));

    if (cfg.grid <= 48) {
        const Eigen::MatrixXd mat = op.materialize(cfg.grid, extent);
        const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
        const Eigen::VectorXd eig =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mat).eigenvalues();
        s.results["asymmetry"] = asym / mat.cwiseAbs().maxCoeff();
        s.results["min_eigenvalue"] = eig.minCoeff();
        s.results["max_eigenvalue"] = eig.maxCoeff();
    }
}

void cmd_artifact_demo(Session& s) {
    const RunConfig& cfg = s.cfg;
    const MetricField m = MetricField::preset(cfg.metric, cfg.r_dom);
    const Vec2 x0(cfg.x0x, cfg.x0y);
    const Vec2 eta0(cfg.xi0x, cfg.xi0y);
    const ArtifactPrediction pred = artifact_predict(m, x0, eta0);
    s.results["predicted_count"] = pred.predicted.size();

    std::ofstream os(s.path("prediction.csv"));
    os.precision(17);
    os << "y0,y1,eta0,eta1\n";
    for (const auto& p : pred.predicted)
        os << p.first[0] << "," << p.first[1] << "," << p.second[0] << ","
           << p.second[1] << "\n";

    try {
        const ArtifactMeasurement meas =
            artifact_measure(m, x0, pred, cfg.grid, cfg.n_beta, cfg.n_alpha);
        s.results["artifact_found"] = true;
        s.results["centroid"] = {meas.centroid[0], meas.centroid[1]};
        s.results["distance_to_prediction"] = meas.distance_to_prediction;
        s.results["peak_over_background"] =
            meas.background > 0.0 ? meas.peak / meas.background : 0.0;
    } catch (const NoArtifactFound&) {
        s.results["artifact_found"] = false;
    }
}

void cmd_order_probe(Session& s) {
    const RunConfig& cfg = s.cfg;
    const FibrationSpec spec = lines_fibration(1.0);
    std::vector<double> freqs;
    for (int i = 0; i < cfg.freq_count; ++i)
        freqs.push_back(cfg.freq_min *
                        std::pow(cfg.freq_max / cfg.freq_min,
                                 static_cast<double>(i) / (cfg.freq_count - 1)));
    const Vec2 x0(cfg.x0x, cfg.x0y);
    const Vec2 xi0(cfg.xi0x, cfg.xi0y);
    const auto probe = order_probe(spec, x0, xi0, freqs, ProbeOperator::normal);
    const auto control = order_probe(spec, x0, xi0, freqs, ProbeOperator::identity);
    s.results["slope_normal"] = probe.slope;
    s.results["slope_identity"] = control.slope;

    write_csv_pairs(s.path("probe.csv").string(), "frequency", "amplitude",
                    probe.freqs, probe.amplitudes);
    std::ofstream os(s.path("probe.gp"));
    os << "set logscale xy\n"
       << "set xlabel 'frequency'\n"
       << "set ylabel '|R*R probe|(x0)'\n"
       << "plot 'probe.csv' skip 1 using 1:2 with linespoints title 'slope "
       << probe.slope << "'\n";
}

void cmd_excess(Session& s) {
    const RunConfig& cfg = s.cfg;
    const StructureNumbers sn = structure_numbers(
        cfg.N, cfg.n, cfg.nprime, cfg.k > 0 ? std::optional<int>(cfg.k) : std::nullopt);

    std::ostringstream table;
    table << "quantity            value\n"
          << "N                   " << sn.N << "\n"
          << "n                   " << sn.n << "\n"
          << "n'                  " << sn.n_prime << "\n"
          << "n''                 " << sn.n_dprime << "\n"
          << "dim Z               " << sn.dim_Z << "\n"
          << "order R, R*         " << sn.order_R.str() << "\n"
          << "clean excess        " << sn.excess_clean << "\n"
          << "order R*R           " << sn.order_normal.str() << "\n"
          << "dim C_{R,k}         " << sn.dim_CRk << "\n";
    if (sn.k) {
        table << "degree k            " << *sn.k << "\n"
              << "conjugate excess    " << *sn.excess_conjugate << "\n"
              << "order A_{k,a}       " << sn.order_artifact->str() << "\n"
              << "dim E_{k,a}         " << *sn.dim_E << "\n";
    }
    std::cout << table.str();

    std::ofstream os(s.path("excess.csv"));
    os << "N,n,nprime,ndprime,dimZ,orderR,cleanExcess,orderNormal,dimCRk,k,"
          "conjugateExcess,orderArtifact,dimE\n";
    os << sn.N << "," << sn.n << "," << sn.n_prime << "," << sn.n_dprime << ","
       << sn.dim_Z << "," << sn.order_R.str() << "," << sn.excess_clean << ","
       << sn.order_normal.str() << "," << sn.dim_CRk << ",";
    if (sn.k)
        os << *sn.k << "," << *sn.excess_conjugate << "," << sn.order_artifact->str()
           << "," << *sn.dim_E << "\n";
    else
        os << ",,,\n";
    s.results["order_normal"] = sn.order_normal.str();
    s.results["clean_excess"] = sn.excess_clean;
}

}  // namespace

// ---------------------------------------------------------------------------
// config plumbing

void RunConfig::validate() const {
    bool known = false;
    for (const char* c : kCommands) known = known || command == c;
    if (!known) throw ValidationError("unknown command: " + command);
    if (grid < 8) throw ValidationError("grid must be >= 8");
    if (angles < 2 || n_beta < 2 || n_alpha < 2)
        throw ValidationError("sinogram axes must have >= 2 nodes");
    if (r_dom <= 0.0) throw ValidationError("r_dom must be positive");
    if (quad_step < 0.0) throw ValidationError("quad_step must be >= 0");
    if (rank_tol <= 0.0) throw ValidationError("rank_tol must be positive");
    if (freq_min <= 0.0 || freq_max <= freq_min || freq_count < 2)
        throw ValidationError("order-probe frequency range invalid");
    if (command == "excess") {
        const int ndp = n - nprime;
        if (n < 2 || nprime < 1 || ndp < 1)
            throw ValidationError("need n >= 2 and 1 <= n' <= n-1");
        if (N < n) throw ValidationError("need N >= n");
        if (k != 0 && (k < 1 || k > ndp)) throw ValidationError("k out of range 1..n''");
    }
}

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "command") cfg.command = value;
        else if (key == "metric") cfg.metric = value;
        else if (key == "r_dom") cfg.r_dom = std::stod(value);
        else if (key == "phantom") cfg.phantom = value;
        else if (key == "grid") cfg.grid = std::stoi(value);
        else if (key == "angles") cfg.angles = std::stoi(value);
        else if (key == "offsets") cfg.offsets = std::stoi(value);
        else if (key == "n_beta") cfg.n_beta = std::stoi(value);
        else if (key == "n_alpha") cfg.n_alpha = std::stoi(value);
        else if (key == "quad_step") cfg.quad_step = std::stod(value);
        else if (key == "rank_tol") cfg.rank_tol = std::stod(value);
        else if (key == "seed") cfg.seed = static_cast<unsigned>(std::stoul(value));
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "N") cfg.N = std::stoi(value);
        else if (key == "n") cfg.n = std::stoi(value);
        else if (key == "nprime") cfg.nprime = std::stoi(value);
        else if (key == "k") cfg.k = std::stoi(value);
        else if (key == "beta") cfg.beta = std::stod(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "x0x") cfg.x0x = std::stod(value);
        else if (key == "x0y") cfg.x0y = std::stod(value);
        else if (key == "xi0x") cfg.xi0x = std::stod(value);
        else if (key == "xi0y") cfg.xi0y = std::stod(value);
        else if (key == "freq_min") cfg.freq_min = std::stod(value);
        else if (key == "freq_max") cfg.freq_max = std::stod(value);
        else if (key == "freq_count") cfg.freq_count = std::stoi(value);
        else throw ValidationError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw ValidationError("malformed value for config key " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw ValidationError("value out of range for config key " + key + ": " + value);
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ValidationError("cannot read config file: " + path);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ValidationError("config line is not key=value: " + line);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_key_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

int run(const RunConfig& cfg) {
    cfg.validate();  // throws before anything is written
    Session session(cfg);
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    int code = 0;
    try {
        if (cfg.command == "radon-invert") cmd_radon_invert(session);
        else if (cfg.command == "xray") cmd_xray(session);
        else if (cfg.command == "conjugate-scan") cmd_conjugate_scan(session);
        else if (cfg.command == "bolker-check") cmd_bolker_check(session);
        else if (cfg.command == "normal-op") cmd_normal_op(session);
        else if (cfg.command == "artifact-demo") cmd_artifact_demo(session);
        else if (cfg.command == "order-probe") cmd_order_probe(session);
        else if (cfg.command == "excess") cmd_excess(session);
    } catch (const ValidationError& e) {
        error = e.what();
        code = 2;
    } catch (const Error& e) {
        error = e.what();
        code = 3;  // numerical / consistency failure
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    session.write_manifest(wall, error);
    if (!error.empty()) std::cerr << "error: " << error << "\n";
    return code;
}

}  // namespace dft
