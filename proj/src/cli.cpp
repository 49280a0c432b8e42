#include "crcop/cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crcop/estimation.hpp"
#include "crcop/stats.hpp"

namespace crcop::cli {

namespace {

using nlohmann::json;

std::string format_double(double v, const char* fmt = "%.12g") {
    if (std::isnan(v)) return "NA";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), fmt, v);
    return buffer;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    std::size_t n_threads = threads > 0 ? threads : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min(n_threads, count);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec && !std::filesystem::is_directory(dir))
        throw std::runtime_error("cannot create output directory: " + cfg.out_dir);
    return dir;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace

void RunConfig::finalize() {
    if (full_scale) {
        if (!study.reps_set) study.reps = 500;
        if (!sweep.reps_set) {
            sweep.reps_per_point = 100;
            sweep.n_per_rep = 5000;
        }
    }
    if (!sweep.grid_set) {
        if (sweep.variable == "sigma_z") {
            sweep.from = 0.2;
            sweep.to = 14.0;
            sweep.step = 0.2;
        } else if (sweep.variable == "beta12") {
            sweep.from = -4.0;
            sweep.to = 4.0;
            sweep.step = 0.2;
        } else if (sweep.variable == "gamma") {
            sweep.from = -2.0;
            sweep.to = 2.0;
            sweep.step = 0.2;
        }
    }
    if (sweep.variable != "sigma_z" && sweep.variable != "beta12" && sweep.variable != "gamma")
        throw std::invalid_argument("sweep variable must be sigma_z, beta12 or gamma");
    if (!(sweep.step > 0.0) || !(sweep.from < sweep.to))
        throw std::invalid_argument("sweep grid requires step > 0 and from < to");
}

RunConfig load_config(const std::string& json_path) {
    RunConfig cfg;
    if (json_path.empty()) return cfg;
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open config file: " + json_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& err) {
        throw std::runtime_error("config parse error in " + json_path + ": " + err.what());
    }
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.out_dir = doc.value("out", cfg.out_dir);
    cfg.threads = doc.value("threads", cfg.threads);
    if (doc.contains("dgp")) {
        const json& d = doc["dgp"];
        cfg.dgp.params.theta = d.value("theta", cfg.dgp.params.theta);
        if (d.contains("tau")) cfg.dgp.params.theta = 1.0 / (1.0 - d["tau"].get<double>());
        cfg.dgp.params.gamma = d.value("gamma", cfg.dgp.params.gamma);
        cfg.dgp.params.beta01 = d.value("beta01", cfg.dgp.params.beta01);
        if (d.contains("beta11")) cfg.dgp.params.beta11 = {d["beta11"].get<double>()};
        if (d.contains("beta12")) cfg.dgp.params.beta12 = {d["beta12"].get<double>()};
        cfg.dgp.n = d.value("n", cfg.dgp.n);
        cfg.dgp.z_dist.mean = d.value("z_mean", cfg.dgp.z_dist.mean);
        cfg.dgp.z_dist.sd = d.value("z_sd", cfg.dgp.z_dist.sd);
        if (d.contains("censor_rate") && !d["censor_rate"].is_null())
            cfg.dgp.censor_rate = d["censor_rate"].get<double>();
    }
    if (doc.contains("study")) {
        const json& s = doc["study"];
        if (s.contains("taus")) cfg.study.taus = s["taus"].get<std::vector<double>>();
        if (s.contains("sizes")) cfg.study.sizes = s["sizes"].get<std::vector<std::size_t>>();
        if (s.contains("reps")) {
            cfg.study.reps = s["reps"].get<std::size_t>();
            cfg.study.reps_set = true;
        }
    }
    if (doc.contains("sweep")) {
        const json& s = doc["sweep"];
        cfg.sweep.variable = s.value("variable", cfg.sweep.variable);
        if (s.contains("from") || s.contains("to") || s.contains("step")) {
            cfg.sweep.from = s.value("from", 0.0);
            cfg.sweep.to = s.value("to", 0.0);
            cfg.sweep.step = s.value("step", 0.0);
            cfg.sweep.grid_set = true;
        }
        if (s.contains("reps_per_point")) {
            cfg.sweep.reps_per_point = s["reps_per_point"].get<std::size_t>();
            cfg.sweep.reps_set = true;
        }
        if (s.contains("n_per_rep")) {
            cfg.sweep.n_per_rep = s["n_per_rep"].get<std::size_t>();
            cfg.sweep.reps_set = true;
        }
    }
    if (doc.contains("fit")) {
        const json& f = doc["fit"];
        cfg.fit.input = f.value("input", cfg.fit.input);
        cfg.fit.model = f.value("model", cfg.fit.model);
    }
    return cfg;
}

int run_simulate(const RunConfig& cfg, std::ostream& log) {
    const auto dir = prepare_out_dir(cfg);
    DgpConfig dgp = cfg.dgp;
    dgp.seed = cfg.seed;
    const Dataset data = sample_dataset(dgp);
    const auto path = dir / "dataset.csv";
    write_csv_file(data, path.string());
    std::size_t events1 = 0;
    for (int s : data.status) events1 += s == 1;
    log << "wrote " << data.size() << " observations to " << path.string()
        << " (fraction delta=1: " << format_double(static_cast<double>(events1) / data.size(), "%.4g")
        << ")\n";
    return 0;
}

int run_study(const RunConfig& cfg, std::ostream& log) {
    const auto dir = prepare_out_dir(cfg);
    std::size_t cell_index = 0;
    for (double tau : cfg.study.taus) {
        std::vector<StudyReport> reports;
        for (std::size_t n : cfg.study.sizes) {
            DgpConfig dgp = cfg.dgp;
            dgp.params.theta = 1.0 / (1.0 - tau);
            dgp.n = n;
            dgp.seed = splitmix64(cfg.seed ^ splitmix64(0x57d1 + cell_index));
            ++cell_index;
            StudyReport report;
            try {
                report = coverage_study(dgp, cfg.study.reps, StudyEstimator::partial_likelihood,
                                        cfg.threads);
            } catch (const std::exception& err) {
                log << "study cell tau=" << format_double(tau, "%g") << " n=" << n
                    << " failed: " << err.what() << "\n";
                continue;
            }
            std::ostringstream name;
            name << "study_tau" << format_double(tau, "%g") << "_n" << n << ".csv";
            write_text_file(dir / name.str(), report.to_csv());
            log << "tau=" << format_double(tau, "%g") << " n=" << n << " reps=" << cfg.study.reps
                << " excluded=" << report.n_excluded << "\n"
                << report.to_text();
            reports.push_back(std::move(report));
        }
        if (reports.size() != cfg.study.sizes.size()) continue;
        // Combined table in the layout of the simulation tables:
        // {SB, VAR, MSE, CP} x {tau, gamma, beta11, beta12}, one column per n.
        std::ostringstream table;
        table << "metric,parameter";
        for (std::size_t n : cfg.study.sizes) table << ",n" << n;
        table << "\n";
        const char* metrics[] = {"SB", "VAR", "MSE", "CP"};
        const char* parameters[] = {"tau", "gamma", "beta11", "beta12"};
        for (const char* metric : metrics) {
            for (const char* parameter : parameters) {
                table << metric << ',' << parameter;
                for (std::size_t i = 0; i < reports.size(); ++i) {
                    const StudyRow& row = reports[i].at(parameter);
                    const double v = std::string(metric) == "SB"    ? row.sb
                                     : std::string(metric) == "VAR" ? row.var
                                     : std::string(metric) == "MSE" ? row.mse
                                                                    : row.cp;
                    table << ',' << format_double(v);
                }
                table << "\n";
            }
        }
        std::ostringstream name;
        name << "table_tau" << format_double(tau, "%g") << ".csv";
        write_text_file(dir / name.str(), table.str());
    }
    return 0;
}

std::vector<SweepPoint> compute_sweep(const RunConfig& cfg) {
    std::vector<double> grid;
    for (double v = cfg.sweep.from; v <= cfg.sweep.to + 1e-9; v += cfg.sweep.step)
        grid.push_back(v);

    std::vector<SweepPoint> points(grid.size());
    struct RepSlot {
        bool ok = false;
        double alpha1 = 0.0, alpha2 = 0.0;
    };
    const std::size_t reps = cfg.sweep.reps_per_point;
    for (std::size_t pi = 0; pi < grid.size(); ++pi) {
        DgpConfig dgp = cfg.dgp;
        dgp.n = cfg.sweep.n_per_rep;
        if (cfg.sweep.variable == "sigma_z")
            dgp.z_dist.sd = grid[pi];
        else if (cfg.sweep.variable == "beta12")
            dgp.params.beta12 = {grid[pi]};
        else
            dgp.params.gamma = grid[pi];
        const std::uint64_t point_seed = splitmix64(cfg.seed ^ splitmix64(0x5eedUL + pi));

        std::vector<RepSlot> slots(reps);
        parallel_for(reps, cfg.threads, [&](std::size_t r) {
            DgpConfig rep_cfg = dgp;
            rep_cfg.seed = replication_seed(point_seed, r);
            try {
                const Dataset data = sample_dataset(rep_cfg);
                const FitResult f1 = fit_cox_csh(data, 1);
                const FitResult f2 = fit_cox_csh(data, 2);
                if (!f1.converged || !f2.converged) return;
                slots[r].alpha1 = f1.at("alpha11").estimate;
                slots[r].alpha2 = f2.at("alpha12").estimate;
                slots[r].ok = true;
            } catch (const std::exception&) {
                // excluded from the point summary
            }
        });

        std::vector<double> a1, a2;
        for (const auto& slot : slots) {
            if (!slot.ok) continue;
            a1.push_back(slot.alpha1);
            a2.push_back(slot.alpha2);
        }
        SweepPoint& point = points[pi];
        point.value = grid[pi];
        point.n_converged = a1.size();
        if (!a1.empty()) {
            point.alpha1_mean = mean(a1);
            point.alpha1_p5 = percentile(a1, 0.05);
            point.alpha1_p95 = percentile(a1, 0.95);
            point.alpha1_sd = std::sqrt(population_variance(a1));
            point.alpha2_mean = mean(a2);
            point.alpha2_p5 = percentile(a2, 0.05);
            point.alpha2_p95 = percentile(a2, 0.95);
            point.alpha2_sd = std::sqrt(population_variance(a2));
        }
        point.alpha1_pred = average_lhr(dgp.params, 1, dgp.z_dist.mean, dgp.z_dist.sd);
        point.alpha2_pred = average_lhr(dgp.params, 2, dgp.z_dist.mean, dgp.z_dist.sd);
    }
    return points;
}

int run_sweep(const RunConfig& cfg, std::ostream& log) {
    const auto dir = prepare_out_dir(cfg);
    const std::vector<SweepPoint> points = compute_sweep(cfg);
    std::ostringstream out;
    out << "value,alpha1_mean,alpha1_p5,alpha1_p95,alpha2_mean,alpha2_p5,alpha2_p95,"
           "alpha1_pred,alpha2_pred,n_converged\n";
    for (const SweepPoint& p : points) {
        out << format_double(p.value, "%.10g") << ',' << format_double(p.alpha1_mean) << ','
            << format_double(p.alpha1_p5) << ',' << format_double(p.alpha1_p95) << ','
            << format_double(p.alpha2_mean) << ',' << format_double(p.alpha2_p5) << ','
            << format_double(p.alpha2_p95) << ',' << format_double(p.alpha1_pred) << ','
            << format_double(p.alpha2_pred) << ',' << p.n_converged << "\n";
    }
    const auto path = dir / ("sweep_" + cfg.sweep.variable + ".csv");
    write_text_file(path, out.str());
    log << "wrote " << points.size() << " grid points to " << path.string() << "\n";
    return 0;
}

namespace {

void print_fit_table(const FitResult& fit, const std::vector<std::string>& coef_names,
                     const std::vector<std::string>& scalar_names, std::ostream& out) {
    out << "parameter        coef.      s.e.         t       h.r.\n";
    const auto line = [&](const ParamEstimate& p, bool hazard_ratio) {
        const double t = p.estimate / p.se;
        char buffer[160];
        std::snprintf(buffer, sizeof(buffer), "%-14s %8.4f  %8.4f  %8.2f  %9s\n", p.name.c_str(),
                      p.estimate, p.se, t,
                      hazard_ratio ? format_double(std::exp(p.estimate), "%.4g").c_str() : "");
        out << buffer;
    };
    for (const auto& name : coef_names) line(fit.at(name), true);
    for (const auto& name : scalar_names) line(fit.at(name), false);
    out << "log-likelihood: " << format_double(fit.loglik) << ", converged: "
        << (fit.converged ? "yes" : "no") << ", iterations: " << fit.iterations << "\n";
}

std::string fit_csv(const std::vector<const FitResult*>& fits) {
    std::ostringstream out;
    out << "parameter,estimate,se,t,hazard_ratio,ci_lo,ci_hi\n";
    for (const FitResult* fit : fits) {
        for (const auto& p : fit->params) {
            out << p.name << ',' << format_double(p.estimate) << ',' << format_double(p.se) << ','
                << format_double(p.estimate / p.se) << ',' << format_double(std::exp(p.estimate))
                << ',' << format_double(p.ci_lo) << ',' << format_double(p.ci_hi) << "\n";
        }
    }
    return out.str();
}

} // namespace

int run_fit(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    if (cfg.fit.input.empty())
        throw std::invalid_argument("fit requires an input CSV (fit.input in the config)");
    const Dataset data = read_csv_file(cfg.fit.input);
    const auto dir = prepare_out_dir(cfg);
    const std::size_t d = data.n_covariates;

    std::vector<std::string> coef_names;
    if (cfg.fit.model == "structural") {
        const FitResult fit = fit_structural(data);
        for (std::size_t k = 0; k < d; ++k)
            coef_names.push_back(d == 1 ? "beta11" : "beta11_" + std::to_string(k + 1));
        for (std::size_t k = 0; k < d; ++k)
            coef_names.push_back(d == 1 ? "beta12" : "beta12_" + std::to_string(k + 1));
        coef_names.push_back("gamma"); // its hazard ratio is the baseline ratio e^gamma
        print_fit_table(fit, coef_names, {"theta", "tau", "varsigma"}, out);
        write_text_file(dir / "fit_structural.csv", fit_csv({&fit}));
        if (!fit.converged) {
            log << "fit did not converge: " << fit.diagnostic << "\n";
            return 1;
        }
    } else if (cfg.fit.model == "cox-csh") {
        const FitResult fit1 = fit_cox_csh(data, 1);
        const FitResult fit2 = fit_cox_csh(data, 2);
        for (std::size_t k = 0; k < d; ++k)
            coef_names.push_back(d == 1 ? "alpha11" : "alpha11_" + std::to_string(k + 1));
        print_fit_table(fit1, coef_names, {}, out);
        coef_names.clear();
        for (std::size_t k = 0; k < d; ++k)
            coef_names.push_back(d == 1 ? "alpha12" : "alpha12_" + std::to_string(k + 1));
        print_fit_table(fit2, coef_names, {}, out);
        write_text_file(dir / "fit_cox_csh.csv", fit_csv({&fit1, &fit2}));
        if (!fit1.converged || !fit2.converged) {
            log << "fit did not converge\n";
            return 1;
        }
    } else {
        throw std::invalid_argument("fit model must be 'structural' or 'cox-csh'");
    }
    return 0;
}

} // namespace crcop::cli
