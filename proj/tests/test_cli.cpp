#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "crcop/cli.hpp"
#include "crcop/dataset.hpp"
#include "crcop/estimation.hpp"

using namespace crcop;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("cli_out") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(CRCOP_BINARY_PATH) + " " + args;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config loading, overrides and sweep grid defaults") {
    const fs::path dir = fresh_dir("config");
    const fs::path cfg_path = dir / "config.json";
    {
        std::ofstream out(cfg_path);
        out << R"({"seed": 42, "out": "somewhere",
                   "dgp": {"tau": 0.5, "gamma": 0.5, "n": 250, "z_sd": 2.0},
                   "study": {"taus": [0.5], "sizes": [100], "reps": 7},
                   "sweep": {"variable": "beta12"},
                   "fit": {"input": "d.csv", "model": "cox-csh"}})";
    }
    cli::RunConfig cfg = cli::load_config(cfg_path.string());
    CHECK(cfg.seed == 42);
    CHECK(cfg.out_dir == "somewhere");
    CHECK(cfg.dgp.params.theta == doctest::Approx(2.0));
    CHECK(cfg.dgp.n == 250);
    CHECK(cfg.study.reps == 7);
    CHECK(cfg.fit.model == "cox-csh");
    cfg.finalize();
    CHECK(cfg.sweep.from == doctest::Approx(-4.0));
    CHECK(cfg.sweep.to == doctest::Approx(4.0));
    CHECK(cfg.study.reps == 7); // --full must not override an explicit count

    cli::RunConfig full;
    full.full_scale = true;
    full.finalize();
    CHECK(full.study.reps == 500);
    CHECK(full.sweep.reps_per_point == 100);
    CHECK(full.sweep.n_per_rep == 5000);
    CHECK(full.sweep.from == doctest::Approx(0.2));
    CHECK(full.sweep.to == doctest::Approx(14.0));

    cli::RunConfig bad;
    bad.sweep.variable = "nonsense";
    CHECK_THROWS_AS(bad.finalize(), std::invalid_argument);
    CHECK_THROWS_AS(cli::load_config("missing_config.json"), std::runtime_error);
}

TEST_CASE("simulate writes a deterministic dataset CSV") {
    const fs::path dir = fresh_dir("simulate");
    cli::RunConfig cfg;
    cfg.out_dir = (dir / "a").string();
    cfg.seed = 11;
    cfg.dgp.n = 500;
    std::ostringstream log;
    REQUIRE(cli::run_simulate(cfg, log) == 0);
    const std::string first = slurp(fs::path(cfg.out_dir) / "dataset.csv");
    std::istringstream in(first);
    const Dataset data = read_csv(in);
    CHECK(data.size() == 500);

    cfg.out_dir = (dir / "b").string();
    REQUIRE(cli::run_simulate(cfg, log) == 0);
    CHECK(slurp(fs::path(cfg.out_dir) / "dataset.csv") == first);

    cfg.out_dir = (dir / "c").string();
    cfg.seed = 12;
    REQUIRE(cli::run_simulate(cfg, log) == 0);
    CHECK(slurp(fs::path(cfg.out_dir) / "dataset.csv") != first);
}

TEST_CASE("study command writes per-cell and combined tables") {
    const fs::path dir = fresh_dir("study");
    cli::RunConfig cfg;
    cfg.out_dir = dir.string();
    cfg.seed = 5;
    cfg.study.taus = {0.5};
    cfg.study.sizes = {60, 80};
    cfg.study.reps = 4;
    std::ostringstream log;
    REQUIRE(cli::run_study(cfg, log) == 0);

    const std::string cell = slurp(dir / "study_tau0.5_n60.csv");
    CHECK(cell.rfind("parameter,truth,sb,var,mse,cp,n_converged\n", 0) == 0);
    CHECK(cell.find("tau,") != std::string::npos);
    CHECK(cell.find("beta12,") != std::string::npos);

    const std::string table = slurp(dir / "table_tau0.5.csv");
    std::istringstream lines(table);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "metric,parameter,n60,n80");
    std::size_t rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 16); // {SB,VAR,MSE,CP} x {tau,gamma,beta11,beta12}

    // Bit-identical re-run.
    const fs::path dir2 = fresh_dir("study2");
    cfg.out_dir = dir2.string();
    REQUIRE(cli::run_study(cfg, log) == 0);
    CHECK(slurp(dir2 / "table_tau0.5.csv") == table);

    // A single replication degrades to NA variance but still succeeds.
    cli::RunConfig one = cfg;
    one.out_dir = fresh_dir("study_one").string();
    one.study.sizes = {60};
    one.study.reps = 1;
    REQUIRE(cli::run_study(one, log) == 0);
    CHECK(slurp(fs::path(one.out_dir) / "study_tau0.5_n60.csv").find("NA") != std::string::npos);
}

TEST_CASE("sweep command emits the per-point summary") {
    const fs::path dir = fresh_dir("sweep");
    cli::RunConfig cfg;
    cfg.out_dir = dir.string();
    cfg.seed = 9;
    cfg.sweep.variable = "beta12";
    cfg.sweep.from = -0.4;
    cfg.sweep.to = 0.4;
    cfg.sweep.step = 0.4;
    cfg.sweep.grid_set = true;
    cfg.sweep.reps_per_point = 3;
    cfg.sweep.n_per_rep = 400;
    cfg.sweep.reps_set = true;
    std::ostringstream log;
    REQUIRE(cli::run_sweep(cfg, log) == 0);
    const std::string csv = slurp(dir / "sweep_beta12.csv");
    CHECK(csv.rfind("value,alpha1_mean,alpha1_p5,alpha1_p95,alpha2_mean,alpha2_p5,alpha2_p95,"
                    "alpha1_pred,alpha2_pred,n_converged\n",
                    0) == 0);
    std::istringstream lines(csv);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4); // header + grid {-0.4, 0, 0.4}

    // gamma-sweep series must actually move with gamma.
    cli::RunConfig gcfg;
    gcfg.seed = 10;
    gcfg.sweep.variable = "gamma";
    gcfg.sweep.from = -1.0;
    gcfg.sweep.to = 1.0;
    gcfg.sweep.step = 1.0;
    gcfg.sweep.grid_set = true;
    gcfg.sweep.reps_per_point = 3;
    gcfg.sweep.n_per_rep = 800;
    gcfg.sweep.reps_set = true;
    const auto points = cli::compute_sweep(gcfg);
    REQUIRE(points.size() == 3);
    double spread1 = 0.0;
    for (const auto& p : points) spread1 = std::max(spread1, std::abs(p.alpha1_mean - points[0].alpha1_mean));
    CHECK(spread1 > 0.05);
}

TEST_CASE("fit command recovers parameters it simulated (structural and cox)") {
    const fs::path dir = fresh_dir("fit");
    cli::RunConfig sim;
    sim.out_dir = dir.string();
    sim.seed = 314;
    sim.dgp.n = 2000;
    std::ostringstream log;
    REQUIRE(cli::run_simulate(sim, log) == 0);

    cli::RunConfig cfg;
    cfg.out_dir = dir.string();
    cfg.fit.input = (dir / "dataset.csv").string();
    cfg.fit.model = "structural";
    std::ostringstream table;
    REQUIRE(cli::run_fit(cfg, table, log) == 0);
    CHECK(table.str().find("beta11") != std::string::npos);
    CHECK(table.str().find("h.r.") != std::string::npos);

    const Dataset data = read_csv_file(cfg.fit.input);
    const FitResult fit = fit_structural(data);
    const double truth[4] = {0.5, 0.5, 1.0, 2.0};
    const char* names[4] = {"tau", "gamma", "beta11", "beta12"};
    int inside = 0;
    for (int k = 0; k < 4; ++k) {
        const auto& p = fit.at(names[k]);
        inside += p.ci_lo <= truth[k] && truth[k] <= p.ci_hi;
    }
    CHECK(inside >= 3);

    cfg.fit.model = "cox-csh";
    std::ostringstream table2;
    REQUIRE(cli::run_fit(cfg, table2, log) == 0);
    CHECK(table2.str().find("alpha11") != std::string::npos);
    CHECK(fs::exists(dir / "fit_cox_csh.csv"));
}

TEST_CASE("crcop binary: simulate determinism and fit error paths") {
    const fs::path dir = fresh_dir("binary");
    const std::string out1 = (dir / "r1").string();
    const std::string out2 = (dir / "r2").string();
    REQUIRE(run_binary("simulate --seed 21 --out " + out1 + " > /dev/null") == 0);
    REQUIRE(run_binary("simulate --seed 21 --out " + out2 + " > /dev/null") == 0);
    CHECK(slurp(fs::path(out1) / "dataset.csv") == slurp(fs::path(out2) / "dataset.csv"));

    // Empty input file: parse error with nonzero exit.
    const fs::path empty = dir / "empty.csv";
    std::ofstream(empty).close();
    CHECK(run_binary("fit " + empty.string() + " --out " + dir.string() +
                     " > /dev/null 2> " + (dir / "err.txt").string()) != 0);
    CHECK(slurp(dir / "err.txt").find("line 1") != std::string::npos);

    // Unknown subcommand and missing input are usage errors.
    CHECK(run_binary("frobnicate > /dev/null 2>&1") != 0);
    CHECK(run_binary("fit --out " + dir.string() + " > /dev/null 2>&1") == 2);
}
