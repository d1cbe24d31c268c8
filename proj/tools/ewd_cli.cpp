// ewd: fit, classify and simulate exponentiated Weibull lifetimes.

#include "ewd/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace ewd;
using ewd::cli::json;

void add_data_options(CLI::App& app, cli::DataOptions& d, std::string& rounding)
{
    app.add_option("data", d.path, "CSV file of lifetimes (relative paths also searched in $EWD_DATA_DIR)")
        ->required();
    app.add_option("--column", d.column, "Column name (requires a header row)");
    app.add_option("--column-index", d.column_index, "Zero-based column index")->capture_default_str();
    app.add_option("--delimiter", d.delimiter, "Field delimiter")->capture_default_str();
    auto* rate = app.add_option("--censor-rate", d.censor_rate, "Type II censoring rate c in [0, 1)");
    auto* r = app.add_option("--r", d.r, "Number of observed failures (explicit type II censoring)");
    rate->excludes(r);
    app.add_option("--rounding", rounding, "Rounding of n(1-c) to r: floor, round or ceil")
        ->check(CLI::IsMember({"floor", "round", "ceil"}))
        ->capture_default_str();
}

void add_solver_options(CLI::App& app, FitConfig& c)
{
    app.add_option("--eps-outer", c.epsilon_outer, "Back-fitting stop: relative change in theta")->capture_default_str();
    app.add_option("--eps-inner", c.epsilon_inner, "Fixed-point stop: relative change in (alpha, lambda)")->capture_default_str();
    app.add_option("--max-outer", c.max_outer, "Maximum back-fitting iterations")->capture_default_str();
    app.add_option("--max-inner", c.max_inner, "Maximum fixed-point iterations per attempt")->capture_default_str();
    app.add_option("--beta-init", c.beta_init, "Starting beta")->capture_default_str();
    app.add_option("--alpha-init", c.alpha_init, "Starting alpha for the fixed point")->capture_default_str();
    app.add_option("--lambda-init", c.lambda_init, "Starting lambda (0 = mean of x^beta)")->capture_default_str();
    app.add_option("--beta-lo", c.beta_lo, "Lower end of the beta bracket")->capture_default_str();
    app.add_option("--beta-hi", c.beta_hi, "Upper end of the beta bracket")->capture_default_str();
    app.add_option("--beta-scan-points", c.beta_scan_points, "Profile evaluations in the bracket scan")->capture_default_str();
    app.add_option("--beta-tol", c.beta_tolerance, "Relative accuracy of the beta search")->capture_default_str();
    app.add_option("--score-tol", c.score_tolerance, "Accepted max |theta_k dlnL/dtheta_k| / r")->capture_default_str();
}

void emit(const cli::Outcome& out, const std::string& csv_path)
{
    if (!out.csv.empty()) {
        if (csv_path.empty() || csv_path == "-") {
            std::cout << out.csv;
            std::cerr << out.report.dump(2) << '\n';
            return;
        }
        std::ofstream f(csv_path);
        if (!f) {
            throw data_error("cannot write '" + csv_path + "'");
        }
        f << out.csv;
    }
    std::cout << out.report.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exponentiated Weibull lifetime analysis under type II censoring"};
    app.require_subcommand(1);
    cli::Common common;
    for (int i = 0; i < argc; ++i) {
        common.argv.emplace_back(i == 0 ? "ewd" : argv[i]);
    }
    app.add_flag("--timing", common.timing, "Add elapsed time to the run block of the report");

    cli::FitOptions fit;
    std::string fit_rounding = "round";
    std::string family = "ewd";
    auto* fit_cmd = app.add_subcommand("fit", "Maximum likelihood fit by back-fitting");
    add_data_options(*fit_cmd, fit.data, fit_rounding);
    fit_cmd->add_option("--dist", family, "Model: eed or ewd")
        ->check(CLI::IsMember({"eed", "ewd"}))->capture_default_str();
    fit_cmd->add_flag("--check", fit.check, "Cross-check against the direct optimizer");
    fit_cmd->add_flag("--fisher", fit.fisher, "Append Fisher information, Wald intervals and the beta = 1 LRT");
    fit_cmd->add_option("--level", fit.level, "Confidence level of the intervals")->capture_default_str();
    fit_cmd->add_flag("--trace", fit.trace, "Include the fixed-point paths");
    add_solver_options(*fit_cmd, fit.config);

    cli::ShapeOptions shape;
    std::string scan_path;
    auto* shape_cmd = app.add_subcommand("shape", "Hazard shape region and sign scan for (alpha, beta)");
    shape_cmd->add_option("--alpha", shape.alpha, "Shape alpha")->required();
    shape_cmd->add_option("--beta", shape.beta, "Shape beta")->required();
    shape_cmd->add_option("--scan", scan_path, "Write the (z, s) scan as CSV to this file ('-' for stdout)");
    shape_cmd->add_option("--z-max", shape.scan_options.z_max, "Upper end of the z grid")->capture_default_str();
    shape_cmd->add_option("--points", shape.scan_options.n_points, "Grid points")->capture_default_str();
    shape_cmd->add_option("--offset-min", shape.scan_options.offset_min, "Smallest z - 1 on the grid")->capture_default_str();
    shape_cmd->add_flag("!--no-extend", shape.scan_options.auto_extend, "Do not widen the grid to the asymptotic range");

    cli::SurfaceOptions surface;
    std::string surface_rounding = "round";
    std::string surface_family = "eed";
    std::string x_axis;
    std::string y_axis;
    std::string surface_out;
    auto* surface_cmd = app.add_subcommand("surface", "Log-likelihood on a two-parameter grid (CSV)");
    add_data_options(*surface_cmd, surface.data, surface_rounding);
    surface_cmd->add_option("--dist", surface_family, "Model: eed or ewd")
        ->check(CLI::IsMember({"eed", "ewd"}))->capture_default_str();
    surface_cmd->add_option("--x", x_axis, "First axis, name:lo:hi:points")->required();
    surface_cmd->add_option("--y", y_axis, "Second axis, name:lo:hi:points")->required();
    surface_cmd->add_option("--fixed", surface.fixed, "Value of the third EWD parameter (default: profiled)");
    surface_cmd->add_option("--max-cells", surface.max_cells, "Largest accepted grid")->capture_default_str();
    surface_cmd->add_option("--output,-o", surface_out, "CSV destination ('-' for stdout)");
    add_solver_options(*surface_cmd, surface.config);

    SimulationConfig sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo bias, covariance and coverage study");
    sim_cmd->add_option("--alpha", sim.theta.alpha, "True alpha")->capture_default_str();
    sim_cmd->add_option("--beta", sim.theta.beta, "True beta")->capture_default_str();
    sim_cmd->add_option("--sigma", sim.theta.sigma, "True sigma")->capture_default_str();
    sim_cmd->add_option("--n", sim.n, "Units per replicate")->capture_default_str();
    sim_cmd->add_option("--p", sim.p, "Observed fraction r/n")->capture_default_str();
    sim_cmd->add_option("--replicates", sim.replicates, "Number of replicates")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    sim_cmd->add_option("--level", sim.level, "Confidence level")->capture_default_str();
    sim_cmd->add_option("--threads", sim.threads, "Worker threads")->capture_default_str();
    sim_cmd->add_option("--failure-cap", sim.failure_cap, "Tolerated fraction of failed fits")->capture_default_str();
    add_solver_options(*sim_cmd, sim.fit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << cli::error_report("usage", e.what(), cli::usage).dump(2) << '\n';
        return cli::usage;
    }

    try {
        cli::Outcome out;
        std::string csv_path;
        if (*fit_cmd) {
            fit.family = family == "eed" ? Family::eed : Family::ewd;
            fit.data.rounding = parse_rounding_rule(fit_rounding);
            out = cli::cmd_fit(fit, common);
        } else if (*shape_cmd) {
            shape.scan = !scan_path.empty();
            csv_path = scan_path;
            out = cli::cmd_shape(shape, common);
        } else if (*surface_cmd) {
            surface.family = surface_family == "eed" ? Family::eed : Family::ewd;
            surface.x = cli::parse_axis(x_axis);
            surface.y = cli::parse_axis(y_axis);
            surface.data.rounding = parse_rounding_rule(surface_rounding);
            csv_path = surface_out;
            out = cli::cmd_surface(surface, common);
        } else if (*sim_cmd) {
            out = cli::cmd_simulate(sim, common);
        }
        emit(out, csv_path);
        return out.exit_code;
    } catch (const std::exception& e) {
        const auto [kind, code] = cli::classify_exception(e);
        std::cout << cli::error_report(kind, e.what(), code).dump(2) << '\n';
        return code;
    }
}
