#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "grasshf/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Riemannian and Euclidean energy minimization for unrestricted "
        "Hartree-Fock over products of generalized Grassmannians"};

    std::string input;
    std::string algorithm = "hybrid";
    std::string guess = "core";
    std::string batch_dir;
    std::optional<double> step_size;
    std::optional<int> max_iter;
    grasshf::RunConfig config;
    std::string trace_path, report_path;

    app.add_option("input", input, "GFI v1 integral file")->type_name("FILE");
    app.add_option("--algorithm", algorithm,
                   "rgd, rnr, rcg-fr, rcg-pr, nrlm, scf, or hybrid (default)");
    app.add_option("--step-size", step_size,
                   "geodesic step for first-order methods (defaults per algorithm)");
    app.add_option("--max-iter", max_iter, "iteration cap (defaults per algorithm)");
    app.add_option("--tol-grad", config.tol_grad, "gradient-norm tolerance")
        ->capture_default_str();
    app.add_option("--tol-val", config.tol_val, "energy-stagnation tolerance")
        ->capture_default_str();
    app.add_option("--switch-grad-tol", config.switch_grad_tol,
                   "hybrid: gradient norm that hands over to Newton")
        ->capture_default_str();
    app.add_option("--diis-window", config.diis_window, "scf: DIIS history length")
        ->capture_default_str();
    app.add_option("--guess", guess, "core (default), random, or file:<path>");
    app.add_option("--seed", config.seed, "seed for random guesses")
        ->capture_default_str();
    app.add_option("--trace", trace_path, "write the iteration trace CSV here");
    app.add_option("--report", report_path, "write the key-value report here");
    app.add_option("--batch", batch_dir,
                   "run every .gfi file in this directory in parallel")
        ->type_name("DIR");

    CLI11_PARSE(app, argc, argv);

    try {
        config.algorithm = grasshf::parse_algorithm(algorithm);
        config.guess = grasshf::parse_guess(guess);
        config.step_size = step_size;
        config.max_iter = max_iter;
        if (!trace_path.empty()) config.trace_path = trace_path;
        if (!report_path.empty()) config.report_path = report_path;

        if (!batch_dir.empty()) return grasshf::run_batch(config, batch_dir);
        if (input.empty()) {
            std::cerr << "error: need an input file or --batch directory\n";
            return 1;
        }
        const grasshf::IntegralSet ints = grasshf::load_integrals(input);
        const grasshf::RunReport report = grasshf::run(config, ints);
        std::cout << grasshf::format_report(report);
        return grasshf::exit_code(report.status);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
