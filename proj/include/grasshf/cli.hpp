#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grasshf/baselines.hpp"
#include "grasshf/hf.hpp"
#include "grasshf/optim.hpp"

namespace grasshf {

enum class Algorithm { Rgd, Rnr, RcgFr, RcgPr, Nrlm, Scf, Hybrid };

// Accepts "rgd", "rnr", "rcg-fr", "rcg-pr", "nrlm", "scf", "hybrid".
Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm a);

// "core", "random", or "file:<path>".
struct GuessSpec {
    enum class Mode { Core, Random, File };
    Mode mode = Mode::Core;
    std::string path;
};

GuessSpec parse_guess(const std::string& text);
std::string to_string(const GuessSpec& g);

// A full run description. step_size and max_iter default per algorithm
// (gradient descent 0.02/1000, conjugate gradient 0.01 or 0.07/300, Newton
// variants 50, SCF 200, hybrid 0.01/300) when left unset.
struct RunConfig {
    Algorithm algorithm = Algorithm::Hybrid;
    std::optional<double> step_size;
    std::optional<int> max_iter;
    double tol_grad = 1e-8;
    double tol_val = 1e-10;
    double switch_grad_tol = 1e-3;
    int diis_window = 2;
    GuessSpec guess;
    std::uint64_t seed = 0;
    std::optional<std::string> trace_path;
    std::optional<std::string> report_path;
};

double resolved_step_size(const RunConfig& config);
int resolved_max_iter(const RunConfig& config);

struct RunReport {
    double final_energy = 0.0;
    double electronic_energy = 0.0;
    int iterations = 0;
    double final_grad_norm = 0.0;
    OptStatus status = OptStatus::MaxIter;
    int switch_iteration = -1;  // hybrid only
    double wall_time = 0.0;
    RunConfig config;
    SpinPair final_point;
    OptTrace trace;
};

// Reads a GFI v1 integral file:
//   line 1:            GFI 1
//   line 2:            d <d> na <N_alpha> nb <N_beta> enuc <E_nuc>
//   then records:      S i j value | H i j value | G i j k l value
// 1-based indices, '#' starts a comment, unlisted entries are zero. S and H
// accept either triangle; G entries are expanded through the full eight-fold
// symmetry. Conflicting duplicates beyond 1e-12 and any malformed line throw
// std::runtime_error tagged "<path>:<line>:". The loaded set is fully
// validated before returning.
IntegralSet load_integrals(const std::string& path);

// core: lowest generalized eigenvectors of (h, S). random: seeded manifold
// points (the beta block draws from seed + 101). file: whitespace-separated
// "d na nb" header followed by the alpha then beta coefficients row by row,
// reorthonormalized on load. All modes return a feasible pair.
SpinPair make_guess(const IntegralSet& ints, const GuessSpec& guess, std::uint64_t seed);

// Dispatches the configured algorithm from the configured guess, evaluates
// the final energy fresh, and writes the trace/report files when paths are
// set in the config.
RunReport run(const RunConfig& config, const IntegralSet& ints);

// CSV with header iter,energy,grad_norm,step_norm,phase; floats printed with
// %.17g so identical runs serialize byte-identically.
std::string format_trace_csv(const OptTrace& trace);

// Stable-order key-value text (status, energies, iteration data, config
// echo, wall time).
std::string format_report(const RunReport& report);

// 0 for either converged status, 2 for the iteration cap, 3 for numerical
// failure.
int exit_code(OptStatus status);

// Runs every *.gfi file under dir with the base config, one worker thread
// per file up to the hardware concurrency. Each input gets
// <input>.trace.csv and <input>.report.txt beside it (the base config's
// trace/report paths are ignored), and a one-line summary lands on stdout in
// input order. Returns the most severe per-file exit code.
int run_batch(const RunConfig& base, const std::string& dir);

}  // namespace grasshf
