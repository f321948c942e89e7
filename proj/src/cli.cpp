#include "grasshf/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "grasshf/manifold.hpp"

namespace grasshf {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
    if (name == "rgd") return Algorithm::Rgd;
    if (name == "rnr") return Algorithm::Rnr;
    if (name == "rcg-fr") return Algorithm::RcgFr;
    if (name == "rcg-pr") return Algorithm::RcgPr;
    if (name == "nrlm") return Algorithm::Nrlm;
    if (name == "scf") return Algorithm::Scf;
    if (name == "hybrid") return Algorithm::Hybrid;
    throw std::invalid_argument(
        "unknown algorithm '" + name +
        "' (expected rgd, rnr, rcg-fr, rcg-pr, nrlm, scf, or hybrid)");
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Rgd: return "rgd";
        case Algorithm::Rnr: return "rnr";
        case Algorithm::RcgFr: return "rcg-fr";
        case Algorithm::RcgPr: return "rcg-pr";
        case Algorithm::Nrlm: return "nrlm";
        case Algorithm::Scf: return "scf";
        case Algorithm::Hybrid: return "hybrid";
    }
    return "unknown";
}

GuessSpec parse_guess(const std::string& text) {
    if (text == "core") return {GuessSpec::Mode::Core, ""};
    if (text == "random") return {GuessSpec::Mode::Random, ""};
    if (text.rfind("file:", 0) == 0 && text.size() > 5)
        return {GuessSpec::Mode::File, text.substr(5)};
    throw std::invalid_argument("unknown guess '" + text +
                                "' (expected core, random, or file:<path>)");
}

std::string to_string(const GuessSpec& g) {
    switch (g.mode) {
        case GuessSpec::Mode::Core: return "core";
        case GuessSpec::Mode::Random: return "random";
        case GuessSpec::Mode::File: return "file:" + g.path;
    }
    return "unknown";
}

double resolved_step_size(const RunConfig& config) {
    if (config.step_size) return *config.step_size;
    switch (config.algorithm) {
        case Algorithm::Rgd: return 0.02;
        case Algorithm::RcgPr: return 0.07;
        default: return 0.01;  // rcg-fr and the hybrid's cg phase
    }
}

int resolved_max_iter(const RunConfig& config) {
    if (config.max_iter) return *config.max_iter;
    switch (config.algorithm) {
        case Algorithm::Rgd: return 1000;
        case Algorithm::RcgFr:
        case Algorithm::RcgPr:
        case Algorithm::Hybrid: return 300;
        case Algorithm::Rnr:
        case Algorithm::Nrlm: return 50;
        case Algorithm::Scf: return 200;
    }
    return 300;
}

namespace {

// Line-scoped parsing state for GFI files.
struct GfiParser {
    const std::string& path;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
    }

    double number(const std::string& tok) const {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            fail("expected a number, got '" + tok + "'");
        }
        if (pos != tok.size()) fail("trailing characters in number '" + tok + "'");
        return v;
    }

    Index index1(const std::string& tok, Index d) const {
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(tok, &pos);
        } catch (const std::exception&) {
            fail("expected an index, got '" + tok + "'");
        }
        if (pos != tok.size()) fail("trailing characters in index '" + tok + "'");
        if (v < 1 || v > d)
            fail("index " + tok + " outside 1.." + std::to_string(d));
        return static_cast<Index>(v - 1);
    }

    void keyword(const std::string& tok, const char* expected) const {
        if (tok != expected)
            fail(std::string("expected '") + expected + "', got '" + tok + "'");
    }
};

constexpr double kDuplicateTol = 1e-12;

}  // namespace

IntegralSet load_integrals(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open integral file: " + path);

    GfiParser p{path};
    IntegralSet ints;
    std::vector<char> s_seen, h_seen, g_seen;
    int stage = 0;  // 0: header, 1: dimensions, 2: records

    auto set_symmetric = [&](DenseMatrix& M, std::vector<char>& seen, Index i, Index j,
                             double v, const char* name) {
        for (auto [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
            char& mark = seen[static_cast<std::size_t>(r * ints.d + c)];
            if (mark && std::abs(M(r, c) - v) > kDuplicateTol) {
                std::ostringstream msg;
                msg << name << " entry (" << r + 1 << "," << c + 1
                    << ") conflicts with an earlier value: " << format_double(v) << " vs "
                    << format_double(M(r, c));
                p.fail(msg.str());
            }
            if (!mark) {
                M(r, c) = v;
                mark = 1;
            }
        }
    };

    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line_no;
        const std::size_t hash = raw.find('#');
        std::istringstream ss(hash == std::string::npos ? raw : raw.substr(0, hash));
        const std::vector<std::string> tok{std::istream_iterator<std::string>(ss),
                                           std::istream_iterator<std::string>()};
        if (tok.empty()) continue;

        if (stage == 0) {
            if (tok.size() != 2 || tok[0] != "GFI" || tok[1] != "1")
                p.fail("expected header 'GFI 1'");
            stage = 1;
            continue;
        }
        if (stage == 1) {
            if (tok.size() != 8) p.fail("expected 'd <d> na <na> nb <nb> enuc <value>'");
            p.keyword(tok[0], "d");
            p.keyword(tok[2], "na");
            p.keyword(tok[4], "nb");
            p.keyword(tok[6], "enuc");
            const double d_raw = p.number(tok[1]);
            if (d_raw < 1 || d_raw != std::floor(d_raw) || d_raw > 512)
                p.fail("basis size must be an integer in 1..512");
            ints.d = static_cast<Index>(d_raw);
            const double na_raw = p.number(tok[3]);
            if (na_raw < 1 || na_raw != std::floor(na_raw) || na_raw > d_raw)
                p.fail("na must be an integer in 1.." + tok[1]);
            ints.n_alpha = static_cast<Index>(na_raw);
            const double nb_raw = p.number(tok[5]);
            if (nb_raw < 0 || nb_raw != std::floor(nb_raw) || nb_raw > d_raw)
                p.fail("nb must be an integer in 0.." + tok[1]);
            ints.n_beta = static_cast<Index>(nb_raw);
            ints.e_nuc = p.number(tok[7]);

            const auto d = ints.d;
            ints.S = DenseMatrix::Zero(d, d);
            ints.h = DenseMatrix::Zero(d, d);
            ints.g.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
            s_seen.assign(static_cast<std::size_t>(d * d), 0);
            h_seen.assign(static_cast<std::size_t>(d * d), 0);
            g_seen.assign(ints.g.size(), 0);
            stage = 2;
            continue;
        }

        if (tok[0] == "S" || tok[0] == "H") {
            if (tok.size() != 4) p.fail("expected '" + tok[0] + " i j value'");
            const Index i = p.index1(tok[1], ints.d);
            const Index j = p.index1(tok[2], ints.d);
            const double v = p.number(tok[3]);
            if (tok[0] == "S")
                set_symmetric(ints.S, s_seen, i, j, v, "S");
            else
                set_symmetric(ints.h, h_seen, i, j, v, "H");
        } else if (tok[0] == "G") {
            if (tok.size() != 6) p.fail("expected 'G i j k l value'");
            const Index i = p.index1(tok[1], ints.d);
            const Index j = p.index1(tok[2], ints.d);
            const Index k = p.index1(tok[3], ints.d);
            const Index l = p.index1(tok[4], ints.d);
            const double v = p.number(tok[5]);
            const Index images[8][4] = {{i, j, k, l}, {k, j, i, l}, {i, l, k, j},
                                        {k, l, i, j}, {j, i, l, k}, {j, k, l, i},
                                        {l, i, j, k}, {l, k, j, i}};
            for (const auto& im : images) {
                const std::size_t flat = static_cast<std::size_t>(
                    ((im[0] * ints.d + im[1]) * ints.d + im[2]) * ints.d + im[3]);
                if (g_seen[flat] && std::abs(ints.g[flat] - v) > kDuplicateTol) {
                    std::ostringstream msg;
                    msg << "G entry (" << i + 1 << "," << j + 1 << "," << k + 1 << ","
                        << l + 1 << ") violates the eight-fold symmetry against ("
                        << im[0] + 1 << "," << im[1] + 1 << "," << im[2] + 1 << ","
                        << im[3] + 1 << "): " << format_double(v) << " vs "
                        << format_double(ints.g[flat]);
                    p.fail(msg.str());
                }
                if (!g_seen[flat]) {
                    ints.g[flat] = v;
                    g_seen[flat] = 1;
                }
            }
        } else {
            p.fail("unknown record type '" + tok[0] + "' (expected S, H, or G)");
        }
    }

    if (stage < 2)
        throw std::runtime_error(path + ": missing " +
                                 (stage == 0 ? "'GFI 1' header" : "dimensions line"));
    try {
        validate_integrals(ints);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return ints;
}

SpinPair make_guess(const IntegralSet& ints, const GuessSpec& guess, std::uint64_t seed) {
    switch (guess.mode) {
        case GuessSpec::Mode::Core:
            return core_guess(ints);
        case GuessSpec::Mode::Random: {
            const MetricPtr metric = make_metric(ints.S);
            DenseMatrix beta(ints.d, 0);
            if (ints.n_beta > 0) beta = random_point(metric, ints.n_beta, seed + 101).C;
            return {random_point(metric, ints.n_alpha, seed).C, std::move(beta)};
        }
        case GuessSpec::Mode::File: {
            std::ifstream in(guess.path);
            if (!in) throw std::runtime_error("cannot open guess file: " + guess.path);
            Index d = 0, na = 0, nb = 0;
            if (!(in >> d >> na >> nb))
                throw std::runtime_error(guess.path + ": malformed guess header");
            if (d != ints.d || na != ints.n_alpha || nb != ints.n_beta) {
                std::ostringstream msg;
                msg << guess.path << ": guess shape (" << d << "," << na << "," << nb
                    << ") does not match integrals (" << ints.d << "," << ints.n_alpha
                    << "," << ints.n_beta << ")";
                throw std::runtime_error(msg.str());
            }
            auto read_block = [&](Index cols) {
                DenseMatrix C(d, cols);
                for (Index i = 0; i < d; ++i)
                    for (Index j = 0; j < cols; ++j)
                        if (!(in >> C(i, j)))
                            throw std::runtime_error(guess.path +
                                                     ": not enough coefficients");
                return C;
            };
            const DenseMatrix alpha = read_block(na);
            const DenseMatrix beta = read_block(nb);
            const MetricPtr metric = make_metric(ints.S);
            SpinPair pair{reorthonormalize(GrassmannPoint{metric, alpha}).C,
                          DenseMatrix(d, 0)};
            if (nb > 0) pair.C_beta = reorthonormalize(GrassmannPoint{metric, beta}).C;
            return pair;
        }
    }
    throw std::logic_error("make_guess: unhandled mode");
}

std::string format_trace_csv(const OptTrace& trace) {
    std::string out = "iter,energy,grad_norm,step_norm,phase\n";
    char buf[256];
    for (const TraceRecord& r : trace.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%s\n", r.iter, r.energy,
                      r.grad_norm, r.step_norm, r.phase.c_str());
        out += buf;
    }
    return out;
}

std::string format_report(const RunReport& report) {
    std::ostringstream out;
    out << "status " << to_string(report.status) << "\n"
        << "final_energy " << format_double(report.final_energy) << "\n"
        << "electronic_energy " << format_double(report.electronic_energy) << "\n"
        << "iterations " << report.iterations << "\n"
        << "final_grad_norm " << format_double(report.final_grad_norm) << "\n";
    if (report.config.algorithm == Algorithm::Hybrid)
        out << "switch_iteration " << report.switch_iteration << "\n";
    out << "algorithm " << to_string(report.config.algorithm) << "\n"
        << "step_size " << format_double(resolved_step_size(report.config)) << "\n"
        << "max_iter " << resolved_max_iter(report.config) << "\n"
        << "tol_grad " << format_double(report.config.tol_grad) << "\n"
        << "tol_val " << format_double(report.config.tol_val) << "\n"
        << "switch_grad_tol " << format_double(report.config.switch_grad_tol) << "\n"
        << "diis_window " << report.config.diis_window << "\n"
        << "guess " << to_string(report.config.guess) << "\n"
        << "seed " << report.config.seed << "\n"
        << "wall_time_s " << format_double(report.wall_time) << "\n";
    return out.str();
}

int exit_code(OptStatus status) {
    switch (status) {
        case OptStatus::ConvergedGrad:
        case OptStatus::ConvergedVal: return 0;
        case OptStatus::MaxIter: return 2;
        case OptStatus::NumericalFailure: return 3;
    }
    return 3;
}

RunReport run(const RunConfig& config, const IntegralSet& ints) {
    const auto start = std::chrono::steady_clock::now();
    const SpinPair guess = make_guess(ints, config.guess, config.seed);

    StopCriteria crit;
    crit.max_iter = resolved_max_iter(config);
    crit.tol_grad = config.tol_grad;
    crit.tol_val = config.tol_val;

    const auto shared = std::make_shared<IntegralSet>(ints);
    const HartreeFockCost cost(shared);

    SpinPair final_point = guess;
    OptTrace trace;
    switch (config.algorithm) {
        case Algorithm::Nrlm: {
            NrlmResult res =
                nrlm(cost, ints.S, guess, initial_multipliers(cost, guess), crit);
            final_point = std::move(res.pair);
            trace = std::move(res.trace);
            break;
        }
        case Algorithm::Scf: {
            auto [pair, t] = scf_diis(ints, guess, config.diis_window, crit);
            final_point = std::move(pair);
            trace = std::move(t);
            break;
        }
        default: {
            const MetricPtr metric = make_metric(ints.S);
            const ProductPoint x0{make_point(metric, guess.C_alpha),
                                  make_point(metric, guess.C_beta)};
            std::pair<ProductPoint, OptTrace> res;
            switch (config.algorithm) {
                case Algorithm::Rgd:
                    res = rgd(cost, x0, resolved_step_size(config), crit);
                    break;
                case Algorithm::RcgFr:
                    res = rcg(cost, x0, resolved_step_size(config),
                              RcgVariant::FletcherReeves, crit);
                    break;
                case Algorithm::RcgPr:
                    res = rcg(cost, x0, resolved_step_size(config),
                              RcgVariant::PolakRibiere, crit);
                    break;
                case Algorithm::Rnr:
                    res = rnr(cost, x0, crit);
                    break;
                default: {
                    HybridConfig cfg;
                    cfg.cg_step = resolved_step_size(config);
                    cfg.switch_grad_tol = config.switch_grad_tol;
                    cfg.crit = crit;
                    res = hybrid(cost, x0, cfg);
                    break;
                }
            }
            final_point = {res.first.first.C, res.first.second.C};
            trace = std::move(res.second);
            break;
        }
    }

    RunReport report;
    report.final_energy = energy(final_point, ints);
    report.electronic_energy = report.final_energy - ints.e_nuc;
    report.iterations = trace.records.empty() ? 0 : trace.records.back().iter;
    report.final_grad_norm =
        trace.records.empty() ? 0.0 : trace.records.back().grad_norm;
    report.status = trace.status;
    report.switch_iteration = trace.switch_iteration;
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.config = config;
    report.final_point = std::move(final_point);
    report.trace = std::move(trace);

    if (config.trace_path) write_text_file(*config.trace_path, format_trace_csv(report.trace));
    if (config.report_path) write_text_file(*config.report_path, format_report(report));
    return report;
}

int run_batch(const RunConfig& base, const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".gfi")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .gfi files in " + dir);

    std::vector<std::string> summaries(files.size());
    std::vector<int> codes(files.size(), 0);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1)) {
            RunConfig cfg = base;
            cfg.trace_path = files[i] + ".trace.csv";
            cfg.report_path = files[i] + ".report.txt";
            try {
                const RunReport rep = run(cfg, load_integrals(files[i]));
                codes[i] = exit_code(rep.status);
                summaries[i] = files[i] + ": " + to_string(rep.status) +
                               " energy=" + format_double(rep.final_energy) +
                               " iterations=" + std::to_string(rep.iterations);
            } catch (const std::exception& e) {
                codes[i] = 1;
                summaries[i] = files[i] + ": error: " + e.what();
            }
        }
    };

    const std::size_t n_workers =
        std::min(files.size(),
                 static_cast<std::size_t>(std::max(1u, std::thread::hardware_concurrency())));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    for (const std::string& line : summaries) std::cout << line << "\n";
    return *std::max_element(codes.begin(), codes.end());
}

}  // namespace grasshf
