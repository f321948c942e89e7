#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "grasshf/optim.hpp"

// Shared plumbing for the iteration loops: wall-clock trace assembly and the
// common stopping rule (gradient first, then value stagnation, then the
// iteration cap).

namespace grasshf::detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

class TraceBuilder {
public:
    explicit TraceBuilder(std::string phase) : phase_(std::move(phase)), start_(Clock::now()) {}

    void record(int iter, double energy, double grad_norm, double step_norm) {
        trace_.records.push_back(
            {iter, energy, grad_norm, step_norm, seconds_since(start_), phase_});
    }

    OptTrace finish(OptStatus status) && {
        trace_.status = status;
        return std::move(trace_);
    }

private:
    OptTrace trace_;
    std::string phase_;
    Clock::time_point start_;
};

struct StopCheck {
    bool stop = false;
    OptStatus status = OptStatus::MaxIter;
};

inline StopCheck check_stop(double grad_norm, double prev_val, double val, int k,
                            const StopCriteria& crit) {
    if (grad_norm <= crit.tol_grad) return {true, OptStatus::ConvergedGrad};
    if (std::abs(prev_val - val) <= crit.tol_val) return {true, OptStatus::ConvergedVal};
    if (k >= crit.max_iter) return {true, OptStatus::MaxIter};
    return {};
}

}  // namespace grasshf::detail
