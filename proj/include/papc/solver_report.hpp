#pragma once

#include <armadillo>

namespace papc {

// Outcome of an iterative allocator. `iterations` is the largest Newton-step
// count any single barrier stage needed (the per-solve count the complexity
// tables bound); total work is total_newton_steps across barrier_stages.
struct SolverReport
{
    arma::uword iterations = 0;
    arma::uword total_newton_steps = 0;
    arma::uword barrier_stages = 0;
    double final_objective = 0.0;   // method objective at the returned point
    double equality_residual = 0.0; // constraint residual (inf-norm)
    double stationarity_residual = 0.0;
    double min_x = 0.0;
    bool converged = false;
};

} // namespace papc
