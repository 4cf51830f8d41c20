#pragma once

#include <string>
#include <vector>

#include "robust/lti.hpp"
#include "robust/sdp.hpp"

namespace robust {

struct SynthesisDiagnostics {
    std::vector<std::string> solver_status;  // one entry per SDP solved
    double gamma_lmi = 0.0;                   // optimum (direct) or bracket top (bisection)
    double backoff = 0.0;                     // relative gamma relaxation used for reconstruction
    double reconstruction_condition = 0.0;    // condition number of I - XY
    double closed_loop_norm = 0.0;
    int sdp_solves = 0;
};

struct SynthesisResult {
    StateSpace controller;
    double gamma = 0.0;
    SynthesisDiagnostics diagnostics;
};

struct HinfOptions {
    double strict_eps = 1e-7;
    sdp::SolverOptions solver;
    // gamma is relaxed by this factor before the controller is recovered, which
    // keeps I - XY away from singularity. Larger values are tried on failure.
    double backoff = 1e-3;
    // X <= rho I and Y <= rho I. Singular problems approach their optimum only
    // as X or Y grow without bound; the cap keeps the feasible set compact.
    double lyapunov_bound = 1e5;
};

struct HinfBisectOptions {
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;  // <= 0: start at 1 and double until feasible
    double bisect_tol = 1e-3;
    HinfOptions base;
};

SynthesisResult hinf_syn_lmi(const GeneralizedPlant& plant, const HinfOptions& opts = {});
SynthesisResult hinf_syn_lmi_bisect(const GeneralizedPlant& plant, const HinfBisectOptions& opts = {});

/// PBH rank tests on the closed right half-plane eigenvalues of A.
bool is_stabilizable(const Matrix& a, const Matrix& b, double tol = 1e-9);
bool is_detectable(const Matrix& a, const Matrix& c, double tol = 1e-9);

}  // namespace robust
