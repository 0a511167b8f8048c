#pragma once

#include "qignn/equilibrium.hpp"
#include "qignn/quantum.hpp"
#include "qignn/solvers.hpp"
#include "qignn/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qignn {

/// 2 sqrt(n_q) ||W_out||_2 ||W_in||_2 on the maps the module actually applies.
double lemma2_bound(const QuantumModule& m);

struct TheoremBounds {
    double id = 0.0;
    double sd = 0.0;
    double bd = 0.0;
};

/// (kappa, kappa + alpha L_sd, kappa (1 + alpha L_bd)). Throws std::domain_error
/// unless kappa in [0, 1], alpha >= 0 and both L >= 0.
TheoremBounds theorem_bounds(double kappa, double alpha, double lq_sd, double lq_bd);

struct LipschitzSampling {
    int pairs = 200;
    std::vector<double> scales{0.1, 1.0, 10.0};
    double perturbation = 1e-3;
    std::uint64_t seed = 0x11b5ULL;
};

/// Largest ||f(S1) - f(S2)||_F / ||S1 - S2||_F over sampled pairs of
/// rows x cols inputs. Even pairs are independent draws at a common Frobenius
/// norm taken from `scales`; odd pairs are (S, S + delta) with ||delta||_F equal
/// to `perturbation`. Coincident pairs are skipped. A lower bound on the true
/// constant.
double empirical_lipschitz(const FixedPointMap& f, Eigen::Index rows, Eigen::Index cols,
                           const LipschitzSampling& sampling = {});

struct LipschitzReport {
    std::string pathway;
    double kappa = 0.0;
    double alpha = 0.0;
    double backbone_norm = 0.0;  // ||W||_2
    double lq = 0.0;             // lemma2_bound of the module, 0 without one
    TheoremBounds bounds;
    double analytic = 0.0;   // bound for this pathway
    double empirical = 0.0;  // sampled estimate for this pathway
    int samples = 0;
    bool certified = false;  // empirical <= analytic + 1e-9 and backbone_norm <= kappa + 1e-9

    /// One `key=value` per line.
    std::string to_record() const;
};

/// Samples the bound operator of `op` on one graph and checks it against the
/// analytic budget of its pathway.
LipschitzReport certify_operator(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                                 const Matrix& tau, const LipschitzSampling& sampling = {});

constexpr double kCertificateSlack = 1e-9;

}  // namespace qignn
