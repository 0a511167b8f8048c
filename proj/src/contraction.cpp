#include "qignn/contraction.hpp"

#include <charconv>
#include <cmath>
#include <string_view>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qignn {

double lemma2_bound(const QuantumModule& m) {
    const double n = static_cast<double>(m.num_qubits());
    return 2.0 * std::sqrt(n) * spectral_norm(m.effective_w_out()) * spectral_norm(m.effective_w_in());
}

TheoremBounds theorem_bounds(double kappa, double alpha, double lq_sd, double lq_bd) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::domain_error("theorem_bounds: kappa must lie in [0, 1]");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::domain_error("theorem_bounds: alpha must be >= 0");
    if (!(lq_sd >= 0.0) || !(lq_bd >= 0.0) || !std::isfinite(lq_sd) || !std::isfinite(lq_bd)) {
        throw std::domain_error("theorem_bounds: Lipschitz constants must be >= 0");
    }
    TheoremBounds b;
    b.id = kappa;
    b.sd = kappa + alpha * lq_sd;
    // kappa * (alpha L) + kappa with a single rounding, so that the computed
    // value never exceeds the SD one when L_sd == L_bd and kappa <= 1.
    b.bd = std::fma(kappa, alpha * lq_bd, kappa);
    return b;
}

namespace {

Matrix random_with_norm(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double norm) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    const double n = m.norm();
    if (n == 0.0) return m;
    return m * (norm / n);
}

}  // namespace

double empirical_lipschitz(const FixedPointMap& f, Eigen::Index rows, Eigen::Index cols,
                           const LipschitzSampling& sampling) {
    if (sampling.pairs < 1) throw std::invalid_argument("empirical_lipschitz: need at least one pair");
    if (sampling.scales.empty()) throw std::invalid_argument("empirical_lipschitz: no scales");
    std::mt19937_64 rng(sampling.seed);
    double best = 0.0;
    for (int p = 0; p < sampling.pairs; ++p) {
        const double scale = sampling.scales[static_cast<std::size_t>(p / 2) % sampling.scales.size()];
        Matrix s1 = random_with_norm(rng, rows, cols, scale);
        Matrix s2 = p % 2 == 0 ? random_with_norm(rng, rows, cols, scale)
                               : Matrix(s1 + random_with_norm(rng, rows, cols, sampling.perturbation));
        const double den = (s1 - s2).norm();
        if (den == 0.0) continue;
        const double ratio = (f(s1) - f(s2)).norm() / den;
        if (ratio > best) best = ratio;
    }
    return best;
}

std::string LipschitzReport::to_record() const {
    std::ostringstream os;
    auto num = [&](const char* key, double v) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        os << key << "=" << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << "\n";
    };
    os << "pathway=" << pathway << "\n";
    num("kappa", kappa);
    num("alpha", alpha);
    num("backbone_norm", backbone_norm);
    num("lq", lq);
    num("bound_id", bounds.id);
    num("bound_sd", bounds.sd);
    num("bound_bd", bounds.bd);
    num("analytic", analytic);
    num("empirical", empirical);
    os << "samples=" << samples << "\n";
    os << "certified=" << (certified ? "true" : "false") << "\n";
    return os.str();
}

LipschitzReport certify_operator(const InjectedOperator& op, const BlockDiagonal& a, const Matrix& h,
                                 const Matrix& tau, const LipschitzSampling& sampling) {
    LipschitzReport r;
    r.pathway = operator_name(op.kind);
    r.kappa = op.backbone.kappa;
    r.alpha = op.alpha;
    r.backbone_norm = spectral_norm(op.backbone.w);
    r.lq = op.quantum ? lemma2_bound(*op.quantum) : 0.0;
    r.bounds = theorem_bounds(r.kappa, r.alpha, r.lq, r.lq);
    switch (op.kind) {
        case OperatorKind::Classical:
        case OperatorKind::ID: r.analytic = r.bounds.id; break;
        case OperatorKind::SD: r.analytic = r.bounds.sd; break;
        case OperatorKind::BD: r.analytic = r.bounds.bd; break;
    }
    const BoundOperator bound(op, a, h, tau);
    const FixedPointMap f = [&](const Matrix& z) { return bound(z); };
    r.empirical = empirical_lipschitz(f, h.rows(), h.cols(), sampling);
    r.samples = sampling.pairs;
    r.certified = r.empirical <= r.analytic + kCertificateSlack && r.backbone_norm <= r.kappa + kCertificateSlack;
    return r;
}

}  // namespace qignn
