#include "qignn/quantum.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qignn {

const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::XX: return "XX";
        case GateKind::YY: return "YY";
        case GateKind::ZZ: return "ZZ";
    }
    return "?";
}

namespace {

bool is_two_qubit(GateKind k) { return k == GateKind::XX || k == GateKind::YY || k == GateKind::ZZ; }

Axis pauli_axis(GateKind k) {
    switch (k) {
        case GateKind::RX:
        case GateKind::XX: return Axis::X;
        case GateKind::RY:
        case GateKind::YY: return Axis::Y;
        default: return Axis::Z;
    }
}

GateKind rotation_for(Axis a) {
    switch (a) {
        case Axis::X: return GateKind::RX;
        case Axis::Y: return GateKind::RY;
        default: return GateKind::RZ;
    }
}

void apply_pauli(std::vector<Complex>& amps, Axis axis, int q) {
    const std::size_t mask = std::size_t{1} << q;
    const Complex i(0.0, 1.0);
    switch (axis) {
        case Axis::X:
            for (std::size_t b = 0; b < amps.size(); ++b) {
                if (!(b & mask)) std::swap(amps[b], amps[b | mask]);
            }
            break;
        case Axis::Y:
            // Y|0> = i|1>, Y|1> = -i|0>
            for (std::size_t b = 0; b < amps.size(); ++b) {
                if (b & mask) continue;
                const Complex a0 = amps[b], a1 = amps[b | mask];
                amps[b] = -i * a1;
                amps[b | mask] = i * a0;
            }
            break;
        case Axis::Z:
            for (std::size_t b = 0; b < amps.size(); ++b) {
                if (b & mask) amps[b] = -amps[b];
            }
            break;
    }
}

void check_qubit(int q, int n) {
    if (q < 0 || q >= n) throw std::out_of_range("qubit index " + std::to_string(q) + " out of range");
}

}  // namespace

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > 20) throw std::invalid_argument("StateVector: unsupported qubit count");
    amps_.assign(std::size_t{1} << num_qubits, Complex(0.0, 0.0));
    amps_[0] = 1.0;
}

void StateVector::apply_generator(GateKind kind, int q0, int q1) {
    check_qubit(q0, num_qubits_);
    apply_pauli(amps_, pauli_axis(kind), q0);
    if (is_two_qubit(kind)) {
        check_qubit(q1, num_qubits_);
        if (q1 == q0) throw std::invalid_argument("two-qubit gate on a single qubit");
        apply_pauli(amps_, pauli_axis(kind), q1);
    }
}

void StateVector::apply(GateKind kind, int q0, int q1, double theta) {
    // exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P, since P^2 = I.
    StateVector tmp(*this);
    tmp.apply_generator(kind, q0, q1);
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const Complex mis(0.0, -s);
    for (std::size_t b = 0; b < amps_.size(); ++b) amps_[b] = c * amps_[b] + mis * tmp.amps_[b];
}

double StateVector::norm() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

Complex StateVector::inner(const StateVector& other) const {
    if (other.dimension() != dimension()) throw std::invalid_argument("inner: dimension mismatch");
    Complex s(0.0, 0.0);
    for (std::size_t b = 0; b < amps_.size(); ++b) s += std::conj(amps_[b]) * other.amps_[b];
    return s;
}

Vector pauli_z_expectations(const StateVector& state) {
    const int n = state.num_qubits();
    Vector m = Vector::Zero(n);
    const auto amps = state.amplitudes();
    for (std::size_t b = 0; b < amps.size(); ++b) {
        const double p = std::norm(amps[b]);
        for (int j = 0; j < n; ++j) m(j) += (b >> j) & 1U ? -p : p;
    }
    return m;
}

Circuit Circuit::deep_xyz(int num_qubits, int repetitions, Axis encoding_axis) {
    if (num_qubits < 1) throw std::invalid_argument("deep_xyz: need at least one qubit");
    if (repetitions < 1) throw std::invalid_argument("deep_xyz: need at least one repetition");
    Circuit c;
    c.num_qubits_ = num_qubits;
    c.repetitions_ = repetitions;
    c.encoding_axis_ = encoding_axis;
    int next = 0;
    auto encode = [&] {
        for (int q = 0; q < num_qubits; ++q) c.gates_.push_back({rotation_for(encoding_axis), q, -1, -1, q});
    };
    auto rotations = [&](std::initializer_list<GateKind> kinds) {
        for (int q = 0; q < num_qubits; ++q) {
            for (auto k : kinds) c.gates_.push_back({k, q, -1, next++, -1});
        }
    };
    auto chain = [&](GateKind k) {
        for (int q = 0; q + 1 < num_qubits; ++q) c.gates_.push_back({k, q, q + 1, next++, -1});
    };
    for (int r = 0; r < repetitions; ++r) {
        encode();
        rotations({GateKind::RX, GateKind::RY, GateKind::RZ});
        chain(GateKind::ZZ);
        encode();
        rotations({GateKind::RX, GateKind::RY});
        chain(GateKind::XX);
        encode();
        rotations({GateKind::RY, GateKind::RZ});
        chain(GateKind::YY);
    }
    c.num_params_ = static_cast<std::size_t>(next);
    return c;
}

std::string Circuit::describe(std::span<const double> params, std::span<const double> input) const {
    std::ostringstream os;
    os.precision(17);
    os << "circuit qubits=" << num_qubits_ << " repetitions=" << repetitions_ << " params=" << num_params_ << "\n";
    for (const auto& g : gates_) {
        os << gate_name(g.kind) << " q" << g.q0;
        if (g.q1 >= 0) os << " q" << g.q1;
        if (g.param >= 0) {
            os << " theta[" << g.param << "]";
            if (static_cast<std::size_t>(g.param) < params.size()) os << "=" << params[static_cast<std::size_t>(g.param)];
        } else {
            os << " u[" << g.input << "]";
            if (static_cast<std::size_t>(g.input) < input.size()) os << "=" << input[static_cast<std::size_t>(g.input)];
        }
        os << "\n";
    }
    return os.str();
}

StateVector angle_encode(std::span<const double> u, Axis axis) {
    if (u.empty()) throw std::invalid_argument("angle_encode: empty input");
    StateVector s(static_cast<int>(u.size()));
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!(std::abs(u[j]) < 1.0)) throw std::domain_error("angle_encode: entries must lie in (-1, 1)");
        s.apply(rotation_for(axis), static_cast<int>(j), -1, u[j]);
    }
    return s;
}

namespace {

double gate_angle(const Gate& g, std::span<const double> params, std::span<const double> u) {
    return g.param >= 0 ? params[static_cast<std::size_t>(g.param)] : u[static_cast<std::size_t>(g.input)];
}

void check_circuit_args(const Circuit& c, std::span<const double> params, std::span<const double> u) {
    if (params.size() != c.num_params()) {
        throw ShapeError("circuit expects " + std::to_string(c.num_params()) + " parameters, got " +
                         std::to_string(params.size()));
    }
    if (u.size() != static_cast<std::size_t>(c.num_qubits())) {
        throw ShapeError("circuit expects an input of length " + std::to_string(c.num_qubits()));
    }
}

}  // namespace

StateVector apply_deep_xyz(StateVector state, const Circuit& circuit, std::span<const double> params,
                           std::span<const double> u) {
    check_circuit_args(circuit, params, u);
    if (state.num_qubits() != circuit.num_qubits()) throw ShapeError("apply_deep_xyz: qubit count mismatch");
    for (const auto& g : circuit.gates()) state.apply(g.kind, g.q0, g.q1, gate_angle(g, params, u));
    return state;
}

Vector circuit_expectations(const Circuit& circuit, std::span<const double> params, std::span<const double> u) {
    return pauli_z_expectations(apply_deep_xyz(StateVector(circuit.num_qubits()), circuit, params, u));
}

CircuitGradient circuit_vjp(const Circuit& circuit, std::span<const double> params, std::span<const double> u,
                            const Vector& cot) {
    check_circuit_args(circuit, params, u);
    const int n = circuit.num_qubits();
    if (cot.size() != n) throw ShapeError("circuit_vjp: cotangent length mismatch");

    StateVector phi = apply_deep_xyz(StateVector(n), circuit, params, u);
    // lambda = O phi with O = sum_j cot_j Z_j (diagonal).
    StateVector lambda = phi;
    {
        auto la = lambda.amplitudes();
        for (std::size_t b = 0; b < la.size(); ++b) {
            double w = 0.0;
            for (int j = 0; j < n; ++j) w += (b >> j) & 1U ? -cot(j) : cot(j);
            la[b] *= w;
        }
    }

    CircuitGradient grad{Vector::Zero(static_cast<Eigen::Index>(params.size())), Vector::Zero(n)};
    const auto& gates = circuit.gates();
    for (std::size_t k = gates.size(); k-- > 0;) {
        const Gate& g = gates[k];
        StateVector p_phi = phi;
        p_phi.apply_generator(g.kind, g.q0, g.q1);
        const double d = lambda.inner(p_phi).imag();
        if (g.param >= 0) {
            grad.d_params(g.param) += d;
        } else {
            grad.d_input(g.input) += d;
        }
        const double theta = gate_angle(g, params, u);
        phi.apply(g.kind, g.q0, g.q1, -theta);
        lambda.apply(g.kind, g.q0, g.q1, -theta);
    }
    return grad;
}

QuantumModule QuantumModule::create(std::size_t d_in, std::size_t d_out, int num_qubits, int repetitions,
                                    bool spectral_normalize, std::uint64_t seed) {
    QuantumModule m;
    m.circuit = Circuit::deep_xyz(num_qubits, repetitions);
    std::mt19937_64 rng(seed);
    const double bin = 1.0 / std::sqrt(static_cast<double>(d_in));
    const double bout = 1.0 / std::sqrt(static_cast<double>(num_qubits));
    std::uniform_real_distribution<double> uin(-bin, bin), uout(-bout, bout), ua(-0.1, 0.1);
    m.w_in.resize(num_qubits, static_cast<Eigen::Index>(d_in));
    for (Eigen::Index i = 0; i < m.w_in.size(); ++i) m.w_in.data()[i] = uin(rng);
    m.w_out.resize(static_cast<Eigen::Index>(d_out), num_qubits);
    for (Eigen::Index i = 0; i < m.w_out.size(); ++i) m.w_out.data()[i] = uout(rng);
    m.angles.resize(1, static_cast<Eigen::Index>(m.circuit.num_params()));
    for (Eigen::Index i = 0; i < m.angles.size(); ++i) m.angles.data()[i] = ua(rng);
    m.spectral_normalize = spectral_normalize;
    if (spectral_normalize) {
        m.in_norm.reset(m.w_in.rows(), m.w_in.cols(), rng());
        m.out_norm.reset(m.w_out.rows(), m.w_out.cols(), rng());
        // One step makes sigma = ||W v|| > 0; random u, v alone can give any sign.
        m.update_normalization();
    }
    return m;
}

namespace {

Matrix normalized(const Matrix& w, const PowerIterationState& st) {
    if (!st.initialized()) return w;
    const double s = st.sigma(w);
    return s > kSpectralGuard ? Matrix(w / s) : w;
}

}  // namespace

Matrix QuantumModule::effective_w_in() const { return spectral_normalize ? normalized(w_in, in_norm) : w_in; }

Matrix QuantumModule::effective_w_out() const { return spectral_normalize ? normalized(w_out, out_norm) : w_out; }

void QuantumModule::update_normalization() {
    if (!spectral_normalize) return;
    in_norm.step(w_in);
    out_norm.step(w_out);
}

Vector QuantumModule::forward(const Vector& s) const {
    if (static_cast<std::size_t>(s.size()) != input_dim()) throw ShapeError("quantum module: input length mismatch");
    const Matrix row = s.transpose();
    return forward_rows(row).row(0).transpose();
}

Matrix QuantumModule::forward_rows(const Matrix& s) const {
    if (static_cast<std::size_t>(s.cols()) != input_dim()) {
        throw ShapeError("quantum module: input width " + std::to_string(s.cols()) + " != " +
                         std::to_string(input_dim()));
    }
    const Matrix u = matmul_nt(s, effective_w_in()).unaryExpr([](double x) { return std::tanh(x); });
    const auto params = std::span<const double>(angles.data(), static_cast<std::size_t>(angles.size()));
    const int n = num_qubits();
    Matrix meas(u.rows(), n);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        meas.row(i) = circuit_expectations(circuit, params, std::span<const double>(u.row(i).data(), n)).transpose();
    }
    return matmul_nt(meas, effective_w_out());
}

QuantumVars bind(ad::Tape& tape, const QuantumModule& m) {
    return {tape.leaf(m.w_in), tape.leaf(m.w_out), tape.leaf(m.angles)};
}

ad::Var circuit_rows(const Circuit& circuit, ad::Var inputs, ad::Var angles) {
    ad::Tape& tape = *inputs.tape;
    const Matrix& u = inputs.value();
    const Matrix& a = angles.value();
    const int n = circuit.num_qubits();
    if (u.cols() != n) throw ShapeError("circuit_rows: input width must equal the qubit count");
    if (a.rows() != 1 || static_cast<std::size_t>(a.cols()) != circuit.num_params()) {
        throw ShapeError("circuit_rows: angles must be 1x" + std::to_string(circuit.num_params()));
    }
    const auto params = std::span<const double>(a.data(), static_cast<std::size_t>(a.size()));
    Matrix out(u.rows(), n);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        out.row(i) = circuit_expectations(circuit, params, std::span<const double>(u.row(i).data(), n)).transpose();
    }
    return tape.record(std::move(out), {inputs, angles},
                       [circuit, u, a](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                           const auto params = std::span<const double>(a.data(), static_cast<std::size_t>(a.size()));
                           Matrix du = Matrix::Zero(u.rows(), u.cols());
                           Matrix da = Matrix::Zero(1, a.cols());
                           for (Eigen::Index i = 0; i < u.rows(); ++i) {
                               if (g.row(i).isZero(0.0)) continue;
                               const Vector cot = g.row(i).transpose();
                               const auto cg = circuit_vjp(circuit, params,
                                                           std::span<const double>(u.row(i).data(), u.cols()), cot);
                               du.row(i) = cg.d_input.transpose();
                               da.row(0) += cg.d_params.transpose();
                           }
                           if (needs[0]) o[0] = std::move(du);
                           if (needs[1]) o[1] = std::move(da);
                       });
}

namespace {

ad::Var normalized_var(ad::Var w, const PowerIterationState& st) {
    if (!st.initialized()) return w;
    ad::Tape& t = *w.tape;
    if (!(st.sigma(w.value()) > kSpectralGuard)) return w;
    const ad::Var ut = t.constant(st.u.transpose());
    const ad::Var v = t.constant(st.v);
    const ad::Var sigma = ad::matmul(ad::matmul(ut, w), v);
    return ad::divide(w, sigma);
}

}  // namespace

ad::Var quantum_rows(const QuantumModule& m, const QuantumVars& vars, ad::Var s) {
    if (static_cast<std::size_t>(s.cols()) != m.input_dim()) {
        throw ShapeError("quantum_rows: input width " + std::to_string(s.cols()) + " != module input " +
                         std::to_string(m.input_dim()));
    }
    ad::Var w_in = vars.w_in, w_out = vars.w_out;
    if (m.spectral_normalize) {
        w_in = normalized_var(w_in, m.in_norm);
        w_out = normalized_var(w_out, m.out_norm);
    }
    const ad::Var u = ad::tanh(ad::matmul_nt(s, w_in));
    const ad::Var meas = circuit_rows(m.circuit, u, vars.angles);
    return ad::matmul_nt(meas, w_out);
}

Vector parameter_shift_grad(const QuantumModule& m, const Vector& s, std::size_t index) {
    if (index >= m.circuit.num_params()) throw std::out_of_range("parameter_shift_grad: index out of range");
    if (static_cast<std::size_t>(s.size()) != m.input_dim()) throw ShapeError("parameter_shift_grad: input length");
    const Vector u = (m.effective_w_in() * s).array().tanh();
    const auto us = std::span<const double>(u.data(), u.size());
    std::vector<double> plus(m.angles.data(), m.angles.data() + m.angles.size());
    std::vector<double> minus = plus;
    plus[index] += std::numbers::pi / 2.0;
    minus[index] -= std::numbers::pi / 2.0;
    const Vector dm = 0.5 * (circuit_expectations(m.circuit, plus, us) - circuit_expectations(m.circuit, minus, us));
    return m.effective_w_out() * dm;
}

void spectral_normalize_maps(QuantumModule& m) {
    if (!m.spectral_normalize) return;
    if (!m.in_norm.initialized()) m.in_norm.reset(m.w_in.rows(), m.w_in.cols(), 0x5eedULL);
    if (!m.out_norm.initialized()) m.out_norm.reset(m.w_out.rows(), m.w_out.cols(), 0x5eedULL + 1);
    m.update_normalization();
}

}  // namespace qignn
