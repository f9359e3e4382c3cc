#include "solvflow/core.hpp"

#include "solvflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace solvflow {

namespace {

constexpr double kStructureTol = 1e-12;
constexpr double kLambdaFitRelTol = 1e-8;
constexpr double kDerivationTol = 1e-10;

int parse_positive_int(const std::string& text, const std::string& preset_name) {
    try {
        std::size_t used = 0;
        int value = std::stoi(text, &used);
        if (used != text.size() || value <= 0) throw std::invalid_argument(text);
        return value;
    } catch (const std::exception&) {
        throw Error(ErrorKind::UnknownPreset, "bad dimension in preset '" + preset_name + "'");
    }
}

}  // namespace

LieAlgebraData::LieAlgebraData(int dim, const std::vector<Bracket>& brackets,
                               std::vector<std::string> labels)
    : dim_(dim), mu_(static_cast<std::size_t>(dim) * dim * dim, 0.0), labels_(std::move(labels)) {
    if (dim <= 0) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
    std::vector<bool> set(mu_.size(), false);
    auto put = [&](int i, int j, int k, double v) {
        auto idx = static_cast<std::size_t>((i * dim_ + j) * dim_ + k);
        if (set[idx] && std::abs(mu_[idx] - v) > kStructureTol) {
            throw Error(ErrorKind::NonAntisymmetric,
                        "conflicting brackets for [e" + std::to_string(i + 1) + ",e" +
                            std::to_string(j + 1) + "]");
        }
        mu_[idx] = v;
        set[idx] = true;
    };
    for (const auto& b : brackets) {
        if (b.i < 0 || b.j < 0 || b.k < 0 || b.i >= dim || b.j >= dim || b.k >= dim) {
            throw Error(ErrorKind::InvalidArgument, "bracket index out of range");
        }
        if (b.i == b.j) {
            if (b.value != 0.0) throw Error(ErrorKind::NonAntisymmetric, "[e_i,e_i] must vanish");
            continue;
        }
        put(b.i, b.j, b.k, b.value);
        put(b.j, b.i, b.k, -b.value);
    }
    validate();
}

LieAlgebraData LieAlgebraData::from_dense(int dim, std::vector<double> mu,
                                          std::vector<std::string> labels) {
    if (dim <= 0 || mu.size() != static_cast<std::size_t>(dim) * dim * dim) {
        throw Error(ErrorKind::InvalidArgument, "structure constant array has wrong size");
    }
    LieAlgebraData alg;
    alg.dim_ = dim;
    alg.mu_ = std::move(mu);
    alg.labels_ = std::move(labels);
    alg.validate();
    return alg;
}

void LieAlgebraData::validate() const {
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k)
                if (std::abs(mu(i, j, k) + mu(j, i, k)) > kStructureTol)
                    throw Error(ErrorKind::NonAntisymmetric, "mu[i][j][k] != -mu[j][i][k]");
    if (double r = jacobi_residual(); r > kStructureTol)
        throw Error(ErrorKind::JacobiViolated, "Jacobi residual " + std::to_string(r));
    if (double r = unimodularity_residual(); r > kStructureTol)
        throw Error(ErrorKind::NonUnimodular, "tr ad residual " + std::to_string(r));
}

Eigen::VectorXd LieAlgebraData::bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    for (int i = 0; i < dim_; ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; j < dim_; ++j) {
            double ab = a[i] * b[j];
            if (ab == 0.0) continue;
            for (int k = 0; k < dim_; ++k) out[k] += ab * mu(i, j, k);
        }
    }
    return out;
}

Eigen::MatrixXd LieAlgebraData::ad(int i) const {
    Eigen::MatrixXd m(dim_, dim_);
    for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) m(k, j) = mu(i, j, k);
    return m;
}

LieAlgebraData LieAlgebraData::scaled(double t) const {
    LieAlgebraData out = *this;
    for (double& v : out.mu_) v *= t;
    return out;
}

double LieAlgebraData::jacobi_residual() const {
    // [[e_i,e_j],e_l] + [[e_j,e_l],e_i] + [[e_l,e_i],e_j]
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            for (int l = 0; l < dim_; ++l)
                for (int m = 0; m < dim_; ++m) {
                    double s = 0.0;
                    for (int k = 0; k < dim_; ++k) {
                        s += mu(i, j, k) * mu(k, l, m) + mu(j, l, k) * mu(k, i, m) +
                             mu(l, i, k) * mu(k, j, m);
                    }
                    worst = std::max(worst, std::abs(s));
                }
    return worst;
}

double LieAlgebraData::unimodularity_residual() const {
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double tr = 0.0;
        for (int j = 0; j < dim_; ++j) tr += mu(i, j, j);
        worst = std::max(worst, std::abs(tr));
    }
    return worst;
}

std::vector<LieAlgebraData::Bracket> LieAlgebraData::brackets() const {
    std::vector<Bracket> out;
    for (int i = 0; i < dim_; ++i)
        for (int j = i + 1; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k)
                if (mu(i, j, k) != 0.0) out.push_back({i, j, k, mu(i, j, k)});
    return out;
}

SolvsolitonParams SolvsolitonParams::with_lambda(double new_lambda) const {
    SolvsolitonParams p = *this;
    p.lambda = new_lambda;
    return p;
}

Eigen::MatrixXd ricci_operator(const LieAlgebraData& alg) {
    if (alg.unimodularity_residual() > kStructureTol)
        throw Error(ErrorKind::NonUnimodular, "Ricci formula requires a unimodular algebra");
    if (alg.jacobi_residual() > kStructureTol)
        throw Error(ErrorKind::JacobiViolated, "Ricci formula requires a Lie algebra");

    const int n = alg.dim();
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            double first = 0.0, second = 0.0, killing = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    first += alg.mu(a, i, j) * alg.mu(b, i, j);
                    second += alg.mu(i, j, a) * alg.mu(i, j, b);
                    killing += alg.mu(a, j, i) * alg.mu(b, i, j);
                }
            }
            double v = -0.5 * first + 0.25 * second - 0.5 * killing;
            ric(a, b) = v;
            ric(b, a) = v;
        }
    }
    return ric;
}

double derivation_residual(const LieAlgebraData& alg, const Eigen::MatrixXd& D) {
    const int n = alg.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i);
        for (int j = i + 1; j < n; ++j) {
            Eigen::VectorXd ej = Eigen::VectorXd::Unit(n, j);
            Eigen::VectorXd r = D * alg.bracket(ei, ej) - alg.bracket(D * ei, ej) -
                                alg.bracket(ei, D * ej);
            worst = std::max(worst, r.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

SolitonDetection detect_solvsoliton(const LieAlgebraData& alg) {
    const int n = alg.dim();
    Eigen::MatrixXd ric = ricci_operator(alg);

    // D = Ric - l I is a derivation iff A + l B = 0 on every basis pair, with
    // A = Ric[e_i,e_j] - [Ric e_i,e_j] - [e_i,Ric e_j] and B = [e_i,e_j].
    double ab = 0.0, bb = 0.0, aa = 0.0;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i);
        for (int j = i + 1; j < n; ++j) {
            Eigen::VectorXd ej = Eigen::VectorXd::Unit(n, j);
            Eigen::VectorXd B = alg.bracket(ei, ej);
            Eigen::VectorXd A = ric * B - alg.bracket(ric * ei, ej) - alg.bracket(ei, ric * ej);
            ab += A.dot(B);
            bb += B.dot(B);
            aa += A.dot(A);
            pairs.emplace_back(std::move(A), std::move(B));
        }
    }
    if (bb == 0.0) {
        throw Error(ErrorKind::NotASoliton,
                    "abelian algebra: the derivation condition does not fix lambda0 "
                    "(scalar-flat case, use the noscal subsystem)");
    }
    const double lambda0 = -ab / bb;
    const double fit_residual = std::sqrt(std::max(0.0, aa + 2 * lambda0 * ab + lambda0 * lambda0 * bb));
    if (fit_residual > kLambdaFitRelTol * std::sqrt(bb)) {
        throw Error(ErrorKind::NotASoliton,
                    "no lambda0 makes Ric - lambda0 I a derivation (residual " +
                        std::to_string(fit_residual) + ")");
    }
    if (lambda0 >= 0.0) {
        throw Error(ErrorKind::PositiveLambda0, "fitted lambda0 = " + std::to_string(lambda0));
    }

    SolitonDetection out;
    out.lambda0 = lambda0;
    out.ricci = ric;
    out.D = ric - lambda0 * Eigen::MatrixXd::Identity(n, n);
    out.derivation_residual = derivation_residual(alg, out.D);
    if (out.derivation_residual > kDerivationTol) {
        throw Error(ErrorKind::NotASoliton,
                    "derivation residual " + std::to_string(out.derivation_residual));
    }
    return out;
}

SolvsolitonParams normalize(double lambda0, const Eigen::MatrixXd& D, int n) {
    if (D.rows() != n || D.cols() != n) throw Error(ErrorKind::InvalidArgument, "D must be n x n");
    if (!(lambda0 < 0.0)) throw Error(ErrorKind::PositiveLambda0, "lambda0 must be negative");
    const double trace = D.trace();
    if (std::abs(trace) < 1e-14) {
        throw Error(ErrorKind::ZeroTrace, "tr D = 0; route to the noscal subsystem");
    }

    Eigen::MatrixXd sym = 0.5 * (D + D.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    Eigen::VectorXd raw = es.eigenvalues();
    const double scale_tol = 1e-12 * std::max(1.0, raw.cwiseAbs().maxCoeff());

    SolvsolitonParams p;
    p.n = n;
    p.metric_scale = trace;
    p.d_spectrum.resize(n);
    for (int i = 0; i < n; ++i) {
        if (raw[i] < -scale_tol) {
            throw Error(ErrorKind::NegativeSpectrum, "soliton derivation has a negative eigenvalue");
        }
        p.d_spectrum[i] = std::max(0.0, raw[i]) / trace;
    }
    std::sort(p.d_spectrum.begin(), p.d_spectrum.end());

    p.tr_d = std::accumulate(p.d_spectrum.begin(), p.d_spectrum.end(), 0.0);
    p.tr_d2 = 0.0;
    for (double d : p.d_spectrum) p.tr_d2 += d * d;

    const double lambda0_scaled = lambda0 / trace;
    p.lambda0 = -p.tr_d2 / p.tr_d;
    if (std::abs(lambda0_scaled - p.lambda0) > 1e-10) {
        throw Error(ErrorKind::InconsistentSoliton,
                    "rescaled lambda0 " + std::to_string(lambda0_scaled) +
                        " disagrees with -tr D^2 / tr D = " + std::to_string(p.lambda0));
    }

    const auto [lo, hi] = std::minmax_element(p.d_spectrum.begin(), p.d_spectrum.end());
    p.tr_d0_sq = (*hi - *lo <= 1e-14) ? 0.0 : std::max(0.0, p.tr_d2 - p.tr_d * p.tr_d / n);

    p.s0 = p.lambda0 * n + p.tr_d;
    if (std::abs(p.s0) < 1e-12) {
        p.s0 = 0.0;
        p.scalar_flat = true;
    }
    p.lambda = p.lambda0;
    return p;
}

LieAlgebraData heisenberg_algebra(int dim) {
    if (dim < 3 || dim % 2 == 0) {
        throw Error(ErrorKind::UnknownPreset, "generalised Heisenberg algebras have odd dimension >= 3");
    }
    const int m = (dim - 1) / 2;
    std::vector<LieAlgebraData::Bracket> brackets;
    for (int i = 0; i < m; ++i) brackets.push_back({i, i + m, dim - 1, 1.0});
    return LieAlgebraData(dim, brackets);
}

LieAlgebraData abelian_algebra(int dim) { return LieAlgebraData(dim, {}); }

LieAlgebraData sol_algebra() {
    // [e3,e1] = e1, [e3,e2] = -e2
    return LieAlgebraData(3, {{2, 0, 0, 1.0}, {2, 1, 1, -1.0}});
}

Preset preset_from_algebra(const std::string& name, const LieAlgebraData& alg) {
    Preset out;
    out.name = name;
    out.algebra = alg;
    const int n = alg.dim();

    bool abelian = true;
    for (int i = 0; i < n && abelian; ++i)
        for (int j = 0; j < n && abelian; ++j)
            for (int k = 0; k < n; ++k)
                if (alg.mu(i, j, k) != 0.0) { abelian = false; break; }

    if (abelian) {
        // Ric = 0; the only soliton derivation is D = -lambda0 I. Any lambda0 < 0
        // normalizes to the same data.
        out.detection.lambda0 = -1.0;
        out.detection.ricci = Eigen::MatrixXd::Zero(n, n);
        out.detection.D = Eigen::MatrixXd::Identity(n, n);
        out.detection.derivation_residual = derivation_residual(alg, out.detection.D);
    } else {
        out.detection = detect_solvsoliton(alg);
    }
    out.params = normalize(out.detection.lambda0, out.detection.D, n);
    out.params.name = name;
    return out;
}

Preset preset(const std::string& name) {
    if (name == "heisenberg3") return preset_from_algebra(name, heisenberg_algebra(3));
    if (name == "sol") return preset_from_algebra(name, sol_algebra());
    if (auto colon = name.find(':'); colon != std::string::npos) {
        const std::string family = name.substr(0, colon);
        const std::string arg = name.substr(colon + 1);
        if (family == "heisenberg") {
            return preset_from_algebra(name, heisenberg_algebra(parse_positive_int(arg, name)));
        }
        if (family == "abelian") {
            return preset_from_algebra(name, abelian_algebra(parse_positive_int(arg, name)));
        }
    }
    throw Error(ErrorKind::UnknownPreset, "unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"heisenberg3", "heisenberg:5", "heisenberg:7", "sol", "abelian:2", "abelian:3"};
}

}  // namespace solvflow
