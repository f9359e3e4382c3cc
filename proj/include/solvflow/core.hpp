#pragma once

#include <Eigen/Dense>

#include <string>
#include <tuple>
#include <vector>

namespace solvflow {

/// Structure constants of a Lie algebra in a basis that is declared
/// orthonormal: [e_i, e_j] = sum_k mu(i, j, k) e_k (0-based indices).
class LieAlgebraData {
public:
    struct Bracket {
        int i, j, k;  // 0-based
        double value;
    };

    LieAlgebraData() = default;

    /// Builds the algebra from a list of brackets; [e_j, e_i] is filled in by
    /// antisymmetry. Validates antisymmetry, Jacobi and unimodularity.
    LieAlgebraData(int dim, const std::vector<Bracket>& brackets,
                   std::vector<std::string> labels = {});

    /// Builds from a dense dim^3 array (mu[(i*dim + j)*dim + k]) and validates.
    static LieAlgebraData from_dense(int dim, std::vector<double> mu,
                                     std::vector<std::string> labels = {});

    int dim() const { return dim_; }
    double mu(int i, int j, int k) const { return mu_[(i * dim_ + j) * dim_ + k]; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Bracket of two coordinate vectors.
    Eigen::VectorXd bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Matrix of ad(e_i): column j holds [e_i, e_j].
    Eigen::MatrixXd ad(int i) const;

    /// Copy with every structure constant multiplied by t.
    LieAlgebraData scaled(double t) const;

    double jacobi_residual() const;
    double unimodularity_residual() const;

    /// Brackets with i < j and nonzero value, used for serialization.
    std::vector<Bracket> brackets() const;

private:
    void validate() const;

    int dim_ = 0;
    std::vector<double> mu_;
    std::vector<std::string> labels_;
};

struct SolvsolitonParams {
    std::string name;
    int n = 0;
    std::vector<double> d_spectrum;  // ascending
    double tr_d = 0.0;
    double tr_d2 = 0.0;
    double tr_d0_sq = 0.0;
    double lambda0 = 0.0;
    double s0 = 0.0;
    double lambda = 0.0;
    bool scalar_flat = false;
    /// The normalized background metric is metric_scale times the metric in
    /// which the preset's basis is orthonormal (Ricci scales by 1/metric_scale).
    double metric_scale = 1.0;

    /// Same algebraic data with a different cosmological constant.
    SolvsolitonParams with_lambda(double new_lambda) const;
};

struct SolitonDetection {
    double lambda0 = 0.0;
    Eigen::MatrixXd D;
    Eigen::MatrixXd ricci;
    double derivation_residual = 0.0;
};

Eigen::MatrixXd ricci_operator(const LieAlgebraData& alg);

/// max over basis pairs of |D[e_i,e_j] - [D e_i, e_j] - [e_i, D e_j]|.
double derivation_residual(const LieAlgebraData& alg, const Eigen::MatrixXd& D);

SolitonDetection detect_solvsoliton(const LieAlgebraData& alg);

SolvsolitonParams normalize(double lambda0, const Eigen::MatrixXd& D, int n);

struct Preset {
    std::string name;
    LieAlgebraData algebra;
    SolvsolitonParams params;
    /// Unnormalized soliton data; for scalar-flat presets D = -lambda0 I.
    SolitonDetection detection;
};

/// Catalog: "heisenberg3", "heisenberg:<2m+1>", "abelian:<n>", "sol".
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

/// Validates and normalizes an arbitrary algebra; abelian input is routed to
/// the scalar-flat branch.
Preset preset_from_algebra(const std::string& name, const LieAlgebraData& alg);

LieAlgebraData heisenberg_algebra(int dim);
LieAlgebraData abelian_algebra(int dim);
LieAlgebraData sol_algebra();

}  // namespace solvflow
