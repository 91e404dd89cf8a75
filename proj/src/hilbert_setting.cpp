#include "evolveq/hilbert_setting.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "evolveq/errors.hpp"

namespace evolveq {

struct GalerkinSpace::Data {
    Matrix gram_h;
    Matrix gram_v;
    std::vector<double> nodes;
    Eigen::LLT<Matrix> chol_h;
    Eigen::LLT<Matrix> chol_v;
    bool diagonal_h = false;
};

namespace {

void validate_gram(const Matrix& g, const char* name)
{
    if (g.rows() == 0 || g.rows() != g.cols()) {
        throw Error(ErrorKind::singular_gram, std::string(name) + " must be a non-empty square matrix");
    }
    if (!g.allFinite()) {
        throw Error(ErrorKind::singular_gram, std::string(name) + " has non-finite entries");
    }
    if (relative_asymmetry(g) > 1e-12) {
        throw Error(ErrorKind::singular_gram, std::string(name) + " is not symmetric");
    }
}

Eigen::LLT<Matrix> factor(const Matrix& g, const char* name)
{
    Eigen::LLT<Matrix> llt(sym(g));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::singular_gram, std::string(name) + " is not positive definite");
    }
    return llt;
}

}  // namespace

GalerkinSpace::GalerkinSpace(Matrix gram_h, Matrix gram_v, std::vector<double> nodes)
{
    validate_gram(gram_h, "gram_H");
    validate_gram(gram_v, "gram_V");
    if (gram_h.rows() != gram_v.rows()) {
        throw Error(ErrorKind::singular_gram, "gram_H and gram_V dimensions differ");
    }
    if (!nodes.empty() && static_cast<Eigen::Index>(nodes.size()) != gram_h.rows()) {
        throw Error(ErrorKind::argument, "node labels do not match the space dimension");
    }
    auto data = std::make_shared<Data>();
    data->chol_h = factor(gram_h, "gram_H");
    data->chol_v = factor(gram_v, "gram_V");
    const Matrix off = gram_h - Matrix(gram_h.diagonal().asDiagonal());
    data->diagonal_h = off.cwiseAbs().maxCoeff() == 0.0;
    data->gram_h = std::move(gram_h);
    data->gram_v = std::move(gram_v);
    data->nodes = std::move(nodes);
    data_ = std::move(data);
}

int GalerkinSpace::dim() const noexcept { return static_cast<int>(data_->gram_h.rows()); }
const Matrix& GalerkinSpace::gram_h() const noexcept { return data_->gram_h; }
const Matrix& GalerkinSpace::gram_v() const noexcept { return data_->gram_v; }
const std::vector<double>& GalerkinSpace::nodes() const noexcept { return data_->nodes; }
bool GalerkinSpace::diagonal_h() const noexcept { return data_->diagonal_h; }

double GalerkinSpace::inner_h(const Vector& u, const Vector& v) const { return u.dot(data_->gram_h * v); }

double GalerkinSpace::norm_h(const Vector& u) const { return std::sqrt(std::max(0.0, inner_h(u, u))); }

double GalerkinSpace::norm_v(const Vector& u) const
{
    return std::sqrt(std::max(0.0, u.dot(data_->gram_v * u)));
}

DualVector GalerkinSpace::h_representation(const Vector& u) const { return {data_->gram_h * u}; }

Vector GalerkinSpace::h_coordinates(const DualVector& g) const { return solve_h(g.coeffs); }

Vector GalerkinSpace::solve_h(const Vector& rhs) const { return data_->chol_h.solve(rhs); }

Vector GalerkinSpace::solve_v(const Vector& rhs) const { return data_->chol_v.solve(rhs); }

Matrix GalerkinSpace::solve_h_columns(const Matrix& rhs) const { return data_->chol_h.solve(rhs); }

Matrix GalerkinSpace::v_factor() const { return data_->chol_v.matrixU(); }

Matrix GalerkinSpace::h_factor() const { return data_->chol_h.matrixU(); }

double dual_norm(const GalerkinSpace& space, const DualVector& g)
{
    if (g.coeffs.size() != space.dim()) {
        throw Error(ErrorKind::argument, "dual vector dimension does not match the space");
    }
    const Vector riesz = space.solve_v(g.coeffs);
    if (!riesz.allFinite()) {
        throw Error(ErrorKind::singular_gram, "V-Gram solve failed");
    }
    return std::sqrt(std::max(0.0, g.coeffs.dot(riesz)));
}

double embedding_constant(const GalerkinSpace& space)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(
        sym(space.gram_h()), sym(space.gram_v()), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (pencil.info() != Eigen::Success) {
        throw Error(ErrorKind::structural, "generalized eigensolver failed for (gram_H, gram_V)");
    }
    return std::sqrt(pencil.eigenvalues().maxCoeff());
}

double operator_norm(const GalerkinSpace& space, const Matrix& a)
{
    const Matrix s = space.v_factor();
    // S⁻ᵀ A S⁻¹ via two triangular solves.
    const Matrix left = s.transpose().triangularView<Eigen::Lower>().solve(a);
    const Matrix both = s.transpose().triangularView<Eigen::Lower>().solve(left.transpose()).transpose();
    Eigen::JacobiSVD<Matrix> svd(both);
    return svd.singularValues()(0);
}

double min_generalized_eigenvalue(const Matrix& sym_part, const Matrix& spd)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(sym(sym_part), sym(spd),
                                                            Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (pencil.info() != Eigen::Success) {
        throw Error(ErrorKind::structural, "generalized eigensolver failed");
    }
    return pencil.eigenvalues().minCoeff();
}

}  // namespace evolveq
