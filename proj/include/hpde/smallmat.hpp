#pragma once

#include <array>
#include <complex>
#include <vector>

namespace hpde {

using cplx = std::complex<double>;

// Dense Hermitian matrix of runtime dimension n <= MAXN, stored full for
// simplicity. Big enough for every matrix this project touches (arrow
// instances up to n = 8, per-node forms up to n = p + 1).
class HermMat {
  public:
    static constexpr int MAXN = 8;

    HermMat() : n_(0) {}
    explicit HermMat(int n);
    static HermMat identity(int n);
    static HermMat diagonal(const std::vector<double>& d);

    int n() const { return n_; }

    cplx operator()(int i, int j) const { return a_[i * MAXN + j]; }
    // Sets both (i,j) and (j,i) so the matrix stays Hermitian by storage.
    void set(int i, int j, cplx v);
    double diag(int i) const { return a_[i * MAXN + i].real(); }

    HermMat scaled(double s) const;
    friend HermMat operator+(const HermMat& x, const HermMat& y);

    double frobenius_norm() const;
    double trace() const;
    double max_abs_entry() const;

  private:
    int n_;
    std::array<cplx, MAXN * MAXN> a_{};
};

struct EigResult {
    int n = 0;
    std::array<double, HermMat::MAXN> values{};                  // ascending
    std::array<cplx, HermMat::MAXN * HermMat::MAXN> vectors{};   // column k <-> values[k]
    int sweeps = 0;

    cplx vec(int row, int col) const { return vectors[row * HermMat::MAXN + col]; }
    std::vector<double> values_vec() const { return {values.begin(), values.begin() + n}; }
};

// Cyclic-by-rows Jacobi for complex Hermitian matrices. Rotations use the
// phase of the annihilated entry, so complex off-diagonals are first-class.
// Throws NumericalError if the off-diagonal norm has not collapsed after
// the sweep cap.
EigResult hermitian_eigen(const HermMat& a);

// Eigenvalues only, ascending.
std::vector<double> hermitian_eigenvalues(const HermMat& a);

// max_k ||A v_k - lambda_k v_k||_2, for residual contracts.
double eigen_residual(const HermMat& a, const EigResult& e);

// Hermitian square root inverse, for reductions g v = lambda omega v.
// Throws GeometryError unless the matrix is positive definite.
HermMat inverse_sqrt(const HermMat& a);
HermMat inverse(const HermMat& a);

// W * A * W for Hermitian W, A.
HermMat congruence(const HermMat& w, const HermMat& a);

}  // namespace hpde
