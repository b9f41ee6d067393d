#pragma once

#include <cstdint>
#include <vector>

#include "hpde/parallel.hpp"
#include "hpde/smallmat.hpp"

namespace hpde::grid {

// Discretization of X x S: X a flat complex p-torus (each real direction
// periodic with period 1), S the flat cylinder with s in [0, 1] (Dirichlet
// ends) and periodic angle theta (period 1). Complex coordinates are
// z_j = x_j + i y_j for j < p and z_n = s + i theta.
//
// Direction order: x_1, y_1, ..., x_p, y_p, theta, s with x_1 fastest and
// s slowest, so an s-slice is one contiguous block.
class ProductGrid {
  public:
    ProductGrid(int p, int torus_res, int s_res, int theta_res);

    int p() const { return p_; }
    int n() const { return p_ + 1; }
    int ndirs() const { return 2 * p_ + 2; }
    int torus_res() const { return torus_res_; }
    int s_res() const { return s_res_; }
    int theta_res() const { return theta_res_; }

    std::int64_t nodes() const { return nodes_; }
    std::int64_t slice_nodes() const { return slice_; }  // per s-layer
    std::int64_t boundary_nodes() const { return 2 * slice_; }
    std::int64_t interior_nodes() const { return nodes_ - boundary_nodes(); }

    int dim(int dir) const { return dim_[dir]; }
    double spacing(int dir) const { return h_[dir]; }
    std::int64_t stride(int dir) const { return stride_[dir]; }

    int theta_dir() const { return 2 * p_; }
    int s_dir() const { return 2 * p_ + 1; }
    bool periodic(int dir) const { return dir != s_dir(); }

    // Real/imaginary direction of complex coordinate j in [0, n).
    int re_dir(int j) const { return j < p_ ? 2 * j : s_dir(); }
    int im_dir(int j) const { return j < p_ ? 2 * j + 1 : theta_dir(); }

    void coords_of(std::int64_t node, int* idx) const;
    std::int64_t node_of(const int* idx) const;
    double coordinate(int dir, int idx) const {
        return dir == s_dir() ? idx * h_[dir] : idx * h_[dir];
    }

    int s_index(std::int64_t node) const { return static_cast<int>(node / slice_); }
    bool is_boundary(std::int64_t node) const {
        const int is = s_index(node);
        return is == 0 || is == s_res_ - 1;
    }

    // Index delta to the +1/-1 neighbor in `dir` given this node's
    // coordinate there; periodic wrap is folded into the table.
    std::int64_t delta_plus(int dir, int idx) const { return dplus_[dir][idx]; }
    std::int64_t delta_minus(int dir, int idx) const { return dminus_[dir][idx]; }

    std::int64_t neighbor(std::int64_t node, int dir, int step) const;

  private:
    int p_, torus_res_, s_res_, theta_res_;
    std::vector<int> dim_;
    std::vector<double> h_;
    std::vector<std::int64_t> stride_;
    std::int64_t nodes_ = 0, slice_ = 0;
    std::vector<std::vector<std::int64_t>> dplus_, dminus_;
};

using ScalarField = std::vector<double>;

// Per-node Hermitian n x n block: n diagonal entries then the strict upper
// triangle row-major as (re, im) pairs. Hermitian symmetry holds by storage.
struct HermitianField {
    int n = 0;
    std::int64_t count = 0;
    std::vector<double> data;

    HermitianField() = default;
    HermitianField(int n_, std::int64_t count_);
    static HermitianField constant(const ProductGrid& g, const HermMat& m);

    int block() const { return n + n * (n - 1); }
    double diag(std::int64_t node, int j) const { return data[node * block() + j]; }
    cplx upper(std::int64_t node, int j, int k) const;  // j < k
    void set_diag(std::int64_t node, int j, double v) { data[node * block() + j] = v; }
    void set_upper(std::int64_t node, int j, int k, cplx v);
    HermMat matrix_at(std::int64_t node) const;
    void set_matrix(std::int64_t node, const HermMat& m);
};

// Complex Hessian u_{j k-bar} by second-order central differences,
//   u_{jk} = 1/4 [ (u_{x_j x_k} + u_{y_j y_k}) + i (u_{x_j y_k} - u_{y_j x_k}) ],
// defined on interior nodes (stencils there may read boundary values, which
// is legitimate Dirichlet data); boundary blocks are left zero.
HermitianField complex_hessian(const ProductGrid& g, const ScalarField& u,
                               Exec mode = Exec::openmp);

// Straight-line reference implementation kept for testing the kernel above.
HermitianField complex_hessian_reference(const ProductGrid& g, const ScalarField& u);

// Per-node Hessian kernel; idx are this node's per-direction coordinates.
void hessian_at(const ProductGrid& g, const double* u, std::int64_t node, const int* idx,
                HermMat& out);

// Eigenvalues of g relative to omega (ascending per node, node-major).
// Throws GeometryError unless omega is positive definite.
std::vector<double> eigenvalues_rel(const ProductGrid& g, const HermitianField& gf,
                                    const HermMat& omega, Exec mode = Exec::openmp);

// Laplacian tr_omega(i ddbar u) and pointwise gradient norm |nabla u| with
// |nabla u|^2 = 2 g^{jk} u_j u_kbar; one-sided differences in s at the
// boundary, central everywhere else.
void laplacian_and_gradient(const ProductGrid& g, const ScalarField& u, const HermMat& omega,
                            ScalarField& lap, ScalarField& grad_norm,
                            Exec mode = Exec::openmp);

// Inner-normal derivative on the two boundary slices (zero elsewhere):
// +d/ds at s = 0, -d/ds at s = 1, one-sided second order.
ScalarField boundary_normal_derivative(const ProductGrid& g, const ScalarField& u);

// Linear-in-s extension of boundary data into the interior.
ScalarField extend_boundary_linear_s(const ProductGrid& g, const ScalarField& boundary_values);

}  // namespace hpde::grid
