#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hpde/grid.hpp"
#include "hpde/parallel.hpp"

namespace hpde::linsolve {

using grid::HermitianField;
using grid::ProductGrid;
using grid::ScalarField;

// Second-order stencil realization of v -> tr(C(x) * Hess v) acting on
// full-grid arrays whose boundary entries are held at zero (Dirichlet rows
// are pinned outside the linear system).
class StencilOperator {
  public:
    StencilOperator(const ProductGrid& g, const HermitianField& coeff);

    void apply(const double* v, double* out, Exec mode = Exec::openmp) const;
    // Center-weight of each interior row (cross terms contribute nothing).
    void diagonal(double* out) const;

    // Enumerates the row of `node` as (column node, weight) pairs,
    // including the center; shared by apply() and the sparse assembler.
    template <typename Emit>
    void row(std::int64_t node, const int* idx, Emit&& emit) const;

    const ProductGrid& grid() const { return g_; }
    const HermitianField& coeff() const { return c_; }

  private:
    const ProductGrid& g_;
    const HermitianField& c_;
};

struct SolveOptions {
    double rtol = 1e-12;             // relative residual contract
    std::int64_t direct_threshold = 4000;  // unknowns; direct LU below, Krylov above (4D stencils fill in badly)
    int max_iterations = 4000;
    int max_restarts = 6;
    Exec mode = Exec::openmp;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool used_direct = false;
};

// Reusable FFT plans + mode tables for the cylinder-product grid; one per
// grid shape, shared across solves.
class FftWorkspace {
  public:
    explicit FftWorkspace(const ProductGrid& g);
    ~FftWorkspace();
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;

    // Exact inverse of the constant-coefficient operator tr(cbar Hess .)
    // with Dirichlet ends: FFT across the periodic directions, complex
    // Thomas solves along s. Arrays are full-grid, boundary zero.
    void set_coefficient(const HermMat& cbar);
    void apply_inverse(const double* r, double* z);

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Solves  tr(C(x) Hess u) = b  for the interior values of u (boundary of u
// forced to zero), choosing direct sparse LU or FFT-preconditioned
// BiCGStab by problem size. Verifies the relative-residual contract and
// throws LinearSolveError when it cannot be met.
SolveStats solve_interior(const StencilOperator& op, const ScalarField& b, ScalarField& u,
                          const SolveOptions& opts, FftWorkspace* fft = nullptr);

// Mean of the coefficient blocks over interior nodes.
HermMat average_interior_coeff(const ProductGrid& g, const HermitianField& coeff);

}  // namespace hpde::linsolve
