// Times the OpenMP kernels against their serial paths on representative
// problem sizes. Run: hpde_bench [scale]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

#include "hpde/arrow.hpp"
#include "hpde/grid.hpp"
#include "hpde/linsolve.hpp"
#include "hpde/parallel.hpp"
#include "hpde/rng.hpp"
#include "hpde/symfunc.hpp"

using namespace hpde;

namespace {

double time_ms(void (*fn)(Exec, int), Exec mode, int scale) {
    const auto start = std::chrono::steady_clock::now();
    fn(mode, scale);
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

void bench_arrow(Exec mode, int scale) {
    arrow::BatchParams params;
    params.n_min = 2;
    params.n_max = 6;
    params.instances_per_n = 2000L * scale;
    params.seed = 11;
    arrow::run_localization_batch(params, mode, false);
}

void bench_hessian(Exec mode, int scale) {
    const int res = 8 * scale;
    grid::ProductGrid g(1, res, res, res);
    grid::ScalarField u(g.nodes());
    Rng rng(3);
    for (double& v : u) v = rng.uniform01();
    for (int rep = 0; rep < 4; ++rep) {
        auto h = grid::complex_hessian(g, u, mode);
        u[0] += h.diag(g.slice_nodes(), 0) * 1e-16;  // defeat dead-code elimination
    }
}

void bench_criteria(Exec mode, int scale) {
    const auto op = symfunc::OperatorSpec::sigma_k_root(4, 3);
    symfunc::verify_growth_criteria(op, 20000 * scale, 5, mode);
}

void bench_matvec(Exec mode, int scale) {
    const int res = 8 * scale;
    grid::ProductGrid g(1, res, res, res);
    const grid::HermitianField coeff =
        grid::HermitianField::constant(g, HermMat::identity(2));
    linsolve::StencilOperator op(g, coeff);
    grid::ScalarField v(g.nodes(), 1.0), out(g.nodes(), 0.0);
    for (int rep = 0; rep < 10; ++rep) op.apply(v.data(), out.data(), mode);
}

void report(const char* name, void (*fn)(Exec, int), int scale) {
    const double serial = time_ms(fn, Exec::serial, scale);
    const double parallel = time_ms(fn, Exec::openmp, scale);
    std::printf("%-22s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx\n", name, serial,
                parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
    const int scale = argc > 1 ? std::atoi(argv[1]) : 1;
    std::printf("threads: %d, scale: %d\n", omp_get_max_threads(), scale);
    report("arrow batch", bench_arrow, scale);
    report("complex hessian", bench_hessian, scale);
    report("growth criteria", bench_criteria, scale);
    report("stencil matvec", bench_matvec, scale);
    return 0;
}
