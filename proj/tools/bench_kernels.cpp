// Timing comparison between the OpenMP kernels and their serial reference
// implementations. Results must match bitwise; this tool reports the
// speedup on the current machine.

#include <chrono>
#include <cstdio>
#include <functional>

#include "stcos/basis.hpp"
#include "stcos/geometry.hpp"
#include "stcos/matrix.hpp"
#include "stcos/pipeline.hpp"
#include "stcos/rng.hpp"
#include "stcos/sparse.hpp"
#include "stcos/threads.hpp"

using namespace stcos;

namespace {

double time_ms(const std::function<void()>& fn, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, equal ? "bitwise-equal" : "MISMATCH");
}

} // namespace

int main() {
    std::printf("threads available: %d\n", threads::hardware());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    Rng rng(7);

    { // dense matmul
        const std::size_t n = 420;
        Matrix a(n, n), b(n, n);
        for (double& v : a.data()) v = rng.uniform(-1, 1);
        for (double& v : b.data()) v = rng.uniform(-1, 1);
        Matrix r_serial, r_par;
        const double ts = time_ms([&] { r_serial = ref::matmul_serial(a, b); });
        const double tp = time_ms([&] { r_par = matmul(a, b); });
        report("dense matmul 420x420", ts, tp, max_abs_diff(r_serial, r_par) == 0.0);
    }

    { // sparse * dense
        const std::size_t n = 3000, m = 200;
        std::vector<Triplet> trips;
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < 30; ++k)
                trips.push_back({i, static_cast<std::size_t>(rng.next_u64() % m),
                                 rng.uniform(-1, 1)});
        const SparseMatrix sp(n, m, std::move(trips));
        Matrix d(m, m);
        for (double& v : d.data()) v = rng.uniform(-1, 1);
        Matrix r_serial, r_par;
        const double ts = time_ms([&] { r_serial = ref::sparse_matmul_dense_serial(sp, d); });
        const double tp = time_ms([&] { r_par = sp.matmul_dense(d); });
        report("sparse*dense 3000x200", ts, tp, max_abs_diff(r_serial, r_par) == 0.0);
    }

    { // overlap matrix on shifted grids
        const Domain g1 = make_grid_domain(18, 100.0, "a");
        Domain g2 = make_grid_domain(18, 100.0, "b", 37.0, 59.0);
        Matrix r_serial, r_par;
        const double ts = time_ms([&] { r_serial = ref::overlap_matrix_serial(g1, g2, false); },
                                  2);
        const double tp = time_ms([&] { r_par = overlap_matrix(g1, g2, false); }, 2);
        report("overlap 324x324 units", ts, tp, max_abs_diff(r_serial, r_par) == 0.0);
    }

    { // areal space-time basis
        const Domain g = make_grid_domain(12, 100.0, "a");
        std::vector<Point2> centers;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                centers.push_back({60.0 + 240.0 * i, 60.0 + 240.0 * j});
        const SpaceTimeKnots knots = cartesian_knots(centers, {2015, 2016, 2017}, 400.0, 1.5);
        const Period period = make_period(2017, 3);
        const BasisConfig bc{1000};
        SparseMatrix r_serial, r_par;
        const double ts = time_ms(
            [&] { r_serial = ref::areal_spacetime_bisquare_serial(g, period, knots, bc, 11); },
            2);
        const double tp =
            time_ms([&] { r_par = areal_spacetime_bisquare(g, period, knots, bc, 11); }, 2);
        report("areal basis 144x75", ts, tp,
               max_abs_diff(r_serial.to_dense(), r_par.to_dense()) == 0.0);
    }

    return 0;
}
