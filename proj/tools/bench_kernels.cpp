// Times each OpenMP kernel against its serial twin on a fixed workload and
// checks that the two agree bitwise. Wall-clock is best-of-three.
#include "lotus/detectors.hpp"
#include "lotus/ot.hpp"
#include "lotus/rng.hpp"
#include "lotus/serial_ref.hpp"
#include "lotus/types.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using lotus::Matrix;
using lotus::RowMatrix;
using lotus::Vector;

double time_best_of(const std::function<void()>& fn, int reps = 3) {
    using clk = std::chrono::steady_clock;
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clk::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(clk::now() - t0).count());
    }
    return best;
}

RowMatrix random_points(int n, int d, std::uint64_t seed) {
    lotus::Rng rng(seed);
    RowMatrix x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

void report(const std::string& name, double serial_s, double parallel_s, bool equal) {
    std::printf("%-16s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  bitwise %s\n",
                name.c_str(), serial_s, parallel_s,
                parallel_s > 0 ? serial_s / parallel_s : 0.0, equal ? "equal" : "DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    {
        lotus::DiscreteMeasure m;
        m.points = random_points(1500, 10, 1);
        m.weights = Vector::Constant(1500, 1.0 / 1500);
        Matrix serial_out, parallel_out;
        const double ts = time_best_of([&] { serial_out = lotus::ref::pairwise_sq_dist(m).values; });
        const double tp = time_best_of([&] { parallel_out = lotus::pairwise_sq_dist(m).values; });
        report("pairwise_sq_dist", ts, tp, serial_out == parallel_out);
    }

    {
        const int n = 400;
        lotus::DiscreteMeasure ma, mb;
        ma.points = random_points(n, 6, 2);
        ma.weights = Vector::Constant(n, 1.0 / n);
        mb.points = random_points(n, 6, 3);
        mb.weights = Vector::Constant(n, 1.0 / n);
        const lotus::PairwiseMetricMatrix a = lotus::pairwise_sq_dist(ma);
        const lotus::PairwiseMetricMatrix b = lotus::pairwise_sq_dist(mb);
        lotus::Coupling plan;
        plan.plan = ma.weights * mb.weights.transpose();
        double es = 0.0, ep = 0.0;
        const double ts = time_best_of([&] { es = lotus::ref::gw_energy(plan, a, b); });
        const double tp = time_best_of([&] { ep = lotus::gw_energy(plan, a, b); });
        report("gw_energy", ts, tp, es == ep);
    }

    {
        const int n = 500;
        const RowMatrix xa = random_points(n, 5, 4);
        const RowMatrix xb = random_points(n, 5, 5);
        Matrix cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = (xa.row(i) - xb.row(j)).squaredNorm();
        const Vector w = Vector::Constant(n, 1.0 / n);
        lotus::SinkhornResult rs, rp;
        const double ts =
            time_best_of([&] { rs = lotus::ref::sinkhorn(cost, w, w, 0.5, 200, 1e-9); });
        const double tp = time_best_of([&] { rp = lotus::sinkhorn(cost, w, w, 0.5, 200, 1e-9); });
        report("sinkhorn", ts, tp,
               rs.cost == rp.cost && rs.coupling.plan == rp.coupling.plan);
    }

    {
        const RowMatrix x = random_points(2000, 8, 6);
        Vector ss, sp;
        double ts = time_best_of([&] { ss = lotus::ref::knn_score(x, 10, "mean"); });
        double tp = time_best_of([&] { sp = lotus::knn_score(x, 10, "mean"); });
        report("knn_score", ts, tp, ss == sp);

        ts = time_best_of([&] { ss = lotus::ref::hbos_score(x, 20); });
        tp = time_best_of([&] { sp = lotus::hbos_score(x, 20); });
        report("hbos_score", ts, tp, ss == sp);

        ts = time_best_of([&] { ss = lotus::ref::iforest_score(x, 100, 256, 0); });
        tp = time_best_of([&] { sp = lotus::iforest_score(x, 100, 256, 0); });
        report("iforest_score", ts, tp, ss == sp);

        ts = time_best_of([&] { ss = lotus::ref::loda_score(x, 100, 20, 0); });
        tp = time_best_of([&] { sp = lotus::loda_score(x, 100, 20, 0); });
        report("loda_score", ts, tp, ss == sp);

        ts = time_best_of([&] { ss = lotus::ref::abod_score(x, 12); });
        tp = time_best_of([&] { sp = lotus::abod_score(x, 12); });
        report("abod_score", ts, tp, ss == sp);
    }
    return 0;
}
