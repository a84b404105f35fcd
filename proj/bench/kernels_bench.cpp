// Timing comparison of the grouped OpenMP kernels against the serial
// double-sum reference, on synthetic panels of growing size.
//
//   kernels_bench [max_size]
//
// The reference pair sums are O(N M^2 + N^2 M), so they are only run up
// to modest sizes; the grouped path is also timed serial vs parallel.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mwsub/moments.hpp"
#include "mwsub/reference.hpp"
#include "mwsub/simulate.hpp"
#include "mwsub/sketch.hpp"
#include "mwsub/threading.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

template <typename F>
double time_best_of(int runs, F&& f) {
    double best = 1e300;
    for (int r = 0; r < runs; ++r) {
        const auto start = std::chrono::steady_clock::now();
        f();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const long max_size = argc > 1 ? std::strtol(argv[1], nullptr, 10) : 640;

    std::printf("threads available: %d\n\n", mwsub::max_threads());
    std::printf("%8s %10s %14s %14s %14s %10s\n", "N=M", "cells", "brute[s]",
                "grouped-1t[s]", "grouped-all[s]", "speedup");

    for (long size = 40; size <= max_size; size *= 2) {
        const auto panel = mwsub::dgp_separable(size, size, 0.5, 0.1, 0.2, 7);
        const auto mask = mwsub::generate_mask(panel, {0.5, 11});
        const auto values = panel.field_column(0);
        const auto d = mwsub::dims(panel);

        volatile double sink = 0.0;
        const bool run_brute = size <= 160;
        double brute = 0.0;
        if (run_brute) {
            brute = time_best_of(3, [&] {
                sink = mwsub::reference::gamma_A(panel, mask, values, d.C_bar)(0, 0);
            });
        }

        mwsub::set_num_threads(1);
        const double serial = time_best_of(3, [&] {
            sink = mwsub::gamma_A_hat(panel, mask, values, d.C_bar)(0, 0);
        });
        mwsub::set_num_threads(mwsub::max_threads());
        const double parallel = time_best_of(3, [&] {
            sink = mwsub::gamma_A_hat(panel, mask, values, d.C_bar)(0, 0);
        });
        (void)sink;

        if (run_brute) {
            std::printf("%8ld %10zu %14.6f %14.6f %14.6f %9.2fx\n", size, panel.n_obs(),
                        brute, serial, parallel, serial / parallel);
        } else {
            std::printf("%8ld %10zu %14s %14.6f %14.6f %9.2fx\n", size, panel.n_obs(),
                        "-", serial, parallel, serial / parallel);
        }
    }
    return 0;
}
