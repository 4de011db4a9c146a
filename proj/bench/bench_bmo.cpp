// Timing comparison of the all-cube oscillation engine: serial brute force
// (two passes per cube, no tables) against the prefix-table sweep at one and
// at all OpenMP workers.  Results are cross-checked to 1e-12 relative.
//
// Usage: bench_bmo [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "bmolab/bmo.hpp"
#include "bmolab/parallel.hpp"
#include "bmolab/rng.hpp"

using namespace bmolab;
using clock_type = std::chrono::steady_clock;

namespace {

TensorField random_field(const Grid& grid, int rows, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(grid.cell_count()) * rows * grid.dim());
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return TensorField(grid, rows, std::move(v));
}

template <class Fn>
double time_ms(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock_type::now();
        fn();
        const auto t1 = clock_type::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

struct Case {
    const char* name;
    int dim;
    std::vector<int> shape;
};

} // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
    const int max_workers = worker_count();

    const Case cases[] = {
        {"32x32", 2, {32, 32}},
        {"48x48", 2, {48, 48}},
        {"64x64", 2, {64, 64}},
        {"12x12x12", 3, {12, 12, 12}},
        {"16x16x16", 3, {16, 16, 16}},
    };

    std::printf("all-cube BMO seminorm sweep, N=2 fields, best of %d runs\n", repeats);
    std::printf("%-10s %12s %12s %12s %12s %8s %8s\n", "grid", "cubes", "brute[ms]",
                "fast@1[ms]", "fast@max[ms]", "spd@1", "spd@max");

    for (const Case& c : cases) {
        const Grid grid(c.dim, c.shape, 1.0 / c.shape[0]);
        const TensorField field = random_field(grid, 2, 12345);
        const std::int64_t cubes = count_cubes(grid, CubeMode::all);

        NormReport brute, fast1, fastN;
        const double t_brute =
            time_ms(repeats, [&] { brute = bmo_seminorm_bruteforce(field, 1'000'000'000); });
        set_workers(1);
        const double t_fast1 = time_ms(repeats, [&] { fast1 = bmo_seminorm(field, CubeMode::all); });
        set_workers(max_workers);
        const double t_fastN = time_ms(repeats, [&] { fastN = bmo_seminorm(field, CubeMode::all); });

        const double rel1 = std::abs(fast1.seminorm - brute.seminorm) /
                            (1.0 + brute.seminorm);
        const double relN = std::abs(fastN.seminorm - brute.seminorm) /
                            (1.0 + brute.seminorm);
        if (rel1 > 1e-12 || relN > 1e-12 || fast1.seminorm != fastN.seminorm) {
            std::fprintf(stderr, "MISMATCH on %s: brute %.17g fast1 %.17g fastN %.17g\n",
                         c.name, brute.seminorm, fast1.seminorm, fastN.seminorm);
            return 1;
        }

        std::printf("%-10s %12lld %12.2f %12.2f %12.2f %8.2f %8.2f\n", c.name,
                    static_cast<long long>(cubes), t_brute, t_fast1, t_fastN,
                    t_brute / t_fast1, t_brute / t_fastN);
    }
    std::printf("workers available: %d\n", max_workers);
    return 0;
}
