// Timing harness for the two data-parallel kernels (epoch evaluation and the
// drop benchmark), comparing the OpenMP path against the serial reference and
// verifying that their outputs are identical.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "emprag/dropcode.hpp"
#include "emprag/emergence.hpp"
#include "emprag/eval.hpp"
#include "emprag/policy.hpp"
#include "emprag/world.hpp"

using namespace emprag;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool rows_equal(const std::vector<eval::InstanceRow>& a, const std::vector<eval::InstanceRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].message != b[i].message || a[i].choice != b[i].choice ||
            a[i].success != b[i].success || a[i].sp != b[i].sp || a[i].lp != b[i].lp)
            return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    const int n_test = argc > 1 ? std::atoi(argv[1]) : 1000;
    const long long n_samples = argc > 2 ? std::atoll(argv[2]) : 100'000;

#ifdef _OPENMP
    std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled (serial build)\n");
#endif

    world::WorldConfig wcfg;
    wcfg.n_colors = 4;
    wcfg.n_shapes = 2;
    wcfg.dedup_grid = 32;
    auto dataset = world::generate_dataset(wcfg, 2000, n_test, 7);

    emergence::TrainConfig tcfg;
    tcfg.n_steps = 20'000;
    tcfg.seed = 7;
    tcfg.world = wcfg;
    auto trained = emergence::train(dataset, tcfg);

    eval::EvalConfig ecfg;
    ecfg.world = wcfg;
    const auto method = eval::parse_method("ibr_cnvg");

    auto t0 = std::chrono::steady_clock::now();
    auto serial = eval::run_epoch_serial(trained.speaker, trained.listener, dataset, method, 0, 7,
                                         ecfg);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto parallel = eval::run_epoch(trained.speaker, trained.listener, dataset, method, 0, 7, ecfg);
    const double t_parallel = seconds_since(t0);

    if (!rows_equal(serial, parallel)) {
        std::printf("FAIL: run_epoch parallel output differs from serial reference\n");
        return 1;
    }
    std::printf("run_epoch   n=%d      serial %.3fs  parallel %.3fs  speedup %.2fx\n", n_test,
                t_serial, t_parallel, t_serial / t_parallel);

    dropcode::EmbeddingModel model;
    model.mean.assign(8, 2.0);
    const std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.0};

    t0 = std::chrono::steady_clock::now();
    auto drop_serial =
        dropcode::drop_benchmark_serial(model, grid, dropcode::Encoder::whitened, n_samples, 7);
    const double d_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto drop_parallel =
        dropcode::drop_benchmark(model, grid, dropcode::Encoder::whitened, n_samples, 7);
    const double d_parallel = seconds_since(t0);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (drop_serial[i].mean_l1 != drop_parallel[i].mean_l1 ||
            drop_serial[i].ci95 != drop_parallel[i].ci95) {
            std::printf("FAIL: drop_benchmark parallel output differs from serial reference\n");
            return 1;
        }
    }
    std::printf("drop_bench  n=%lld  serial %.3fs  parallel %.3fs  speedup %.2fx\n", n_samples,
                d_serial, d_parallel, d_serial / d_parallel);
    std::printf("outputs identical across serial and parallel paths\n");
    return 0;
}
