// Micro-benchmark for the dense kernels: serial reference vs the OpenMP
// entry points at whatever worker count NBEATS_WORKERS selects.
//
//   bench_kernels [--sizes m,k,n[;m,k,n...]] [--seconds S]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "nbeats/kernels.hpp"
#include "nbeats/matrix.hpp"
#include "nbeats/rng.hpp"

using nbeats::Matrix;

namespace {

struct Size {
    std::size_t m, k, n;
};

Matrix random_matrix(std::size_t rows, std::size_t cols, nbeats::Rng& rng) {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(-1.0, 1.0);
    return out;
}

template <typename Fn>
double time_gflops(Fn&& fn, double flops, double seconds) {
    using clock = std::chrono::steady_clock;
    fn();  // warm up
    int iters = 0;
    const auto start = clock::now();
    auto now = start;
    do {
        fn();
        ++iters;
        now = clock::now();
    } while (std::chrono::duration<double>(now - start).count() < seconds);
    const double elapsed = std::chrono::duration<double>(now - start).count();
    return flops * iters / elapsed / 1e9;
}

std::vector<Size> parse_sizes(const std::string& arg) {
    std::vector<Size> out;
    std::size_t pos = 0;
    while (pos < arg.size()) {
        Size s{};
        if (std::sscanf(arg.c_str() + pos, "%zu,%zu,%zu", &s.m, &s.k, &s.n) != 3) break;
        out.push_back(s);
        const std::size_t next = arg.find(';', pos);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<Size> sizes = {{128, 72, 128}, {128, 128, 128}, {1024, 512, 512},
                               {1024, 288, 512}, {512, 512, 512}};
    double seconds = 0.5;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--sizes") == 0 && i + 1 < argc) {
            sizes = parse_sizes(argv[++i]);
        } else if (std::strcmp(argv[i], "--seconds") == 0 && i + 1 < argc) {
            seconds = std::stod(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: bench_kernels [--sizes m,k,n[;...]] [--seconds S]\n");
            return 2;
        }
    }

    nbeats::Rng rng(1234);
    std::printf("workers=%d\n", nbeats::kernels::workers());
    std::printf("%-18s %10s %10s %10s\n", "size (m,k,n)", "nt GF/s", "nn GF/s", "tn GF/s");
    for (const Size& s : sizes) {
        Matrix a = random_matrix(s.m, s.k, rng);
        Matrix bt = random_matrix(s.n, s.k, rng);
        Matrix b = random_matrix(s.k, s.n, rng);
        Matrix at = random_matrix(s.k, s.m, rng);
        Matrix c(s.m, s.n);
        const double flops = 2.0 * s.m * s.k * s.n;

        const double nt = time_gflops([&] { nbeats::kernels::gemm_nt(a, bt, c); }, flops, seconds);
        const double nn = time_gflops([&] { nbeats::kernels::gemm_nn(a, b, c); }, flops, seconds);
        const double tn = time_gflops([&] { nbeats::kernels::gemm_tn(at, b, c); }, flops, seconds);
        std::printf("%4zu,%4zu,%4zu   %10.2f %10.2f %10.2f\n", s.m, s.k, s.n, nt, nn, tn);

        const double snt =
            time_gflops([&] { nbeats::kernels::serial::gemm_nt(a, bt, c); }, flops, seconds);
        const double snn =
            time_gflops([&] { nbeats::kernels::serial::gemm_nn(a, b, c); }, flops, seconds);
        const double stn =
            time_gflops([&] { nbeats::kernels::serial::gemm_tn(at, b, c); }, flops, seconds);
        std::printf("%4zu,%4zu,%4zu   %10.2f %10.2f %10.2f  (serial)\n", s.m, s.k, s.n, snt, snn,
                    stn);
    }
    return 0;
}
