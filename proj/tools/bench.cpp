// Serial-vs-OpenMP benchmark for the data-parallel kernels. Each kernel runs
// once with the serial reference path and once with the OpenMP default, the
// outputs are checked bit-identical, and the timings are printed.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "npquant/evaluation.hpp"
#include "npquant/highrate.hpp"
#include "npquant/likelihood.hpp"
#include "npquant/parallel.hpp"
#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"

using namespace npquant;

namespace {

using Clock = std::chrono::steady_clock;

double run_timed(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// fold a value vector into a fingerprint for the bit-identity check
std::uint64_t fingerprint(const std::vector<double>& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

struct Row {
  const char* name;
  double serial_s;
  double parallel_s;
  bool identical;
};

}  // namespace

int main() {
  std::vector<Row> rows;
  const ProcessModel hmm(make_qpsk_oqpsk_hmm(3.0, 0.6));
  const ProcessModel ma(make_ma_detect_model({1.06677, -0.59281, 0.09565}, 1.5, 15.0));
  const RegularGrid grid(Box::cube(2, 3.0), {101, 101});

  {
    std::vector<double> out_serial, out_parallel;
    auto kernel = [&](std::vector<double>& sink) {
      sink = estimate_Fbar(hmm, grid, 3, 200, 42).fbar.values;
    };
    set_max_threads(1);
    const double ts = run_timed([&] { kernel(out_serial); });
    set_max_threads(0);
    const double tp = run_timed([&] { kernel(out_parallel); });
    rows.push_back({"score field (101x101, n_mc=200)", ts, tp,
                    fingerprint(out_serial) == fingerprint(out_parallel)});
  }

  {
    const std::vector<double> train = [&] {
      Rng rng(7);
      std::vector<double> s(2 * 20000);
      for (std::size_t i = 0; i < s.size() / 2; ++i) sample_marginal_h0(hmm, rng, &s[2 * i]);
      return s;
    }();
    std::vector<double> out_serial, out_parallel;
    auto kernel = [&](std::vector<double>& sink) {
      sink = lbg_train(train, 2, Box::cube(2, 3.0), 64, 11).codebook.points;
    };
    set_max_threads(1);
    const double ts = run_timed([&] { kernel(out_serial); });
    set_max_threads(0);
    const double tp = run_timed([&] { kernel(out_parallel); });
    rows.push_back({"LBG training (20000 samples, N=64)", ts, tp,
                    fingerprint(out_serial) == fingerprint(out_parallel)});
  }

  {
    const VoronoiQuantizer q = uniform_quantizer(Box::cube(2, 3.0), {8, 8});
    std::vector<double> out_serial, out_parallel;
    auto kernel = [&](std::vector<double>& sink) { sink = cell_stats(q, 640000, 5).zeta; };
    set_max_threads(1);
    const double ts = run_timed([&] { kernel(out_serial); });
    set_max_threads(0);
    const double tp = run_timed([&] { kernel(out_parallel); });
    rows.push_back({"cell statistics (64 cells, 640k points)", ts, tp,
                    fingerprint(out_serial) == fingerprint(out_parallel)});
  }

  {
    const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 15.0), {4});
    std::vector<double> out_serial, out_parallel;
    auto kernel = [&](std::vector<double>& sink) {
      const RocCurve c = roc_curve(ma, q, 80, 400, 33);
      sink = c.pmiss;
    };
    set_max_threads(1);
    const double ts = run_timed([&] { kernel(out_serial); });
    set_max_threads(0);
    const double tp = run_timed([&] { kernel(out_parallel); });
    rows.push_back({"ROC trials (MA filter, 400 per hypothesis)", ts, tp,
                    fingerprint(out_serial) == fingerprint(out_parallel)});
  }

  std::printf("%-44s %10s %10s %8s %s\n", "kernel", "serial[s]", "openmp[s]", "speedup",
              "identical");
  bool all_ok = true;
  for (const Row& r : rows) {
    std::printf("%-44s %10.3f %10.3f %7.2fx %s\n", r.name, r.serial_s, r.parallel_s,
                r.serial_s / r.parallel_s, r.identical ? "yes" : "NO");
    all_ok = all_ok && r.identical;
  }
  return all_ok ? 0 : 1;
}
