#include <doctest.h>

#include <cstring>

#include "npquant/evaluation.hpp"
#include "npquant/highrate.hpp"
#include "npquant/likelihood.hpp"
#include "npquant/parallel.hpp"
#include "npquant/processes.hpp"
#include "npquant/quantizers.hpp"

using namespace npquant;

namespace {

// runs a kernel once per execution mode and requires bit-identical output
template <typename Fn>
void check_modes_identical(const Fn& kernel) {
  set_max_threads(1);
  const std::vector<double> serial = kernel();
  set_max_threads(0);
  const std::vector<double> parallel = kernel();
  set_max_threads(4);
  const std::vector<double> capped = kernel();
  set_max_threads(0);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(std::memcmp(&serial[i], &parallel[i], sizeof(double)) == 0);
    CHECK(std::memcmp(&serial[i], &capped[i], sizeof(double)) == 0);
  }
}

}  // namespace

TEST_CASE("substreams differ across ids and reproduce across constructions") {
  Rng a(42, {1, 2});
  Rng b(42, {1, 2});
  Rng c(42, {1, 3});
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t x = a.next_u64();
    CHECK(x == b.next_u64());
    any_diff |= x != c.next_u64();
  }
  CHECK(any_diff);
}

TEST_CASE("score-field estimation is worker-count independent") {
  const ProcessModel m(make_qpsk_oqpsk_hmm(3.0, 0.6));
  const RegularGrid grid(Box::cube(2, 3.0), {31, 31});
  check_modes_identical([&] { return estimate_Fbar(m, grid, 2, 64, 1234).fbar.values; });
}

TEST_CASE("LBG training is worker-count independent") {
  const ProcessModel m(make_ar_detect_model(0.8, 1.0));
  std::vector<double> samples(2 * 3000);
  Rng rng(5);
  for (int i = 0; i < 3000; ++i) sample_marginal_h0(m, rng, &samples[2 * i]);
  check_modes_identical(
      [&] { return lbg_train(samples, 2, Box::cube(2, 8.0), 16, 6).codebook.points; });
}

TEST_CASE("cell statistics are worker-count independent") {
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(2, 8.0), {4, 4});
  check_modes_identical([&] {
    const CellStats st = cell_stats(q, 160000, 7);
    std::vector<double> out = st.volume;
    out.insert(out.end(), st.covariation.begin(), st.covariation.end());
    return out;
  });
}

TEST_CASE("ROC estimation is worker-count independent") {
  const ProcessModel ma(make_ma_detect_model({1.06677, -0.59281, 0.09565}, 1.5, 15.0));
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(1, 15.0), {4});
  check_modes_identical([&] {
    const RocCurve c = roc_curve(ma, q, 20, 150, 8);
    std::vector<double> out = c.pfa;
    out.insert(out.end(), c.pmiss.begin(), c.pmiss.end());
    return out;
  });
}

TEST_CASE("cell likelihood tables are worker-count independent") {
  const FiniteStateHmm hm = make_qpsk_oqpsk_hmm(3.0, 0.6);
  const VoronoiQuantizer q = uniform_quantizer(Box::cube(2, 3.0), {3, 3});
  check_modes_identical([&] { return cell_likelihoods(hm, q, 5000, 9).log_prob; });
}

TEST_CASE("path sampling is reproducible for every model kind") {
  const std::vector<ProcessModel> models = {
      ProcessModel(make_gaussian_pair_iid(0, 1, 1, 1)),
      ProcessModel(make_qpsk_oqpsk_hmm(3.0, 0.6)),
      ProcessModel(make_ar_detect_model(0.8, 1.0)),
      ProcessModel(make_ma_detect_model({1.0, -0.5}, 1.0)),
  };
  for (const auto& m : models)
    for (Hypothesis h : {Hypothesis::H0, Hypothesis::H1}) {
      const auto a = sample_path(m, h, 64, 16, 99);
      const auto b = sample_path(m, h, 64, 16, 99);
      CHECK(a.data == b.data);
    }
}
