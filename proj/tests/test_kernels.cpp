#include <doctest.h>

#include <random>

#include "gfn/diffcore/mlp.hpp"
#include "gfn/kernels/kernels.hpp"
#include "support.hpp"

using namespace gfn;
namespace k = gfn::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol = 1e-12) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(test::rel_err(a[i], b[i], 1.0) < tol);
}

}  // namespace

TEST_CASE("scalar kernels are always available") {
  CHECK(k::supported(k::Backend::Scalar));
  CHECK(k::backend_name(k::Backend::Scalar) == "scalar");
  k::ScopedBackend pin(k::Backend::Scalar);
  CHECK(k::active_backend() == k::Backend::Scalar);
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!k::supported(k::Backend::Avx2)) {
    MESSAGE("AVX2 unavailable on this machine; equivalence not exercised");
    return;
  }
  const auto& s = k::table(k::Backend::Scalar);
  const auto& v = k::table(k::Backend::Avx2);
  std::mt19937_64 rng(7);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 100u, 257u}) {
    const auto x = random_vector(n, rng), y = random_vector(n, rng);
    CHECK(test::rel_err(s.dot(x.data(), y.data(), n), v.dot(x.data(), y.data(), n), 1.0) < 1e-12);
    auto ys = y, yv = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    v.axpy(0.37, x.data(), yv.data(), n);
    check_close(ys, yv);
  }
  for (auto [rows, kk, m] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {3, 5, 7}, {4, 8, 4}, {9, 17, 13}, {16, 64, 33}}) {
    const auto x = random_vector(rows * kk, rng), w = random_vector(m * kk, rng), dy = random_vector(rows * m, rng);
    std::vector<double> ys(rows * m), yv(rows * m);
    s.gemm_nt(x.data(), w.data(), ys.data(), rows, kk, m);
    v.gemm_nt(x.data(), w.data(), yv.data(), rows, kk, m);
    check_close(ys, yv);
    auto dxs = random_vector(rows * kk, rng);
    auto dxv = dxs;
    s.gemm_nn_acc(dy.data(), w.data(), dxs.data(), rows, m, kk);
    v.gemm_nn_acc(dy.data(), w.data(), dxv.data(), rows, m, kk);
    check_close(dxs, dxv);
    auto dws = random_vector(m * kk, rng);
    auto dwv = dws;
    s.gemm_tn_acc(dy.data(), x.data(), dws.data(), rows, m, kk);
    v.gemm_tn_acc(dy.data(), x.data(), dwv.data(), rows, m, kk);
    check_close(dws, dwv);
  }
  for (std::size_t n : {1u, 4u, 6u, 13u, 64u}) {
    auto ps = random_vector(n, rng), ms = random_vector(n, rng), vs = random_vector(n, rng);
    for (double& q : vs) q = q * q;
    const auto g = random_vector(n, rng);
    auto pv = ps, mv = ms, vv = vs;
    const k::AdamCoefficients c{1e-2, 0.9, 0.999, 1e-8, 1 - 0.9 * 0.9, 1 - 0.999 * 0.999};
    s.adam_update(ps.data(), g.data(), ms.data(), vs.data(), n, c);
    v.adam_update(pv.data(), g.data(), mv.data(), vv.data(), n, c);
    check_close(ps, pv);
    check_close(ms, mv);
    check_close(vs, vv);
  }
}

TEST_CASE("an MLP forward and backward pass agrees across backends") {
  if (!k::supported(k::Backend::Avx2)) return;
  const auto run = [](k::Backend backend) {
    k::ScopedBackend pin(backend);
    Mlp net(MlpConfig{.input_width = 6, .hidden = {32, 16}, .head_widths = {5, 1}}, 3);
    std::mt19937_64 rng(11);
    const Tensor x({4, 6}, random_vector(24, rng));
    Tape tape;
    const NodeId in = tape.input("x");
    const auto heads = net.build(tape, in);
    const NodeId loss = tape.sum(tape.square(heads[0]));
    tape.forward(Feed().set(in, x));
    for (auto& p : net.parameters()) p.zero_grad();
    tape.backward(loss, Tensor::scalar(1.0));
    std::vector<double> out{tape.value(loss).item()};
    for (const auto& p : net.parameters()) out.insert(out.end(), p.grad.data().begin(), p.grad.data().end());
    return out;
  };
  check_close(run(k::Backend::Scalar), run(k::Backend::Avx2), 1e-11);
}
