// Compares the serial reference path against the OpenMP path on the hot
// per-context kernels and checks they agree bitwise.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "mazerl/harness.hpp"
#include "mazerl/objectives.hpp"

using namespace mazerl;

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double time_ms(int reps, Fn&& fn) {
  const auto start = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = Clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

bool same(const PolicyVec& a, const PolicyVec& b) {
  return std::memcmp(a.data(), b.data(), sizeof(PolicyVec)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  int n_contexts = 300;
  int reps = 20;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--contexts" && i + 1 < argc) {
      n_contexts = std::atoi(argv[++i]);
    } else if (std::string(argv[i]) == "--reps" && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    }
  }

  std::printf("building fixture: %d contexts\n", n_contexts);
  const Dataset ds = generate_dataset(7, 7, 14, n_contexts, 10, true,
                                      ExecMode::Parallel);
  ExperienceBuffer buf = build_fixed_buffers(
      ds.train, RewardSetting::Underspecified, 4, 2000, 0, ExecMode::Parallel);

  PolicyParams theta;
  Rng rng(7);
  for (double& w : theta.w) w = rng.uniform(-0.5, 0.5);
  const RewardFn reward = underspecified_reward_fn();

  struct Kernel {
    const char* name;
    PolicyVec serial_out{}, parallel_out{};
    double serial_ms = 0.0, parallel_ms = 0.0;
  };
  Kernel kernels[3] = {{"iml_gradient"}, {"mml_gradient"}, {"mapo_gradient"}};

  auto run = [&](int k, ExecMode mode) -> PolicyVec {
    switch (k) {
      case 0: return iml_gradient(theta, buf, ds.train, mode);
      case 1: return mml_gradient(theta, buf, ds.train, mode);
      default:
        return mapo_gradient(theta, buf, ds.train, reward, 0.01, 0.1, 42, 1,
                             std::nullopt, mode);
    }
  };

  for (int k = 0; k < 3; ++k) {
    kernels[k].serial_ms =
        time_ms(reps, [&] { kernels[k].serial_out = run(k, ExecMode::Serial); });
    kernels[k].parallel_ms = time_ms(
        reps, [&] { kernels[k].parallel_out = run(k, ExecMode::Parallel); });
  }

  double eval_serial = 0.0, eval_parallel = 0.0;
  const double es = time_ms(reps, [&] {
    eval_serial = evaluate(theta, ds.train, ExecMode::Serial);
  });
  const double ep = time_ms(reps, [&] {
    eval_parallel = evaluate(theta, ds.train, ExecMode::Parallel);
  });

  std::printf("%-14s %10s %10s %8s %s\n", "kernel", "serial ms", "openmp ms",
              "speedup", "bitwise");
  for (const Kernel& k : kernels) {
    std::printf("%-14s %10.3f %10.3f %7.2fx %s\n", k.name, k.serial_ms,
                k.parallel_ms, k.serial_ms / k.parallel_ms,
                same(k.serial_out, k.parallel_out) ? "ok" : "MISMATCH");
  }
  std::printf("%-14s %10.3f %10.3f %7.2fx %s\n", "evaluate", es, ep, es / ep,
              eval_serial == eval_parallel ? "ok" : "MISMATCH");

  bool ok = eval_serial == eval_parallel;
  for (const Kernel& k : kernels) ok = ok && same(k.serial_out, k.parallel_out);
  return ok ? 0 : 1;
}
