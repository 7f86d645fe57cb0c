#include <benchmark/benchmark.h>

#include "rca/autodiff.hpp"
#include "rca/losses.hpp"
#include "rca/synthetic.hpp"
#include "rca/trainer.hpp"
#include "rca/uasr.hpp"

namespace {

void BM_CrossLoss(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const rca::ContrastiveInstance inst = rca::random_instance(1, 64, 16, K, 8);
  for (auto _ : state) benchmark::DoNotOptimize(rca::cross_modality_loss(inst.regions, inst.positives, inst.negatives));
}
BENCHMARK(BM_CrossLoss)->Arg(5)->Arg(25);

void BM_Uasr(benchmark::State& state) {
  const rca::ContrastiveInstance inst = rca::random_instance(2, 64, 16, 25, 8);
  for (auto _ : state) benchmark::DoNotOptimize(rca::apply_uasr(inst));
}
BENCHMARK(BM_Uasr);

void BM_LossAndGrad(benchmark::State& state) {
  const auto K = static_cast<std::size_t>(state.range(0));
  const rca::ContrastiveInstance inst = rca::random_instance(3, 64, 16, K, 8);
  const rca::UasrResult sel = rca::apply_uasr(inst);
  for (auto _ : state) benchmark::DoNotOptimize(rca::loss_and_grad(inst, sel));
}
BENCHMARK(BM_LossAndGrad)->Arg(5)->Arg(25);

void BM_TrainStep(benchmark::State& state) {
  rca::SyntheticConfig s;
  const rca::SyntheticDataset ds = rca::generate_synthetic(s);
  rca::TrainerConfig c;
  c.steps = 1;
  c.learning_rate = 1.0;
  c.log_every = 1000;
  c.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(rca::train_alignment(ds, c));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
