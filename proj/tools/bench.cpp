#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "mqa/datapipe.hpp"
#include "mqa/kernels.hpp"
#include "mqa/ranker.hpp"
#include "mqa/synth.hpp"
#include "mqa/trainer.hpp"

using namespace mqa;

namespace {

template <typename Fn>
double seconds_per_call(Fn&& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  return dt.count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s %12.3f %12.3f %8.2fx  %s\n", name, serial * 1e3,
              parallel * 1e3, serial / parallel, same ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms",
              "speedup");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (std::size_t n : {256, 1024}) {
    Tensor w(n, n);
    for (auto& v : w.values()) v = z(rng);
    std::vector<double> x(n), ys(n), yp(n);
    for (auto& v : x) v = z(rng);
    const double s = seconds_per_call([&] { kernels::serial::gemv(w, x, ys); }, reps);
    const double p = seconds_per_call([&] { kernels::parallel::gemv(w, x, yp); }, reps);
    char name[64];
    std::snprintf(name, sizeof name, "gemv %zux%zu", n, n);
    row(name, s, p, ys == yp);

    Tensor ds(n, n), dp(n, n);
    const double s2 = seconds_per_call([&] { kernels::serial::ger_acc(ds, x, x); }, reps);
    const double p2 = seconds_per_call([&] { kernels::parallel::ger_acc(dp, x, x); }, reps);
    std::snprintf(name, sizeof name, "ger_acc %zux%zu", n, n);
    row(name, s2, p2, ds == dp);
  }

  SynthOptions o;
  o.seed = 1;
  o.n_listings = 40;
  o.questions_per_listing = 8;
  const auto c = generate_synthetic(o);
  const auto data = mine_corpus(c.chats, c.listings);
  TrainConfig tc;
  tc.model.embed_dim = 64;
  tc.model.lstm_hidden = 32;
  tc.ff_size = 128;
  set_flags(tc.model, "lstm,attention,context");
  const auto model = Model::create(tc.resolved_model(),
                                   vocab_for(data, {}, tc.resolved_model()), 1);
  const auto batch = prepare_examples(data, model);
  const std::span<const LabelledInput> b(batch.data(), std::min<std::size_t>(64, batch.size()));
  GradSet gs = zero_grads(model.params), gp = zero_grads(model.params);
  double ls = 0, lp = 0;
  const int few = std::max(1, reps / 10);
  const double s = seconds_per_call([&] {
    zero(gs);
    ls = serial::batch_loss_and_grad(b, model, gs);
  }, few);
  const double p = seconds_per_call([&] {
    zero(gp);
    lp = parallel::batch_loss_and_grad(b, model, gp);
  }, few);
  row("loss+grad, batch 64, full", s, p, ls == lp && gs == gp);

  std::vector<FeaturizedInput> inputs;
  for (const auto& x : batch) inputs.push_back(x.input);
  std::vector<ScoreResult> rs, rp;
  const double s3 = seconds_per_call([&] { rs = serial::score_batch(inputs, model); }, few);
  const double p3 = seconds_per_call([&] { rp = parallel::score_batch(inputs, model); }, few);
  bool same = rs.size() == rp.size();
  for (std::size_t i = 0; same && i < rs.size(); ++i) same = rs[i].probs == rp[i].probs;
  char name[64];
  std::snprintf(name, sizeof name, "score, %zu inputs", inputs.size());
  row(name, s3, p3, same);
  return 0;
}
