#include "llambo/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace llambo {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::random: return "random";
    case Provenance::tpe_ind: return "tpe_ind";
    case Provenance::tpe_mv: return "tpe_mv";
    case Provenance::llm: return "llm";
  }
  return "?";
}

double expected_improvement(const PredictiveDistribution& pred, double best) {
  if (pred.std < 0.0) throw ValidationError("expected_improvement needs std >= 0");
  const double gap = best - pred.mean;
  if (pred.std == 0.0) return std::max(gap, 0.0);
  const double z = gap / pred.std;
  const double ei = gap * normal_cdf(z) + pred.std * normal_pdf(z);
  return std::max(ei, 0.0);  // guard against negative rounding noise far in the tail
}

CandidateBatch propose_random(const SearchSpace& space, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("propose_random needs k >= 1");
  CandidateBatch batch;
  batch.provenance = Provenance::random;
  batch.configs = sample_random(space, k, seed);
  return batch;
}

CandidateBatch propose_tpe(const SearchSpace& space, const TpeModel& m, int k,
                           std::uint64_t seed, Exec exec) {
  if (k < 1) throw ValidationError("propose_tpe needs k >= 1");
  const int n_raw = 24 * k;
  Rng rng(mix_seed(seed, 0x7e9dULL));
  std::vector<UnitPoint> raw;
  raw.reserve(static_cast<std::size_t>(n_raw));
  for (int i = 0; i < n_raw; ++i) raw.push_back(UnitPoint{m.good.sample(rng)});

  const std::vector<double> scores = tpe_score_batch(m, raw, exec);
  std::vector<int> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });

  CandidateBatch batch;
  batch.provenance = m.mode == TpeMode::independent ? Provenance::tpe_ind : Provenance::tpe_mv;
  for (int i = 0; i < k; ++i)
    batch.configs.push_back(denormalize(space, raw[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]));
  return batch;
}

Selection select_next(const CandidateBatch& batch, const SurrogateFn& surrogate, double best,
                      Exec exec) {
  if (batch.configs.empty()) throw ValidationError("select_next needs a nonempty batch");

  std::vector<PredictiveDistribution> preds;
  if (batch.scores_est.has_value()) {
    if (batch.scores_est->size() != batch.configs.size())
      throw ValidationError("select_next: scores_est length mismatch");
    preds = *batch.scores_est;
  } else {
    preds.resize(batch.configs.size());
    parallel_for(exec, static_cast<std::ptrdiff_t>(batch.configs.size()),
                 [&](std::ptrdiff_t i) {
                   preds[static_cast<std::size_t>(i)] =
                       surrogate(batch.configs[static_cast<std::size_t>(i)]);
                 });
  }

  Selection sel;
  for (std::size_t i = 0; i < batch.configs.size(); ++i) {
    const double ei = expected_improvement(preds[i], best);
    if (sel.index < 0 || ei > sel.ei) {
      sel.index = static_cast<int>(i);
      sel.ei = ei;
      sel.pred = preds[i];
    }
  }
  sel.config = batch.configs[static_cast<std::size_t>(sel.index)];
  return sel;
}

}  // namespace llambo
