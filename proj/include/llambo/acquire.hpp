#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "llambo/surrogate.hpp"

namespace llambo {

enum class Provenance { random, tpe_ind, tpe_mv, llm };
const char* to_string(Provenance p);

struct CandidateBatch {
  std::vector<Config> configs;
  Provenance provenance = Provenance::random;
  // Present when the proposer already estimated scores (the LLM pipeline
  // attaches its surrogate predictions here).
  std::optional<std::vector<PredictiveDistribution>> scores_est;
};

// Expected improvement for minimization: E[max(best - X, 0)], X ~ N(mean, std^2).
// Closed form (best - mean) Phi(z) + std phi(z) with z = (best - mean)/std;
// degenerate std = 0 collapses to max(best - mean, 0).
double expected_improvement(const PredictiveDistribution& pred, double best);

CandidateBatch propose_random(const SearchSpace& space, int k, std::uint64_t seed);

// Draws 24*k samples from the good density, clamps to the unit cube, keeps the
// top k by tpe_score (descending).
CandidateBatch propose_tpe(const SearchSpace& space, const TpeModel& m, int k,
                           std::uint64_t seed, Exec exec = Exec::parallel);

struct Selection {
  Config config;
  int index = -1;  // position within the batch
  PredictiveDistribution pred;
  double ei = 0.0;
};

using SurrogateFn = std::function<PredictiveDistribution(const Config&)>;

// Argmax of expected improvement over the batch, ties broken by lowest index.
// Uses batch.scores_est when present; otherwise calls `surrogate` per config
// (which must be thread-safe under Exec::parallel).
Selection select_next(const CandidateBatch& batch, const SurrogateFn& surrogate, double best,
                      Exec exec = Exec::parallel);

}  // namespace llambo
