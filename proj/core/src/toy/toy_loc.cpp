#include <algorithm>
#include <numeric>

#include "vpg/toy/toy_modules.hpp"
#include "vpg/util/error.hpp"

namespace vpg::toy {

void ToyLoc::register_params(diff::ParamStore& store) const {
  const std::size_t f = synth::Vocabulary::kFeatureSize;
  store.add(kQuery, {synth::Vocabulary::categories().size(), f});
  store.add(kShared, {f});
  store.add(kBias, {1});
}

std::vector<diff::Scalar> ToyLoc::scores(const synth::World& world, const Region& image, std::string_view object,
                                         diff::ParamBinding& params) const {
  const auto category = synth::Vocabulary::category_index(object);
  if (!category) throw Error(ErrorCode::OutOfVocabulary, "LOC: unknown object '" + std::string(object) + "'");
  const auto& store = params.store();
  const std::size_t query = store.index_of(kQuery);
  const std::size_t shared = store.index_of(kShared);
  const std::size_t bias = store.index_of(kBias);
  const std::size_t f = synth::Vocabulary::kFeatureSize;
  const auto& scene = world.scene(image.image);

  std::vector<diff::Scalar> out;
  std::vector<diff::ParamBinding::Term> terms;
  for (int r = image.row0; r < image.row1; ++r) {
    for (int c = image.col0; c < image.col1; ++c) {
      terms.clear();
      const auto x = synth::cell_features(scene, Cell{r, c});
      for (std::size_t j = 0; j < f; ++j) {
        if (x[j] == 0.0) continue;
        terms.push_back({query, *category * f + j, x[j]});
        terms.push_back({shared, j, x[j]});
      }
      terms.push_back({bias, 0, 1.0});
      out.push_back(params.linear(terms));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> pool_indices(const std::vector<diff::Scalar>& scores, const LocConfig& config) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].value() > scores[b].value(); });
  std::vector<std::size_t> pool;
  for (std::size_t i : order) {
    if (static_cast<int>(pool.size()) >= config.pool_size) break;
    if (scores[i].value() <= config.pool_threshold) break;
    pool.push_back(i);
  }
  return pool;
}

Cell cell_at(const Region& image, std::size_t i) {
  const int cols = image.cols();
  return Cell{image.row0 + static_cast<int>(i) / cols, image.col0 + static_cast<int>(i) % cols};
}

}  // namespace

std::vector<Cell> ToyLoc::pool(const synth::World& world, const Region& image, std::string_view object,
                               diff::ParamBinding& params) const {
  std::vector<Cell> out;
  for (std::size_t i : pool_indices(scores(world, image, object, params), config_)) out.push_back(cell_at(image, i));
  return out;
}

Categorical ToyLoc::locate(const synth::World& world, const Region& image, std::string_view object,
                           diff::ParamBinding& params) const {
  if (config_.pool_size < 0 || config_.pool_size > 10) {
    throw Error(ErrorCode::ConfigError, "LOC pool size must be within 0..10");
  }
  const auto s = scores(world, image, object, params);
  const auto pool = pool_indices(s, config_);
  std::vector<diff::Scalar> in, out;
  for (std::size_t i : pool) {
    in.push_back(diff::sigmoid(s[i]));
    out.push_back(diff::sigmoid(-s[i]));
  }
  std::vector<Value> support;
  std::vector<diff::Scalar> probs;
  const std::size_t outcomes = std::size_t{1} << pool.size();
  for (std::size_t mask = 0; mask < outcomes; ++mask) {
    Detection d{image.image, {}};
    diff::Scalar p(1.0);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (mask >> k & 1U) {
        d.boxes.push_back(cell_at(image, pool[k]));
        p = p * in[k];
      } else {
        p = p * out[k];
      }
    }
    support.emplace_back(std::move(d));
    probs.push_back(p);
  }
  return Categorical(std::move(support), std::move(probs));
}

}  // namespace vpg::toy
