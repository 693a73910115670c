#include <algorithm>
#include <map>

#include "vpg/toy/toy_modules.hpp"
#include "vpg/util/error.hpp"

namespace vpg::toy {
namespace {

std::size_t slot_word_index(std::string_view word) {
  std::size_t base = 0;
  for (const auto* vocab : {&synth::Vocabulary::categories(), &synth::Vocabulary::colors(),
                            &synth::Vocabulary::materials(), &synth::Vocabulary::activities()}) {
    auto it = std::find(vocab->begin(), vocab->end(), word);
    if (it != vocab->end()) return base + static_cast<std::size_t>(it - vocab->begin());
    base += vocab->size();
  }
  throw Error(ErrorCode::OutOfVocabulary, "unknown slot word '" + std::string(word) + "'");
}

}  // namespace

void ToyVqa::register_params(diff::ParamStore& store) const {
  for (const auto& t : templates_) store.add(tensor_name(t), {t.answers.size(), kInputSize});
}

std::vector<std::pair<std::size_t, double>> ToyVqa::input_vector(const synth::World& world, const Region& region,
                                                                  const ParsedQuestion& q) {
  const std::size_t f = synth::Vocabulary::kFeatureSize;
  const auto& scene = world.scene(region.image);
  std::vector<double> mean(f, 0.0);
  std::vector<double> focus(f, 0.0);
  for (int r = region.row0; r < region.row1; ++r) {
    for (int c = region.col0; c < region.col1; ++c) {
      const auto x = synth::cell_features(scene, Cell{r, c});
      for (std::size_t j = 0; j < f; ++j) mean[j] += x[j];
      const synth::Object* o = scene.at(Cell{r, c});
      if (o && o->category == q.object) {
        for (std::size_t j = 0; j < f; ++j) focus[j] += x[j];
      }
    }
  }
  const double cells = static_cast<double>(std::max(1, region.rows() * region.cols()));
  std::map<std::size_t, double> entries;
  for (std::size_t j = 0; j < f; ++j) {
    if (mean[j] != 0.0) entries[j] = mean[j] / cells;
  }
  std::vector<std::size_t> slots = {slot_word_index(q.object)};
  if (!q.attribute.empty()) slots.push_back(slot_word_index(q.attribute));
  for (std::size_t v : slots) {
    for (std::size_t j = 0; j < f; ++j) {
      if (focus[j] != 0.0) entries[f + v * f + j] += focus[j];
    }
  }
  entries[kInputSize - 1] = 1.0;
  return {entries.begin(), entries.end()};
}

Categorical ToyVqa::answer(const synth::World& world, const Region& region, std::string_view question,
                           diff::ParamBinding& params) const {
  const ParsedQuestion q = parse_question(question, templates_);
  const std::size_t tensor = params.store().index_of(tensor_name(*q.tmpl));
  const auto x = input_vector(world, region, q);
  std::vector<diff::Scalar> logits;
  std::vector<diff::ParamBinding::Term> terms;
  for (std::size_t k = 0; k < q.tmpl->answers.size(); ++k) {
    terms.clear();
    for (const auto& [j, v] : x) terms.push_back({tensor, k * kInputSize + j, v});
    logits.push_back(params.linear(terms));
  }
  return Categorical(q.tmpl->answers, diff::softmax(logits));
}

}  // namespace vpg::toy
