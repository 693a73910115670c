#pragma once

#include <cstdint>
#include <vector>

#include "vpg/synth/generator.hpp"

namespace vpg::train {

/// Copies `cases` with floor(fraction * N) programs each given one random
/// edit: an object name or question literal swapped for another in-vocabulary
/// one, or a CROP variant replaced by a different variant. Every edit is
/// re-parsed and executed before it is kept; labels are left as they were.
/// Indices of the edited cases go to `disrupted` when given. ConfigError
/// unless fraction is in [0, 1].
std::vector<synth::CaseRecord> disrupt_programs(const std::vector<synth::CaseRecord>& cases, double fraction,
                                                std::uint64_t seed, std::vector<std::size_t>* disrupted = nullptr);

}  // namespace vpg::train
