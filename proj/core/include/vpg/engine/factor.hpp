#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpg/diff/tape.hpp"

namespace vpg::engine {

/// Table over the joint assignments of `scope`, row-major with the last
/// variable varying fastest. Entries index into each variable's support.
struct Factor {
  std::vector<std::string> scope;
  std::vector<std::size_t> cards;
  std::vector<diff::Scalar> table;

  std::size_t entries() const;
  /// Throws InternalError if the table does not cover the cross-product.
  void check() const;
};

/// Product of `factors`, laid out over `out_scope`, with `summed` (if given)
/// marginalized out. The union of the input scopes must equal out_scope plus
/// `summed`. Throws SupportExplosion if the work exceeds `cap` entries.
Factor product(std::span<const Factor* const> factors, const std::vector<std::string>& out_scope,
               const std::optional<std::string>& summed, std::size_t cap);

/// Greedy min-degree order over the variables outside `keep`; ties broken by
/// name.
std::vector<std::string> elimination_order(std::span<const Factor> factors, const std::vector<std::string>& keep);

/// Sums out `order` one variable at a time, then multiplies what is left into
/// one factor over `keep`.
Factor eliminate(std::vector<Factor> factors, const std::vector<std::string>& order,
                 const std::vector<std::string>& keep, std::size_t cap);

}  // namespace vpg::engine
