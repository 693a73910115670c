#include "vpg/engine/factor.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vpg/util/error.hpp"

namespace vpg::engine {
namespace {

std::size_t position(const std::vector<std::string>& scope, const std::string& v) {
  return static_cast<std::size_t>(std::find(scope.begin(), scope.end(), v) - scope.begin());
}

}  // namespace

std::size_t Factor::entries() const {
  std::size_t n = 1;
  for (auto c : cards) n *= c;
  return n;
}

void Factor::check() const {
  if (scope.size() != cards.size() || table.size() != entries()) {
    throw Error(ErrorCode::InternalError, "factor table does not match its scope");
  }
}

Factor product(std::span<const Factor* const> factors, const std::vector<std::string>& out_scope,
               const std::optional<std::string>& summed, std::size_t cap) {
  std::map<std::string, std::size_t> card;
  for (const Factor* f : factors) {
    for (std::size_t i = 0; i < f->scope.size(); ++i) {
      auto [it, fresh] = card.emplace(f->scope[i], f->cards[i]);
      if (!fresh && it->second != f->cards[i]) {
        throw Error(ErrorCode::InternalError, "variable " + f->scope[i] + " has inconsistent cardinality");
      }
    }
  }
  // Full scope: out_scope then the summed variable last.
  std::vector<std::string> full = out_scope;
  if (summed) full.push_back(*summed);
  if (card.size() != full.size()) throw Error(ErrorCode::InternalError, "product scope mismatch");
  std::vector<std::size_t> full_cards;
  for (const auto& v : full) {
    auto it = card.find(v);
    if (it == card.end()) throw Error(ErrorCode::InternalError, "product scope mismatch on " + v);
    full_cards.push_back(it->second);
  }

  Factor out;
  out.scope = out_scope;
  out.cards.assign(full_cards.begin(), full_cards.begin() + static_cast<std::ptrdiff_t>(out_scope.size()));
  const std::size_t out_entries = out.entries();
  const std::size_t inner = summed ? full_cards.back() : 1;
  if (out_entries > cap || out_entries * inner > cap * 16) {
    throw Error(ErrorCode::SupportExplosion, "factor over " + std::to_string(full.size()) + " variables needs " +
                                                 std::to_string(out_entries) + " entries (cap " + std::to_string(cap) +
                                                 ")");
  }

  // Stride of each full-scope position inside each input factor.
  std::vector<std::vector<std::size_t>> strides(factors.size(), std::vector<std::size_t>(full.size(), 0));
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const Factor& f = *factors[k];
    std::size_t stride = 1;
    for (std::size_t i = f.scope.size(); i-- > 0;) {
      strides[k][position(full, f.scope[i])] = stride;
      stride *= f.cards[i];
    }
  }

  out.table.reserve(out_entries);
  std::vector<std::size_t> assign(full.size(), 0);
  std::vector<diff::Scalar> terms;
  for (std::size_t e = 0; e < out_entries; ++e) {
    std::size_t rest = e;
    for (std::size_t i = out_scope.size(); i-- > 0;) {
      assign[i] = rest % full_cards[i];
      rest /= full_cards[i];
    }
    terms.clear();
    for (std::size_t x = 0; x < inner; ++x) {
      if (summed) assign.back() = x;
      diff::Scalar term(1.0);
      bool zero = false;
      for (std::size_t k = 0; k < factors.size() && !zero; ++k) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < full.size(); ++i) idx += assign[i] * strides[k][i];
        const diff::Scalar& v = factors[k]->table[idx];
        if (diff::is_constant_value(v, 0.0)) {
          zero = true;
        } else {
          term = term * v;
        }
      }
      if (!zero) terms.push_back(term);
    }
    out.table.push_back(diff::sum(terms));
  }
  return out;
}

std::vector<std::string> elimination_order(std::span<const Factor> factors, const std::vector<std::string>& keep) {
  std::vector<std::set<std::string>> scopes;
  std::set<std::string> pending;
  for (const auto& f : factors) {
    scopes.emplace_back(f.scope.begin(), f.scope.end());
    for (const auto& v : f.scope) {
      if (std::find(keep.begin(), keep.end(), v) == keep.end()) pending.insert(v);
    }
  }
  std::vector<std::string> order;
  while (!pending.empty()) {
    std::string best;
    std::size_t best_degree = 0;
    for (const auto& v : pending) {  // std::set iterates in name order
      std::set<std::string> neighbours;
      for (const auto& s : scopes) {
        if (s.count(v)) neighbours.insert(s.begin(), s.end());
      }
      const std::size_t degree = neighbours.size() - 1;
      if (best.empty() || degree < best_degree) {
        best = v;
        best_degree = degree;
      }
    }
    std::set<std::string> merged;
    std::vector<std::set<std::string>> rest;
    for (auto& s : scopes) {
      if (s.count(best)) {
        merged.insert(s.begin(), s.end());
      } else {
        rest.push_back(std::move(s));
      }
    }
    merged.erase(best);
    rest.push_back(std::move(merged));
    scopes = std::move(rest);
    pending.erase(best);
    order.push_back(best);
  }
  return order;
}

Factor eliminate(std::vector<Factor> factors, const std::vector<std::string>& order,
                 const std::vector<std::string>& keep, std::size_t cap) {
  for (const auto& var : order) {
    std::vector<const Factor*> involved;
    std::vector<Factor> rest;
    std::vector<std::string> scope;
    for (const auto& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), var) != f.scope.end()) {
        involved.push_back(&f);
        for (const auto& v : f.scope) {
          if (v != var && std::find(scope.begin(), scope.end(), v) == scope.end()) scope.push_back(v);
        }
      }
    }
    if (involved.empty()) continue;
    Factor merged = product(involved, scope, var, cap);
    for (auto& f : factors) {
      if (std::find(f.scope.begin(), f.scope.end(), var) == f.scope.end()) rest.push_back(std::move(f));
    }
    rest.push_back(std::move(merged));
    factors = std::move(rest);
  }
  std::vector<const Factor*> all;
  for (const auto& f : factors) {
    for (const auto& v : f.scope) {
      if (std::find(keep.begin(), keep.end(), v) == keep.end()) {
        throw Error(ErrorCode::InternalError, "variable " + v + " was not eliminated");
      }
    }
    all.push_back(&f);
  }
  // Variables of `keep` that appear in no factor cannot be laid out.
  std::vector<std::string> scope;
  for (const auto& v : keep) {
    for (const Factor* f : all) {
      if (std::find(f->scope.begin(), f->scope.end(), v) != f->scope.end()) {
        scope.push_back(v);
        break;
      }
    }
  }
  if (scope.size() != keep.size()) throw Error(ErrorCode::InternalError, "query variable has no factor");
  return product(all, scope, std::nullopt, cap);
}

}  // namespace vpg::engine
