#pragma once

// Finite abelian diagonal subgroups of U(n).
//
// An element is stored as its vector of rotation numbers: the diagonal entry
// in coordinate j is e^{2 pi i rot_j}. Rotation numbers are exact reduced
// fractions, so whether a character is trivial is decided exactly and
// complex exponentials appear only at the very end.

#include "orbk/error.hpp"
#include "orbk/numeric.hpp"

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace orbk {

/// One cyclic generator: coordinate j rotates by weights[j] / order.
struct CyclicGenerator {
  int order = 1;
  std::vector<int> weights;
};

struct MonomialExponent {
  std::vector<int> powers;

  int degree() const { return std::accumulate(powers.begin(), powers.end(), 0); }
  int weighted_degree(std::span<const int> weights) const {
    int d = 0;
    for (std::size_t j = 0; j < powers.size(); ++j) d += weights[j] * powers[j];
    return d;
  }
  friend auto operator<=>(const MonomialExponent&, const MonomialExponent&) = default;
};

class GroupAction {
 public:
  using Element = std::vector<Phase>;

  /// Trivial group acting on C^dim.
  static GroupAction trivial(int dim) { return product(dim, {}); }

  static GroupAction cyclic(int order, std::vector<int> weights) {
    const int dim = static_cast<int>(weights.size());
    return product(dim, {CyclicGenerator{order, std::move(weights)}});
  }

  /// Group generated by the given commuting diagonal generators. Elements are
  /// enumerated breadth first from the identity, so for a single cyclic
  /// generator element k is g^k.
  static GroupAction product(int dim, std::vector<CyclicGenerator> generators) {
    if (dim <= 0) throw InvalidArgument("group dimension must be positive");
    GroupAction g;
    g.dim_ = dim;
    for (const auto& gen : generators) {
      if (gen.order <= 0) throw InvalidArgument("generator order must be positive");
      if (static_cast<int>(gen.weights.size()) != dim) {
        throw InvalidArgument("generator weight count does not match dimension");
      }
      Element e;
      e.reserve(gen.weights.size());
      for (int w : gen.weights) e.emplace_back(w, gen.order);
      g.generator_elements_.push_back(std::move(e));
    }
    g.generators_ = std::move(generators);
    g.enumerate();
    return g;
  }

  int dim() const { return dim_; }
  int order() const { return static_cast<int>(elements_.size()); }
  const std::vector<CyclicGenerator>& generators() const { return generators_; }
  const Element& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
  const std::vector<Element>& elements() const { return elements_; }
  bool is_trivial() const { return elements_.size() == 1; }

  int index_of(const Element& e) const {
    const auto it = lookup_.find(e);
    if (it == lookup_.end()) throw InvalidArgument("element not in group");
    return it->second;
  }

  int compose(int a, int b) const { return index_of(add(element(a), element(b))); }

  int inverse(int a) const {
    Element e = element(a);
    for (auto& p : e) p = -p;
    return index_of(e);
  }

  /// Diagonal entry j of element i.
  cplx eigenvalue(int i, int j) const {
    return element(i).at(static_cast<std::size_t>(j)).unit_root();
  }

  /// True when element i != identity fixes a nonzero vector.
  bool has_fixed_vector(int i) const {
    const auto& e = element(i);
    return std::any_of(e.begin(), e.end(), [](const Phase& p) { return p.is_zero(); });
  }

  /// True when every non-identity element acts without fixed nonzero vectors.
  bool is_isolated() const {
    for (int i = 1; i < order(); ++i) {
      if (has_fixed_vector(i)) return false;
    }
    return true;
  }

  /// Same group with every rotation negated (g -> g^{-1} elementwise).
  GroupAction inverse_action() const {
    std::vector<CyclicGenerator> gens = generators_;
    for (auto& g : gens) {
      for (auto& w : g.weights) w = -w;
    }
    return product(dim_, std::move(gens));
  }

  /// Exact phase sum_j alpha_j rot_j(g) mod 1.
  Phase character_phase(int g, const MonomialExponent& alpha) const {
    check_alpha(alpha);
    Phase total;
    const auto& e = element(g);
    for (std::size_t j = 0; j < e.size(); ++j) total = total + e[j].scaled(alpha.powers[j]);
    return total;
  }

  /// Exact triviality of the character alpha, decided on the generators.
  bool is_invariant(const MonomialExponent& alpha) const {
    check_alpha(alpha);
    for (const auto& gen : generator_elements_) {
      Phase total;
      for (std::size_t j = 0; j < gen.size(); ++j) total = total + gen[j].scaled(alpha.powers[j]);
      if (!total.is_zero()) return false;
    }
    return true;
  }

 private:
  static Element add(const Element& a, const Element& b) {
    Element out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + b[j];
    return out;
  }

  void check_alpha(const MonomialExponent& alpha) const {
    if (static_cast<int>(alpha.powers.size()) != dim_) {
      throw InvalidArgument("exponent length does not match group dimension");
    }
  }

  void enumerate() {
    elements_.clear();
    lookup_.clear();
    Element identity(static_cast<std::size_t>(dim_));
    elements_.push_back(identity);
    lookup_.emplace(identity, 0);
    for (std::size_t head = 0; head < elements_.size(); ++head) {
      for (const auto& gen : generator_elements_) {
        Element next = add(elements_[head], gen);
        if (lookup_.find(next) == lookup_.end()) {
          lookup_.emplace(next, static_cast<int>(elements_.size()));
          elements_.push_back(std::move(next));
        }
      }
    }
  }

  int dim_ = 0;
  std::vector<CyclicGenerator> generators_;
  std::vector<Element> generator_elements_;
  std::vector<Element> elements_;
  std::map<Element, int> lookup_;
};

/// alpha(g) = exp(2 pi i sum_j alpha_j rot_j(g)).
inline cplx character_value(const GroupAction& action, int g, const MonomialExponent& alpha) {
  if (g < 0 || g >= action.order()) throw InvalidArgument("element index out of range");
  return action.character_phase(g, alpha).unit_root();
}

struct CharacterSum {
  cplx value;
  bool invariant = false;
};

/// Sum over the group of alpha(g), together with the exactly decided
/// invariance flag. The two must agree: |G| for invariant alpha, 0 otherwise.
inline CharacterSum character_sum(const GroupAction& action, const MonomialExponent& alpha) {
  CompensatedComplexSum acc;
  for (int g = 0; g < action.order(); ++g) acc += character_value(action, g, alpha);
  CharacterSum out{acc.value(), action.is_invariant(alpha)};
  const double expected = out.invariant ? static_cast<double>(action.order()) : 0.0;
  if (std::abs(out.value - expected) > 1e-10) {
    throw NumericalError("character sum disagrees with exact invariance decision");
  }
  return out;
}

/// Which monomials count as having degree d.
struct DegreeRule {
  enum class Kind { plain, weighted };
  Kind kind = Kind::plain;
  std::vector<int> weights;

  static DegreeRule plain() { return {}; }
  static DegreeRule weighted(std::vector<int> w) { return {Kind::weighted, std::move(w)}; }
};

inline constexpr int kMaxEnumerationDegree = 10'000;
inline constexpr std::size_t kMaxEnumerationCount = 1'000'000;

namespace detail {

template <typename Visit>
void enumerate_degree(std::vector<int>& powers, std::size_t j, int remaining,
                      std::span<const int> weights, Visit& visit) {
  if (j + 1 == powers.size()) {
    if (remaining % weights[j] == 0) {
      powers[j] = remaining / weights[j];
      visit(powers);
    }
    return;
  }
  for (int a = 0; a * weights[j] <= remaining; ++a) {
    powers[j] = a;
    enumerate_degree(powers, j + 1, remaining - a * weights[j], weights, visit);
  }
}

}  // namespace detail

/// All monomials of the given degree fixed by every element, in
/// lexicographic order.
inline std::vector<MonomialExponent> invariant_monomials(const GroupAction& action, int total_degree,
                                                         const DegreeRule& rule = DegreeRule::plain()) {
  if (total_degree < 0) throw InvalidArgument("degree must be non-negative");
  if (total_degree > kMaxEnumerationDegree) throw InvalidArgument("degree exceeds enumeration bound");
  std::vector<int> weights(static_cast<std::size_t>(action.dim()), 1);
  if (rule.kind == DegreeRule::Kind::weighted) {
    if (static_cast<int>(rule.weights.size()) != action.dim()) {
      throw InvalidArgument("degree rule weights do not match model dimension");
    }
    if (std::any_of(rule.weights.begin(), rule.weights.end(), [](int w) { return w <= 0; })) {
      throw InvalidArgument("degree weights must be positive");
    }
    weights = rule.weights;
  }
  std::vector<MonomialExponent> out;
  std::vector<int> powers(weights.size(), 0);
  auto visit = [&](const std::vector<int>& p) {
    MonomialExponent alpha{p};
    if (action.is_invariant(alpha)) {
      if (out.size() >= kMaxEnumerationCount) throw InvalidArgument("monomial count exceeds bound");
      out.push_back(std::move(alpha));
    }
  };
  detail::enumerate_degree(powers, 0, total_degree, weights, visit);
  return out;
}

}  // namespace orbk
