#include "coco/fuzzy.hpp"

#include <algorithm>

#include "coco/errors.hpp"

namespace coco {

FuzzyFormula FuzzyFormula::variable(uint32_t index) {
  FuzzyFormula f;
  f.kind = Kind::Var;
  f.var = index;
  return f;
}

FuzzyFormula FuzzyFormula::negation(FuzzyFormula inner) {
  FuzzyFormula f;
  f.kind = Kind::Not;
  f.children.push_back(std::move(inner));
  return f;
}

FuzzyFormula FuzzyFormula::conjunction(std::vector<FuzzyFormula> fs) {
  FuzzyFormula f;
  f.kind = Kind::And;
  f.children = std::move(fs);
  return f;
}

FuzzyFormula FuzzyFormula::disjunction(std::vector<FuzzyFormula> fs) {
  FuzzyFormula f;
  f.kind = Kind::Or;
  f.children = std::move(fs);
  return f;
}

double t_norm(FuzzyFamily family, double a, double b) {
  switch (family) {
    case FuzzyFamily::Godel: return std::min(a, b);
    case FuzzyFamily::Product: return a * b;
    case FuzzyFamily::Lukasiewicz: return std::max(a + b - 1.0, 0.0);
  }
  return 0.0;
}

double t_conorm(FuzzyFamily family, double a, double b) {
  switch (family) {
    case FuzzyFamily::Godel: return std::max(a, b);
    case FuzzyFamily::Product: return a + b - a * b;
    case FuzzyFamily::Lukasiewicz: return std::min(a + b, 1.0);
  }
  return 0.0;
}

double fuzzy_negation(FuzzyFamily family, double a) {
  if (family == FuzzyFamily::Godel) return a == 0.0 ? 1.0 : 0.0;
  return 1.0 - a;
}

double fuzzy_satisfaction(std::span<const double> truth_values,
                          const FuzzyFormula& formula, FuzzyFamily family) {
  switch (formula.kind) {
    case FuzzyFormula::Kind::Var: {
      if (formula.var >= truth_values.size())
        throw Error("fuzzy formula references an unbound variable");
      double v = truth_values[formula.var];
      if (!(v >= 0.0 && v <= 1.0)) throw Error("fuzzy truth value outside [0, 1]");
      return v;
    }
    case FuzzyFormula::Kind::Not:
      return fuzzy_negation(family,
                            fuzzy_satisfaction(truth_values, formula.children[0], family));
    case FuzzyFormula::Kind::And: {
      if (formula.children.empty()) return 1.0;
      double acc = fuzzy_satisfaction(truth_values, formula.children[0], family);
      for (size_t i = 1; i < formula.children.size(); ++i)
        acc = t_norm(family, acc,
                     fuzzy_satisfaction(truth_values, formula.children[i], family));
      return acc;
    }
    case FuzzyFormula::Kind::Or: {
      if (formula.children.empty()) return 0.0;
      double acc = fuzzy_satisfaction(truth_values, formula.children[0], family);
      for (size_t i = 1; i < formula.children.size(); ++i)
        acc = t_conorm(family, acc,
                       fuzzy_satisfaction(truth_values, formula.children[i], family));
      return acc;
    }
  }
  return 0.0;
}

}  // namespace coco
