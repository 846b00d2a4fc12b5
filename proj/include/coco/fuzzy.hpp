#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace coco {

enum class FuzzyFamily { Godel, Product, Lukasiewicz };

// Propositional connective tree over indexed truth values in [0, 1].
struct FuzzyFormula {
  enum class Kind { Var, Not, And, Or };

  Kind kind = Kind::Var;
  uint32_t var = 0;
  std::vector<FuzzyFormula> children;

  static FuzzyFormula variable(uint32_t index);
  static FuzzyFormula negation(FuzzyFormula f);
  static FuzzyFormula conjunction(std::vector<FuzzyFormula> fs);
  static FuzzyFormula disjunction(std::vector<FuzzyFormula> fs);
};

// Recursive evaluation with the family's t-norm, t-conorm and negation.
double fuzzy_satisfaction(std::span<const double> truth_values,
                          const FuzzyFormula& formula, FuzzyFamily family);

double t_norm(FuzzyFamily family, double a, double b);
double t_conorm(FuzzyFamily family, double a, double b);
double fuzzy_negation(FuzzyFamily family, double a);

}  // namespace coco
