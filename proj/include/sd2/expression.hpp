#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>

namespace sd2 {

/// Named tensor arguments an expression may read, e.g. {"A", data of A}.
/// Scalar variables address entries with 1-based digits: A12 is A(1,2),
/// M121 is M(1,2,1), x2 is the second coordinate.
struct ExprArgs {
  struct Group {
    std::span<const double> data;
    std::span<const int> shape;
  };
  std::map<std::string, Group, std::less<>> groups;
};

/// A parsed arithmetic expression over density inputs.
///
/// Grammar: sums and products with + - * / ^, unary minus, numbers,
/// variables (x1, A11, M111, lam1, Lam11, nu1), and the functions abs, sqrt,
/// sin, cos, exp, min, max, norm(G) and dot(G, H) where G and H name whole
/// argument groups (x, A, M, lam, Lam, nu).
class Expression {
 public:
  Expression() = default;
  explicit Expression(const std::string& source);

  double operator()(const ExprArgs& args) const;
  const std::string& source() const { return source_; }
  bool empty() const { return !root_; }
  /// True when the expression reads the argument group (e.g. "x").
  bool uses(const std::string& group) const { return groups_.count(group) > 0; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  std::set<std::string> groups_;
};

}  // namespace sd2
