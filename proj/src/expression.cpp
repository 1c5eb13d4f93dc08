#include "sd2/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "sd2/errors.hpp"
#include "sd2/tensor.hpp"

namespace sd2 {

struct Expression::Node {
  std::function<double(const ExprArgs&)> eval;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(std::function<double(const ExprArgs&)> f) {
  return std::make_shared<Expression::Node>(Expression::Node{std::move(f)});
}

const ExprArgs::Group& group(const ExprArgs& args, const std::string& name) {
  auto it = args.groups.find(name);
  if (it == args.groups.end()) throw ValidationError("expression: '" + name + "' is not available here");
  return it->second;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  std::set<std::string> used;

  NodePtr parse() {
    NodePtr n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("expression '" + s_ + "' at " + std::to_string(pos_) + ": " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr sum() {
    NodePtr lhs = product();
    while (true) {
      if (eat('+')) {
        NodePtr rhs = product();
        lhs = make([lhs, rhs](const ExprArgs& a) { return lhs->eval(a) + rhs->eval(a); });
      } else if (eat('-')) {
        NodePtr rhs = product();
        lhs = make([lhs, rhs](const ExprArgs& a) { return lhs->eval(a) - rhs->eval(a); });
      } else {
        return lhs;
      }
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    while (true) {
      if (eat('*')) {
        NodePtr rhs = unary();
        lhs = make([lhs, rhs](const ExprArgs& a) { return lhs->eval(a) * rhs->eval(a); });
      } else if (eat('/')) {
        NodePtr rhs = unary();
        lhs = make([lhs, rhs](const ExprArgs& a) { return lhs->eval(a) / rhs->eval(a); });
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (eat('-')) {
      NodePtr x = unary();
      return make([x](const ExprArgs& a) { return -x->eval(a); });
    }
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) {
      NodePtr ex = unary();  // right associative
      return make([base, ex](const ExprArgs& a) { return std::pow(base->eval(a), ex->eval(a)); });
    }
    return base;
  }

  std::string identifier() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  std::string digits() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = sum();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return make([v](const ExprArgs&) { return v; });
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
    const std::string name = identifier();
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') return call(name);
    const std::string idx = digits();
    return variable(name, idx);
  }

  NodePtr call(const std::string& name) {
    expect('(');
    if (name == "norm" || name == "dot") {
      const std::string g1 = identifier();
      std::string g2;
      if (name == "dot") {
        expect(',');
        g2 = identifier();
      }
      expect(')');
      check_group(g1);
      if (name == "norm")
        return make([g1](const ExprArgs& a) { return norm(group(a, g1).data); });
      check_group(g2);
      return make([g1, g2](const ExprArgs& a) {
        const auto& x = group(a, g1);
        const auto& y = group(a, g2);
        if (x.data.size() != y.data.size()) throw ValidationError("expression: dot of differently sized groups");
        return dot(x.data, y.data);
      });
    }
    std::vector<NodePtr> args{sum()};
    while (eat(',')) args.push_back(sum());
    expect(')');
    auto unary_fn = [&](double (*f)(double)) {
      if (args.size() != 1) fail(name + " takes one argument");
      NodePtr x = args[0];
      return make([x, f](const ExprArgs& a) { return f(x->eval(a)); });
    };
    if (name == "abs") return unary_fn([](double v) { return std::abs(v); });
    if (name == "sqrt") return unary_fn([](double v) { return std::sqrt(v); });
    if (name == "sin") return unary_fn([](double v) { return std::sin(v); });
    if (name == "cos") return unary_fn([](double v) { return std::cos(v); });
    if (name == "exp") return unary_fn([](double v) { return std::exp(v); });
    if (name == "min" || name == "max") {
      if (args.size() < 2) fail(name + " takes at least two arguments");
      const bool is_min = name == "min";
      return make([args, is_min](const ExprArgs& a) {
        double r = args[0]->eval(a);
        for (std::size_t i = 1; i < args.size(); ++i) {
          const double v = args[i]->eval(a);
          r = is_min ? std::min(r, v) : std::max(r, v);
        }
        return r;
      });
    }
    fail("unknown function '" + name + "'");
  }

  void check_group(const std::string& g) {
    static const char* known[] = {"x", "A", "M", "lam", "Lam", "nu"};
    for (const char* k : known)
      if (g == k) {
        used.insert(g);
        return;
      }
    fail("unknown argument group '" + g + "'");
  }

  NodePtr variable(const std::string& name, const std::string& idx) {
    if (name == "pi" && idx.empty()) return make([](const ExprArgs&) { return M_PI; });
    check_group(name);
    if (idx.empty()) fail("variable '" + name + "' needs 1-based indices, e.g. " + name + "1");
    std::vector<int> ix;
    for (char ch : idx) {
      if (ch == '0') fail("indices are 1-based");
      ix.push_back(ch - '1');
    }
    return make([name, ix](const ExprArgs& a) {
      const auto& g = group(a, name);
      if (g.shape.size() != ix.size())
        throw ValidationError("expression: '" + name + "' needs " + std::to_string(g.shape.size()) + " indices");
      std::size_t off = 0;
      for (std::size_t k = 0; k < ix.size(); ++k) {
        if (ix[k] >= g.shape[k]) throw ValidationError("expression: index out of range for '" + name + "'");
        off = off * g.shape[k] + ix[k];
      }
      return g.data[off];
    });
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& source) : source_(source) {
  Parser p(source_);
  root_ = p.parse();
  groups_ = std::move(p.used);
}

double Expression::operator()(const ExprArgs& args) const {
  if (!root_) throw ValidationError("empty expression");
  return root_->eval(args);
}

}  // namespace sd2
