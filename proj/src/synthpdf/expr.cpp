#include "dde/synthpdf/expr.hpp"

#include "dde/error.hpp"

#include <limits>
#include <map>
#include <string>

namespace dde::synthpdf {
namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

Op
draw_op(Rng& rng, const ComposeRules& rules)
{
  if (rules.force_op)
    return *rules.force_op;
  if (rules.add_only)
    return Op::add;
  return std::bernoulli_distribution(0.5)(rng) ? Op::multiply : Op::add;
}

std::string_view
op_name(Op op)
{
  return op == Op::add ? "add" : "multiply";
}

} // namespace

FunctionExpr
FunctionExpr::leaf(const BaseFunctionSpec& spec,
                   std::size_t axis,
                   std::size_t dim)
{
  if (axis >= dim)
    throw InvalidConfig("leaf axis " + std::to_string(axis) +
                        " outside dimension " + std::to_string(dim));
  FunctionExpr e;
  e.dim_ = dim;
  Node n;
  n.kind = Node::Kind::leaf;
  n.spec = spec;
  n.axis = axis;
  e.nodes_.push_back(n);
  return e;
}

std::size_t
FunctionExpr::append(const FunctionExpr& other)
{
  const std::size_t base = nodes_.size();
  for (Node n : other.nodes_) {
    if (n.kind == Node::Kind::combine) {
      n.left += base;
      n.right += base;
    }
    nodes_.push_back(n);
  }
  return nodes_.size() - 1;
}

FunctionExpr
FunctionExpr::combine(Op op, const FunctionExpr& left, const FunctionExpr& right)
{
  if (left.empty() || right.empty())
    throw InvalidConfig("cannot combine an empty expression");
  if (left.dim_ != right.dim_)
    throw ShapeMismatch("combining expressions of different dimension");
  FunctionExpr e;
  e.dim_ = left.dim_;
  e.nodes_.reserve(left.nodes_.size() + right.nodes_.size() + 1);
  Node n;
  n.kind = Node::Kind::combine;
  n.op = op;
  n.left = e.append(left);
  n.right = e.append(right);
  e.nodes_.push_back(n);
  return e;
}

std::size_t
FunctionExpr::leaf_count() const
{
  std::size_t c = 0;
  for (const auto& n : nodes_)
    c += n.kind == Node::Kind::leaf;
  return c;
}

std::size_t
FunctionExpr::combine_count() const
{
  return nodes_.size() - leaf_count();
}

std::vector<const FunctionExpr::Node*>
FunctionExpr::leaves() const
{
  std::vector<const Node*> out;
  for (const auto& n : nodes_)
    if (n.kind == Node::Kind::leaf)
      out.push_back(&n);
  return out;
}

double
FunctionExpr::operator()(std::span<const double> x) const
{
  // Post-order storage: a single forward sweep evaluates every node after
  // its children. Small trees fit the stack buffer.
  constexpr std::size_t inline_nodes = 64;
  double stack_buf[inline_nodes];
  std::vector<double> heap_buf;
  double* val = stack_buf;
  if (nodes_.size() > inline_nodes) {
    heap_buf.resize(nodes_.size());
    val = heap_buf.data();
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == Node::Kind::leaf)
      val[i] = eval_base(n.spec, x[n.axis]);
    else if (n.op == Op::add)
      val[i] = val[n.left] + val[n.right];
    else
      val[i] = val[n.left] * val[n.right];
  }
  return nodes_.empty() ? 0.0 : val[nodes_.size() - 1];
}

std::size_t
FunctionExpr::single_axis(std::size_t node) const
{
  const Node& n = nodes_[node];
  if (n.kind == Node::Kind::leaf)
    return n.axis;
  const std::size_t l = single_axis(n.left);
  const std::size_t r = single_axis(n.right);
  return (l != npos && l == r) ? l : npos;
}

void
FunctionExpr::collect_product_factors(std::size_t node,
                                      std::vector<std::size_t>& out) const
{
  const Node& n = nodes_[node];
  if (n.kind == Node::Kind::combine && n.op == Op::multiply) {
    collect_product_factors(n.left, out);
    collect_product_factors(n.right, out);
  } else {
    out.push_back(node);
  }
}

FunctionExpr
FunctionExpr::subtree(std::size_t node) const
{
  const Node& n = nodes_[node];
  if (n.kind == Node::Kind::leaf)
    return leaf(n.spec, n.axis, dim_);
  return combine(n.op, subtree(n.left), subtree(n.right));
}

std::vector<std::pair<std::size_t, FunctionExpr>>
FunctionExpr::axis_factors() const
{
  if (nodes_.empty())
    return {};
  std::vector<std::size_t> factors;
  collect_product_factors(nodes_.size() - 1, factors);
  std::map<std::size_t, FunctionExpr> by_axis;
  for (std::size_t f : factors) {
    const std::size_t axis = single_axis(f);
    if (axis == npos)
      return {};
    auto sub = subtree(f);
    auto it = by_axis.find(axis);
    if (it == by_axis.end())
      by_axis.emplace(axis, std::move(sub));
    else
      it->second = combine(Op::multiply, it->second, sub);
  }
  return { by_axis.begin(), by_axis.end() };
}

FunctionExpr
FunctionExpr::as_1d() const
{
  FunctionExpr e = *this;
  e.dim_ = 1;
  for (auto& n : e.nodes_)
    n.axis = 0;
  return e;
}

nlohmann::json
FunctionExpr::to_json() const
{
  auto node_json = [this](auto&& self, std::size_t i) -> nlohmann::json {
    const Node& n = nodes_[i];
    if (n.kind == Node::Kind::leaf) {
      return { { "node", "leaf" },
               { "kind", kind_name(n.spec.kind) },
               { "r", n.spec.r },
               { "s", n.spec.s },
               { "alpha_variant", n.spec.alpha_variant },
               { "mu_sigma_variant", n.spec.mu_sigma_variant },
               { "axis", n.axis } };
    }
    return { { "node", "combine" },
             { "op", op_name(n.op) },
             { "children",
               nlohmann::json::array({ self(self, n.left),
                                       self(self, n.right) }) } };
  };
  nlohmann::json j{ { "dim", dim_ } };
  j["root"] = nodes_.empty() ? nlohmann::json() : node_json(node_json, nodes_.size() - 1);
  return j;
}

FunctionExpr
FunctionExpr::from_json(const nlohmann::json& j)
{
  const std::size_t dim = j.at("dim").get<std::size_t>();
  auto parse = [dim](auto&& self, const nlohmann::json& n) -> FunctionExpr {
    const auto node = n.at("node").get<std::string>();
    if (node == "leaf") {
      BaseFunctionSpec spec;
      const auto kind = kind_from_name(n.at("kind").get<std::string>());
      if (!kind)
        throw FormatError("unknown base function kind " +
                          n.at("kind").get<std::string>());
      spec.kind = *kind;
      spec.r = n.at("r").get<double>();
      spec.s = n.at("s").get<double>();
      spec.alpha_variant = n.at("alpha_variant").get<std::uint8_t>();
      spec.mu_sigma_variant = n.at("mu_sigma_variant").get<std::uint8_t>();
      return leaf(spec, n.at("axis").get<std::size_t>(), dim);
    }
    if (node != "combine")
      throw FormatError("unknown expression node '" + node + "'");
    const auto op_str = n.at("op").get<std::string>();
    if (op_str != "add" && op_str != "multiply")
      throw FormatError("unknown operator '" + op_str + "'");
    const auto& ch = n.at("children");
    if (!ch.is_array() || ch.size() != 2)
      throw FormatError("combine node needs two children");
    return combine(op_str == "add" ? Op::add : Op::multiply,
                   self(self, ch[0]),
                   self(self, ch[1]));
  };
  try {
    return parse(parse, j.at("root"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed expression: ") + e.what());
  }
}

FunctionExpr
compose_1d(Rng& rng,
           std::size_t n_c,
           double s,
           const ComposeRules& rules,
           std::size_t axis,
           std::size_t dim)
{
  if (n_c < 2 || n_c > 7)
    throw InvalidConfig("n_c must lie in [2, 7], got " + std::to_string(n_c));
  auto draw_leaf = [&] {
    return FunctionExpr::leaf(
      sample_base_function(rng, s, rules.filter, rules.min_base_max), axis, dim);
  };
  FunctionExpr e = draw_leaf();
  for (std::size_t i = 1; i < n_c; ++i) {
    const Op op = draw_op(rng, rules);
    e = FunctionExpr::combine(op, e, draw_leaf());
  }
  return e;
}

FunctionExpr
compose_highdim(Rng& rng,
                std::span<const double> extents,
                std::size_t n_c,
                Scheme scheme,
                const ComposeRules& rules)
{
  const std::size_t d = extents.size();
  if (d == 0)
    throw InvalidConfig("dimension must be positive");
  if (n_c < 2 || n_c > 7)
    throw InvalidConfig("n_c must lie in [2, 7], got " + std::to_string(n_c));
  if (d == 1)
    return compose_1d(rng, n_c, extents[0], rules, 0, 1);

  if (scheme == Scheme::per_axis_then_combine) {
    FunctionExpr e = compose_1d(rng, n_c, extents[0], rules, 0, d);
    for (std::size_t a = 1; a < d; ++a) {
      const Op op = draw_op(rng, rules);
      e = FunctionExpr::combine(op, e, compose_1d(rng, n_c, extents[a], rules, a, d));
    }
    return e;
  }

  auto term = [&] {
    FunctionExpr t = FunctionExpr::leaf(
      sample_base_function(rng, extents[0], rules.filter, rules.min_base_max), 0, d);
    for (std::size_t a = 1; a < d; ++a) {
      const Op op = draw_op(rng, rules);
      t = FunctionExpr::combine(
        op,
        t,
        FunctionExpr::leaf(sample_base_function(rng, extents[a], rules.filter,
                                                rules.min_base_max),
                           a,
                           d));
    }
    return t;
  };
  FunctionExpr e = term();
  for (std::size_t i = 1; i < n_c; ++i) {
    const Op op = draw_op(rng, rules);
    e = FunctionExpr::combine(op, e, term());
  }
  return e;
}

} // namespace dde::synthpdf
