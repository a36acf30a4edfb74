#pragma once

#include "dde/synthpdf/base_function.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dde::synthpdf {

enum class Op : std::uint8_t
{
  add,
  multiply
};

/// Binary expression tree over axis-bound base functions: the unnormalized
/// synthetic density on a d-dimensional box.
///
/// Nodes live in one vector in post-order (children before parents), the
/// root last. Copying an expression is a plain vector copy.
class FunctionExpr
{
public:
  struct Node
  {
    enum class Kind : std::uint8_t
    {
      leaf,
      combine
    };
    Kind kind = Kind::leaf;
    Op op = Op::add;
    BaseFunctionSpec spec{};
    std::size_t axis = 0;
    std::size_t left = 0;
    std::size_t right = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  FunctionExpr() = default;

  static FunctionExpr leaf(const BaseFunctionSpec& spec,
                           std::size_t axis,
                           std::size_t dim);
  static FunctionExpr combine(Op op,
                              const FunctionExpr& left,
                              const FunctionExpr& right);

  std::size_t dim() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  std::size_t leaf_count() const;
  std::size_t combine_count() const;
  std::vector<const Node*> leaves() const;

  /// Evaluates at a point with dim() coordinates in the original domain.
  double operator()(std::span<const double> x) const;
  double operator()(double x) const { return (*this)(std::span(&x, 1)); }

  /// Factors of the root product when every factor depends on one axis,
  /// grouped per axis. Empty result means the expression is not separable
  /// that way. Axes without a factor are absent.
  std::vector<std::pair<std::size_t, FunctionExpr>> axis_factors() const;

  /// Restriction of a single-axis expression to a 1D expression on axis 0.
  FunctionExpr as_1d() const;

  nlohmann::json to_json() const;
  static FunctionExpr from_json(const nlohmann::json& j);

  friend bool operator==(const FunctionExpr&, const FunctionExpr&) = default;

private:
  std::size_t append(const FunctionExpr& other);
  // Axis of a single-axis subtree, or npos when it spans several axes.
  std::size_t single_axis(std::size_t node) const;
  void collect_product_factors(std::size_t node,
                               std::vector<std::size_t>& out) const;
  FunctionExpr subtree(std::size_t node) const;

  std::size_t dim_ = 0;
  std::vector<Node> nodes_;
};

/// Operator set in force for one generation regime.
struct ComposeRules
{
  TagFilter filter;
  bool add_only = false;      // d >= 50 regime
  double min_base_max = 0;     // 0 disables the base-maximum floor
  std::optional<Op> force_op{}; // pins every join, for constructions
};

/// Left-deep chain of `n_c` fresh leaves on `axis`, joined by operators drawn
/// uniformly from {add, multiply} (add only when `rules.add_only`).
FunctionExpr
compose_1d(Rng& rng,
           std::size_t n_c,
           double s,
           const ComposeRules& rules,
           std::size_t axis = 0,
           std::size_t dim = 1);

enum class Scheme : std::uint8_t
{
  per_axis_then_combine,   // A
  build_d_dim_then_combine // B
};

/// d-dimensional composition. Scheme A joins d independent 1D chains (one per
/// axis, `n_c` leaves each); scheme B joins `n_c` terms, each a chain of one
/// leaf per axis. `extents[a]` is the domain upper bound of axis a.
FunctionExpr
compose_highdim(Rng& rng,
                std::span<const double> extents,
                std::size_t n_c,
                Scheme scheme,
                const ComposeRules& rules);

} // namespace dde::synthpdf
