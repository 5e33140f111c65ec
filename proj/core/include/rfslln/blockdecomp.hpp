#pragma once

// Geometric block decomposition of [1, n] induced by a product-type
// normalizer, and a deterministic checker for the chain of inequalities that
// turns an unweighted maximal bound into a weighted one with the constant
// (c^r / (1 - c^-r))^d.

#include <map>
#include <string>
#include <vector>

#include "rfslln/dsequence.hpp"
#include "rfslln/lattice.hpp"

namespace rfslln {

/// Block exponents i = (i_1, ..., i_d), 0-based.
using BlockIndex = std::vector<int>;

std::string to_string(const BlockIndex& i);

struct Block {
  BlockIndex index;
  std::vector<MultiIndex> members;  ///< lexicographic order
  MultiIndex max_member;            ///< coordinate-wise max of the members
};

/// Blocks A_{i,n} = { s <= n : c^{i_j} <= b^(j)(s_j) < c^{i_j + 1} for all j }.
/// Only nonempty blocks are stored; an absent index is an empty block with
/// D = 0 and max member (0, ..., 0).
struct BlockPartition {
  double c = 2.0;
  MultiIndex shape;
  std::map<BlockIndex, Block> blocks;
  BlockIndex k_n;  ///< coordinate-wise max over nonempty blocks
  /// Block exponent of every cell of [1, shape], per coordinate:
  /// exponents[j][k - 1] is i_j for s_j = k.
  std::vector<std::vector<int>> exponents;

  BlockIndex block_of(const MultiIndex& s) const;
};

/// Largest integer i >= 0 with c^i <= value (value >= 1, c > 1), with the
/// comparison done on std::pow so it agrees with the membership predicate.
int block_exponent(double value, double c);

/// Requires c > 1, `b` product type and every factor value on [1, n] >= 1.
BlockPartition build_partition(const DSequence& b, const MultiIndex& n, double c,
                               std::uint64_t cell_budget = kDefaultCellBudget);

/// D_{i,n} = sum of a over A_{i,n} for every nonempty block. `a` >= 0.
std::map<BlockIndex, double> block_sums(const DSequence& a, const BlockPartition& p);

struct ChainStep {
  std::string name;
  bool holds = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;    ///< rhs - lhs at the tightest point
  std::string witness;   ///< location of the tightest (or first failing) point
};

struct ChainReport {
  std::vector<ChainStep> steps;
  double c = 2.0;
  double r = 1.0;
  /// (c^r / (1 - c^-r))^d.
  double constant_factor = 1.0;
  /// b at (1, ..., 1) before normalization.
  double b1 = 1.0;
  /// Leftmost bound of the chain: sum_i prod_j c^{-r i_j} sum_{m <= m_{i,n}} a_m.
  double middle_bound = 0.0;
  /// Rightmost: constant_factor * sum_{s <= n} a_s / b_s^r with normalized b.
  double final_bound = 0.0;
  /// middle_bound / final_bound (0 when both vanish).
  double final_ratio = 0.0;
  std::size_t nonempty_blocks = 0;
  BlockIndex k_n;

  bool passed() const;
  const ChainStep* first_failure() const;
};

inline constexpr double kChainSlack = 1e-12;

/// Rebuilds the partition for b normalized to 1 at (1, ..., 1) and checks
/// every step of the chain. Floating steps allow `kChainSlack` relative
/// slack; sums of integer-valued a are compared exactly. Throws
/// InvalidArgument for r <= 0, c <= 1, negative a or b not of product type.
ChainReport verify_chain(const DSequence& a, const DSequence& b, const MultiIndex& n, double c,
                         double r);

/// c^r / (1 - c^-r).
double geometric_constant(double c, double r);

struct OptimalC {
  double c_star = 2.0;
  double min_value = 4.0;
};

/// Numerical minimum of c^r / (1 - c^-r) over c > 1.
OptimalC optimal_c(double r);

}  // namespace rfslln
