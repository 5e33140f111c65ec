#pragma once

// Tidy CSV and JSON renderings of every report type. All output is a pure
// function of its input: doubles use the shortest round-trip form, indices
// print as "n1xn2x...", and row order follows the report.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rfslln/blockdecomp.hpp"
#include "rfslln/dsequence.hpp"
#include "rfslln/lattice.hpp"
#include "rfslln/maximal.hpp"
#include "rfslln/slln.hpp"

namespace rfslln {

/// Library version, "major.minor.patch".
std::string_view version();

/// Shortest decimal string that round-trips; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);
/// "4x2x8".
std::string format_index(const MultiIndex& n);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Columns: side,n,eps,lhs,lhs_lo,lhs_hi,rhs,verdict. side is "hypothesis"
/// or "conclusion"; eps is empty for moment rows.
std::string report_csv(const InequalityReport& report);
std::string report_json(const InequalityReport& report);

std::string chain_json(const ChainReport& report);
/// Columns: s,block.
std::string partition_csv(const BlockPartition& partition);

/// Columns: replicate,n,statistic.
std::string trajectory_csv(const std::vector<TrajectoryRecord>& records);
std::string trend_json(const TrendSummary& summary, std::string_view statistic);
/// Columns: replicate,sup_ratio.
std::string sup_ratio_csv(const SupRatioSummary& summary);
std::string sup_ratio_json(const SupRatioSummary& summary);

/// Columns: n,partial_sum,increment.
std::string series_csv(const SeriesVerdict& verdict, const RectangleSchedule& chain);
std::string series_json(const SeriesVerdict& verdict);

/// Columns: n,beta,b,ratio along the diagnostic chain.
std::string beta_csv(const BetaConstruction& construction, const DSequence& b);
std::string beta_json(const BetaConstruction& construction);

/// Columns: replicate,n,value; cells of each field in row-major order.
std::string field_csv(const std::vector<LatticeTable>& fields);

struct ProvenanceInput {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> files;
};
std::string provenance_json(const ProvenanceInput& p);

}  // namespace rfslln
