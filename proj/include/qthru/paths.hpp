#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qthru/network.hpp"
#include "qthru/static_allocation.hpp"
#include "qthru/types.hpp"

namespace qthru {

/// Alternating class/pool walk through the basic tree from a class leaf to a
/// pool leaf, closed by the non-basic pair that induced it when that pair is
/// an activity. Edge signs follow the traversal from the pool end back to the
/// class end: pool->class edges count +1, class->pool edges -1, and the
/// closing edge -1.
struct SimplePath {
    enum class Kind { Closed, Open };
    Kind kind = Kind::Open;
    std::vector<int> class_seq;  // i_0 .. i_k
    std::vector<int> pool_seq;   // j_0 .. j_k
    std::vector<std::pair<int, int>> edges;         // tree edges plus closure if closed
    std::vector<int> signs;                         // aligned with edges
    double weight = 0.0;                            // sum of sign * mu over edges

    int closure_class() const { return class_seq.front(); }
    int closure_pool() const { return pool_seq.back(); }
    bool on_path(int i, int j) const;
    int sign_of(int i, int j) const;  // 0 if not on the path
};

struct SuboptimalityVerdict {
    bool suboptimal = false;
    std::optional<SimplePath> witness;  // most negative path, if any
    std::vector<SimplePath> all_paths;
    double m_max = 0.0;
    Mat sigma_opt;  // I x J maximizer of the redistribution value
};

/// One path per class/pool pair at tree distance >= 3 (everything that is not
/// a basic edge).
std::vector<SimplePath> enumerate_simple_paths(const StaticAllocation& alloc,
                                               const NetworkSpec& spec);

double path_signed_weight(const SimplePath& path, const NetworkSpec& spec);

/// Best achievable excess service rate under mass redistributions that keep
/// per-class and per-pool totals from growing. Always >= 0 (the zero matrix
/// qualifies).
std::pair<double, Mat> solve_mmax(const StaticAllocation& alloc, const NetworkSpec& spec);

/// Runs both the path enumeration and the LP and insists they agree.
SuboptimalityVerdict classify(const StaticAllocation& alloc, const NetworkSpec& spec);

std::string verdict_to_json(const SuboptimalityVerdict& v, const StaticAllocation& alloc);

}  // namespace qthru
