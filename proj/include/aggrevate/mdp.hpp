#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace aggrevate {

/// Probability-sum tolerance used when validating inputs.
inline constexpr double kValidationTol = 1e-9;
/// Tolerance for identities that hold exactly in real arithmetic.
inline constexpr double kIdentityTol = 1e-12;

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

/// Raised when two objects disagree on state/action/horizon dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite-horizon tabular MDP. Costs are normalized to [0,1].
struct MdpSpec {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  /// transitions[s][a][s'] = P(s' | s, a)
  std::vector<std::vector<Vec>> transitions;
  /// costs[s][a]
  Mat costs;
  Vec initial_dist;

  bool operator==(const MdpSpec&) const = default;
};

struct Violation {
  std::string path;     // e.g. "transitions[1][0]"
  std::string message;  // e.g. "row sums to 0.9"
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Lists every invariant violation; never throws.
ValidationReport validate_mdp(const MdpSpec& spec);

/// Throws std::invalid_argument listing the first violation when the spec is
/// malformed.
void require_valid(const MdpSpec& spec);

nlohmann::json mdp_to_json(const MdpSpec& spec);
MdpSpec mdp_from_json(const nlohmann::json& j);

std::string mdp_to_text(const MdpSpec& spec);
MdpSpec mdp_from_text(const std::string& text);

}  // namespace aggrevate
