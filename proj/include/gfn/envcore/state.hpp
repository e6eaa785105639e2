#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gfn {

// A vertex of an environment DAG. For the hypergrid `cells` holds the d
// coordinates; for bit sequences it holds the token prefix. `terminal` is set
// only by the environment's termination rule (the stop action on the grid,
// reaching full length for sequences).
struct State {
  std::vector<int> cells;
  bool terminal = false;

  friend bool operator==(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

std::string to_string(const State& s);

}  // namespace gfn
