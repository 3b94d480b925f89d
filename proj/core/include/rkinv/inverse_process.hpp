#pragma once

#include "rkinv/couplings.hpp"
#include "rkinv/gff.hpp"
#include "rkinv/graph.hpp"
#include "rkinv/jump_process.hpp"
#include "rkinv/loop_soup.hpp"
#include "rkinv/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rkinv {

/// Law of the initial stack height on an edge known to be open.
enum class OpenStackLaw {
  kShiftedPoisson,       // n - 1 ~ Poisson(2J)
  kZeroTruncatedPoisson, // n ~ Poisson(2J) conditioned on n >= 1
};

const char *to_string(OpenStackLaw law);
OpenStackLaw open_stack_law_from_string(const std::string &name);

/// State of the self-interacting inverse process. Squared magnitudes are
/// stored so that depletion is an exact comparison and no square root of a
/// negative number can appear.
struct InverseState {
  const Graph *graph = nullptr;
  VertexId root = 0;
  VertexId current = 0;
  std::vector<double> phi0_sq;    // magnitude^2 at time 0
  std::vector<double> phi_sq;     // magnitude^2 now
  std::vector<double> local_time; // accumulated since time 0
  std::vector<int> sign;
  // Remaining Poisson points per edge, sorted increasingly, in (0, 2J_e(0)].
  // The top of the stack is the back.
  std::vector<std::vector<double>> stacks;
  double time = 0.0;

  std::int64_t count(EdgeId e) const {
    return static_cast<std::int64_t>(stacks.at(e).size());
  }
  std::vector<std::int64_t> counts() const;
  EdgeSet open() const;
  double level(EdgeId e) const; // J_e now
};

enum class EventKind { kPlainJump, kStay, kCloseJump, kCloseStay };
const char *to_string(EventKind kind);

struct InverseEvent {
  double time;
  EdgeId edge;
  EventKind kind;
  VertexId from;
  VertexId to;
  std::int64_t n_after; // stack height after the event (0 or 1 for rates)
  bool forced;          // closure that split the root cluster
  double level;         // J_e when the event fired
};

struct InverseRun {
  std::vector<InverseEvent> events;
  double terminal_time = 0.0;
  VertexId terminal_vertex = 0;
  std::vector<double> terminal_magnitude;
  EdgeSet terminal_open;
  Trajectory path;
  std::vector<std::int64_t> crossings;
  std::size_t jumps = 0;
  // Hard invariants, counted rather than thrown so that suites can report.
  std::size_t containment_violations = 0;
  double conservation_error = 0.0;
  bool ended_at_root = false;
};

InverseState init_inverse_from_field(const Graph &g, VertexId x0,
                                     const FieldReal &phi, Rng &rng);

InverseState init_inverse_from_field_and_config(
    const Graph &g, VertexId x0, const FieldReal &phi, const EdgeSet &open0,
    Rng &rng, OpenStackLaw law = OpenStackLaw::kShiftedPoisson);

/// Poisson-stack engine. If the graph carries killing off the root, the run
/// is performed on the h-transformed graph with magnitudes divided by h and
/// mapped back through the time change ds = h^2 dt. `st` is left in its
/// terminal state.
InverseRun run_inverse(InverseState &st, Rng &rng);

/// Same engine without the killing reduction: one stage from st.current,
/// with cluster rules relative to st.root, until the running vertex is
/// depleted.
InverseRun run_inverse_stage(InverseState &st, Rng &rng);

struct DiscreteInverseRun {
  std::vector<VertexId> vertices; // position after each step, starting point first
  std::vector<EdgeId> popped;     // edge decremented at each step
  std::vector<EventKind> kinds;
  std::vector<std::vector<std::int64_t>> stack_history; // before each step and at the end
  std::vector<std::int64_t> crossings;
  std::size_t jumps = 0;
  VertexId terminal_vertex = 0;
  EdgeSet terminal_open;
  bool ended_at_root = false;
  std::size_t containment_violations = 0;
};

/// Embedded discrete-time chain: pick an adjacent edge with probability
/// proportional to its stack height, decrement, then apply the movement rule.
/// Stops when every stack adjacent to the walker is empty.
DiscreteInverseRun run_inverse_discrete(const Graph &g, VertexId x0,
                                        std::vector<std::int64_t> stacks,
                                        Rng &rng, bool keep_history = true);

/// Markov description by jump rates, simulated by exact clock inversion in the
/// J coordinate. Only the open/closed configuration is tracked.
InverseRun run_inverse_jump_rates(const Graph &g, VertexId x0,
                                  const FieldReal &phi, const EdgeSet &open0,
                                  Rng &rng);

struct EnlargedHistoryEntry {
  double time;
  EdgeId edge;
  std::int64_t n_after;
  bool crossing; // false: new Poisson point
};

struct ForwardEnlarged {
  Trajectory traj;
  FieldReal phi0;
  FieldReal phiU;
  std::vector<std::int64_t> n0;
  std::vector<std::int64_t> n_end;
  std::vector<EnlargedHistoryEntry> history;
  EdgeSet C0;
  EdgeSet C_end;
};

class ForwardEnlargedSampler {
public:
  ForwardEnlargedSampler(const Graph &g, VertexId x0, double u);
  ForwardEnlarged sample(Rng &rng) const;

private:
  const Graph *graph_;
  VertexId x0_;
  double u_;
  GffSampler pinned_zero_;
  HTransform ht_;
};

ForwardEnlarged forward_enlarged(const Graph &g, VertexId x0, double u,
                                 Rng &rng);

struct InverseDiagnostics {
  std::size_t stages = 0;
  std::size_t containment_violations = 0;
  std::size_t wrong_terminal = 0;
  double conservation_error = 0.0;
};

/// Shared-stack inversion of the free-field / loop-soup coupling. Stage i
/// starts at enumeration[i] and ends when the running vertex is depleted; its
/// path is cut into loops at PD(0, 1/2) points of the root local time.
LoopSoupSample invert_loop_soup(const Graph &g, const FieldReal &phi,
                                const std::vector<VertexId> &enumeration,
                                double eps, Rng &rng,
                                InverseDiagnostics *diag = nullptr);

/// Discrete-time inversion of the current/FK coupling. Returns the total
/// crossings of all stages.
CurrentConfig invert_current_from_fk(
    const Graph &g, const std::vector<double> &J, const EdgeSet &fk, Rng &rng,
    OpenStackLaw law = OpenStackLaw::kShiftedPoisson,
    const std::vector<VertexId> &enumeration = {},
    InverseDiagnostics *diag = nullptr);

} // namespace rkinv
