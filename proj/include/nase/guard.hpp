#pragma once

#include "nase/detector.hpp"

namespace nase {

// Protective state machine wrapped around each clip run. Error flags are
// only ever true in kHardReset, and kHardReset exits only through an
// explicit acknowledge.
struct GuardState {
  enum class Phase { kIdle, kRunning, kHardReset };

  Phase phase = Phase::kIdle;
  bool flag_fgsm = false;
  bool flag_pgd = false;

  bool operator==(const GuardState&) const = default;
};

struct GuardEvent {
  enum class Kind { kStart, kVerdict, kAckReset };

  Kind kind = Kind::kStart;
  Verdict verdict;  // meaningful only for kVerdict

  static GuardEvent start() { return {Kind::kStart, {}}; }
  static GuardEvent on_verdict(Verdict v) { return {Kind::kVerdict, std::move(v)}; }
  static GuardEvent ack_reset() { return {Kind::kAckReset, {}}; }
};

// Transition table:
//   IDLE       --start-------------------> RUNNING
//   RUNNING    --verdict(attacked=false)--> RUNNING
//   RUNNING    --verdict(attacked=true)---> HARD_RESET, flags from classified
//   HARD_RESET --ack_reset----------------> IDLE, flags cleared
// Every other (state, event) pair throws StateError.
GuardState step_guard(const GuardState& g, const GuardEvent& event);

// Error path used by the pipeline when a submodule fails mid-clip: jumps to
// kHardReset with both flags false. Not part of the event table.
GuardState force_hard_reset();

const char* guard_phase_name(GuardState::Phase phase);

}  // namespace nase
