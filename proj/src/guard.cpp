#include "nase/guard.hpp"

#include <string>

#include "nase/error.hpp"

namespace nase {

namespace {

const char* event_name(GuardEvent::Kind kind) {
  switch (kind) {
    case GuardEvent::Kind::kStart: return "start";
    case GuardEvent::Kind::kVerdict: return "verdict";
    case GuardEvent::Kind::kAckReset: return "ack_reset";
  }
  return "?";
}

}  // namespace

const char* guard_phase_name(GuardState::Phase phase) {
  switch (phase) {
    case GuardState::Phase::kIdle: return "IDLE";
    case GuardState::Phase::kRunning: return "RUNNING";
    case GuardState::Phase::kHardReset: return "HARD_RESET";
  }
  return "?";
}

GuardState step_guard(const GuardState& g, const GuardEvent& event) {
  switch (g.phase) {
    case GuardState::Phase::kIdle:
      if (event.kind == GuardEvent::Kind::kStart) {
        return {GuardState::Phase::kRunning, false, false};
      }
      break;
    case GuardState::Phase::kRunning:
      if (event.kind == GuardEvent::Kind::kVerdict) {
        if (!event.verdict.attacked) return g;
        return {GuardState::Phase::kHardReset,
                event.verdict.classified == AttackClass::kFgsmLike,
                event.verdict.classified == AttackClass::kPgdLike};
      }
      break;
    case GuardState::Phase::kHardReset:
      if (event.kind == GuardEvent::Kind::kAckReset) {
        return {GuardState::Phase::kIdle, false, false};
      }
      break;
  }
  throw StateError(std::string("illegal guard transition: ") + guard_phase_name(g.phase) +
                   " + " + event_name(event.kind));
}

GuardState force_hard_reset() { return {GuardState::Phase::kHardReset, false, false}; }

}  // namespace nase
