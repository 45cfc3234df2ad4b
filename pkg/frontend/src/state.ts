// Single view-state store. The cockpit holds no session logic: everything
// shown is derived from the latest frame and the hello plan.

import type {
  CommandAction,
  Phase,
  Plan,
  ServerMessage,
  TelemetryFrame,
} from './types'

export type Connection = 'connected' | 'reconnecting'

export interface ViewState {
  connection: Connection
  plan: Plan | null
  frame: TelemetryFrame | null
}

export function initialState(): ViewState {
  return { connection: 'reconnecting', plan: null, frame: null }
}

export function applyMessage(state: ViewState, message: ServerMessage): ViewState {
  if (message.type === 'hello') {
    return { ...state, plan: message.plan }
  }
  if (message.type === 'telemetry') {
    const { type, ...frame } = message
    return { ...state, frame: frame as TelemetryFrame }
  }
  return state
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection }
}

export function currentPhase(state: ViewState): Phase {
  return state.frame?.phase ?? 'idle'
}

// Button gating; mirrors what the engine would accept in each phase, so no
// press ever turns into an ignored command.
export function buttonEnabled(state: ViewState, action: CommandAction): boolean {
  if (state.connection !== 'connected') return false
  const phase = currentPhase(state)
  switch (action) {
    case 'start_tracking':
      return phase === 'idle'
    case 'stop_tracking':
      return phase === 'tracking' || phase === 'rest'
    case 'start_interval':
      return phase === 'tracking' || phase === 'rest'
    case 'stop_interval':
      return phase === 'interval_active'
    case 'poweroff':
      return true
  }
}

// Interval list highlighting for the plan segment.
export type ExerciseSlot = 'past' | 'current' | 'next' | 'later'

export function exerciseSlot(state: ViewState, exerciseId: number): ExerciseSlot {
  const frame = state.frame
  if (!frame) return exerciseId === 1 ? 'next' : 'later'
  const current = frame.interval_id
  if (current !== null) {
    if (exerciseId === current) return 'current'
    if (exerciseId < current) return 'past'
    return exerciseId === current + 1 ? 'next' : 'later'
  }
  // between intervals: the next unstarted exercise follows the highest seen
  const upcoming = nextExerciseId(state)
  if (exerciseId < upcoming) return 'past'
  return exerciseId === upcoming ? 'next' : 'later'
}

let highestSeen = 0

export function resetProgressTracking(): void {
  highestSeen = 0
}

export function observeFrame(frame: TelemetryFrame): void {
  if (frame.interval_id !== null && frame.interval_id > highestSeen) {
    highestSeen = frame.interval_id
  }
  if (frame.phase === 'idle') highestSeen = 0
}

export function nextExerciseId(state: ViewState): number {
  void state
  return highestSeen + 1
}
