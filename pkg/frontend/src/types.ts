// Wire schemas shared with the gateway, verbatim.

export type Phase =
  | 'idle'
  | 'tracking'
  | 'interval_active'
  | 'rest'
  | 'finished'

export type Feedback = '-' | '=' | '+'

export interface PlanExercise {
  id: number
  target_hr: number
  duration_s: number
}

export interface Plan {
  name: string
  exercises: PlanExercise[]
}

export interface TelemetryFrame {
  t_s: number
  phase: Phase
  interval_id: number | null
  hr_bpm: number | null
  avg_hr: number | null
  target_hr: number | null
  remaining_s: number | null
  feedback: Feedback | null
  alert: boolean
  distance_m: number
  speed_mps: number
  ascent_m: number
  n: number
}

export type ServerMessage =
  | ({ type: 'telemetry' } & TelemetryFrame)
  | { type: 'hello'; plan: Plan }
  | { type: 'error'; error: string }

export type CommandAction =
  | 'start_tracking'
  | 'stop_tracking'
  | 'start_interval'
  | 'stop_interval'
  | 'poweroff'

export interface CommandMessage {
  type: 'command'
  action: CommandAction
}
