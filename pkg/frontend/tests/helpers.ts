import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import { resetProgressTracking } from '../src/state'
import type { Plan, ServerMessage, TelemetryFrame } from '../src/types'

const here = dirname(fileURLToPath(import.meta.url))

export function mountCockpit(): void {
  const html = readFileSync(join(here, '..', 'public', 'index.html'), 'utf8')
  const body = html.slice(html.indexOf('<body>') + 6, html.indexOf('</body>'))
  document.body.innerHTML = body.replace(/<script[\s\S]*?<\/script>/, '')
  resetProgressTracking()
}

export function loadRecordedStream(): ServerMessage[] {
  const raw = readFileSync(join(here, 'fixtures', 'telemetry.json'), 'utf8')
  return JSON.parse(raw) as ServerMessage[]
}

export const testPlan: Plan = {
  name: 'interval-session',
  exercises: [
    { id: 1, target_hr: 150, duration_s: 60 },
    { id: 2, target_hr: 170, duration_s: 120 },
    { id: 3, target_hr: 145, duration_s: 120 },
    { id: 4, target_hr: 180, duration_s: 60 },
    { id: 5, target_hr: 182, duration_s: 60 },
  ],
}

export function frame(overrides: Partial<TelemetryFrame> = {}): TelemetryFrame {
  return {
    t_s: 1,
    phase: 'tracking',
    interval_id: null,
    hr_bpm: 120,
    avg_hr: null,
    target_hr: null,
    remaining_s: null,
    feedback: null,
    alert: false,
    distance_m: 0,
    speed_mps: 0,
    ascent_m: 0,
    n: 0,
    ...overrides,
  }
}
