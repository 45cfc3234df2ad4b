// DOM updates for the four cockpit segments. Every displayed value comes
// straight from the latest frame; there is no client-side clock.

import { bpm, clockTime, km, kmh, meters } from './format'
import { buttonEnabled, exerciseSlot, ViewState } from './state'
import type { CommandAction } from './types'

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id)
  if (!el) throw new Error(`missing element #${id}`)
  return el
}

export const BUTTON_IDS: Record<CommandAction, string> = {
  start_tracking: 'btn-start-tracking',
  stop_tracking: 'btn-stop-tracking',
  start_interval: 'btn-start-interval',
  stop_interval: 'btn-stop-interval',
  poweroff: 'btn-poweroff',
}

export function render(state: ViewState): void {
  renderConnection(state)
  renderTotals(state)
  renderIntervalPanel(state)
  renderPlanList(state)
  renderFeedback(state)
  renderButtons(state)
}

function renderConnection(state: ViewState): void {
  const banner = $('reconnect-banner')
  banner.hidden = state.connection === 'connected'
  $('cockpit').classList.toggle('stale', state.connection !== 'connected')
}

function renderTotals(state: ViewState): void {
  const frame = state.frame
  $('total-distance').textContent = frame ? km(frame.distance_m) : '--'
  $('current-speed').textContent = frame ? kmh(frame.speed_mps) : '--'
  $('total-ascent').textContent = frame ? meters(frame.ascent_m) : '--'
}

function renderIntervalPanel(state: ViewState): void {
  const frame = state.frame
  $('session-clock').textContent = frame ? clockTime(frame.t_s) : '0:00'
  $('current-hr').textContent = frame ? bpm(frame.hr_bpm) : '--'
  const inInterval = frame !== null && frame.phase === 'interval_active'
  $('interval-countdown').textContent =
    inInterval && frame.remaining_s !== null ? clockTime(frame.remaining_s) : '--'
  $('interval-avg').textContent =
    inInterval && frame.avg_hr !== null ? frame.avg_hr.toFixed(1) : '--'
  $('interval-target').textContent =
    inInterval && frame.target_hr !== null ? String(frame.target_hr) : '--'
  $('phase-label').textContent = frame ? frame.phase.replace('_', ' ') : 'idle'
}

function renderPlanList(state: ViewState): void {
  const list = $('plan-list')
  const plan = state.plan
  if (!plan) {
    list.textContent = ''
    return
  }
  const have = list.children.length === plan.exercises.length
  if (!have) {
    list.textContent = ''
    for (const ex of plan.exercises) {
      const li = document.createElement('li')
      li.id = `plan-ex-${ex.id}`
      li.textContent = `#${ex.id}  ${ex.target_hr} bpm · ${clockTime(ex.duration_s)}`
      list.appendChild(li)
    }
  }
  for (const ex of plan.exercises) {
    const li = $(`plan-ex-${ex.id}`)
    li.className = exerciseSlot(state, ex.id)
  }
}

function renderFeedback(state: ViewState): void {
  const frame = state.frame
  const band = $('feedback-band')
  const symbol = $('feedback-symbol')
  const inInterval = frame !== null && frame.phase === 'interval_active'
  symbol.textContent = inInterval && frame.feedback ? frame.feedback : ''
  band.classList.toggle('alert', inInterval && frame!.alert)
  band.classList.toggle('above', inInterval && frame!.feedback === '+')
  band.classList.toggle('ontrack', inInterval && frame!.feedback === '=')
}

function renderButtons(state: ViewState): void {
  for (const [action, id] of Object.entries(BUTTON_IDS)) {
    const button = $(id) as HTMLButtonElement
    button.disabled = !buttonEnabled(state, action as CommandAction)
  }
}
