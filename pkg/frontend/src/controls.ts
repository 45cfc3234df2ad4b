// Button handling: one debounced, well-formed command per accepted press.

import type { CommandAction, CommandMessage } from './types'

export const DEBOUNCE_MS = 500

export interface PressDeps {
  send: (command: CommandMessage) => boolean
  enabled: (action: CommandAction) => boolean
  confirmPoweroff: () => boolean
  onSendFailure: (action: CommandAction) => void
  now?: () => number
}

export class Controls {
  private lastPress = new Map<CommandAction, number>()

  constructor(private readonly deps: PressDeps) {}

  /** Returns true when exactly one command message went out. */
  press(action: CommandAction): boolean {
    const now = (this.deps.now ?? Date.now)()
    const last = this.lastPress.get(action)
    if (last !== undefined && now - last < DEBOUNCE_MS) return false
    if (!this.deps.enabled(action)) return false
    if (action === 'poweroff' && !this.deps.confirmPoweroff()) return false
    this.lastPress.set(action, now)
    const sent = this.deps.send({ type: 'command', action })
    if (!sent) {
      // never silently dropped: surface the retry banner
      this.deps.onSendFailure(action)
    }
    return sent
  }
}
