// Reconnecting websocket wrapper around the gateway's /ws endpoint.

import type { CommandMessage, ServerMessage } from './types'

export interface SocketHandlers {
  onMessage: (message: ServerMessage) => void
  onConnected: () => void
  onDisconnected: () => void
}

const RETRY_MS = 2000

export class GatewaySocket {
  private ws: WebSocket | null = null
  private closed = false

  constructor(
    private readonly url: string,
    private readonly handlers: SocketHandlers,
  ) {}

  connect(): void {
    if (this.closed) return
    const ws = new WebSocket(this.url)
    this.ws = ws
    ws.onopen = () => this.handlers.onConnected()
    ws.onmessage = (event) => {
      let parsed: ServerMessage
      try {
        parsed = JSON.parse(event.data as string)
      } catch {
        return
      }
      this.handlers.onMessage(parsed)
    }
    ws.onclose = () => {
      this.ws = null
      this.handlers.onDisconnected()
      setTimeout(() => this.connect(), RETRY_MS)
    }
    ws.onerror = () => {
      // onclose follows and schedules the retry
    }
  }

  /** Returns false when the link is down; the caller shows the retry banner. */
  send(command: CommandMessage): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false
    try {
      this.ws.send(JSON.stringify(command))
      return true
    } catch {
      return false
    }
  }

  close(): void {
    this.closed = true
    this.ws?.close()
  }
}
