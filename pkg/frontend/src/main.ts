import { Controls } from './controls'
import { BUTTON_IDS, render } from './render'
import { GatewaySocket } from './socket'
import {
  applyMessage,
  buttonEnabled,
  initialState,
  observeFrame,
  setConnection,
  ViewState,
} from './state'
import type { CommandAction } from './types'

let state: ViewState = initialState()

const url = `ws://${window.location.host}/ws`
const socket = new GatewaySocket(url, {
  onMessage(message) {
    state = applyMessage(state, message)
    if (message.type === 'telemetry') observeFrame(state.frame!)
    render(state)
  },
  onConnected() {
    state = setConnection(state, 'connected')
    render(state)
  },
  onDisconnected() {
    state = setConnection(state, 'reconnecting')
    render(state)
  },
})

const controls = new Controls({
  send: (command) => socket.send(command),
  enabled: (action) => buttonEnabled(state, action),
  confirmPoweroff: () => window.confirm('Power off the head unit?'),
  onSendFailure: () => {
    state = setConnection(state, 'reconnecting')
    render(state)
  },
})

for (const [action, id] of Object.entries(BUTTON_IDS)) {
  document.getElementById(id)?.addEventListener('click', () => {
    controls.press(action as CommandAction)
  })
}

render(state)
socket.connect()
