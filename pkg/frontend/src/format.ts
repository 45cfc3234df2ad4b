export function clockTime(totalSeconds: number): string {
  const s = Math.max(0, Math.floor(totalSeconds))
  const h = Math.floor(s / 3600)
  const m = Math.floor((s % 3600) / 60)
  const sec = s % 60
  const mmss = `${m}:${String(sec).padStart(2, '0')}`
  return h > 0 ? `${h}:${String(m).padStart(2, '0')}:${String(sec).padStart(2, '0')}` : mmss
}

export function km(distanceM: number): string {
  return `${(distanceM / 1000).toFixed(2)} km`
}

export function kmh(speedMps: number): string {
  return `${(speedMps * 3.6).toFixed(1)} km/h`
}

export function meters(value: number): string {
  return `${value.toFixed(0)} m`
}

export function bpm(value: number | null): string {
  return value === null ? '--' : `${Math.round(value)}`
}
