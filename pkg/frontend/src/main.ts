// Bootstrap: wire storage, API client and router, then render on every
// hash change. Configure the API origin via window.DRS_API_BASE (defaults
// to same-origin).

import { ApiClient } from './api.js'
import { AppContext, renderRoute } from './render.js'
import { parseHash, resolveRoute } from './router.js'
import { ClientSession, SessionStore } from './session.js'
import { ViewRole } from './viewmodel.js'

const apiBase = (window as { DRS_API_BASE?: string }).DRS_API_BASE ?? ''
const sessions = new SessionStore(window.localStorage)
const api = new ApiClient(apiBase, () => sessions.load()?.token ?? null)

const ctx: AppContext = {
  api,
  session: (): ClientSession | null => sessions.load(),
  role: (): ViewRole => sessions.load()?.role ?? 'Guest',
  navigate: (route: string) => {
    window.location.hash = `#${route}`
  },
  saveSession: (session: ClientSession) => sessions.save(session),
  clearSession: () => sessions.clear(),
}

// any 401 means the stored token is dead: purge it and go to login
api.onUnauthorized = () => {
  sessions.clear()
  ctx.navigate('/login')
}

function render(): void {
  const { route, params } = parseHash(window.location.hash)
  const landed = resolveRoute(route, ctx.role())
  if (landed !== route) {
    ctx.navigate(landed)
    return
  }
  const root = document.getElementById('app')
  if (root) root.replaceChildren(renderRoute(ctx, route, params))
}

window.addEventListener('hashchange', render)
window.addEventListener('DOMContentLoaded', render)
