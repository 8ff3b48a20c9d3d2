// Tiny hash router: "#/search?q=x" -> route "/search" + params, with role
// guards from the view model.

import { ROUTES, homeRoute, mayEnter, ViewRole } from './viewmodel.js'

export interface RouteMatch {
  route: string
  params: URLSearchParams
}

export function parseHash(hash: string): RouteMatch {
  let raw = hash.startsWith('#') ? hash.slice(1) : hash
  if (raw === '') raw = '/'
  const queryStart = raw.indexOf('?')
  const route = queryStart === -1 ? raw : raw.slice(0, queryStart)
  const params = new URLSearchParams(queryStart === -1 ? '' : raw.slice(queryStart + 1))
  return { route, params }
}

// where a navigation attempt actually lands for this role
export function resolveRoute(route: string, role: ViewRole): string {
  if (!(route in ROUTES)) return '/not-found'
  if (mayEnter(route, role)) return route
  return role === 'Guest' ? '/login' : homeRoute(role)
}
