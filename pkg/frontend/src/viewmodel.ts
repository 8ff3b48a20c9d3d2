// Pure view-state rules: which routes exist, who may enter them, and which
// controls each role sees. Renderers consume these so role handling is
// testable without a DOM.

import type { Degree } from './types.js'

export type ViewRole = 'Guest' | 'Member' | 'Admin'

export interface ResultActions {
  view: boolean
  download: boolean
  addFavorite: boolean
}

// guests may view metadata; downloading and favorites need a login
export function resultActions(role: ViewRole): ResultActions {
  const loggedIn = role !== 'Guest'
  return { view: true, download: loggedIn, addFavorite: loggedIn }
}

export interface NavItem {
  label: string
  route: string
}

export function navigation(role: ViewRole): NavItem[] {
  if (role === 'Admin') {
    return [
      { label: 'Admin home', route: '#/admin' },
      { label: 'User processes', route: '#/admin/users' },
      { label: 'Upload dissertation', route: '#/admin/upload' },
      { label: 'Advanced search', route: '#/advanced' },
      { label: 'Change password', route: '#/admin/password' },
      { label: 'Log out', route: '#/logout' },
    ]
  }
  if (role === 'Member') {
    return [
      { label: 'Home', route: '#/member' },
      { label: 'Favorites', route: '#/favorites' },
      { label: 'Advanced search', route: '#/advanced' },
      { label: 'Log out', route: '#/logout' },
    ]
  }
  return [
    { label: 'Home', route: '#/' },
    { label: 'Log in', route: '#/login' },
    { label: 'Sign up', route: '#/signup' },
  ]
}

export interface RouteSpec {
  page: string
  requires: ViewRole // minimum role: Guest = public
}

// every route corresponds to a page of the prototype: index with the guest
// search box, registration, login, member home, results, favorites, and
// the admin dashboard with its user/upload/password sub-pages
export const ROUTES: Record<string, RouteSpec> = {
  '/': { page: 'index', requires: 'Guest' },
  '/search': { page: 'search-results', requires: 'Guest' },
  '/dissertation': { page: 'dissertation-view', requires: 'Guest' },
  '/signup': { page: 'signup', requires: 'Guest' },
  '/login': { page: 'login', requires: 'Guest' },
  '/logout': { page: 'logout', requires: 'Guest' },
  '/member': { page: 'member-home', requires: 'Member' },
  '/favorites': { page: 'favorites', requires: 'Member' },
  '/advanced': { page: 'advanced-search', requires: 'Member' },
  '/admin': { page: 'admin-home', requires: 'Admin' },
  '/admin/users': { page: 'admin-users', requires: 'Admin' },
  '/admin/upload': { page: 'admin-upload', requires: 'Admin' },
  '/admin/password': { page: 'admin-password', requires: 'Admin' },
}

const RANK: Record<ViewRole, number> = { Guest: 0, Member: 1, Admin: 2 }

export function mayEnter(route: string, role: ViewRole): boolean {
  const spec = ROUTES[route]
  return spec !== undefined && RANK[role] >= RANK[spec.requires]
}

export function homeRoute(role: ViewRole): string {
  if (role === 'Admin') return '/admin'
  if (role === 'Member') return '/member'
  return '/'
}

// client-side mirrors of the server's validation rules; the server stays
// authoritative

export const MIN_PASSWORD_LENGTH = 8
export const MIN_YEAR = 1900

export function passwordOk(password: string): boolean {
  return password.length >= MIN_PASSWORD_LENGTH
}

export function yearOk(year: number, currentYear: number): boolean {
  return Number.isInteger(year) && year >= MIN_YEAR && year <= currentYear
}

export function matrixOk(matrix: string): boolean {
  return /^[A-Za-z0-9]{1,32}$/.test(matrix.trim())
}

export function usernameOk(username: string): boolean {
  return /^[a-z0-9._-]{3,32}$/.test(username.trim().toLowerCase())
}

export function degreeOk(degree: string): degree is Degree {
  return degree === 'Master' || degree === 'PhD'
}
