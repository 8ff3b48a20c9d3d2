// Client session state: a bearer token with its role and username, kept in
// browser storage. Present token means "authenticated view"; any 401 from
// the API purges it.

import type { Role } from './types.js'

export interface ClientSession {
  token: string
  role: Role
  username: string
}

export interface StorageLike {
  getItem(key: string): string | null
  setItem(key: string, value: string): void
  removeItem(key: string): void
}

const KEY = 'drs.session'

export class SessionStore {
  constructor(private storage: StorageLike) {}

  load(): ClientSession | null {
    const raw = this.storage.getItem(KEY)
    if (raw === null) return null
    try {
      const parsed = JSON.parse(raw)
      if (typeof parsed.token === 'string' && typeof parsed.role === 'string') {
        return parsed as ClientSession
      }
    } catch {
      // fall through: malformed stored state is treated as logged out
    }
    this.storage.removeItem(KEY)
    return null
  }

  save(session: ClientSession): void {
    this.storage.setItem(KEY, JSON.stringify(session))
  }

  clear(): void {
    this.storage.removeItem(KEY)
  }
}

export class MemoryStorage implements StorageLike {
  private map = new Map<string, string>()
  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value)
  }
  removeItem(key: string): void {
    this.map.delete(key)
  }
}
