// Typed client: one function per API endpoint. Attaches the bearer header
// when a session is present, maps error bodies to ApiError, and lets the
// app react to any 401 (purge session, go to login) via onUnauthorized.

import type {
  AdvancedSearchRequest,
  DissertationMeta,
  DissertationView,
  Degree,
  ErrorBody,
  FavoritesResponse,
  LoginResponse,
  SearchResponse,
  UserSearchResponse,
  UserView,
} from './types.js'

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message)
  }
}

export class NetworkError extends Error {}

export interface UserPatch {
  full_name?: string
  matrix_number?: string
  degree?: Degree
  email?: string
}

export interface DissertationPatch {
  title?: string
  author_name?: string
  abstract?: string
  keywords?: string[]
  topic?: string
  degree?: Degree
  year?: number
}

type FetchLike = typeof fetch

export class ApiClient {
  onUnauthorized: (() => void) | null = null

  constructor(
    private baseUrl: string,
    private getToken: () => string | null,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private headers(): Record<string, string> {
    const token = this.getToken()
    return token ? { Authorization: `Bearer ${token}` } : {}
  }

  private async request(method: string, path: string, init: RequestInit = {}): Promise<Response> {
    let response: Response
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        ...init,
        method,
        headers: { ...this.headers(), ...(init.headers as Record<string, string> | undefined) },
      })
    } catch (cause) {
      throw new NetworkError(`cannot reach the repository service: ${cause}`)
    }
    if (!response.ok) {
      if (response.status === 401 && this.onUnauthorized) this.onUnauthorized()
      let body: ErrorBody
      try {
        body = (await response.json()) as ErrorBody
      } catch {
        body = { code: 'ERROR', message: `request failed with status ${response.status}` }
      }
      throw new ApiError(response.status, body.code, body.message)
    }
    return response
  }

  private async requestJson<T>(method: string, path: string, init: RequestInit = {}): Promise<T> {
    const response = await this.request(method, path, init)
    return (await response.json()) as T
  }

  private json(body: unknown): RequestInit {
    return { body: JSON.stringify(body), headers: { 'Content-Type': 'application/json' } }
  }

  // accounts and sessions

  signup(matrixNumber: string, username: string, password: string, email: string): Promise<UserView> {
    return this.requestJson('POST', '/api/signup', this.json({
      matrix_number: matrixNumber,
      username,
      password,
      email,
    }))
  }

  login(username: string, password: string): Promise<LoginResponse> {
    return this.requestJson('POST', '/api/login', this.json({ username, password }))
  }

  logout(): Promise<{ ok: boolean }> {
    return this.requestJson('POST', '/api/logout')
  }

  changePassword(oldPassword: string, newPassword: string): Promise<{ ok: boolean }> {
    return this.requestJson('POST', '/api/password', this.json({
      old_password: oldPassword,
      new_password: newPassword,
    }))
  }

  // search

  search(query: string, offset = 0, limit = 20): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query, offset: String(offset), limit: String(limit) })
    return this.requestJson('GET', `/api/search?${params}`)
  }

  advancedSearch(request: AdvancedSearchRequest): Promise<SearchResponse> {
    return this.requestJson('POST', '/api/search/advanced', this.json(request))
  }

  // dissertations

  getDissertation(id: string): Promise<DissertationView> {
    return this.requestJson('GET', `/api/dissertations/${encodeURIComponent(id)}`)
  }

  async downloadFile(id: string): Promise<Blob> {
    const response = await this.request('GET', `/api/dissertations/${encodeURIComponent(id)}/file`)
    return response.blob()
  }

  uploadDissertation(meta: DissertationMeta, file: Blob, filename: string): Promise<DissertationView> {
    const form = new FormData()
    form.append('meta', JSON.stringify(meta))
    form.append('file', file, filename)
    return this.requestJson('POST', '/api/dissertations', { body: form })
  }

  editDissertation(id: string, patch: DissertationPatch): Promise<DissertationView> {
    return this.requestJson('PATCH', `/api/dissertations/${encodeURIComponent(id)}`, this.json(patch))
  }

  deleteDissertation(id: string): Promise<{ ok: boolean }> {
    return this.requestJson('DELETE', `/api/dissertations/${encodeURIComponent(id)}`)
  }

  // favorites

  listFavorites(): Promise<FavoritesResponse> {
    return this.requestJson('GET', '/api/favorites')
  }

  addFavorite(id: string): Promise<{ items: string[] }> {
    return this.requestJson('PUT', `/api/favorites/${encodeURIComponent(id)}`)
  }

  removeFavorites(ids: string[]): Promise<{ items: string[] }> {
    return this.requestJson('POST', '/api/favorites/remove', this.json({ ids }))
  }

  // user administration

  provisionUser(matrixNumber: string, fullName: string, degree: Degree): Promise<UserView> {
    return this.requestJson('POST', '/api/users', this.json({
      matrix_number: matrixNumber,
      full_name: fullName,
      degree,
    }))
  }

  findUsers(matrix?: string, name?: string, offset = 0, limit = 20): Promise<UserSearchResponse> {
    const params = new URLSearchParams({ offset: String(offset), limit: String(limit) })
    if (matrix) params.set('matrix', matrix)
    if (name) params.set('name', name)
    return this.requestJson('GET', `/api/users?${params}`)
  }

  editUser(userId: string, patch: UserPatch): Promise<UserView> {
    return this.requestJson('PATCH', `/api/users/${encodeURIComponent(userId)}`, this.json(patch))
  }

  deleteUser(userId: string): Promise<{ ok: boolean }> {
    return this.requestJson('DELETE', `/api/users/${encodeURIComponent(userId)}`)
  }

  // liveness

  health(): Promise<{ status: string }> {
    return this.requestJson('GET', '/api/health')
  }
}
