// Wire types mirroring docs/api.md.

export type Role = 'Member' | 'Admin'
export type Degree = 'Master' | 'PhD'

export interface LoginResponse {
  token: string
  user_id: string
  role: Role
  username: string
  expires_at: number
}

export interface UserView {
  user_id: string
  matrix_number: string
  full_name: string
  degree: Degree
  role: Role
  status: 'Provisioned' | 'Registered'
  email?: string
  username?: string
}

export interface FileView {
  content_hash: string
  original_filename: string
  size_bytes: number
  media_type: string
}

export interface DissertationView {
  dissertation_id: string
  title: string
  author_name: string
  abstract: string
  keywords: string[]
  topic: string
  degree: Degree
  year: number
  uploaded_at: number
  file: FileView
}

export interface SearchHit {
  score: number
  dissertation: DissertationView
}

export interface SearchResponse {
  results: SearchHit[]
  total: number
  offset: number
  limit: number
}

export interface UserSearchResponse {
  results: UserView[]
  total: number
  offset: number
  limit: number
}

export interface FavoritesResponse {
  results: DissertationView[]
}

export interface DissertationMeta {
  title: string
  degree: Degree
  year: number
  author_name?: string
  abstract?: string
  keywords?: string[]
  topic?: string
}

export interface AdvancedSearchRequest {
  keywords?: string
  author?: string
  topic?: string
  degree?: Degree
  year_from?: number
  year_to?: number
  offset?: number
  limit?: number
}

export interface ErrorBody {
  code: string
  message: string
}
